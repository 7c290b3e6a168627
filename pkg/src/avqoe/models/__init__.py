from .forest import (
    ForestConfig,
    ForestModel,
    RegressionTree,
    feature_importance,
    predict_forest,
    train_forest,
)
from .mlp import MlpConfig, MlpModel, predict_mlp, train_mlp
from .serialize import load_model, save_model

__all__ = [
    "ForestConfig",
    "ForestModel",
    "MlpConfig",
    "MlpModel",
    "RegressionTree",
    "feature_importance",
    "load_model",
    "predict_forest",
    "predict_mlp",
    "save_model",
    "train_forest",
    "train_mlp",
]
