"""Versioned JSON documents for trained models.

Floats are written with ``repr`` precision, so a load reproduces the saved
arrays, and therefore predictions, bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from ..errors import ModelFormatError
from .forest import ForestConfig, ForestModel, RegressionTree
from .mlp import MlpConfig, MlpModel, MlpParams

FORMAT = "avqoe-model"
VERSION = 1

_TREE_FIELDS = ("feature", "threshold", "left", "right", "value", "n_samples", "impurity_decrease")
_INT_FIELDS = {"feature", "left", "right", "n_samples"}


def model_to_dict(model) -> dict:
    doc = {"format": FORMAT, "version": VERSION, "feature_names": list(model.feature_names)}
    if isinstance(model, ForestModel):
        doc["kind"] = "forest"
        doc["config"] = asdict(model.config)
        doc["target_range"] = list(model.target_range)
        doc["trees"] = [
            {name: getattr(tree, name).tolist() for name in _TREE_FIELDS} for tree in model.trees
        ]
    elif isinstance(model, MlpModel):
        p = model.params
        doc["kind"] = "mlp"
        doc["config"] = asdict(model.config)
        doc["standardization"] = {
            "mean": model.input_mean.tolist(),
            "scale": model.input_scale.tolist(),
        }
        doc["weights"] = {"W1": p.W1.tolist(), "b1": p.b1.tolist(), "W2": p.W2.tolist(), "b2": p.b2}
        doc["loss_history"] = list(model.loss_history)
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    return doc


def model_from_dict(doc: dict):
    if doc.get("format") != FORMAT:
        raise ModelFormatError(f"not an {FORMAT} document")
    if doc.get("version") != VERSION:
        raise ModelFormatError(f"unsupported model version {doc.get('version')!r}")
    names = tuple(doc["feature_names"])
    kind = doc.get("kind")
    try:
        if kind == "forest":
            trees = tuple(
                RegressionTree(
                    **{
                        name: np.array(t[name], dtype=np.intp if name in _INT_FIELDS else np.float64)
                        for name in _TREE_FIELDS
                    }
                )
                for t in doc["trees"]
            )
            lo, hi = doc["target_range"]
            return ForestModel(ForestConfig(**doc["config"]), names, trees, (lo, hi))
        if kind == "mlp":
            w = doc["weights"]
            d, h = len(names), len(w["b1"])
            params = MlpParams(
                np.array(w["W1"], dtype=np.float64).reshape(d, h),
                np.array(w["b1"], dtype=np.float64),
                np.array(w["W2"], dtype=np.float64),
                float(w["b2"]),
            )
            std = doc["standardization"]
            return MlpModel(
                MlpConfig(**doc["config"]),
                names,
                params,
                np.array(std["mean"], dtype=np.float64),
                np.array(std["scale"], dtype=np.float64),
                tuple(doc.get("loss_history", ())),
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed {kind} model document: {exc}") from exc
    raise ModelFormatError(f"unknown model kind {kind!r}")


def save_model(model, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(model_to_dict(model), allow_nan=False) + "\n", encoding="utf-8")
    return path


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
