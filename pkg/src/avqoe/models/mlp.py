"""Single-hidden-layer perceptron regressor (tanh hidden units, linear output).

Inputs are z-scored with training statistics before entering the network;
raw features range from fractions of a percent to tens of thousands of kbps
and plain gradient descent at a fixed step does not survive that spread.
Training is full-batch gradient descent on the mean squared error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import DimensionalityMismatch, EmptyDataset, NonFiniteLoss


@dataclass(frozen=True)
class MlpConfig:
    hidden_units: int | None = None  # None = one unit per input feature
    learning_rate: float = 0.02
    iterations: int = 100
    seed: int = 0
    init_scale: float = 0.1

    def __post_init__(self):
        if self.hidden_units is not None and self.hidden_units < 1:
            raise ValueError("hidden_units must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not self.init_scale >= 0:
            raise ValueError("init_scale must be >= 0")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass(frozen=True)
class MlpParams:
    W1: np.ndarray  # (d, h)
    b1: np.ndarray  # (h,)
    W2: np.ndarray  # (h,)
    b2: float

    def flat(self) -> np.ndarray:
        return np.concatenate([self.W1.ravel(), self.b1, self.W2, [self.b2]])

    @classmethod
    def from_flat(cls, v, d, h) -> MlpParams:
        v = np.asarray(v, dtype=np.float64)
        i = d * h
        return cls(v[:i].reshape(d, h), v[i : i + h], v[i + h : i + 2 * h], float(v[-1]))


@dataclass(frozen=True)
class MlpModel:
    config: MlpConfig
    feature_names: tuple[str, ...]
    params: MlpParams
    input_mean: np.ndarray
    input_scale: np.ndarray  # 0 marks a constant feature, which is fed as 0
    loss_history: tuple[float, ...] = field(default=(), compare=False)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    @property
    def hidden_units(self) -> int:
        return self.params.b1.shape[0]

    def standardize(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise DimensionalityMismatch(
                f"expected {self.n_features} features, got shape {X.shape}"
            )
        return standardize(X, self.input_mean, self.input_scale)

    def predict(self, X) -> np.ndarray:
        return forward(self.params, self.standardize(X))


def fit_standardizer(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[~(scale > 0)] = 0.0
    return mean, scale


def standardize(X, mean, scale) -> np.ndarray:
    out = np.zeros_like(X, dtype=np.float64)
    live = scale > 0
    out[:, live] = (X[:, live] - mean[live]) / scale[live]
    return out


def forward(params: MlpParams, Xs: np.ndarray) -> np.ndarray:
    return params.b2 + np.tanh(Xs @ params.W1 + params.b1) @ params.W2


def loss_and_grads(params: MlpParams, Xs: np.ndarray, y: np.ndarray):
    """Mean squared error and its gradient w.r.t. every parameter."""
    n = Xs.shape[0]
    H = np.tanh(Xs @ params.W1 + params.b1)
    resid = params.b2 + H @ params.W2 - y
    loss = float(resid @ resid) / n
    dout = 2.0 * resid / n
    g_b2 = float(dout.sum())
    g_W2 = H.T @ dout
    dpre = np.outer(dout, params.W2) * (1.0 - H * H)
    g_W1 = Xs.T @ dpre
    g_b1 = dpre.sum(axis=0)
    return loss, MlpParams(g_W1, g_b1, g_W2, g_b2)


def init_params(d: int, h: int, scale: float, seed: int) -> MlpParams:
    rng = np.random.default_rng(seed)
    return MlpParams(
        W1=rng.uniform(-scale, scale, size=(d, h)),
        b1=rng.uniform(-scale, scale, size=h),
        W2=rng.uniform(-scale, scale, size=h),
        b2=float(rng.uniform(-scale, scale)),
    )


def train_mlp(dataset, config: MlpConfig = MlpConfig()) -> MlpModel:
    X, y = dataset.X, dataset.y
    if X.shape[0] == 0:
        raise EmptyDataset("cannot train an MLP on an empty dataset")
    d = X.shape[1]
    h = config.hidden_units or d
    mean, scale = fit_standardizer(X)
    Xs = standardize(X, mean, scale)
    params = init_params(d, h, config.init_scale, config.seed)
    lr = config.learning_rate
    history = []
    # overflow is caught below as a non-finite loss, so numpy need not warn
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(config.iterations):
            loss, g = loss_and_grads(params, Xs, y)
            if not math.isfinite(loss):
                raise NonFiniteLoss(f"loss became {loss} at iteration {step}")
            history.append(loss)
            params = MlpParams(
                params.W1 - lr * g.W1,
                params.b1 - lr * g.b1,
                params.W2 - lr * g.W2,
                params.b2 - lr * g.b2,
            )
        final = float(np.mean((forward(params, Xs) - y) ** 2))
    if not math.isfinite(final) or not np.all(np.isfinite(params.flat())):
        raise NonFiniteLoss("parameters diverged during training")
    history.append(final)
    return MlpModel(
        config=config,
        feature_names=tuple(dataset.feature_names),
        params=params,
        input_mean=mean,
        input_scale=scale,
        loss_history=tuple(history),
    )


def predict_mlp(model: MlpModel, x) -> float:
    if hasattr(x, "as_tuple"):
        x = x.as_tuple()
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionalityMismatch("predict_mlp takes a single feature vector")
    return float(model.predict(x)[0])
