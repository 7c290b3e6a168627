"""Accuracy metrics and the repeated k-fold cross-validation harness.

Each repetition reshuffles the rows, splits them into ``k`` near-equal folds
and predicts every held-out fold with a model fitted on the rest.  Metrics are
computed per repetition on the pooled hold-out predictions (per-fold Pearson
on ~14 points is too noisy to be useful), then averaged over repetitions.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConstantSeries, EmptyInput, LengthMismatch, TooFewRows
from .models.forest import ForestConfig, ForestModel, train_forest
from .models.mlp import MlpConfig, train_mlp

METRICS = ("rmse", "pearson_r", "abs_err_p95", "outlier_ratio")


def _pair(pred, actual):
    pred = np.asarray(pred, dtype=np.float64).ravel()
    actual = np.asarray(actual, dtype=np.float64).ravel()
    if pred.shape != actual.shape:
        raise LengthMismatch(f"{pred.size} predictions vs {actual.size} targets")
    if pred.size == 0:
        raise EmptyInput("no values")
    return pred, actual


def rmse(pred, actual) -> float:
    pred, actual = _pair(pred, actual)
    diff = pred - actual
    return math.sqrt(float(np.mean(diff * diff)))


def pearson(pred, actual) -> float:
    pred, actual = _pair(pred, actual)
    if pred.size < 2:
        raise EmptyInput("Pearson correlation needs at least two points")
    a = pred - pred.mean()
    b = actual - actual.mean()
    saa = float(a @ a)
    sbb = float(b @ b)
    if saa == 0.0 or sbb == 0.0:
        raise ConstantSeries("Pearson correlation is undefined for a constant series")
    r = float(a @ b) / math.sqrt(saa * sbb)
    return min(1.0, max(-1.0, r))


def abs_err_p95(pred, actual) -> float:
    """95th percentile (linear interpolation) of the absolute error."""
    pred, actual = _pair(pred, actual)
    return float(np.percentile(np.abs(pred - actual), 95))


def outlier_ratio(pred, actual, ci_halfwidths) -> float:
    """Share of predictions whose error exceeds the condition's 95% CI."""
    pred, actual = _pair(pred, actual)
    ci = np.asarray(ci_halfwidths, dtype=np.float64).ravel()
    if ci.shape != pred.shape:
        raise LengthMismatch(f"{ci.size} CI half-widths for {pred.size} predictions")
    return float(np.mean(np.abs(pred - actual) > ci))


def metric_summary(pred, actual, ci=None) -> dict:
    try:
        r = pearson(pred, actual)
    except ConstantSeries:
        r = None
    return {
        "rmse": rmse(pred, actual),
        "pearson_r": r,
        "abs_err_p95": abs_err_p95(pred, actual),
        "outlier_ratio": None if ci is None else outlier_ratio(pred, actual, ci),
    }


@dataclass(frozen=True)
class CvConfig:
    k: int = 10
    repetitions: int = 10
    seed: int = 0
    stratify: bool = False

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("k must be >= 2")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass(frozen=True)
class ModelSpec:
    """A named model configuration the harness can fit repeatedly."""

    name: str
    config: ForestConfig | MlpConfig

    @property
    def kind(self) -> str:
        return "forest" if isinstance(self.config, ForestConfig) else "mlp"

    def fit(self, dataset, seed: int):
        config = _with_seed(self.config, seed)
        if isinstance(config, ForestConfig):
            return train_forest(dataset, config)
        return train_mlp(dataset, config)


def _with_seed(config, seed):
    return type(config)(**{**asdict(config), "seed": seed})


def derive_seed(*keys: int) -> int:
    return int(np.random.SeedSequence(list(keys)).generate_state(1, dtype=np.uint64)[0])


def make_folds(n: int, k: int, rng: np.random.Generator, strata=None) -> list[np.ndarray]:
    """Shuffle ``range(n)`` into ``k`` disjoint folds whose sizes differ by at most one.

    With ``strata`` (one label per row) rows are shuffled within each stratum
    and dealt round-robin, so every fold gets a near-equal share of each.
    """
    if not 2 <= k <= n:
        raise TooFewRows(f"need 2 <= k <= n, got k={k}, n={n}")
    if strata is None:
        return [np.sort(f) for f in np.array_split(rng.permutation(n), k)]
    strata = np.asarray(strata)
    dealt = np.concatenate([rng.permutation(np.flatnonzero(strata == s)) for s in np.unique(strata)])
    slot = np.arange(n) % k
    return [np.sort(dealt[slot == f]) for f in range(k)]


def target_quintiles(y) -> np.ndarray:
    edges = np.quantile(y, [0.2, 0.4, 0.6, 0.8])
    return np.searchsorted(edges, y, side="right")


@dataclass
class EvalReport:
    model: str
    kind: str
    config: dict
    rmse: float
    pearson_r: float | None
    abs_err_p95: float
    outlier_ratio: float | None
    per_repetition: list[dict] = field(default_factory=list)
    per_fold: list[dict] = field(default_factory=list)
    pairs: list[tuple[str, float, float, int]] = field(default_factory=list)
    feature_importances: dict[str, float] | None = None

    def metrics(self) -> dict:
        return {m: getattr(self, m) for m in METRICS}

    def to_dict(self, include_pairs: bool = True) -> dict:
        doc = asdict(self)
        doc["pairs"] = (
            [
                {"condition_id": c, "actual_mos": a, "predicted_mos": p, "repetition": r}
                for c, a, p, r in self.pairs
            ]
            if include_pairs
            else None
        )
        return doc


def _mean_or_none(values):
    values = [v for v in values if v is not None]
    return float(np.mean(values)) if values else None


def _cv_folds(dataset, cv: CvConfig):
    n = len(dataset)
    if n < cv.k:
        raise TooFewRows(f"{n} rows cannot be split into {cv.k} folds")
    strata = target_quintiles(dataset.y) if cv.stratify else None
    for rep in range(cv.repetitions):
        rng = np.random.default_rng(np.random.SeedSequence([cv.seed, rep]))
        yield rep, make_folds(n, cv.k, rng, strata)


def _evaluate(dataset, spec: ModelSpec, folds_by_rep) -> EvalReport:
    n = len(dataset)
    ids = dataset.condition_ids
    per_rep, per_fold, pairs, importances = [], [], [], []
    for rep, folds in folds_by_rep:
        pred = np.empty(n)
        for f, test in enumerate(folds):
            train = np.setdiff1d(np.arange(n), test, assume_unique=True)
            model = spec.fit(dataset.subset(train), derive_seed(spec.config.seed, rep, f))
            pred[test] = model.predict(dataset.X[test])
            per_fold.append(
                {
                    "repetition": rep,
                    "fold": f,
                    "n_test": int(test.size),
                    "rmse": rmse(pred[test], dataset.y[test]),
                }
            )
            if isinstance(model, ForestModel):
                importances.append(model.feature_importances())
        summary = metric_summary(pred, dataset.y, dataset.ci95)
        per_rep.append({"repetition": rep, **summary})
        pairs.extend(
            (ids[i], float(dataset.y[i]), float(pred[i]), rep) for i in range(n)
        )
    report = EvalReport(
        model=spec.name,
        kind=spec.kind,
        config=asdict(spec.config),
        **{m: _mean_or_none([r[m] for r in per_rep]) for m in METRICS},
        per_repetition=per_rep,
        per_fold=per_fold,
        pairs=pairs,
    )
    if importances:
        mean = np.mean(importances, axis=0)
        report.feature_importances = dict(zip(dataset.feature_names, mean.tolist()))
    return report


def cross_validate(dataset, model_spec: ModelSpec, cv: CvConfig = CvConfig()) -> EvalReport:
    return _evaluate(dataset, model_spec, _cv_folds(dataset, cv))


@dataclass
class Comparison:
    cv: CvConfig
    reports: list[EvalReport]

    @property
    def ranking(self) -> list[str]:
        """Model names ordered by ascending RMSE (ties keep input order)."""
        order = sorted(range(len(self.reports)), key=lambda i: self.reports[i].rmse)
        return [self.reports[i].model for i in order]

    def table(self) -> list[dict]:
        return [{"model": r.model, **r.metrics()} for r in self.reports]

    def report(self, name: str) -> EvalReport:
        for r in self.reports:
            if r.model == name:
                return r
        raise KeyError(name)


def compare_models(dataset, specs, cv: CvConfig = CvConfig()) -> Comparison:
    """Cross-validate every spec on literally the same folds."""
    specs = list(specs)
    if not specs:
        raise ValueError("need at least one model spec")
    folds = list(_cv_folds(dataset, cv))
    return Comparison(cv, [_evaluate(dataset, spec, folds) for spec in specs])


def default_specs(seed: int = 0, which: str = "both") -> list[ModelSpec]:
    specs = []
    if which in ("forest", "both"):
        specs.append(ModelSpec("forest", ForestConfig(seed=seed)))
    if which in ("mlp", "both"):
        specs.append(ModelSpec("mlp", MlpConfig(seed=seed)))
    return specs
