"""Independent reference implementations used as test oracles.

The metric references are plain Python loops over lists, no numpy: they
exist to disagree with the package if the vectorized code is wrong.  The
gradient reference perturbs parameters and differences the loss numerically.
"""

import math

import numpy as np

from avqoe.models.mlp import MlpParams, init_params, loss_and_grads


def rmse(pred, actual):
    total = 0.0
    for p, a in zip(pred, actual):
        total += (p - a) ** 2
    return math.sqrt(total / len(pred))


def pearson(x, y):
    n = len(x)
    mx = sum(x) / n
    my = sum(y) / n
    sxy = sxx = syy = 0.0
    for a, b in zip(x, y):
        sxy += (a - mx) * (b - my)
        sxx += (a - mx) ** 2
        syy += (b - my) ** 2
    return sxy / math.sqrt(sxx * syy)


def percentile_linear(values, q):
    """Percentile with linear interpolation between closest ranks (q in 0..100)."""
    s = sorted(values)
    pos = (len(s) - 1) * q / 100.0
    lo = math.floor(pos)
    hi = min(lo + 1, len(s) - 1)
    return s[lo] + (s[hi] - s[lo]) * (pos - lo)


def abs_err_p95(pred, actual):
    return percentile_linear([abs(p - a) for p, a in zip(pred, actual)], 95)


def outlier_ratio(pred, actual, ci):
    hits = 0
    for p, a, c in zip(pred, actual, ci):
        if abs(p - a) > c:
            hits += 1
    return hits / len(pred)


def finite_difference_check(seed, n=5, d=3, h=4, eps=1e-5):
    """Largest relative error between analytic and central-difference gradients."""
    rng = np.random.default_rng(seed)
    Xs = rng.normal(size=(n, d))
    y = rng.uniform(1, 5, size=n)
    params = init_params(d, h, 0.8, seed)
    _, grads = loss_and_grads(params, Xs, y)
    analytic = grads.flat()
    theta = params.flat()
    worst = 0.0
    for i in range(theta.size):
        plus, minus = theta.copy(), theta.copy()
        plus[i] += eps
        minus[i] -= eps
        lp, _ = loss_and_grads(MlpParams.from_flat(plus, d, h), Xs, y)
        lm, _ = loss_and_grads(MlpParams.from_flat(minus, d, h), Xs, y)
        numeric = (lp - lm) / (2 * eps)
        denom = max(abs(numeric), abs(analytic[i]), 1e-8)
        worst = max(worst, abs(numeric - analytic[i]) / denom)
    return worst
