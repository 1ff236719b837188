"""Scoring functions, skill scores and learner rankings.

The squared error underlies both performance criteria: MSE (mean of the
squared errors) and MdSE (median of the squared errors). Skill scores
express a learner's MSE as a percentage improvement over a benchmark;
positive means better than the benchmark.
"""

from __future__ import annotations

import numpy as np

from .errors import DataError


def squared_error(x: float, y: float) -> float:
    """Squared error (x - y)**2 of a prediction x against the truth y."""
    if not (np.isfinite(x) and np.isfinite(y)):
        raise DataError("squared_error requires finite inputs")
    return float((x - y) ** 2)


def _check_pair(preds, truth) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(preds, dtype=np.float64)
    t = np.asarray(truth, dtype=np.float64)
    if p.ndim != 1 or t.ndim != 1:
        raise DataError("predictions and truth must be 1-D vectors")
    if p.shape != t.shape:
        raise DataError(f"length mismatch: {p.shape[0]} predictions vs {t.shape[0]} truths")
    if p.size == 0:
        raise DataError("cannot score empty vectors")
    if not (np.isfinite(p).all() and np.isfinite(t).all()):
        raise DataError("non-finite values in predictions or truth")
    return p, t


def mse(preds, truth) -> float:
    """Mean squared error over aligned prediction/truth vectors."""
    p, t = _check_pair(preds, truth)
    return float(np.mean((p - t) ** 2))


def mdse(preds, truth) -> float:
    """Median squared error; even counts use the midpoint convention."""
    p, t = _check_pair(preds, truth)
    return float(np.median((p - t) ** 2))


def skill_score(mse_learner: float, mse_benchmark: float) -> float:
    """Percentage MSE improvement over a benchmark: 100 * (1 - mse/benchmark)."""
    if not (np.isfinite(mse_learner) and np.isfinite(mse_benchmark)):
        raise DataError("skill_score requires finite inputs")
    if mse_benchmark <= 0.0:
        raise DataError("skill_score undefined for a zero (or negative) benchmark MSE")
    return float(100.0 * (1.0 - mse_learner / mse_benchmark))


def rank_learners(scores: dict[str, float], lower_is_better: bool = True) -> dict[str, int]:
    """Rank learners; best = 1, ties share the minimum rank."""
    if not scores:
        raise DataError("cannot rank an empty score map")
    vals = np.array(list(scores.values()), dtype=np.float64)
    if not np.isfinite(vals).all():
        raise DataError("non-finite metric in ranking input")
    if not lower_is_better:
        vals = -vals
    ranks = {}
    for name, v in zip(scores, vals):
        ranks[name] = int(np.sum(vals < v)) + 1
    return ranks
