"""Ordinary least squares with intercept."""

from __future__ import annotations

import numpy as np

from ._base import LR, FittedRegressor, RegressorSpec


class LinearModel(FittedRegressor):
    algorithm = LR

    def __init__(self, spec, n_rows, n_features, feature_names, intercept, coefs):
        super().__init__(spec, n_rows, n_features, feature_names)
        self.intercept = float(intercept)
        self.coefs = np.asarray(coefs, dtype=np.float64)

    def _predict(self, X: np.ndarray) -> np.ndarray:
        return self.intercept + X @ self.coefs

    def _state_dict(self) -> dict:
        return {"intercept": self.intercept, "coefs": self.coefs.tolist()}

    @classmethod
    def _from_state(cls, spec: RegressorSpec, meta: dict, state: dict) -> "LinearModel":
        return cls(
            spec,
            meta["n_rows"],
            meta["n_features"],
            meta["feature_names"],
            state["intercept"],
            np.asarray(state["coefs"], dtype=np.float64),
        )


def fit_lr(spec: RegressorSpec, X: np.ndarray, y: np.ndarray, feature_names=None) -> LinearModel:
    """Least-squares fit; rank-deficient designs fall back to the
    minimum-norm pseudoinverse solution (flagged)."""
    n, p = X.shape
    design = np.column_stack([np.ones(n), X])
    beta, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    model = LinearModel(spec, n, p, feature_names, beta[0], beta[1:])
    if rank < p + 1:
        model.flags["pseudoinverse"] = True
    return model
