"""Shared regressor interface: specs, fitted-model base class, validation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..errors import DataError, NumericError

LR = "LR"
MARS = "MARS"
POLYMARS = "PolyMARS"
RF = "RF"
GBM = "GBM"
XGB = "XGB"
BRNN = "BRNN"

#: Fixed base-learner order used for prediction matrices and reports.
BASE_LEARNER_ORDER = (MARS, POLYMARS, RF, GBM, XGB, BRNN)
#: Algorithms allowed as stacking meta-learners.
META_LEARNERS = (LR,) + BASE_LEARNER_ORDER
ALGORITHMS = META_LEARNERS

DEFAULT_PARAMS: dict[str, dict[str, Any]] = {
    LR: {},
    MARS: {"max_basis": None, "max_knots": 100, "gcv_penalty": 3.0},
    POLYMARS: {"max_basis": None, "max_knots": 100, "gcv_penalty": 3.0},
    RF: {"n_trees": 500, "min_node_size": 5, "mtry": None, "bootstrap": True, "max_depth": None},
    GBM: {
        "n_trees": 500,
        "learning_rate": 0.1,
        "max_depth": 3,
        "subsample": 0.5,
        "min_obs_in_node": 10,
    },
    XGB: {
        "n_rounds": 500,
        "learning_rate": 0.3,
        "max_depth": 6,
        "reg_lambda": 1.0,
        "min_child_weight": 1.0,
        "subsample": 1.0,
    },
    BRNN: {"hidden": 20, "max_steps": 1000, "rel_tol": 1e-8, "evidence_every": 10},
}


@dataclass(frozen=True)
class RegressorSpec:
    """Declarative configuration of one regression algorithm."""

    algorithm: str
    seed: int = 0
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise DataError(f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}")
        unknown = set(self.params) - set(DEFAULT_PARAMS[self.algorithm])
        if unknown:
            raise DataError(f"{self.algorithm}: unknown hyperparameters {sorted(unknown)}")

    def resolved_params(self) -> dict[str, Any]:
        merged = dict(DEFAULT_PARAMS[self.algorithm])
        merged.update(self.params)
        return merged


def as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise DataError("feature input must be a 2-D matrix")
    return X


def check_training_data(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = as_matrix(X)
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or y.shape[0] != X.shape[0]:
        raise DataError("target vector length must match the feature matrix")
    if X.shape[0] < 2:
        raise DataError("at least 2 training rows required")
    if not np.isfinite(X).all() or not np.isfinite(y).all():
        raise DataError("training data contains non-finite values")
    return X, y


class FittedRegressor:
    """A trained, immutable model; predict is pure given (state, rows)."""

    algorithm: str = "?"

    def __init__(
        self,
        spec: RegressorSpec,
        n_rows: int,
        n_features: int,
        feature_names: tuple[str, ...] | None = None,
    ):
        self.spec = spec
        self.n_rows = int(n_rows)
        self.n_features = int(n_features)
        self.feature_names = tuple(feature_names) if feature_names else None
        self.fit_seconds = 0.0
        self.flags: dict[str, Any] = {}

    def predict(self, X) -> np.ndarray:
        X = as_matrix(X)
        if X.shape[1] != self.n_features:
            raise DataError(
                f"{self.algorithm}: prediction input has {X.shape[1]} columns, "
                f"model was fit on {self.n_features}"
            )
        if not np.isfinite(X).all():
            raise DataError("prediction input contains non-finite values")
        out = np.asarray(self._predict(X), dtype=np.float64)
        if not np.isfinite(out).all():
            raise NumericError(f"{self.algorithm}: non-finite prediction produced")
        return out

    def _predict(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    # serialization hooks; subclasses provide their state payload
    def _state_dict(self) -> dict[str, Any]:
        raise NotImplementedError

    def _metadata_dict(self) -> dict[str, Any]:
        return {
            "algorithm": self.algorithm,
            "spec": {
                "algorithm": self.spec.algorithm,
                "seed": self.spec.seed,
                "params": dict(self.spec.params),
            },
            "n_rows": self.n_rows,
            "n_features": self.n_features,
            "feature_names": list(self.feature_names) if self.feature_names else None,
            "fit_seconds": self.fit_seconds,
            "flags": dict(self.flags),
        }

    def _restore_metadata(self, doc: dict[str, Any]) -> None:
        self.fit_seconds = float(doc["fit_seconds"])
        self.flags = dict(doc["flags"])
