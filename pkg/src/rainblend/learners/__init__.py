"""Seven regression algorithms behind a single fit/predict interface.

Every fit is deterministic given (spec, data); the trained model is
immutable, records (n rows, p features, wall-clock fit seconds) and
rejects prediction inputs of a different width. Models round-trip
through a versioned JSON document.
"""

from __future__ import annotations

import json
import time
from pathlib import Path

import numpy as np

from ..errors import DataError
from ._base import (
    ALGORITHMS,
    BASE_LEARNER_ORDER,
    BRNN,
    DEFAULT_PARAMS,
    GBM,
    LR,
    MARS,
    META_LEARNERS,
    POLYMARS,
    RF,
    XGB,
    FittedRegressor,
    RegressorSpec,
    as_matrix,
    check_training_data,
)
from .boosting import GbmModel, XgbModel, fit_gbm, fit_xgb
from .brnn import BrnnModel, fit_brnn, penalized_loss, penalized_loss_and_grad
from .forest import ForestModel, fit_rf
from .linear import LinearModel, fit_lr
from .mars import MarsModel, PolymarsModel, fit_mars, fit_polymars

__all__ = [
    "ALGORITHMS",
    "BASE_LEARNER_ORDER",
    "BRNN",
    "DEFAULT_PARAMS",
    "GBM",
    "LR",
    "MARS",
    "META_LEARNERS",
    "POLYMARS",
    "RF",
    "XGB",
    "BrnnModel",
    "FittedRegressor",
    "ForestModel",
    "GbmModel",
    "LinearModel",
    "MarsModel",
    "PolymarsModel",
    "RegressorSpec",
    "XgbModel",
    "fit_regressor",
    "fit_table",
    "load_model",
    "penalized_loss",
    "penalized_loss_and_grad",
    "predict",
    "save_model",
]

_FITTERS = {
    LR: fit_lr,
    MARS: fit_mars,
    POLYMARS: fit_polymars,
    RF: fit_rf,
    GBM: fit_gbm,
    XGB: fit_xgb,
    BRNN: fit_brnn,
}

_MODEL_CLASSES = {
    LR: LinearModel,
    MARS: MarsModel,
    POLYMARS: PolymarsModel,
    RF: ForestModel,
    GBM: GbmModel,
    XGB: XgbModel,
    BRNN: BrnnModel,
}

MODEL_FORMAT_VERSION = 1


def fit_regressor(spec: RegressorSpec, X, y, feature_names=None) -> FittedRegressor:
    """Fit one algorithm on a feature matrix and target vector."""
    X, y = check_training_data(X, y)
    t0 = time.perf_counter()
    model = _FITTERS[spec.algorithm](spec, X, y, feature_names)
    model.fit_seconds = time.perf_counter() - t0
    return model


def fit_table(spec: RegressorSpec, table) -> FittedRegressor:
    """Fit on a FeatureTable (keeps the table's feature names)."""
    return fit_regressor(spec, table.X, table.y, table.feature_names)


def predict(model: FittedRegressor, X) -> np.ndarray:
    return model.predict(X)


def save_model(model: FittedRegressor, path) -> None:
    doc = model._metadata_dict()
    doc["format_version"] = MODEL_FORMAT_VERSION
    doc["state"] = model._state_dict()
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def load_model(path) -> FittedRegressor:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise DataError(f"unsupported model format_version {doc.get('format_version')!r}")
    algorithm = doc["algorithm"]
    if algorithm not in _MODEL_CLASSES:
        raise DataError(f"unknown algorithm {algorithm!r} in model file")
    spec = RegressorSpec(
        algorithm=doc["spec"]["algorithm"],
        seed=doc["spec"]["seed"],
        params=doc["spec"]["params"],
    )
    meta = dict(doc)
    if meta["feature_names"] is not None:
        meta["feature_names"] = tuple(meta["feature_names"])
    model = _MODEL_CLASSES[algorithm]._from_state(spec, meta, doc["state"])
    model._restore_metadata(doc)
    return model


def default_base_specs(seed: int = 0) -> tuple[RegressorSpec, ...]:
    """The six base learners in their fixed matrix-column order."""
    return tuple(RegressorSpec(algorithm=a, seed=seed) for a in BASE_LEARNER_ORDER)
