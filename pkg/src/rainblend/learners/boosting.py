"""Boosted tree ensembles: classic gradient boosting and a second-order
regularized variant.

Both use the squared-error objective, start from the target mean and
record per-split gains so gain-based feature importance can be derived
without refitting.
"""

from __future__ import annotations

import numpy as np

from ._base import GBM, XGB, FittedRegressor, RegressorSpec
from .trees import Tree, derive_seed, grow_second_order_tree, grow_variance_tree, sample_without_replacement

_SUB_SALT = 0x5B
_GROW_SALT = 0x6E


class _BoostedModel(FittedRegressor):
    def __init__(self, spec, n_rows, n_features, feature_names, base_score, learning_rate, trees):
        super().__init__(spec, n_rows, n_features, feature_names)
        self.base_score = float(base_score)
        self.learning_rate = float(learning_rate)
        self.trees: list[Tree] = trees
        self.train_mse_path: list[float] = []

    def _predict(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        out = np.full(X.shape[0], self.base_score, dtype=np.float64)
        for tree in self.trees:
            tree.add_prediction(X, out, self.learning_rate)
        return out

    def feature_gain_totals(self) -> np.ndarray:
        totals = np.zeros(self.n_features, dtype=np.float64)
        for tree in self.trees:
            totals += tree.feature_gain_totals(self.n_features)
        return totals

    def features_used(self) -> set[int]:
        used: set[int] = set()
        for tree in self.trees:
            used |= tree.features_used()
        return used

    def _state_dict(self) -> dict:
        return {
            "base_score": self.base_score,
            "learning_rate": self.learning_rate,
            "train_mse_path": list(self.train_mse_path),
            "trees": [t.to_lists() for t in self.trees],
        }

    @classmethod
    def _from_state(cls, spec, meta, state):
        model = cls(
            spec,
            meta["n_rows"],
            meta["n_features"],
            meta["feature_names"],
            state["base_score"],
            state["learning_rate"],
            [Tree.from_lists(doc) for doc in state["trees"]],
        )
        model.train_mse_path = list(state["train_mse_path"])
        return model


class GbmModel(_BoostedModel):
    algorithm = GBM


class XgbModel(_BoostedModel):
    algorithm = XGB


def fit_gbm(spec: RegressorSpec, X: np.ndarray, y: np.ndarray, feature_names=None) -> GbmModel:
    """Stage-wise trees on residuals with shrinkage and row subsampling."""
    params = spec.resolved_params()
    n, p = X.shape
    n_trees = int(params["n_trees"])
    lr = float(params["learning_rate"])
    max_depth = int(params["max_depth"])
    subsample = float(params["subsample"])
    min_leaf = int(params["min_obs_in_node"])

    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    base = float(np.mean(y))
    pred = np.full(n, base, dtype=np.float64)
    all_rows = np.arange(n, dtype=np.int64)

    model = GbmModel(spec, n, p, feature_names, base, lr, [])
    for t in range(n_trees):
        tree_seed = (spec.seed ^ t) & 0xFFFFFFFFFFFFFFFF
        if subsample < 1.0:
            k = max(1, int(subsample * n))
            rows = sample_without_replacement(n, k, derive_seed(tree_seed, _SUB_SALT))
        else:
            rows = all_rows
        resid = y - pred
        tree = grow_variance_tree(
            X,
            resid,
            rows,
            max_depth=max_depth,
            min_split_size=2 * min_leaf,
            min_leaf=min_leaf,
            mtry=p,
            seed=derive_seed(tree_seed, _GROW_SALT),
        )
        tree.add_prediction(X, pred, lr)
        model.trees.append(tree)
        model.train_mse_path.append(float(np.mean((y - pred) ** 2)))
    return model


def fit_xgb(spec: RegressorSpec, X: np.ndarray, y: np.ndarray, feature_names=None) -> XgbModel:
    """Second-order boosting with an L2 leaf penalty.

    For the squared-error objective the per-row gradient is pred - y and
    the hessian is 1, so leaf weights take the closed form -G/(H + lambda).
    """
    params = spec.resolved_params()
    n, p = X.shape
    n_rounds = int(params["n_rounds"])
    lr = float(params["learning_rate"])
    max_depth = int(params["max_depth"])
    reg_lambda = float(params["reg_lambda"])
    min_child_weight = float(params["min_child_weight"])
    subsample = float(params["subsample"])

    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    base = float(np.mean(y))
    pred = np.full(n, base, dtype=np.float64)
    ones = np.ones(n, dtype=np.float64)
    all_rows = np.arange(n, dtype=np.int64)

    model = XgbModel(spec, n, p, feature_names, base, lr, [])
    for t in range(n_rounds):
        tree_seed = (spec.seed ^ t) & 0xFFFFFFFFFFFFFFFF
        if subsample < 1.0:
            k = max(1, int(subsample * n))
            rows = sample_without_replacement(n, k, derive_seed(tree_seed, _SUB_SALT))
        else:
            rows = all_rows
        grad = pred - y
        tree = grow_second_order_tree(
            X,
            grad,
            ones,
            rows,
            max_depth=max_depth,
            reg_lambda=reg_lambda,
            min_child_weight=min_child_weight,
        )
        tree.add_prediction(X, pred, lr)
        model.trees.append(tree)
        model.train_mse_path.append(float(np.mean((y - pred) ** 2)))
    return model
