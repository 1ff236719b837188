"""Random forest regression: bagged variance-reduction trees."""

from __future__ import annotations

import numpy as np

from ._base import RF, FittedRegressor, RegressorSpec
from .trees import Tree, derive_seed, grow_variance_tree, sample_with_replacement

_BOOT_SALT = 0xB0
_GROW_SALT = 0x64


class ForestModel(FittedRegressor):
    algorithm = RF

    def __init__(self, spec, n_rows, n_features, feature_names, trees: list[Tree]):
        super().__init__(spec, n_rows, n_features, feature_names)
        self.trees = trees

    def _predict(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        out = np.zeros(X.shape[0], dtype=np.float64)
        for tree in self.trees:
            tree.add_prediction(X, out, 1.0)
        out /= len(self.trees)
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
        return {"trees": [t.to_lists() for t in self.trees]}

    @classmethod
    def _from_state(cls, spec, meta, state) -> "ForestModel":
        trees = [Tree.from_lists(doc) for doc in state["trees"]]
        return cls(spec, meta["n_rows"], meta["n_features"], meta["feature_names"], trees)


def fit_rf(spec: RegressorSpec, X: np.ndarray, y: np.ndarray, feature_names=None) -> ForestModel:
    """Bootstrap-aggregated trees; per-tree seeds are seed XOR tree index.

    Nodes with at most ``min_node_size`` rows become leaves; each split
    considers ``mtry`` feature candidates (default p // 3).
    """
    params = spec.resolved_params()
    n, p = X.shape
    n_trees = int(params["n_trees"])
    mtry = params["mtry"] if params["mtry"] is not None else max(1, p // 3)
    min_node_size = int(params["min_node_size"])
    max_depth = params["max_depth"]
    bootstrap = bool(params["bootstrap"])

    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    all_rows = np.arange(n, dtype=np.int64)

    trees: list[Tree] = []
    for t in range(n_trees):
        tree_seed = (spec.seed ^ t) & 0xFFFFFFFFFFFFFFFF
        if bootstrap:
            rows = sample_with_replacement(n, n, derive_seed(tree_seed, _BOOT_SALT))
        else:
            rows = all_rows
        trees.append(
            grow_variance_tree(
                X,
                y,
                rows,
                max_depth=max_depth,
                min_split_size=min_node_size + 1,
                min_leaf=1,
                mtry=int(mtry),
                seed=derive_seed(tree_seed, _GROW_SALT),
            )
        )
    return ForestModel(spec, n, p, feature_names, trees)
