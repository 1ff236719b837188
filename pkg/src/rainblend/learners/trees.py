"""Regression tree kernels shared by the forest and boosting learners.

The growth kernels are numba-compiled and use an explicit splitmix64
stream so results are bit-reproducible for a given seed regardless of
thread scheduling. Trees are stored as flat arrays; ``feature == -1``
marks a leaf.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

_U64_MASK = 0xFFFFFFFFFFFFFFFF


def splitmix64(state: int) -> tuple[int, int]:
    """Python-side splitmix64; mirrors the in-kernel stream."""
    state = (state + 0x9E3779B97F4A7C15) & _U64_MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _U64_MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _U64_MASK
    return state, z ^ (z >> 31)


def derive_seed(seed: int, *salt: int) -> np.uint64:
    """Mix extra stream identifiers into a 64-bit seed."""
    state = int(seed) & _U64_MASK
    for s in salt:
        state, _ = splitmix64(state ^ (int(s) & _U64_MASK))
    _, out = splitmix64(state)
    return np.uint64(out)


@njit(cache=True, nogil=True)
def _mix64(state):
    state = state + np.uint64(0x9E3779B97F4A7C15)
    z = state
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    z = z ^ (z >> np.uint64(31))
    return state, z


@njit(cache=True, nogil=True)
def sample_with_replacement(n, k, seed):
    state = np.uint64(seed)
    out = np.empty(k, np.int64)
    for i in range(k):
        state, z = _mix64(state)
        out[i] = np.int64(z % np.uint64(n))
    return out


@njit(cache=True, nogil=True)
def sample_without_replacement(n, k, seed):
    state = np.uint64(seed)
    pool = np.arange(n)
    for i in range(k):
        state, z = _mix64(state)
        j = i + np.int64(z % np.uint64(n - i))
        tmp = pool[i]
        pool[i] = pool[j]
        pool[j] = tmp
    out = pool[:k].copy()
    out.sort()
    return out


@njit(cache=True, nogil=True)
def _grow_variance_tree(X, y, rows, max_depth, min_split_size, min_leaf, mtry, seed):
    n = rows.shape[0]
    p = X.shape[1]
    max_nodes = 2 * n + 1
    feature = np.full(max_nodes, -1, np.int64)
    threshold = np.zeros(max_nodes, np.float64)
    left = np.full(max_nodes, -1, np.int64)
    right = np.full(max_nodes, -1, np.int64)
    value = np.zeros(max_nodes, np.float64)
    gain = np.zeros(max_nodes, np.float64)
    count = np.zeros(max_nodes, np.int64)

    idx = rows.copy()
    feats_pool = np.arange(p)
    state = np.uint64(seed)

    stack_s = np.empty(max_nodes, np.int64)
    stack_e = np.empty(max_nodes, np.int64)
    stack_d = np.empty(max_nodes, np.int64)
    stack_id = np.empty(max_nodes, np.int64)
    stack_s[0] = 0
    stack_e[0] = n
    stack_d[0] = 0
    stack_id[0] = 0
    top = 1
    next_node = 1

    while top > 0:
        top -= 1
        s = stack_s[top]
        e = stack_e[top]
        depth = stack_d[top]
        node = stack_id[top]
        m = e - s

        tot = 0.0
        for i in range(s, e):
            tot += y[idx[i]]
        value[node] = tot / m
        count[node] = m

        if m < min_split_size or depth >= max_depth:
            continue

        # sample the feature candidates for this node
        for i in range(mtry):
            state, z = _mix64(state)
            j = i + np.int64(z % np.uint64(p - i))
            tmp = feats_pool[i]
            feats_pool[i] = feats_pool[j]
            feats_pool[j] = tmp

        best_gain = 0.0
        best_feat = -1
        best_thr = 0.0
        vals = np.empty(m, np.float64)
        ys = np.empty(m, np.float64)
        for fi in range(mtry):
            f = feats_pool[fi]
            for i in range(m):
                vals[i] = X[idx[s + i], f]
            order = np.argsort(vals)
            for i in range(m):
                ys[i] = y[idx[s + order[i]]]
            sum_l = 0.0
            prev = vals[order[0]]
            for i in range(1, m):
                sum_l += ys[i - 1]
                cur = vals[order[i]]
                if cur > prev:
                    n_l = i
                    n_r = m - i
                    if n_l >= min_leaf and n_r >= min_leaf:
                        sum_r = tot - sum_l
                        g = sum_l * sum_l / n_l + sum_r * sum_r / n_r - tot * tot / m
                        if g > best_gain:
                            best_gain = g
                            best_feat = f
                            best_thr = 0.5 * (prev + cur)
                prev = cur

        if best_feat < 0:
            continue

        buf = np.empty(m, np.int64)
        nl = 0
        for i in range(s, e):
            if X[idx[i], best_feat] <= best_thr:
                buf[nl] = idx[i]
                nl += 1
        nr = nl
        for i in range(s, e):
            if X[idx[i], best_feat] > best_thr:
                buf[nr] = idx[i]
                nr += 1
        for i in range(m):
            idx[s + i] = buf[i]

        feature[node] = best_feat
        threshold[node] = best_thr
        gain[node] = best_gain
        left_id = next_node
        right_id = next_node + 1
        next_node += 2
        left[node] = left_id
        right[node] = right_id

        stack_s[top] = s
        stack_e[top] = s + nl
        stack_d[top] = depth + 1
        stack_id[top] = left_id
        top += 1
        stack_s[top] = s + nl
        stack_e[top] = e
        stack_d[top] = depth + 1
        stack_id[top] = right_id
        top += 1

    return (
        feature[:next_node],
        threshold[:next_node],
        left[:next_node],
        right[:next_node],
        value[:next_node],
        gain[:next_node],
        count[:next_node],
    )


@njit(cache=True, nogil=True)
def _grow_second_order_tree(X, g, h, rows, max_depth, reg_lambda, min_child_weight):
    """Tree on gradient/hessian sums; leaves hold w = -G / (H + lambda)."""
    n = rows.shape[0]
    p = X.shape[1]
    max_nodes = 2 * n + 1
    feature = np.full(max_nodes, -1, np.int64)
    threshold = np.zeros(max_nodes, np.float64)
    left = np.full(max_nodes, -1, np.int64)
    right = np.full(max_nodes, -1, np.int64)
    value = np.zeros(max_nodes, np.float64)
    gain = np.zeros(max_nodes, np.float64)
    count = np.zeros(max_nodes, np.int64)

    idx = rows.copy()
    stack_s = np.empty(max_nodes, np.int64)
    stack_e = np.empty(max_nodes, np.int64)
    stack_d = np.empty(max_nodes, np.int64)
    stack_id = np.empty(max_nodes, np.int64)
    stack_s[0] = 0
    stack_e[0] = n
    stack_d[0] = 0
    stack_id[0] = 0
    top = 1
    next_node = 1

    while top > 0:
        top -= 1
        s = stack_s[top]
        e = stack_e[top]
        depth = stack_d[top]
        node = stack_id[top]
        m = e - s

        g_tot = 0.0
        h_tot = 0.0
        for i in range(s, e):
            g_tot += g[idx[i]]
            h_tot += h[idx[i]]
        value[node] = -g_tot / (h_tot + reg_lambda)
        count[node] = m

        if m < 2 or depth >= max_depth:
            continue

        parent_score = g_tot * g_tot / (h_tot + reg_lambda)
        best_gain = 0.0
        best_feat = -1
        best_thr = 0.0
        vals = np.empty(m, np.float64)
        gs = np.empty(m, np.float64)
        hs = np.empty(m, np.float64)
        for f in range(p):
            for i in range(m):
                vals[i] = X[idx[s + i], f]
            order = np.argsort(vals)
            for i in range(m):
                gs[i] = g[idx[s + order[i]]]
                hs[i] = h[idx[s + order[i]]]
            g_l = 0.0
            h_l = 0.0
            prev = vals[order[0]]
            for i in range(1, m):
                g_l += gs[i - 1]
                h_l += hs[i - 1]
                cur = vals[order[i]]
                if cur > prev:
                    g_r = g_tot - g_l
                    h_r = h_tot - h_l
                    if h_l >= min_child_weight and h_r >= min_child_weight:
                        gn = 0.5 * (
                            g_l * g_l / (h_l + reg_lambda)
                            + g_r * g_r / (h_r + reg_lambda)
                            - parent_score
                        )
                        if gn > best_gain:
                            best_gain = gn
                            best_feat = f
                            best_thr = 0.5 * (prev + cur)
                prev = cur

        if best_feat < 0:
            continue

        buf = np.empty(m, np.int64)
        nl = 0
        for i in range(s, e):
            if X[idx[i], best_feat] <= best_thr:
                buf[nl] = idx[i]
                nl += 1
        nr = nl
        for i in range(s, e):
            if X[idx[i], best_feat] > best_thr:
                buf[nr] = idx[i]
                nr += 1
        for i in range(m):
            idx[s + i] = buf[i]

        feature[node] = best_feat
        threshold[node] = best_thr
        gain[node] = best_gain
        left_id = next_node
        right_id = next_node + 1
        next_node += 2
        left[node] = left_id
        right[node] = right_id

        stack_s[top] = s
        stack_e[top] = s + nl
        stack_d[top] = depth + 1
        stack_id[top] = left_id
        top += 1
        stack_s[top] = s + nl
        stack_e[top] = e
        stack_d[top] = depth + 1
        stack_id[top] = right_id
        top += 1

    return (
        feature[:next_node],
        threshold[:next_node],
        left[:next_node],
        right[:next_node],
        value[:next_node],
        gain[:next_node],
        count[:next_node],
    )


@njit(cache=True, nogil=True)
def _accumulate_tree(feature, threshold, left, right, value, X, out, scale):
    for i in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] += scale * value[node]


NO_DEPTH_LIMIT = 1 << 30


@dataclass
class Tree:
    """A grown regression tree stored as flat node arrays."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    gain: np.ndarray
    count: np.ndarray

    @property
    def n_nodes(self) -> int:
        return int(self.feature.shape[0])

    def predict(self, X: np.ndarray) -> np.ndarray:
        out = np.zeros(X.shape[0], dtype=np.float64)
        _accumulate_tree(self.feature, self.threshold, self.left, self.right, self.value, X, out, 1.0)
        return out

    def add_prediction(self, X: np.ndarray, out: np.ndarray, scale: float) -> None:
        _accumulate_tree(self.feature, self.threshold, self.left, self.right, self.value, X, out, scale)

    def feature_gain_totals(self, n_features: int) -> np.ndarray:
        totals = np.zeros(n_features, dtype=np.float64)
        for f, g in zip(self.feature, self.gain):
            if f >= 0:
                totals[f] += g
        return totals

    def features_used(self) -> set[int]:
        return {int(f) for f in self.feature if f >= 0}

    def to_lists(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "gain": self.gain.tolist(),
            "count": self.count.tolist(),
        }

    @classmethod
    def from_lists(cls, doc: dict) -> "Tree":
        return cls(
            feature=np.asarray(doc["feature"], dtype=np.int64),
            threshold=np.asarray(doc["threshold"], dtype=np.float64),
            left=np.asarray(doc["left"], dtype=np.int64),
            right=np.asarray(doc["right"], dtype=np.int64),
            value=np.asarray(doc["value"], dtype=np.float64),
            gain=np.asarray(doc["gain"], dtype=np.float64),
            count=np.asarray(doc["count"], dtype=np.int64),
        )


def grow_variance_tree(
    X: np.ndarray,
    y: np.ndarray,
    rows: np.ndarray,
    max_depth: int | None,
    min_split_size: int,
    min_leaf: int,
    mtry: int,
    seed: int,
) -> Tree:
    """Variance-reduction tree on X[rows]; gains are SSE reductions."""
    depth = NO_DEPTH_LIMIT if max_depth is None else int(max_depth)
    arrays = _grow_variance_tree(
        np.ascontiguousarray(X, dtype=np.float64),
        np.ascontiguousarray(y, dtype=np.float64),
        np.ascontiguousarray(rows, dtype=np.int64),
        depth,
        int(min_split_size),
        int(min_leaf),
        int(mtry),
        np.uint64(int(seed) & _U64_MASK),
    )
    return Tree(*arrays)


def grow_second_order_tree(
    X: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    rows: np.ndarray,
    max_depth: int,
    reg_lambda: float,
    min_child_weight: float,
) -> Tree:
    """Second-order gain tree; leaf values are -G/(H + lambda)."""
    arrays = _grow_second_order_tree(
        np.ascontiguousarray(X, dtype=np.float64),
        np.ascontiguousarray(g, dtype=np.float64),
        np.ascontiguousarray(h, dtype=np.float64),
        np.ascontiguousarray(rows, dtype=np.int64),
        int(max_depth),
        float(reg_lambda),
        float(min_child_weight),
    )
    return Tree(*arrays)
