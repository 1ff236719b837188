"""Adaptive regression splines: additive hinge models pruned by GCV.

Two fitting modes share the machinery:

* hinge-pair mode (``MARS``) greedily adds reflected hinge pairs
  max(x - t, 0) / max(t - x, 0) by SSE reduction;
* linear-first mode (``PolyMARS``) adds one column at a time and admits a
  hinge for feature j only once the linear term of j is in the model.

Both run a greedy backward deletion pass and keep the model with the
lowest generalized cross-validation score seen along the way, so the
final GCV never exceeds the forward model's.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from ._base import MARS, POLYMARS, FittedRegressor, RegressorSpec

KIND_INTERCEPT = 0
KIND_HINGE_POS = 1  # max(x - t, 0)
KIND_HINGE_NEG = 2  # max(t - x, 0)
KIND_LINEAR = 3

Basis = tuple[int, int, float]  # (kind, feature, knot)

_REL_IMPROVE = 1e-10


def _knot_candidates(x: np.ndarray, max_knots: int) -> np.ndarray:
    u = np.unique(x)
    if u.size <= max_knots:
        return u
    pick = np.round(np.linspace(0, u.size - 1, max_knots)).astype(int)
    return u[np.unique(pick)]


def _basis_column(X: np.ndarray, basis: Basis) -> np.ndarray:
    kind, f, t = basis
    if kind == KIND_INTERCEPT:
        return np.ones(X.shape[0])
    if kind == KIND_HINGE_POS:
        return np.maximum(X[:, f] - t, 0.0)
    if kind == KIND_HINGE_NEG:
        return np.maximum(t - X[:, f], 0.0)
    return X[:, f]


def _design(X: np.ndarray, bases: list[Basis]) -> np.ndarray:
    return np.column_stack([_basis_column(X, b) for b in bases])


def _gcv(sse: float, n: int, m: int, penalty: float) -> float:
    effective = m + penalty * (m - 1)
    denom = 1.0 - effective / n
    if denom <= 1e-9:
        return np.inf
    return (sse / n) / denom**2


def _solve_normal(G: np.ndarray, b: np.ndarray):
    """Cholesky solve of G beta = b with escalating jitter; lstsq fallback."""
    m = G.shape[0]
    scale = np.trace(G) / m + 1.0
    jitter = 1e-12 * scale
    for _ in range(4):
        try:
            cho = cho_factor(G + jitter * np.eye(m), lower=True)
            return cho, cho_solve(cho, b)
        except LinAlgError:
            jitter *= 1e3
    beta, *_ = np.linalg.lstsq(G, b, rcond=None)
    return None, beta


class MarsModel(FittedRegressor):
    algorithm = MARS

    def __init__(self, spec, n_rows, n_features, feature_names, bases, coefs, gcv):
        super().__init__(spec, n_rows, n_features, feature_names)
        self.bases: list[Basis] = bases
        self.coefs = np.asarray(coefs, dtype=np.float64)
        self.gcv = float(gcv)

    @property
    def n_basis(self) -> int:
        return len(self.bases)

    def _predict(self, X: np.ndarray) -> np.ndarray:
        return _design(X, self.bases) @ self.coefs

    def _state_dict(self) -> dict:
        return {
            "bases": [[int(k), int(f), float(t)] for k, f, t in self.bases],
            "coefs": self.coefs.tolist(),
            "gcv": self.gcv,
        }

    @classmethod
    def _from_state(cls, spec, meta, state):
        bases = [(int(k), int(f), float(t)) for k, f, t in state["bases"]]
        return cls(
            spec,
            meta["n_rows"],
            meta["n_features"],
            meta["feature_names"],
            bases,
            np.asarray(state["coefs"], dtype=np.float64),
            state["gcv"],
        )


class PolymarsModel(MarsModel):
    algorithm = POLYMARS


def _resolve_limits(params: dict, n: int, p: int) -> tuple[int, int, float]:
    penalty = float(params["gcv_penalty"])
    max_basis = params["max_basis"]
    if max_basis is None:
        max_basis = max(21, 2 * p + 1)
    # keep the GCV denominator positive for the largest model
    cap = int((0.9 * n + penalty) / (1.0 + penalty))
    return max(1, min(int(max_basis), cap)), int(params["max_knots"]), penalty


def _forward_hinge_pairs(X, y, max_basis, max_knots):
    n, p = X.shape
    bases: list[Basis] = [(KIND_INTERCEPT, -1, 0.0)]
    B = np.ones((n, 1))

    cand_feat: list[int] = []
    cand_knot: list[float] = []
    for f in range(p):
        for t in _knot_candidates(X[:, f], max_knots):
            cand_feat.append(f)
            cand_knot.append(float(t))
    if not cand_feat:
        return bases, B
    feats = np.asarray(cand_feat, dtype=np.int64)
    knots = np.asarray(cand_knot, dtype=np.float64)
    Xc = X[:, feats]
    U_pos = np.maximum(Xc - knots, 0.0)
    U_neg = np.maximum(knots - Xc, 0.0)
    sq_pos = np.einsum("ij,ij->j", U_pos, U_pos)
    sq_neg = np.einsum("ij,ij->j", U_neg, U_neg)
    Uty_pos = U_pos.T @ y
    Uty_neg = U_neg.T @ y
    yty = float(y @ y)
    alive = (sq_pos > 0) | (sq_neg > 0)
    scale = None

    while B.shape[1] + 1 <= max_basis and alive.any():
        m = B.shape[1]
        G = B.T @ B
        b = B.T @ y
        cho, beta0 = _solve_normal(G, b)
        if cho is None:
            break
        sse0 = max(yty - b @ beta0, 0.0)
        if scale is None:
            scale = max(sse0, 1e-12)
        if sse0 <= 1e-12 * scale:
            break

        BtUp = B.T @ U_pos
        BtUn = B.T @ U_neg
        Ap = cho_solve(cho, BtUp)
        An = cho_solve(cho, BtUn)
        S11 = sq_pos - np.einsum("ij,ij->j", BtUp, Ap)
        S22 = sq_neg - np.einsum("ij,ij->j", BtUn, An)
        S12 = -np.einsum("ij,ij->j", BtUp, An)
        r1 = Uty_pos - BtUp.T @ beta0
        r2 = Uty_neg - BtUn.T @ beta0

        ok1 = S11 > 1e-10 * sq_pos + 1e-12
        ok2 = S22 > 1e-10 * sq_neg + 1e-12
        red_pos = np.where(ok1, r1 * r1 / np.where(ok1, S11, 1.0), 0.0)
        red_neg = np.where(ok2, r2 * r2 / np.where(ok2, S22, 1.0), 0.0)
        det = S11 * S22 - S12 * S12
        okp = ok1 & ok2 & (det > 1e-10 * np.maximum(S11 * S22, 1e-24))
        if m + 2 > max_basis:
            okp &= False
        red_pair = np.where(
            okp,
            (S22 * r1 * r1 - 2.0 * S12 * r1 * r2 + S11 * r2 * r2) / np.where(okp, det, 1.0),
            0.0,
        )
        red = np.maximum(red_pair, np.maximum(red_pos, red_neg))
        red = np.where(alive, red, -np.inf)
        best = int(np.argmax(red))
        if not np.isfinite(red[best]) or red[best] <= _REL_IMPROVE * scale:
            break

        f = int(feats[best])
        t = float(knots[best])
        if okp[best] and red_pair[best] >= red_pos[best] and red_pair[best] >= red_neg[best]:
            bases.append((KIND_HINGE_POS, f, t))
            bases.append((KIND_HINGE_NEG, f, t))
            B = np.column_stack([B, U_pos[:, best], U_neg[:, best]])
        elif ok1[best] and red_pos[best] >= red_neg[best]:
            bases.append((KIND_HINGE_POS, f, t))
            B = np.column_stack([B, U_pos[:, best]])
        else:
            bases.append((KIND_HINGE_NEG, f, t))
            B = np.column_stack([B, U_neg[:, best]])
        alive[best] = False

    return bases, B


def _forward_linear_first(X, y, max_basis, max_knots):
    n, p = X.shape
    bases: list[Basis] = [(KIND_INTERCEPT, -1, 0.0)]
    B = np.ones((n, 1))

    cand: list[Basis] = [(KIND_LINEAR, f, 0.0) for f in range(p)]
    hinge_of: dict[int, list[int]] = {}
    for f in range(p):
        knots = _knot_candidates(X[:, f], max_knots)
        hinge_of[f] = []
        for t in knots[1:]:  # hinge at the minimum duplicates the linear term
            hinge_of[f].append(len(cand))
            cand.append((KIND_HINGE_POS, f, float(t)))
    U = np.column_stack([_basis_column(X, c) for c in cand])
    sq = np.einsum("ij,ij->j", U, U)
    Uty = U.T @ y
    yty = float(y @ y)

    alive = np.zeros(len(cand), dtype=bool)
    alive[:p] = X.std(axis=0) > 0  # linear terms first; constants excluded
    scale = None

    while B.shape[1] + 1 <= max_basis and alive.any():
        G = B.T @ B
        b = B.T @ y
        cho, beta0 = _solve_normal(G, b)
        if cho is None:
            break
        sse0 = max(yty - b @ beta0, 0.0)
        if scale is None:
            scale = max(sse0, 1e-12)
        if sse0 <= 1e-12 * scale:
            break

        BtU = B.T @ U
        A = cho_solve(cho, BtU)
        S = sq - np.einsum("ij,ij->j", BtU, A)
        r = Uty - BtU.T @ beta0
        ok = S > 1e-10 * sq + 1e-12
        red = np.where(ok & alive, r * r / np.where(ok, S, 1.0), -np.inf)
        best = int(np.argmax(red))
        if not np.isfinite(red[best]) or red[best] <= _REL_IMPROVE * scale:
            break

        chosen = cand[best]
        bases.append(chosen)
        B = np.column_stack([B, U[:, best]])
        alive[best] = False
        if chosen[0] == KIND_LINEAR:
            for j in hinge_of[chosen[1]]:
                alive[j] = True

    return bases, B


def _backward_prune(B, bases, y, penalty, deletable):
    n, m = B.shape
    yty = float(y @ y)
    G_full = B.T @ B
    b_full = B.T @ y

    def sse_of(ix: list[int]):
        G = G_full[np.ix_(ix, ix)]
        bb = b_full[ix]
        _, beta = _solve_normal(G, bb)
        return max(yty - bb @ beta, 0.0), beta

    current = list(range(m))
    sse_cur, _ = sse_of(current)
    best_gcv = _gcv(sse_cur, n, m, penalty)
    best_set = current.copy()

    while len(current) > 1:
        step_best = None
        for pos, i in enumerate(current):
            if i == 0 or not deletable(i, current):
                continue
            trial = current[:pos] + current[pos + 1 :]
            sse_t, _ = sse_of(trial)
            g = _gcv(sse_t, n, len(trial), penalty)
            if step_best is None or g < step_best[0]:
                step_best = (g, trial)
        if step_best is None:
            break
        g, current = step_best
        if g <= best_gcv:
            best_gcv, best_set = g, current.copy()

    _, beta = sse_of(best_set)
    kept = [bases[i] for i in best_set]
    return kept, beta, best_gcv


def _fit_adaptive(spec: RegressorSpec, X, y, feature_names, linear_first: bool):
    params = spec.resolved_params()
    n, p = X.shape
    max_basis, max_knots, penalty = _resolve_limits(params, n, p)

    if linear_first:
        bases, B = _forward_linear_first(X, y, max_basis, max_knots)

        def deletable(i: int, current: list[int]) -> bool:
            kind, f, _ = bases[i]
            if kind != KIND_LINEAR:
                return True
            return not any(
                bases[j][0] in (KIND_HINGE_POS, KIND_HINGE_NEG) and bases[j][1] == f
                for j in current
                if j != i
            )

    else:
        bases, B = _forward_hinge_pairs(X, y, max_basis, max_knots)

        def deletable(i: int, current: list[int]) -> bool:
            return True

    kept, coefs, gcv = _backward_prune(B, bases, y, penalty, deletable)
    cls = PolymarsModel if linear_first else MarsModel
    return cls(spec, n, p, feature_names, kept, coefs, gcv)


def fit_mars(spec: RegressorSpec, X, y, feature_names=None) -> MarsModel:
    return _fit_adaptive(spec, X, y, feature_names, linear_first=False)


def fit_polymars(spec: RegressorSpec, X, y, feature_names=None) -> PolymarsModel:
    return _fit_adaptive(spec, X, y, feature_names, linear_first=True)
