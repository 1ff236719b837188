"""Single-hidden-layer tanh network with evidence-based L2 regularization.

The penalized loss is ``beta * SSE + alpha * ||theta||^2`` over all
weights and biases. Every ``evidence_every`` optimizer steps, alpha and
beta are re-estimated with the evidence approximation using the
Gauss-Newton Hessian ``2*beta*J'J + 2*alpha*I``; the update is skipped
(frozen) whenever the approximation is unusable. Inputs and targets are
standardized internally and predictions are mapped back.

Optimization is full-batch gradient descent with a backtracking
(Armijo) line search.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from ._base import BRNN, FittedRegressor, RegressorSpec

_INIT_ALPHA = 0.01
_INIT_BETA = 1.0
_ARMIJO = 1e-4
_MAX_BACKTRACKS = 60


def _param_count(p: int, hidden: int) -> int:
    return p * hidden + hidden + hidden + 1


def _unpack(theta: np.ndarray, p: int, hidden: int):
    w1 = theta[: p * hidden].reshape(p, hidden)
    b1 = theta[p * hidden : p * hidden + hidden]
    w2 = theta[p * hidden + hidden : p * hidden + 2 * hidden]
    b2 = theta[-1]
    return w1, b1, w2, b2


def _forward(theta: np.ndarray, X: np.ndarray, hidden: int):
    w1, b1, w2, b2 = _unpack(theta, X.shape[1], hidden)
    T = np.tanh(X @ w1 + b1)
    return T @ w2 + b2, T


def penalized_loss(theta, X, y, alpha, beta, hidden) -> float:
    yhat, _ = _forward(theta, X, hidden)
    e = yhat - y
    return float(beta * (e @ e) + alpha * (theta @ theta))


def penalized_loss_and_grad(theta, X, y, alpha, beta, hidden):
    """Loss and its analytic gradient with respect to all parameters."""
    p = X.shape[1]
    w1, b1, w2, b2 = _unpack(theta, p, hidden)
    T = np.tanh(X @ w1 + b1)
    yhat = T @ w2 + b2
    e = yhat - y
    loss = float(beta * (e @ e) + alpha * (theta @ theta))

    go = 2.0 * beta * e
    g_w2 = T.T @ go
    g_b2 = float(go.sum())
    back = go[:, None] * w2[None, :] * (1.0 - T * T)
    g_w1 = X.T @ back
    g_b1 = back.sum(axis=0)
    grad = np.concatenate([g_w1.ravel(), g_b1, g_w2, [g_b2]]) + 2.0 * alpha * theta
    return loss, grad


def _jacobian(theta, X, hidden):
    """d yhat / d theta for each row; Gauss-Newton building block."""
    n, p = X.shape
    w1, b1, w2, b2 = _unpack(theta, p, hidden)
    T = np.tanh(X @ w1 + b1)
    D = (1.0 - T * T) * w2[None, :]
    J = np.empty((n, _param_count(p, hidden)))
    J[:, : p * hidden] = np.einsum("na,nj->naj", X, D).reshape(n, p * hidden)
    J[:, p * hidden : p * hidden + hidden] = D
    J[:, p * hidden + hidden : p * hidden + 2 * hidden] = T
    J[:, -1] = 1.0
    return J


def _evidence_update(theta, X, y, alpha, beta, hidden):
    """MacKay-style re-estimation of (alpha, beta); returns a change flag."""
    n = X.shape[0]
    W = theta.shape[0]
    yhat, _ = _forward(theta, X, hidden)
    e = yhat - y
    sse = float(e @ e)
    ew = float(theta @ theta)
    if sse < 1e-12 * max(n, 1) or ew < 1e-14 * W:
        return alpha, beta, False
    J = _jacobian(theta, X, hidden)
    A = 2.0 * beta * (J.T @ J) + 2.0 * alpha * np.eye(W)
    try:
        cho = cho_factor(A, lower=True)
    except LinAlgError:
        return alpha, beta, False
    trace_inv = float(np.trace(cho_solve(cho, np.eye(W))))
    gamma = W - 2.0 * alpha * trace_inv
    if not np.isfinite(gamma) or gamma <= 0.0 or gamma >= min(W, n):
        return alpha, beta, False
    alpha_new = gamma / (2.0 * ew)
    beta_new = (n - gamma) / (2.0 * sse)
    if not (np.isfinite(alpha_new) and np.isfinite(beta_new)) or alpha_new <= 0.0 or beta_new <= 0.0:
        return alpha, beta, False
    return float(alpha_new), float(beta_new), True


class BrnnModel(FittedRegressor):
    algorithm = BRNN

    def __init__(self, spec, n_rows, n_features, feature_names, hidden, theta, x_mean, x_std, y_mean, y_std, alpha, beta):
        super().__init__(spec, n_rows, n_features, feature_names)
        self.hidden = int(hidden)
        self.theta = np.asarray(theta, dtype=np.float64)
        self.x_mean = np.asarray(x_mean, dtype=np.float64)
        self.x_std = np.asarray(x_std, dtype=np.float64)
        self.y_mean = float(y_mean)
        self.y_std = float(y_std)
        self.alpha = float(alpha)
        self.beta = float(beta)

    def _predict(self, X: np.ndarray) -> np.ndarray:
        Xs = (X - self.x_mean) / self.x_std
        yhat, _ = _forward(self.theta, Xs, self.hidden)
        return yhat * self.y_std + self.y_mean

    def _state_dict(self) -> dict:
        return {
            "hidden": self.hidden,
            "theta": self.theta.tolist(),
            "x_mean": self.x_mean.tolist(),
            "x_std": self.x_std.tolist(),
            "y_mean": self.y_mean,
            "y_std": self.y_std,
            "alpha": self.alpha,
            "beta": self.beta,
        }

    @classmethod
    def _from_state(cls, spec, meta, state):
        return cls(
            spec,
            meta["n_rows"],
            meta["n_features"],
            meta["feature_names"],
            state["hidden"],
            np.asarray(state["theta"], dtype=np.float64),
            np.asarray(state["x_mean"], dtype=np.float64),
            np.asarray(state["x_std"], dtype=np.float64),
            state["y_mean"],
            state["y_std"],
            state["alpha"],
            state["beta"],
        )


def fit_brnn(spec: RegressorSpec, X, y, feature_names=None) -> BrnnModel:
    params = spec.resolved_params()
    hidden = int(params["hidden"])
    max_steps = int(params["max_steps"])
    rel_tol = float(params["rel_tol"])
    evidence_every = int(params["evidence_every"])

    n, p = X.shape
    x_mean = X.mean(axis=0)
    x_std = X.std(axis=0)
    x_std = np.where(x_std < 1e-12, 1.0, x_std)
    y_mean = float(np.mean(y))
    y_std = float(np.std(y))
    if y_std < 1e-12:
        # zero-variance target: the optimum is the constant model
        model = BrnnModel(
            spec, n, p, feature_names, hidden,
            np.zeros(_param_count(p, hidden)),
            x_mean, x_std, y_mean, 1.0, _INIT_ALPHA, _INIT_BETA,
        )
        model.flags["constant_target"] = True
        return model
    Xs = (X - x_mean) / x_std
    ys = (y - y_mean) / y_std

    rng = np.random.default_rng(spec.seed & 0xFFFFFFFFFFFFFFFF)
    W = _param_count(p, hidden)
    theta = np.zeros(W)
    theta[: p * hidden] = rng.normal(0.0, 1.0, p * hidden) / np.sqrt(max(p, 1))
    theta[p * hidden + hidden : p * hidden + 2 * hidden] = rng.normal(0.0, 1.0, hidden) / np.sqrt(hidden)

    alpha, beta = _INIT_ALPHA, _INIT_BETA
    evidence_updates = 0
    step = 1.0
    for it in range(1, max_steps + 1):
        updated_now = False
        if evidence_every > 0 and it % evidence_every == 0:
            alpha, beta, changed = _evidence_update(theta, Xs, ys, alpha, beta, hidden)
            if changed:
                evidence_updates += 1
                updated_now = True

        loss, grad = penalized_loss_and_grad(theta, Xs, ys, alpha, beta, hidden)
        gnorm2 = float(grad @ grad)
        if gnorm2 < 1e-30:
            break

        s = min(step * 2.0, 1e6)
        accepted = False
        for _ in range(_MAX_BACKTRACKS):
            cand = theta - s * grad
            cand_loss = penalized_loss(cand, Xs, ys, alpha, beta, hidden)
            if cand_loss <= loss - _ARMIJO * s * gnorm2:
                accepted = True
                break
            s *= 0.5
        if not accepted:
            break
        theta = cand
        step = s
        if not updated_now and abs(loss - cand_loss) <= rel_tol * max(abs(loss), 1e-12):
            break

    model = BrnnModel(spec, n, p, feature_names, hidden, theta, x_mean, x_std, y_mean, y_std, alpha, beta)
    model.flags["evidence_updates"] = evidence_updates
    return model
