"""L2-regularized logistic regression and a linear hinge-loss SVM."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, log_expit

from ..errors import NonConvergenceWarning


@dataclass
class LinearModel:
    """Score ``w @ x + b``; probabilities through ``sigmoid(a * score + c)``."""

    w: np.ndarray
    b: float
    calib_a: float = 1.0
    calib_c: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    def decision_function(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.w + self.b

    def predict_proba(self, X) -> np.ndarray:
        return expit(self.calib_a * self.decision_function(X) + self.calib_c)


def logistic_objective(w, b, X, y, l2):
    """Mean log-loss plus ``l2/2 * |w|^2`` (intercept unpenalized)."""
    z = X @ w + b
    loss = -np.mean(y * log_expit(z) + (1 - y) * log_expit(-z))
    return float(loss + 0.5 * l2 * (w @ w))


def logistic_gradient(w, b, X, y, l2):
    r = expit(X @ w + b) - y
    n = len(y)
    return np.concatenate((X.T @ r / n + l2 * w, [r.sum() / n]))


def train_logistic(X, y, l2_strength: float = 1e-2, tol: float = 1e-6,
                   max_iter: int = 100) -> LinearModel:
    """Newton's method with backtracking until the gradient norm drops below ``tol``."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    theta = np.zeros(p + 1)
    Xa = np.hstack((X, np.ones((n, 1))))
    reg = np.full(p + 1, l2_strength)
    reg[-1] = 0.0

    def obj(t):
        return logistic_objective(t[:-1], t[-1], X, y, l2_strength)

    f = obj(theta)
    gnorm = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        g = logistic_gradient(theta[:-1], theta[-1], X, y, l2_strength)
        gnorm = float(np.linalg.norm(g))
        if gnorm < tol:
            break
        s = expit(Xa @ theta)
        H = (Xa * (s * (1 - s))[:, None]).T @ Xa / n + np.diag(reg)
        H[np.diag_indices_from(H)] += 1e-12
        try:
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(H, g, rcond=None)[0]
        t = 1.0
        while t > 1e-12:
            cand = theta - t * step
            fc = obj(cand)
            if fc <= f - 1e-4 * t * (g @ step):
                break
            t *= 0.5
        else:
            break  # no progress possible along the Newton direction
        theta, f = cand, fc
    else:
        g = logistic_gradient(theta[:-1], theta[-1], X, y, l2_strength)
        gnorm = float(np.linalg.norm(g))
    converged = gnorm < tol
    if not converged:
        warnings.warn(f"logistic regression stopped with |grad| = {gnorm:.3g}", NonConvergenceWarning)
    return LinearModel(
        theta[:-1].copy(), float(theta[-1]),
        diagnostics={"iterations": it, "grad_norm": gnorm, "converged": converged,
                     "objective": f, "l2_strength": l2_strength},
    )


def hinge_objective(w, b, X, y_pm, c):
    margins = y_pm * (X @ w + b)
    return float(0.5 * (w @ w + b * b) + c * np.maximum(0.0, 1.0 - margins).sum())


def train_linear_svm(X, y, c: float = 1.0, tol: float = 1e-3, max_epochs: int = 200,
                     seed: int = 0) -> LinearModel:
    """Dual coordinate descent on the L1-loss SVM, bias folded into the weights.

    Minimizes ``0.5 |(w, b)|^2 + c * sum(hinge)``.  The dual objective is
    recorded per epoch in ``diagnostics["dual_trace"]`` (non-increasing).
    Decision values are then mapped to probabilities by a logistic fit on
    the training set.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    Xa = np.hstack((X, np.ones((n, 1))))
    ypm = np.where(y > 0, 1.0, -1.0)
    qii = np.einsum("ij,ij->i", Xa, Xa)
    alpha = np.zeros(n)
    wa = np.zeros(p + 1)
    rng = np.random.default_rng(seed)
    dual_trace, primal_trace = [], []
    converged = False
    epoch = 0
    rows = list(zip(Xa, ypm, qii))
    for epoch in range(1, max_epochs + 1):
        pg_max, pg_min = -np.inf, np.inf
        for i in rng.permutation(n):
            xi, yi, q = rows[i]
            if q == 0:
                continue
            g = yi * (wa @ xi) - 1.0
            a = alpha[i]
            if a == 0:
                pg = min(g, 0.0)
            elif a == c:
                pg = max(g, 0.0)
            else:
                pg = g
            pg_max = max(pg_max, pg)
            pg_min = min(pg_min, pg)
            if pg != 0.0:
                new = min(max(a - g / q, 0.0), c)
                wa += (new - a) * yi * xi
                alpha[i] = new
        dual_trace.append(float(0.5 * (wa @ wa) - alpha.sum()))
        primal_trace.append(hinge_objective(wa[:-1], wa[-1], X, ypm, c))
        if pg_max - pg_min < tol:
            converged = True
            break
    if not converged:
        warnings.warn("linear SVM hit the epoch cap before convergence", NonConvergenceWarning)
    model = LinearModel(
        wa[:-1].copy(), float(wa[-1]),
        diagnostics={"epochs": epoch, "converged": converged, "c": c,
                     "dual_trace": dual_trace, "primal_trace": primal_trace},
    )
    scores = model.decision_function(X)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonConvergenceWarning)
        cal = train_logistic(scores[:, None], y, l2_strength=1e-3)
    model.calib_a, model.calib_c = float(cal.w[0]), cal.b
    return model
