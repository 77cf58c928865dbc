"""Damped Newton ascent with step halving.

Used for every concave-ish objective in the package: simple-model MLEs,
flat and catalytic MAPs, and the Cauchy-penalised baseline.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve


class NewtonError(RuntimeError):
    """Newton system could not be solved. ``result`` holds the last iterate."""

    def __init__(self, message: str, result: "NewtonResult"):
        super().__init__(message)
        self.result = result


@dataclass
class NewtonResult:
    beta: np.ndarray
    neg_hessian: np.ndarray
    converged: bool
    iterations: int
    grad_norm: float
    trace: list[float] = field(default_factory=list)
    message: str = ""


def _factor(neg_hess: np.ndarray, damping: bool):
    try:
        return cho_factor(neg_hess, lower=True, check_finite=True), 0.0
    except np.linalg.LinAlgError:
        if not damping:
            raise
    # Levenberg-style shift until the system is positive definite.
    scale = max(1.0, float(np.max(np.abs(np.diag(neg_hess)))))
    mu = 1e-8 * scale
    while mu < 1e12 * scale:
        try:
            return cho_factor(neg_hess + mu * np.eye(len(neg_hess)), lower=True), mu
        except np.linalg.LinAlgError:
            mu *= 10.0
    raise np.linalg.LinAlgError("could not regularise Newton system")


def newton_maximize(
    fun,
    grad_hess,
    beta0,
    max_iter: int = 100,
    tol: float = 1e-8,
    damping: bool = False,
    on_singular: str = "raise",
    max_halvings: int = 60,
    max_norm: float = 1e12,
) -> NewtonResult:
    """Maximise ``fun`` starting from ``beta0``.

    ``grad_hess(beta)`` returns the gradient and Hessian of ``fun``.
    A singular Hessian raises :class:`NewtonError` unless ``on_singular`` is
    ``"lstsq"``, in which case a minimum-norm step is taken instead (the
    saturated-curvature situation of separated logistic data).

    Convergence needs both ``||grad|| <= tol`` and a Newton step that is
    small relative to ``beta``; the second condition keeps separated
    logistic fits, whose gradient vanishes while the iterate runs off to
    infinity, from being reported as converged.
    """
    beta = np.array(beta0, dtype=float, copy=True)
    f = fun(beta)
    if not np.isfinite(f):
        raise ValueError("objective is not finite at the starting point")
    trace = [f]
    step_tol = np.sqrt(tol)
    converged = False
    message = "iteration limit reached"
    it = 0
    g, H = grad_hess(beta)
    gnorm = float(np.linalg.norm(g))

    for it in range(1, max_iter + 1):
        try:
            factor, _ = _factor(-H, damping)
            step = cho_solve(factor, g)
        except np.linalg.LinAlgError:
            res = NewtonResult(beta, -H, False, it - 1, gnorm, trace, "singular Newton system")
            if on_singular != "lstsq":
                raise NewtonError("singular Newton system", res) from None
            step = np.linalg.lstsq(-H, g, rcond=None)[0]
            if not np.any(step):
                # Everything saturated: nothing left to move.
                return res
        if gnorm <= tol and np.max(np.abs(step)) <= step_tol * (1.0 + np.max(np.abs(beta))):
            converged = True
            message = "gradient tolerance reached"
            it -= 1
            break

        t = 1.0
        accepted = False
        # Near the optimum the gain of a Newton step falls below the rounding
        # resolution of f; allow that much slack so the step is not halved away.
        slack = 16.0 * np.finfo(float).eps * max(1.0, abs(f))
        for _ in range(max_halvings):
            cand = beta + t * step
            f_new = fun(cand)
            if np.isfinite(f_new) and f_new >= f - slack:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            converged = gnorm <= tol
            message = "line search stalled"
            it -= 1
            break

        beta, f = cand, f_new
        trace.append(f)
        g, H = grad_hess(beta)
        gnorm = float(np.linalg.norm(g))
        if np.max(np.abs(beta)) > max_norm:
            message = "iterate diverged"
            break

    return NewtonResult(beta, -H, converged, it, gnorm, trace, message)
