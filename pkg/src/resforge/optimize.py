"""Damped Gauss-Newton (Levenberg-Marquardt) least squares on real residuals.

Trial steps that raise the cost are rejected and the damping is increased,
so the accepted cost sequence in ``history`` never increases.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np


@dataclass
class LeastSquaresOutcome:
    x: np.ndarray
    cost: float
    residual: np.ndarray
    jac: np.ndarray
    converged: bool
    n_iterations: int
    message: str
    history: list = field(default_factory=list)


def finite_difference_jacobian(residual, x, r0=None, rel_step=1e-7):
    """Central-difference Jacobian of ``residual`` at ``x``."""
    x = np.asarray(x, dtype=float)
    cols = []
    for j in range(x.size):
        h = rel_step * max(1.0, abs(x[j]))
        xp = x.copy()
        xm = x.copy()
        xp[j] += h
        xm[j] -= h
        cols.append((residual(xp) - residual(xm)) / (2.0 * h))
    return np.column_stack(cols)


def _damped_step(J, r, lam):
    scale = np.sqrt(np.sum(J * J, axis=0))
    floor = 1e-12 * (scale.max() if scale.size and scale.max() > 0 else 1.0)
    scale = np.maximum(scale, floor)
    A = np.vstack([J, np.diag(np.sqrt(lam) * scale)])
    b = np.concatenate([-r, np.zeros(J.shape[1])])
    dx, *_ = np.linalg.lstsq(A, b, rcond=None)
    return dx


def damped_least_squares(residual, x0, jac=None, max_iter=500, ftol=1e-10, xtol=1e-12,
                         lam0=1e-3, polish=0):
    """Minimize ``sum(residual(x)**2)``.

    Parameters
    ----------
    residual : callable
        Maps a parameter vector to a 1-D array of real residuals.
    x0 : array_like
        Starting point. Parameters should be scaled to order unity; ``xtol``
        is applied to the step norm in these units.
    jac : callable, optional
        Analytic Jacobian; central differences are used otherwise.
    ftol : float
        Stop when an accepted step lowers the cost by less than this
        fraction.
    polish : int
        After convergence, up to this many undamped Gauss-Newton steps are
        taken while their length keeps shrinking. Near the optimum the cost
        is flat to rounding noise, so cost comparisons alone leave the
        result scattered by about sqrt(eps) of a standard error; the
        contracting steps pin it down. Polish steps are not part of
        ``history``.

    Returns
    -------
    LeastSquaresOutcome
    """
    if jac is None:
        def jac(x):
            return finite_difference_jacobian(residual, x)

    def _finish(x, cost, r, J, it, message, history):
        last = math.inf
        for _ in range(polish):
            dx = _damped_step(J, r, 0.0)
            size = float(np.linalg.norm(dx))
            if not size < 0.5 * last:
                break
            r_new = np.asarray(residual(x + dx), dtype=float)
            cost_new = float(r_new @ r_new)
            # allow only rounding-level increases
            if not cost_new <= cost * (1.0 + 1e-9) + 1e-300:
                break
            J_new = jac(x + dx)
            if not np.all(np.isfinite(J_new)):
                break
            x, r, cost, J, last = x + dx, r_new, cost_new, J_new, size
        return LeastSquaresOutcome(x, cost, r, J, True, it, message, history)

    x = np.array(x0, dtype=float)
    r = np.asarray(residual(x), dtype=float)
    cost = float(r @ r)
    if not np.isfinite(cost):
        return LeastSquaresOutcome(x, cost, r, np.full((r.size, x.size), np.nan), False, 0,
                                   "non-finite residual at start", [cost])
    J = jac(x)
    history = [cost]
    lam = lam0
    for it in range(1, max_iter + 1):
        while True:
            dx = _damped_step(J, r, lam)
            if np.linalg.norm(dx) <= xtol * (np.linalg.norm(x) + xtol):
                return _finish(x, cost, r, J, it, "step below xtol", history)
            x_new = x + dx
            r_new = np.asarray(residual(x_new), dtype=float)
            cost_new = float(r_new @ r_new)
            if np.isfinite(cost_new) and cost_new <= cost:
                rel = (cost - cost_new) / cost if cost > 0 else 0.0
                x, r, cost = x_new, r_new, cost_new
                J = jac(x)
                if not np.all(np.isfinite(J)):
                    return LeastSquaresOutcome(x, cost, r, J, False, it,
                                               "non-finite Jacobian", history)
                history.append(cost)
                lam = max(lam / 10.0, 1e-12)
                if cost == 0.0 or rel < ftol:
                    return _finish(x, cost, r, J, it, "relative cost change below ftol",
                                   history)
                break
            lam *= 10.0
            if lam > 1e20:
                return _finish(x, cost, r, J, it, "no decrease possible at working precision",
                               history)
    return LeastSquaresOutcome(x, cost, r, J, False, max_iter, "iteration limit", history)


def covariance(J, cost, n_params=None):
    """Residual-variance-scaled covariance ``s^2 (J^T J)^-1`` via SVD.

    Singular directions are dropped (pseudo-inverse).
    """
    m, p = J.shape
    n_params = p if n_params is None else n_params
    dof = m - n_params
    s2 = cost / dof if dof > 0 else np.nan
    _, sv, vt = np.linalg.svd(J, full_matrices=False)
    keep = sv > sv.max() * 1e-14 if sv.size else sv
    inv = (vt[keep].T / sv[keep] ** 2) @ vt[keep]
    return s2 * inv


def normal_condition(J):
    """Condition number of J^T J after scaling columns to unit norm."""
    norms = np.linalg.norm(J, axis=0)
    norms[norms == 0] = 1.0
    sv = np.linalg.svd(J / norms, compute_uv=False)
    if sv.min() == 0:
        return np.inf
    return float((sv.max() / sv.min()) ** 2)


def weakest_direction(J):
    """Unit vector along the least constrained combination of parameters."""
    norms = np.linalg.norm(J, axis=0)
    norms[norms == 0] = 1.0
    _, _, vt = np.linalg.svd(J / norms, full_matrices=False)
    v = vt[-1] / norms
    return v / np.linalg.norm(v)
