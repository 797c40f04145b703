"""Two-level-system saturation fit of Q_i versus photon number."""
from __future__ import annotations

import math

import numpy as np

from ..data import FitResult, PowerScan
from ..errors import DomainError, IllConditioned, NotConverged
from ..models import _tanh_factor
from ..optimize import covariance, damped_least_squares, normal_condition, weakest_direction

POWER_PARAMS = ("f_delta_tls", "n_c", "beta", "delta0_eff")
CONDITION_LIMIT = 1e8


def _validate(scan: PowerScan):
    if len(scan) < 6:
        raise DomainError("a power scan fit needs at least 6 points")
    if np.log10(scan.n_ph.max() / scan.n_ph.min()) < 3.0:
        raise DomainError("photon numbers must span at least 3 decades")


def fit_power_scan(scan: PowerScan, omega0: float, temperature: float = 0.0,
                   max_iter: int = 500) -> FitResult:
    """Weighted least squares of 1/Q_i = F d_TLS tanh / (1 + n/n_C)^beta + d_0.

    ``delta0_eff`` absorbs any quasiparticle contribution. Weights come from
    ``q_i_err`` propagated to 1/Q_i; with no errors given the residuals are
    relative.

    Raises
    ------
    IllConditioned
        When beta and n_C cannot be separated (condition number > 1e8). The
        exception carries the pseudo-inverse result and the weak direction.
    """
    _validate(scan)
    n = scan.n_ph
    y = 1.0 / scan.q_i
    sigma = scan.q_i_err / scan.q_i ** 2
    if np.all(sigma == 0):
        sigma = y.copy()
    else:
        sigma = np.where(sigma > 0, sigma, sigma[sigma > 0].min())
    tanh = _tanh_factor(omega0, temperature)

    # internal: [A/s, log n_C, logit(beta/2), d0/s] with A = F d_TLS tanh;
    # the logistic map keeps beta inside (0, 2]
    scale = float(np.max(y))
    logn = np.log(n)

    def unpack(x):
        beta = 2.0 / (1.0 + math.exp(-min(max(x[2], -700.0), 700.0)))
        lognc = min(max(x[1], logn.min() - 25.0), logn.max() + 25.0)
        return x[0] * scale, math.exp(lognc), beta, x[3] * scale

    def residual(x):
        a, nc, beta, d0 = unpack(x)
        with np.errstate(over="ignore", divide="ignore"):
            return (a * (1.0 + n / nc) ** (-beta) + d0 - y) / sigma

    def jacobian(x):
        a, nc, beta, d0 = unpack(x)
        clamped = not (logn.min() - 25.0 < x[1] < logn.max() + 25.0)
        u = 1.0 + n / nc
        sat = u ** (-beta)
        cols = [
            sat * scale,
            np.zeros_like(n) if clamped else a * sat * beta * (n / nc) / u,
            -a * sat * np.log(u) * beta * (1.0 - 0.5 * beta),
            np.full_like(n, scale),
        ]
        return np.column_stack(cols) / sigma[:, None]

    # profiled grid: for fixed (n_C, beta) the model is linear in (A, d0)
    grid_best = None
    for lognc in np.linspace(logn.min() - 2.0, logn.max() + 2.0, 41):
        for beta in np.linspace(0.1, 2.0, 20):
            sat = (1.0 + n / math.exp(lognc)) ** (-beta)
            X = np.column_stack([sat, np.ones_like(n)]) / sigma[:, None]
            coef, *_ = np.linalg.lstsq(X, y / sigma, rcond=None)
            cost = float(np.sum((X @ coef - y / sigma) ** 2))
            if grid_best is None or cost < grid_best[0]:
                grid_best = (cost, lognc, beta, coef, X)
    _, lognc0, beta_g, coef_g, X_g = grid_best
    beta0 = min(beta_g, 1.98)
    x0 = [coef_g[0] / scale, lognc0, math.log(beta0 / (2.0 - beta0)), coef_g[1] / scale]
    out = damped_least_squares(residual, x0, jac=jacobian, max_iter=max_iter)
    a, nc, beta, d0 = unpack(out.x)
    values = {"f_delta_tls": a / tanh, "n_c": nc, "beta": beta, "delta0_eff": d0}
    T = np.diag([scale / tanh, nc, beta * (1.0 - 0.5 * beta), scale])
    cond = normal_condition(out.jac) if np.all(np.isfinite(out.jac)) else math.inf
    if not out.converged and not cond <= CONDITION_LIMIT:
        # fall back to the grid point; amplitude and offset carry errors
        # conditional on the unidentified (n_C, beta)
        cost_g = grid_best[0]
        dof = max(n.size - 2, 1)
        cov2 = np.linalg.pinv(X_g.T @ X_g) * cost_g / dof
        values = {"f_delta_tls": coef_g[0] / tanh, "n_c": math.exp(lognc0), "beta": beta_g,
                  "delta0_eff": coef_g[1]}
        errors = {"f_delta_tls": math.sqrt(cov2[0, 0]) / tanh, "n_c": math.inf, "beta": math.inf,
                  "delta0_eff": math.sqrt(cov2[1, 1])}
        result = FitResult(values, errors, cost_g, True, out.n_iterations, "power_scan",
                           meta={"condition": cond, "conditional_errors": True})
        direction = dict(zip(POWER_PARAMS, weakest_direction(out.jac).tolist())) \
            if np.all(np.isfinite(out.jac)) else {}
        raise IllConditioned("n_c and beta are not identifiable from this scan", direction,
                             result, cond)
    if not out.converged:
        raise NotConverged("power scan fit did not converge",
                           FitResult(values, {}, out.cost, False, out.n_iterations, "power_scan",
                                     history=tuple(out.history)))
    cov = T @ covariance(out.jac, out.cost) @ T.T
    errors = {k: float(math.sqrt(max(cov[i, i], 0.0))) for i, k in enumerate(POWER_PARAMS)}
    result = FitResult(values, errors, out.cost, True, out.n_iterations, "power_scan", cov,
                       tuple(out.history), {"condition": cond})
    if not cond <= CONDITION_LIMIT:
        direction = weakest_direction(out.jac)
        named = dict(zip(POWER_PARAMS, direction.tolist()))
        raise IllConditioned(f"n_c and beta are not separately identifiable "
                             f"(condition {cond:.3g})", named, result, cond)
    return result
