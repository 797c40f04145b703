"""Slow, independent reference computations used to check the fast paths.

Nothing here shares code with the production solver or fitter.
"""
from __future__ import annotations

import math

import numba
import numpy as np

from .constants import TWO_PI
from .data import ComplexTrace

ORACLE_SAMPLES = 1_000_000
BISECTION_TOL = 1e-14


@numba.njit(cache=True)
def _cubic(n, delta, xi):
    return ((xi * xi * n - 2.0 * delta * xi) * n + (delta * delta + 0.25)) * n - 0.5


@numba.njit(cache=True)
def _bisect(lo, hi, delta, xi, tol):
    plo = _cubic(lo, delta, xi)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        pm = _cubic(mid, delta, xi)
        if pm == 0.0:
            return mid
        if (pm < 0.0) == (plo < 0.0):
            lo, plo = mid, pm
        else:
            hi = mid
    return 0.5 * (lo + hi)


@numba.njit(cache=True, fastmath=True)
def _scan_roots(delta, xi, samples, tol, out):
    n_max = 4.0 * max(2.0, 0.5 / (delta * delta + 0.25))
    h = n_max / samples
    # p(0) = -1/2, so brackets are found by tracking the sign of p on the grid
    count = 0
    negative = True
    c2 = xi * xi
    c1 = -2.0 * delta * xi
    c0 = delta * delta + 0.25
    for i in range(1, samples + 1):
        n = i * h
        p = ((c2 * n + c1) * n + c0) * n - 0.5
        if (p < 0.0) != negative:
            if p == 0.0:
                root = n
            else:
                root = _bisect((i - 1) * h, n, delta, xi, tol)
            if count < 3:
                out[count] = root
            count += 1
            negative = p < 0.0
    return count


@numba.njit(cache=True)
def _scan_many(deltas, xis, samples, tol, out, counts):
    for k in range(deltas.size):
        counts[k] = _scan_roots(deltas[k], xis[k], samples, tol, out[k])


def oracle_cubic_roots(delta: float, xi: float, samples: int = ORACLE_SAMPLES) -> list:
    """Real roots of the occupation cubic by dense sign-change scanning and bisection."""
    out = np.full(3, np.nan)
    count = _scan_roots(float(delta), float(xi), samples, BISECTION_TOL, out)
    return [float(r) for r in out[:min(count, 3)]]


def oracle_cubic_roots_batch(deltas, xis, samples: int = ORACLE_SAMPLES):
    """Vectorized :func:`oracle_cubic_roots`. Returns (roots (N, 3) NaN-padded, counts)."""
    deltas = np.ascontiguousarray(deltas, dtype=float).ravel()
    xis = np.ascontiguousarray(xis, dtype=float).ravel()
    out = np.full((deltas.size, 3), np.nan)
    counts = np.zeros(deltas.size, dtype=np.int64)
    _scan_many(deltas, xis, samples, BISECTION_TOL, out, counts)
    return out, counts


def _wing_delay(trace: ComplexTrace, fraction: float = 0.1) -> float:
    f = trace.freqs
    k = max(3, int(f.size * fraction))
    phase = np.unwrap(np.angle(trace.samples))
    sel = np.r_[0:k, f.size - k:f.size]
    # centered so the slope column is not swamped by the two offsets
    design = np.column_stack([f[sel] - f.mean(), sel < k, sel >= k]).astype(float)
    coef = np.linalg.lstsq(design, phase[sel], rcond=None)[0]
    return -coef[0] / TWO_PI


def _best_mismatch(a0, a1, a2, b0, b1, b2):
    """Maximize (a0 + 2 a1 t + a2 t^2) / (b0 + 2 b1 t + b2 t^2) over real t.

    Largest root of the 2x2 generalized eigenproblem; returns (ratio, t).
    """
    qa = b0 * b2 - b1 * b1
    qb = -(a0 * b2 + a2 * b0 - 2.0 * a1 * b1)
    qc = a0 * a2 - a1 * a1
    disc = np.sqrt(np.maximum(qb * qb - 4.0 * qa * qc, 0.0))
    lam = (-qb + disc) / (2.0 * qa)
    num = -(a0 - lam * b0)
    den = a1 - lam * b1
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(np.abs(den) > 0, num / den, 0.0)
    return lam, t


def oracle_grid_fit(trace: ComplexTrace, bounds: dict, points: int = 15, tau_points: int = 61,
                    tau_phase: float = 0.3):
    """Exhaustive grid over (f0, kappa, gamma, tau); a, alpha and phi profiled exactly.

    For fixed (f0, kappa, gamma, tau) the model is ``c (u + t w)`` with
    complex ``c`` and real ``t = tan(phi)``, so both are solved in closed
    form. The delay axis is centered on a wing phase regression and spans
    ``tau_phase`` radians of phase across the trace either way.

    Parameters
    ----------
    bounds : dict
        ``f0`` in Hz, ``kappa`` and ``gamma`` in rad/s, each a (low, high) pair.
        The kappa axis always includes 0 (no resonance).

    Returns
    -------
    dict
        ``params`` (f0, kappa, gamma, phi, a, alpha, tau), ``objective``
        (sum of squared complex residuals), ``dip_depth`` of the best model
        and ``cell`` (grid spacing per axis).
    """
    f = trace.freqs
    d = trace.samples
    half = tau_phase / (TWO_PI * trace.span)
    taus = _wing_delay(trace) + np.linspace(-half, half, tau_points)
    # data with each candidate delay removed, one column per tau
    undelayed = d[:, None] * np.exp(1j * TWO_PI * np.outer(f - f[0], taus))
    f0s = np.linspace(*bounds["f0"], points)
    kappas = np.unique(np.r_[0.0, np.linspace(*bounds["kappa"], points)])
    gammas = np.linspace(*bounds["gamma"], points)
    K, G = np.meshgrid(kappas, gammas, indexing="ij")
    total = (K + G).ravel()
    ok = total > 0
    kap = K.ravel()[ok]
    gam = G.ravel()[ok]
    tot = total[ok]
    dd = float(np.vdot(d, d).real)
    best = (math.inf, None)
    for f0 in f0s:
        det = TWO_PI * (f - f0)
        lorentz = (kap / tot)[:, None] / (1.0 + 2j * det[None, :] / tot[:, None])
        u = 1.0 - lorentz
        w = -1j * lorentz
        P = u.conj() @ undelayed
        Q = w.conj() @ undelayed
        b0 = np.sum(np.abs(u) ** 2, axis=1)[:, None]
        b1 = np.sum((u.conj() * w).real, axis=1)[:, None]
        b2 = np.sum(np.abs(w) ** 2, axis=1)[:, None]
        a0 = np.abs(P) ** 2
        a1 = (P.conj() * Q).real
        a2 = np.abs(Q) ** 2
        # kappa = 0 makes w vanish; the ratio is then a0/b0 for any t
        flat = b2[:, 0] == 0
        lam, t = _best_mismatch(a0, a1, a2, b0, b1, np.where(b2 > 0, b2, 1.0))
        lam[flat] = (a0 / b0)[flat]
        t[flat] = 0.0
        obj = dd - lam
        i, j = np.unravel_index(int(np.argmin(obj)), obj.shape)
        if obj[i, j] < best[0]:
            tt = float(t[i, j])
            g = u[i] + tt * w[i]
            c = (P[i, j] + tt * Q[i, j]) / np.sum(np.abs(g) ** 2)
            c *= np.exp(1j * TWO_PI * f[0] * taus[j])
            best = (float(obj[i, j]), (f0, kap[i], gam[i], math.atan(tt), c, taus[j]))
    objective, (f0, kap, gam, phi, c, tau) = best
    tot = kap + gam
    depth = 0.0 if kap == 0 else float(1.0 - np.min(np.abs(
        1.0 - (kap / tot) * (1.0 + 1j * math.tan(phi)) / (1.0 + 2j * TWO_PI * (f - f0) / tot))))
    params = {"f0": float(f0), "kappa": float(kap), "gamma": float(gam), "phi": phi,
              "a": float(abs(c)), "alpha": float(np.angle(c)), "tau": float(tau)}
    cell = {"f0": float(f0s[1] - f0s[0]), "kappa": float(np.diff(np.linspace(*bounds["kappa"], points))[0]),
            "gamma": float(gammas[1] - gammas[0]), "tau": float(taus[1] - taus[0])}
    return {"params": params, "objective": max(objective, 0.0), "dip_depth": depth, "cell": cell}
