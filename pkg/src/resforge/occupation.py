"""Steady-state occupation of a driven Kerr resonator.

The normalized intracavity occupation ``n`` solves

    (delta**2 + 1/4) * n - 2 * delta * xi * n**2 + xi**2 * n**3 = 1/2

with ``delta`` the drive detuning and ``xi`` the Kerr drive strength, both in
units of the total linewidth. Substituting ``y = xi * n`` gives
``y * ((y - delta)**2 + 1/4) = xi / 2``; the left side has the sign of ``y``,
so every real root has ``n > 0``, and ``n <= 2`` always.
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

# Smallest |xi| admitting three real roots (reached at |delta| = sqrt(3)/2).
XI_BISTABLE_THRESHOLD = 2.0 / (3.0 * math.sqrt(3.0))

_NEWTON_STEPS = 6


class OccupationSolution(NamedTuple):
    roots: tuple
    stable_root: float


def occupation_residual(n, delta, xi):
    """Left minus right side of the occupation equation."""
    n = np.asarray(n, dtype=float)
    delta = np.asarray(delta, dtype=float)
    xi = np.asarray(xi, dtype=float)
    return ((xi * xi * n - 2.0 * delta * xi) * n + (delta * delta + 0.25)) * n - 0.5


def _poly_and_slope(n, delta, xi):
    c = delta * delta + 0.25
    p = ((xi * xi * n - 2.0 * delta * xi) * n + c) * n - 0.5
    dp = (3.0 * xi * xi * n - 4.0 * delta * xi) * n + c
    return p, dp


def _polish(n, delta, xi):
    for _ in range(_NEWTON_STEPS):
        p, dp = _poly_and_slope(n, delta, xi)
        safe = np.abs(dp) > 0
        step = np.where(safe, p / np.where(safe, dp, 1.0), 0.0)
        trial = n - step
        p_trial, _ = _poly_and_slope(trial, delta, xi)
        better = np.isfinite(trial) & (np.abs(p_trial) <= np.abs(p))
        n = np.where(better, trial, n)
    return n


def occupation_roots(delta, xi):
    """All real roots for arrays of (delta, xi).

    Returns
    -------
    ndarray, shape (N, 3)
        Roots sorted ascending in each row, padded with NaN.
    """
    delta, xi = np.broadcast_arrays(np.atleast_1d(np.asarray(delta, dtype=float)),
                                    np.atleast_1d(np.asarray(xi, dtype=float)))
    delta = delta.ravel()
    xi = xi.ravel()
    out = np.full((delta.size, 3), np.nan)

    n_lin = 0.5 / (delta * delta + 0.25)
    linear = xi == 0.0
    out[linear, 0] = n_lin[linear]

    k = ~linear
    if np.any(k):
        d, x = delta[k], xi[k]
        # depressed cubic in t, with y = t + 2*delta/3
        p = 0.25 - d * d / 3.0
        q = 2.0 * d ** 3 / 27.0 + d / 6.0 - x / 2.0
        shift = 2.0 * d / 3.0
        disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
        roots = np.full((d.size, 3), np.nan)

        one = disc > 0
        if np.any(one):
            qo, po, do = q[one], p[one], disc[one]
            sgn = np.where(qo >= 0, 1.0, -1.0)
            u = np.cbrt(-qo / 2.0 - sgn * np.sqrt(do))
            t = np.where(u != 0, u - po / (3.0 * np.where(u != 0, u, 1.0)), 0.0)
            # small |xi| loses precision in y (or overflows); the linear solution is then closer
            with np.errstate(over="ignore", invalid="ignore"):
                n_cf = (t + shift[one]) / x[one]
                r_cf = np.abs(occupation_residual(n_cf, d[one], x[one]))
            n_alt = n_lin[k][one]
            r_alt = np.abs(occupation_residual(n_alt, d[one], x[one]))
            bad = ~np.isfinite(r_cf) | (r_alt < r_cf)
            roots[one, 0] = np.where(bad, n_alt, n_cf)

        three = ~one
        if np.any(three):
            pt, qt = p[three], q[three]
            r = 2.0 * np.sqrt(-pt / 3.0)
            arg = np.clip(3.0 * qt / (2.0 * pt) * np.sqrt(-3.0 / pt), -1.0, 1.0)
            ang = np.arccos(arg) / 3.0
            for j in range(3):
                t = r * np.cos(ang - 2.0 * math.pi * j / 3.0)
                roots[three, j] = (t + shift[three]) / x[three]

        dd = np.repeat(d[:, None], 3, axis=1)
        xx = np.repeat(x[:, None], 3, axis=1)
        finite = np.isfinite(roots)
        polished = roots.copy()
        polished[finite] = _polish(roots[finite], dd[finite], xx[finite])
        polished.sort(axis=1)
        # merge coincident roots (double root at the bistability boundary)
        for j in (1, 2):
            prev = polished[:, j - 1]
            cur = polished[:, j]
            same = np.isfinite(prev) & np.isfinite(cur) & (
                np.abs(cur - prev) <= 1e-10 * np.maximum(np.abs(cur), 1e-300))
            polished[same, j] = np.nan
        polished.sort(axis=1)
        out[k] = polished
    return out


def solve_photon_occupation(delta: float, xi: float) -> OccupationSolution:
    """Real positive roots of the occupation equation for one (delta, xi).

    ``stable_root`` is the smallest root: the low-amplitude branch reached
    when the drive power is swept up from below.
    """
    row = occupation_roots(delta, xi)[0]
    roots = tuple(float(v) for v in row if np.isfinite(v))
    return OccupationSolution(roots, roots[0])


def stable_occupation(delta, xi):
    """Vectorized smallest root; same shape as the broadcast inputs."""
    delta_a, xi_a = np.broadcast_arrays(np.asarray(delta, dtype=float),
                                        np.asarray(xi, dtype=float))
    roots = occupation_roots(delta_a, xi_a)
    return roots[:, 0].reshape(delta_a.shape)


def _discriminant(delta, xi):
    # discriminant of y^3 - 2 delta y^2 + (delta^2 + 1/4) y - xi/2
    c = delta * delta + 0.25
    return -c * c + xi * (2.0 * delta ** 3 + 4.5 * delta) - 6.75 * xi * xi


def bifurcation_onset(delta_range, xi: float) -> bool:
    """True iff some detuning in the closed range admits several occupations.

    The discriminant of the occupation cubic is a quartic in ``delta``; its
    maximum over the interval sits at an endpoint or at a stationary point,
    so checking those is exact.
    """
    lo, hi = float(np.min(delta_range)), float(np.max(delta_range))
    if xi == 0.0:
        return False
    # d/d(delta) of the discriminant: -4 d^3 - d + xi (6 d^2 + 4.5)
    stationary = np.roots([-4.0, 6.0 * xi, -1.0, 4.5 * xi])
    candidates = [lo, hi]
    for r in stationary:
        if abs(r.imag) < 1e-9 * max(1.0, abs(r.real)) and lo <= r.real <= hi:
            candidates.append(float(r.real))
    values = [_discriminant(c, xi) for c in candidates]
    return max(values) > 0.0


def count_roots(delta: float, xi: float) -> int:
    return len(solve_photon_occupation(delta, xi).roots)
