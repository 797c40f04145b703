"""Critical-field and misalignment fits of field-sweep data."""
from __future__ import annotations

import math

import numpy as np

from ..data import FieldSweepSeries, FitResult
from ..errors import DomainError, NegativeSlope, PositiveShiftDominates
from ..models import capacitance_from_frequency, inplane_prefactor
from ..params import FilmProperties, ResonatorGeometry


def _quadratic_coefficient(b, shift):
    """Least-squares c in shift = -c b^2, with its std_error (nan for one point)."""
    b4 = float(np.sum(b ** 4))
    if b4 == 0:
        raise DomainError("at least one nonzero field value is required")
    c = -float(np.sum(shift * b ** 2)) / b4
    dof = b.size - 1
    if dof < 1:
        return c, math.nan
    rss = float(np.sum((shift + c * b ** 2) ** 2))
    return c, math.sqrt(rss / dof / b4)


def fit_field_sweep_bc(series: FieldSweepSeries) -> FitResult:
    """Fit rel_shift = -1/4 (B/B_C)^2 and return ``b_c`` in tesla.

    A single point is inverted exactly and carries no std_error.
    """
    if len(series) == 0:
        raise DomainError("empty field sweep")
    if float(np.mean(series.rel_shift)) > 0:
        raise PositiveShiftDominates("mean relative shift is positive")
    c, sc = _quadratic_coefficient(series.b, series.rel_shift)
    if c <= 0:
        raise PositiveShiftDominates("fitted curvature has the wrong sign")
    b_c = 0.5 / math.sqrt(c)
    errors = {} if math.isnan(sc) else {"b_c": b_c / (2.0 * c) * sc}
    rss = float(np.sum((series.rel_shift + c * series.b ** 2) ** 2))
    return FitResult({"b_c": b_c}, errors, rss, True, 1, "field_quadratic",
                     meta={"curvature": c, "curvature_err": sc})


def diffusion_from_series(series: FieldSweepSeries, film: FilmProperties):
    """Generalized diffusion constant D_p (m^2/s) and its std_error from one sweep."""
    c, sc = _quadratic_coefficient(series.b, series.rel_shift)
    pref = inplane_prefactor(film)
    return c / pref, sc / pref


def fit_misalignment(series_by_width: dict, film: FilmProperties) -> FitResult:
    """Field misalignment from the width dependence of D_p = D (1 + theta^2 w^2/t^2).

    Parameters
    ----------
    series_by_width : dict
        Resonator width (m) to in-plane :class:`FieldSweepSeries`.

    Returns
    -------
    FitResult
        ``theta_b_deg`` (degrees), ``d`` (m^2/s) and ``slope`` (m^2/s).
    """
    if len(series_by_width) < 3:
        raise DomainError("at least 3 widths are required")
    t = film.need("thickness_t")
    xs, dps, errs = [], [], []
    for width, series in sorted(series_by_width.items()):
        if series.orientation != "in_plane":
            raise DomainError("misalignment needs in-plane sweeps")
        dp, err = diffusion_from_series(series, film)
        xs.append((width / t) ** 2)
        dps.append(dp)
        errs.append(err)
    x = np.array(xs)
    y = np.array(dps)
    s = np.array(errs)
    if np.all(np.isfinite(s)) and np.all(s > 0):
        w = 1.0 / s ** 2
        absolute = True
    else:
        w = np.ones_like(y)
        absolute = False
    X = np.column_stack([np.ones_like(x), x])
    normal = X.T @ (w[:, None] * X)
    intercept, slope = np.linalg.solve(normal, X.T @ (w * y))
    cov = np.linalg.inv(normal)
    if not absolute:
        dof = max(y.size - 2, 1)
        cov = cov * float(np.sum((y - X @ [intercept, slope]) ** 2)) / dof
    rss = float(np.sum(w * (y - X @ [intercept, slope]) ** 2))
    if absolute and y.size > 2:
        # per-width errors come from short sweeps; inflate when the scatter
        # about the line says they are too small
        cov = cov * max(1.0, rss / (y.size - 2))
    s_int, s_slope = math.sqrt(cov[0, 0]), math.sqrt(cov[1, 1])
    if intercept <= 0:
        raise DomainError("non-positive diffusion intercept")
    negligible = abs(slope) * x.max() <= 1e-9 * intercept or abs(slope) <= 2.0 * s_slope
    if slope < 0 and not negligible:
        raise NegativeSlope(f"D_p decreases with width (slope {slope:.3g})", slope, intercept)
    if negligible:
        theta = 0.0
        s_theta = math.sqrt(max(s_slope, 0.0) / intercept)
    else:
        ratio = slope / intercept
        theta = math.sqrt(ratio)
        # var(slope/intercept) by first-order propagation
        g = np.array([-slope / intercept ** 2, 1.0 / intercept])
        s_ratio = math.sqrt(float(g @ cov @ g))
        s_theta = s_ratio / (2.0 * theta)
    values = {"theta_b_deg": math.degrees(theta), "d": float(intercept), "slope": float(slope)}
    errors = {"theta_b_deg": math.degrees(s_theta), "d": s_int, "slope": s_slope}
    meta = {"widths": sorted(series_by_width), "d_p": y.tolist(), "d_p_err": s.tolist()}
    return FitResult(values, errors, rss, True, 1, "misalignment", cov, meta=meta)


def fit_ctilde_from_frequency(f_measured: float, geom_partial: ResonatorGeometry) -> float:
    """Capacitance per length (F/m) from a measured quarter-wave frequency."""
    return capacitance_from_frequency(f_measured, geom_partial)
