"""Model-free starting values for hanger resonance fits.

Pipeline: cable delay from the phase of the off-resonant wings (refined by
making the data as circular as possible), algebraic circle fit, arctangent fit
of the angle around the circle center, then the off-resonant point gives the
background and the impedance-mismatch angle.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.ndimage import uniform_filter1d
from scipy.optimize import minimize_scalar

from ..constants import TWO_PI
from ..data import ComplexTrace
from ..errors import NoDipFound
from ..optimize import damped_least_squares
from ..params import EnvironmentParams, ResonanceParams

# median of a Rayleigh variable with unit scale
_RAYLEIGH_MEDIAN = math.sqrt(2.0 * math.log(2.0))
DIP_NOISE_FACTOR = 3.0


@dataclass(frozen=True)
class InitialGuess:
    resonance: ResonanceParams
    env: EnvironmentParams
    meta: dict = field(default_factory=dict)


def wrap_angle(x):
    return (np.asarray(x) + np.pi) % (2.0 * np.pi) - np.pi


def estimate_noise(samples) -> float:
    """Per-quadrature noise from second differences.

    Second differences cancel the steady rotation left by a cable delay,
    which first differences would mistake for noise.
    """
    d = np.abs(np.diff(np.asarray(samples), n=2))
    return float(np.median(d) / (_RAYLEIGH_MEDIAN * math.sqrt(6.0)))


def dip_depth(samples):
    """Return (depth, index of minimum, baseline) of the smoothed magnitude."""
    samples = np.asarray(samples)
    width = 9 if samples.size >= 100 else 3
    smooth = uniform_filter1d(samples.real, width, mode="nearest") \
        + 1j * uniform_filter1d(samples.imag, width, mode="nearest")
    mag = np.abs(smooth)
    baseline = float(np.quantile(mag, 0.9))
    idx = int(np.argmin(mag))
    return baseline - float(mag[idx]), idx, baseline


def find_dip(trace: ComplexTrace, factor: float = DIP_NOISE_FACTOR) -> int:
    """Index of the resonance dip, or :class:`NoDipFound`."""
    depth, idx, baseline = dip_depth(trace.samples)
    sigma = estimate_noise(trace.samples)
    if depth <= max(factor * sigma, 1e-9 * baseline):
        raise NoDipFound(
            f"dip depth {depth:.3g} does not exceed {factor:g} x noise {sigma:.3g}")
    # refine on raw samples near the smoothed minimum
    lo, hi = max(0, idx - 4), min(len(trace), idx + 5)
    return lo + int(np.argmin(np.abs(trace.samples[lo:hi])))


def fit_circle(z):
    """Algebraic (Kasa) circle fit. Returns (center, radius)."""
    x, y = z.real, z.imag
    A = np.column_stack([x, y, np.ones_like(x)])
    b = -(x * x + y * y)
    (D, E, F), *_ = np.linalg.lstsq(A, b, rcond=None)
    center = complex(-D / 2.0, -E / 2.0)
    radius = math.sqrt(max(D * D / 4.0 + E * E / 4.0 - F, 0.0))
    return center, radius


def _circle_misfit(z):
    center, radius = fit_circle(z)
    if radius == 0:
        return np.inf
    return float(np.mean((np.abs(z - center) - radius) ** 2) / radius ** 2)


def estimate_delay(trace: ComplexTrace, wing_fraction: float = 0.1) -> float:
    """Cable delay (s) from the linear phase of both wings, refined by circularity."""
    f = trace.freqs
    phase = np.unwrap(np.angle(trace.samples))
    k = max(3, int(len(f) * wing_fraction))
    idx = np.r_[0:k, len(f) - k:len(f)]
    # common slope, separate offsets for the two wings
    A = np.zeros((2 * k, 3))
    A[:, 0] = f[idx] - f.mean()
    A[:k, 1] = 1.0
    A[k:, 2] = 1.0
    coef, *_ = np.linalg.lstsq(A, phase[idx], rcond=None)
    tau0 = -coef[0] / TWO_PI

    fc = f.mean()
    span = trace.span

    def misfit(tau):
        return _circle_misfit(trace.samples * np.exp(1j * TWO_PI * (f - fc) * tau))

    # The circularity well narrows with the relative dip depth, and a wrong
    # delay turns the background itself into a large arc that also looks
    # circular. Shallow dips therefore get a search window close to tau0.
    depth, _, baseline = dip_depth(trace.samples)
    rel = depth / baseline if baseline > 0 else 1.0
    half = 0.25 * min(1.0, 4.0 * rel) / span
    grid = tau0 + np.linspace(-half, half, 41)
    grid = np.append(grid, tau0)
    values = np.array([misfit(t) for t in grid])
    best = float(grid[int(np.argmin(values))])
    step = 2.0 * half / 40
    res = minimize_scalar(misfit, bounds=(best - step, best + step), method="bounded",
                          options={"xatol": 1e-6 / span})
    return float(res.x) if res.fun <= values.min() else best


def _phase_model(f, theta0, q_l, f0):
    return theta0 + 2.0 * np.arctan(2.0 * q_l * (1.0 - f / f0))


def fit_phase(f, theta, f0_guess, ql_guess, theta0_guess):
    """Arctangent fit of the angle around the circle center. Returns (theta0, Q_l, f0)."""
    width = f0_guess / ql_guess

    def residual(x):
        model = _phase_model(f, x[0], x[1] * ql_guess, f0_guess + x[2] * width)
        return wrap_angle(theta - model)

    out = damped_least_squares(residual, [theta0_guess, 1.0, 0.0], max_iter=200)
    theta0, ql, f0 = out.x[0], out.x[1] * ql_guess, f0_guess + out.x[2] * width
    return float(theta0), float(abs(ql)), float(f0)


def initial_guess_circle(trace: ComplexTrace) -> InitialGuess:
    """Starting values for :func:`~resforge.fitting.fit_linear_resonance`.

    Raises
    ------
    NoDipFound
        When the trace shows no dip above the noise floor.
    """
    find_dip(trace)
    f = trace.freqs
    fc = float(f.mean())
    tau = estimate_delay(trace)
    z = trace.samples * np.exp(1j * TWO_PI * (f - fc) * tau)

    center, radius = fit_circle(z)
    k = max(2, len(f) // 20)
    off_approx = 0.5 * (z[:k].mean() + z[-k:].mean())
    i0 = int(np.argmax(np.abs(z - off_approx)))
    f0_guess = float(f[i0])

    theta = np.unwrap(np.angle(z - center))
    theta_res = theta[i0]
    # Q_l from the +-pi/2 crossings around resonance
    ql_guess = None
    left = np.nonzero(theta[:i0] >= theta_res + np.pi / 2)[0]
    right = np.nonzero(theta[i0:] <= theta_res - np.pi / 2)[0]
    if left.size and right.size:
        f_lo = f[left[-1]]
        f_hi = f[i0 + right[0]]
        if f_hi > f_lo:
            ql_guess = f0_guess / (f_hi - f_lo)
    if ql_guess is None:
        lo, hi = max(0, i0 - 2), min(len(f) - 1, i0 + 2)
        slope = (theta[hi] - theta[lo]) / (f[hi] - f[lo])
        ql_guess = max(-slope * f0_guess / 4.0, 10.0)

    theta0, q_l, f0 = fit_phase(f, theta, f0_guess, ql_guess, theta_res)

    off = center + radius * np.exp(1j * (theta0 + np.pi))
    a = abs(off)
    alpha_local = math.atan2(off.imag, off.real)
    phi = float(wrap_angle(theta0 + np.pi - alpha_local))
    if abs(phi) >= np.pi / 2:
        phi = float(np.sign(phi) * (np.pi / 2 - 1e-3))
    ratio = min(2.0 * radius * math.cos(phi) / a, 0.999)
    ratio = max(ratio, 1e-6)
    q_c = q_l / ratio
    q_i = 1.0 / (1.0 / q_l - 1.0 / q_c)

    omega0 = TWO_PI * f0
    res = ResonanceParams(omega0, omega0 / q_c, omega0 / q_i)
    # back to the absolute-phase convention exp(i alpha) exp(-2 pi i f tau)
    alpha = float(wrap_angle(alpha_local + TWO_PI * fc * tau))
    env = EnvironmentParams(a, alpha, tau, phi)
    return InitialGuess(res, env, {"center": center, "radius": radius, "q_loaded": q_l,
                                   "theta0": theta0})
