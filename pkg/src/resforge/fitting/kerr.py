"""Joint fit of the self-Kerr coefficient over a family of power traces."""
from __future__ import annotations

import math

import numpy as np

from ..constants import TWO_PI
from ..data import FitResult
from ..errors import BifurcationInFitWindow, DomainError, NotConverged
from ..models import HANGER_CONFIG_C, environment_factor, input_photon_flux
from ..occupation import bifurcation_onset, stable_occupation
from ..optimize import covariance, damped_least_squares
from ..params import EnvironmentParams, ResonanceParams

KERR_PARAMS = ("kerr_hz", "phi")
XI_STARTS = (0.0, -0.2, 0.2)


class _KerrMap:
    def __init__(self, traces, res: ResonanceParams, env: EnvironmentParams, config_C):
        self.res = res
        self.total = res.linewidth
        self.env_phi = env.impedance_mismatch_phi
        background = EnvironmentParams(env.amplitude_a, env.phase_alpha, env.delay_tau, 0.0)
        flux = []
        deltas = []
        data = []
        for tr in traces:
            if tr.power_dbm is None:
                raise DomainError("every Kerr trace needs power_dbm")
            flux.append(np.full(len(tr), input_photon_flux(tr.power_dbm, tr.attenuation_db,
                                                           res.omega0, config_C)))
            deltas.append((TWO_PI * tr.freqs - res.omega0) / self.total)
            data.append(tr.samples / environment_factor(tr.freqs, background))
        self.flux = np.concatenate(flux)
        self.delta = np.concatenate(deltas)
        self.data = np.concatenate(data)
        self.fluxes = [float(f[0]) for f in flux]
        self.ranges = [(float(d.min()), float(d.max())) for d in deltas]
        # xi per unit K
        self.xi_per_k = res.kappa_ext * self.flux / self.total ** 3
        self.k_scale = 1.0 / float(self.xi_per_k.max())

    def kerr(self, x):
        return x[0] * self.k_scale

    def model(self, x):
        xi = self.xi_per_k * self.kerr(x)
        n = stable_occupation(self.delta, xi)
        mismatch = 1.0 + 1j * math.tan(x[1])
        return 1.0 - (self.res.kappa_ext / self.total) * mismatch / (1.0 + 2j * (self.delta - xi * n))

    def residual(self, x):
        d = self.model(x) - self.data
        return np.concatenate([d.real, d.imag])

    def xi_of_trace(self, k, i):
        return self.res.kappa_ext * self.fluxes[i] * k / self.total ** 3


def bifurcation_flags(traces, res: ResonanceParams, kerr_K: float,
                      config_C: float = HANGER_CONFIG_C):
    """Per trace: does the drive admit several occupations inside its window?"""
    flags = []
    for tr in traces:
        flux = input_photon_flux(tr.power_dbm, tr.attenuation_db, res.omega0, config_C)
        xi = res.kappa_ext * flux * kerr_K / res.linewidth ** 3
        delta = (TWO_PI * tr.freqs - res.omega0) / res.linewidth
        flags.append(bool(bifurcation_onset((delta.min(), delta.max()), float(xi))))
    return flags


def fit_kerr_2d(traces, res_fixed: ResonanceParams, config_C: float = HANGER_CONFIG_C,
                env: EnvironmentParams | None = None, max_iter: int = 500) -> FitResult:
    """Fit K (and the mismatch angle) to all traces at once.

    Parameters
    ----------
    traces : list of ComplexTrace
        Each with ``power_dbm`` and ``attenuation_db`` set.
    res_fixed : ResonanceParams
        omega0, kappa and gamma from a low-power linear fit; held fixed.
    env : EnvironmentParams, optional
        Background (a, alpha, tau) divided out of the data; its phi is the
        starting mismatch angle. Unit background when omitted.

    Returns
    -------
    FitResult
        ``kerr_hz`` in Hz/photon and ``phi`` in rad; ``meta['kerr_K']`` in rad/s.

    Raises
    ------
    BifurcationInFitWindow
        When a trace would be multi-valued at the fitted K.
    """
    traces = list(traces)
    if not traces:
        raise DomainError("no traces to fit")
    env = env if env is not None else EnvironmentParams()
    m = _KerrMap(traces, res_fixed, env, config_C)
    best = None
    for xi0 in XI_STARTS:
        out = damped_least_squares(m.residual, [xi0, m.env_phi], max_iter=max_iter)
        if best is None or out.cost < best.cost:
            best = out
    out = best
    k = m.kerr(out.x)
    phi = float(out.x[1] - np.pi * np.round(out.x[1] / np.pi))
    values = {"kerr_hz": k / TWO_PI, "phi": phi}
    meta = {"kerr_K": k}
    if not out.converged:
        raise NotConverged("Kerr fit did not converge",
                           FitResult(values, {}, out.cost, False, out.n_iterations, "kerr",
                                     history=tuple(out.history), meta=meta))
    flags = [bool(bifurcation_onset(rng, m.xi_of_trace(k, i))) for i, rng in enumerate(m.ranges)]
    if any(flags):
        raise BifurcationInFitWindow(
            f"{sum(flags)} of {len(flags)} traces are bistable at K/2pi = {k / TWO_PI:.4g} Hz",
            flags)
    T = np.diag([m.k_scale / TWO_PI, 1.0])
    cov = T @ covariance(out.jac, out.cost) @ T.T
    errors = {key: float(math.sqrt(max(cov[i, i], 0.0))) for i, key in enumerate(KERR_PARAMS)}
    meta["max_xi"] = float(np.max(np.abs(m.xi_per_k * k)))
    return FitResult(values, errors, out.cost, True, out.n_iterations, "kerr", cov,
                     tuple(out.history), meta)
