"""Complex least-squares fit of the linear hanger model."""
from __future__ import annotations

import math

import numpy as np

from ..constants import TWO_PI
from ..data import ComplexTrace, FitResult
from ..errors import NotConverged, QCFail
from ..optimize import covariance, damped_least_squares
from ..params import EnvironmentParams, ResonanceParams
from .circle import InitialGuess, initial_guess_circle, wrap_angle

LINEAR_PARAMS = ("f0", "q_i", "q_c", "a", "alpha", "tau", "phi")
MAX_ITER = 500
POLISH_STEPS = 6


class _LinearModel:
    """Linear hanger model in internal coordinates scaled around a guess.

    x = [(w0 - w0g)/G, kappa/G, gamma/G, a/ag, alpha' - alpha'g,
         2 pi hs (tau - taug), phi]
    with G the guessed linewidth, hs the half span and
    alpha' = alpha - 2 pi fc tau the phase referred to the band center.
    """

    def __init__(self, trace: ComplexTrace, guess: InitialGuess):
        self.f = trace.freqs
        self.data = trace.samples
        self.fc = float(self.f.mean())
        self.hs = 0.5 * trace.span
        res, env = guess.resonance, guess.env
        self.w0g = res.omega0
        self.G = res.linewidth
        self.ag = env.amplitude_a
        self.taug = env.delay_tau
        self.alpha_g = env.phase_alpha - TWO_PI * self.fc * env.delay_tau
        self.x0 = np.array([0.0, res.kappa_ext / self.G, res.gamma_int / self.G, 1.0, 0.0, 0.0,
                            env.impedance_mismatch_phi])

    def physical(self, x):
        w0 = self.w0g + x[0] * self.G
        kappa = x[1] * self.G
        gamma = x[2] * self.G
        a = x[3] * self.ag
        alpha_c = self.alpha_g + x[4]
        tau = self.taug + x[5] / (TWO_PI * self.hs)
        return w0, kappa, gamma, a, alpha_c, tau, x[6]

    def _parts(self, x):
        w0, kappa, gamma, a, alpha_c, tau, phi = self.physical(x)
        total = kappa + gamma
        env = a * np.exp(1j * (alpha_c - TWO_PI * (self.f - self.fc) * tau))
        detuning = TWO_PI * self.f - w0
        lor = 1.0 / (1.0 + 2j * detuning / total)
        mism = 1.0 + 1j * math.tan(phi)
        ratio = kappa / total
        s = env * (1.0 - ratio * mism * lor)
        return s, env, lor, mism, ratio, total, detuning, kappa, gamma, a, phi

    def model(self, x):
        return self._parts(x)[0]

    def residual(self, x):
        d = self.model(x) - self.data
        return np.concatenate([d.real, d.imag])

    def jacobian(self, x):
        s, env, lor, mism, ratio, total, det, kappa, gamma, a, phi = self._parts(x)
        dlor_dtotal = 2j * det * lor ** 2 / total ** 2
        cols = [
            env * (-ratio * mism * 2j * lor ** 2 / total) * self.G,
            env * (-mism * (gamma / total ** 2 * lor + ratio * dlor_dtotal)) * self.G,
            env * (-mism * (-kappa / total ** 2 * lor + ratio * dlor_dtotal)) * self.G,
            s / a * self.ag,
            1j * s,
            -1j * (self.f - self.fc) * s / self.hs,
            env * (-ratio * lor * 1j / math.cos(phi) ** 2),
        ]
        J = np.column_stack(cols)
        return np.vstack([J.real, J.imag])

    def report(self, x):
        w0, kappa, gamma, a, alpha_c, tau, phi = self.physical(x)
        shift = np.round(phi / np.pi)
        phi = phi - shift * np.pi
        values = {
            "f0": w0 / TWO_PI,
            "q_i": w0 / gamma if gamma != 0 else math.inf,
            "q_c": w0 / kappa if kappa != 0 else math.inf,
            "a": a,
            "alpha": float(wrap_angle(alpha_c + TWO_PI * self.fc * tau)),
            "tau": tau,
            "phi": float(phi),
        }
        T = np.zeros((7, 7))
        T[0, 0] = self.G / TWO_PI
        if gamma != 0:
            T[1, 0] = self.G / gamma
            T[1, 2] = -w0 / gamma ** 2 * self.G
        if kappa != 0:
            T[2, 0] = self.G / kappa
            T[2, 1] = -w0 / kappa ** 2 * self.G
        T[3, 3] = self.ag
        T[4, 4] = 1.0
        T[4, 5] = self.fc / self.hs
        T[5, 5] = 1.0 / (TWO_PI * self.hs)
        T[6, 6] = 1.0
        return values, T


def fit_linear_resonance(trace: ComplexTrace, guess: InitialGuess | None = None,
                         max_iter: int = MAX_ITER, qc: bool = False) -> FitResult:
    """Fit (w0, kappa, gamma, a, alpha, tau, phi) to a complex trace.

    Parameters
    ----------
    trace : ComplexTrace
    guess : InitialGuess, optional
        Defaults to :func:`initial_guess_circle`.
    qc : bool
        Raise :class:`QCFail` when :func:`qc_filter` rejects the result.

    Returns
    -------
    FitResult
        ``params`` holds f0 (Hz), q_i, q_c, a, alpha (rad), tau (s), phi (rad).
    """
    if guess is None:
        guess = initial_guess_circle(trace)
    model = _LinearModel(trace, guess)
    out = damped_least_squares(model.residual, model.x0, jac=model.jacobian, max_iter=max_iter,
                               polish=POLISH_STEPS)
    values, T = model.report(out.x)
    meta = {"omega0": TWO_PI * values["f0"], "kappa": out.x[1] * model.G,
            "gamma": out.x[2] * model.G, "message": out.message}
    if not out.converged:
        result = FitResult(values, {}, out.cost, False, out.n_iterations, "linear",
                           history=tuple(out.history), meta=meta)
        raise NotConverged(f"linear fit did not converge in {max_iter} iterations", result)
    cov = T @ covariance(out.jac, out.cost) @ T.T
    errors = {k: float(math.sqrt(max(cov[i, i], 0.0))) for i, k in enumerate(LINEAR_PARAMS)}
    result = FitResult(values, errors, out.cost, True, out.n_iterations, "linear", cov,
                       tuple(out.history), meta)
    if qc:
        from .qc import qc_filter

        verdict = qc_filter(result)
        if not verdict.accepted:
            raise QCFail(verdict.reason, result)
    return result


def resonance_from_fit(result: FitResult) -> ResonanceParams:
    p = result.params
    return ResonanceParams.from_quality(p["f0"], p["q_i"], p["q_c"])


def environment_from_fit(result: FitResult) -> EnvironmentParams:
    p = result.params
    return EnvironmentParams(p["a"], p["alpha"], p["tau"], p["phi"])
