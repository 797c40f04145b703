"""Closed-form forward models for hanger resonators made of high-L_k films.

Everything here is a pure function. Frequencies passed as ``f_drive`` are in
Hz; resonance rates live in :class:`~resforge.params.ResonanceParams` in rad/s.
"""
from __future__ import annotations

import math

import numpy as np

from .constants import BCS_GAP_RATIO, E_CHARGE, HBAR, K_B, TWO_PI
from .errors import DomainError
from .occupation import stable_occupation
from .params import (
    EnvironmentParams,
    FilmProperties,
    KerrModelParams,
    LossModelParams,
    ResonanceParams,
    ResonatorGeometry,
)

UNIT_ENVIRONMENT = EnvironmentParams()
HANGER_CONFIG_C = 4.0


def _tanh_factor(omega, temperature):
    # tanh(hbar w / 2 k_B T) -> 1 as T -> 0
    if temperature == 0:
        return 1.0
    return math.tanh(HBAR * omega / (2.0 * K_B * temperature))


def environment_factor(f_drive, env: EnvironmentParams):
    f = np.asarray(f_drive, dtype=float)
    return env.amplitude_a * np.exp(1j * (env.phase_alpha - TWO_PI * f * env.delay_tau))


def s21_linear(f_drive, res: ResonanceParams, env: EnvironmentParams = UNIT_ENVIRONMENT):
    """Linear hanger transmission including the feedline background.

    ``f_drive`` may be a scalar or an array (Hz).
    """
    total = res.kappa_ext + res.gamma_int
    if total <= 0:
        raise DomainError("kappa + gamma must be > 0")
    f = np.asarray(f_drive, dtype=float)
    detuning = TWO_PI * f - res.omega0
    mismatch = 1.0 + 1j * math.tan(env.impedance_mismatch_phi)  # e^{i phi}/cos(phi)
    resonant = (res.kappa_ext / total) * mismatch / (1.0 + 2j * detuning / total)
    return environment_factor(f, env) * (1.0 - resonant)


def reduced_drive(res: ResonanceParams, kerr: KerrModelParams) -> float:
    """Drive strength xi = |alpha_in~|^2 K / (kappa + gamma)."""
    total = res.linewidth
    alpha_tilde_sq = res.kappa_ext * kerr.drive_amplitude_sq / total ** 2
    return alpha_tilde_sq * kerr.kerr_K / total


def s21_nonlinear(f_drive, res: ResonanceParams, kerr: KerrModelParams, env_phi: float = 0.0,
                  return_occupation: bool = False):
    """Kerr-nonlinear hanger transmission on the low-amplitude branch.

    The normalized occupation is obtained from
    :func:`~resforge.occupation.stable_occupation` for every drive point.
    """
    total = res.linewidth
    f = np.asarray(f_drive, dtype=float)
    delta = (TWO_PI * f - res.omega0) / total
    xi = reduced_drive(res, kerr)
    n = stable_occupation(delta, np.full_like(delta, xi))
    mismatch = 1.0 + 1j * math.tan(env_phi)
    s21 = 1.0 - (res.kappa_ext / total) * mismatch / (1.0 + 2j * (delta - xi * n))
    if return_occupation:
        return s21, n
    return s21


def input_photon_flux(power_dbm, attenuation_db, omega0, config_C=HANGER_CONFIG_C):
    """|alpha_in|^2 (photons/s) reaching the device for a given source power.

    The ``C/2`` factor makes the peak intracavity photon number of the Kerr
    model equal to :func:`photon_number` at zero detuning.
    """
    watts = 10.0 ** ((np.asarray(power_dbm, dtype=float) - attenuation_db) / 10.0) / 1000.0
    return (config_C / 2.0) * watts / (HBAR * omega0)


def power_for_flux(flux, attenuation_db, omega0, config_C=HANGER_CONFIG_C):
    watts = flux * HBAR * omega0 * 2.0 / config_C
    return 10.0 * np.log10(watts * 1000.0) + attenuation_db


def photon_number(power_dbm, attenuation_db, res: ResonanceParams, config_C=HANGER_CONFIG_C):
    """Mean intracavity photon number from source power and line attenuation."""
    total = res.linewidth
    if total <= 0:
        raise DomainError("kappa + gamma must be > 0")
    watts = 10.0 ** ((np.asarray(power_dbm, dtype=float) - attenuation_db) / 10.0) / 1000.0
    n = config_C * res.kappa_ext / (HBAR * res.omega0 * total ** 2) * watts
    return float(n) if np.ndim(n) == 0 else n


def power_for_photon_number(n_ph, attenuation_db, res: ResonanceParams, config_C=HANGER_CONFIG_C):
    """Inverse of :func:`photon_number`: source power in dBm."""
    total = res.linewidth
    watts = np.asarray(n_ph, dtype=float) * HBAR * res.omega0 * total ** 2 / (config_C * res.kappa_ext)
    p = 10.0 * np.log10(watts * 1000.0) + attenuation_db
    return float(p) if np.ndim(p) == 0 else p


def inverse_qi(n_ph, loss: LossModelParams, omega0: float):
    """1/Q_i from TLS saturation, a fixed quasiparticle term and residual loss."""
    n = np.asarray(n_ph, dtype=float)
    if np.any(n < 0):
        raise DomainError("photon number must be >= 0")
    tls = loss.tls_loss_F_delta0 * _tanh_factor(omega0, loss.temperature_T)
    value = tls / (1.0 + n / loss.critical_photon_nC) ** loss.saturation_beta
    value = value + loss.qp_loss + loss.residual_delta0
    return float(value) if np.ndim(value) == 0 else value


def lk_of_current(i, film: FilmProperties):
    """Current-dependent sheet kinetic inductance (H/sq)."""
    lk0 = film.need("lk_sheet")
    i_star = film.need("depairing_current_Istar")
    n = film.depairing_exponent_n
    ratio = np.abs(np.asarray(i, dtype=float)) / i_star
    if np.any(ratio >= 1):
        raise DomainError("|i| must stay below the depairing current")
    value = lk0 * (1.0 - ratio ** n) ** (-1.0 / n)
    return float(value) if np.ndim(value) == 0 else value


def kerr_bcs(omega_r: float, total_inductance: float, i_star: float) -> float:
    """Self-Kerr (rad/s per photon) of a disordered BCS wire."""
    if omega_r <= 0 or total_inductance <= 0 or i_star <= 0:
        raise DomainError("omega_r, total_inductance and i_star must be > 0")
    return -(3.0 / 8.0) * HBAR * omega_r ** 2 / (total_inductance * i_star ** 2)


def kerr_bcs_geometric(omega_r: float, film: FilmProperties, geom: ResonatorGeometry,
                       j_c: float) -> float:
    """Same as :func:`kerr_bcs` written in terms of current density and wire size."""
    lk = film.need("lk_sheet")
    t = film.need("thickness_t")
    l = geom.need("length_l")
    w = geom.width_w
    if omega_r <= 0 or j_c <= 0:
        raise DomainError("omega_r and j_c must be > 0")
    return -(3.0 / 8.0) * HBAR * omega_r ** 2 / (lk * j_c ** 2 * t ** 2 * l * w)


def kerr_jj(omega_r: float, film: FilmProperties, geom: ResonatorGeometry) -> float:
    """Self-Kerr of a granular film treated as a Josephson-junction array."""
    a = film.need("grain_size_a")
    i_sw = film.need("switching_current_Isw")
    t = film.need("thickness_t")
    l = geom.need("length_l")
    w = geom.width_w
    j_sw = i_sw / (w * t)
    volume = l * w * t
    return -(3.0 / 16.0) * math.pi * E_CHARGE * a * omega_r ** 2 / (j_sw * volume)


def inplane_prefactor(film: FilmProperties) -> float:
    """(pi/48) e^2 t^2 / (hbar k_B T_C), in 1/(T^2 m^2/s)."""
    t = film.need("thickness_t")
    tc = film.need("critical_temp_Tc")
    return (math.pi / 48.0) * E_CHARGE ** 2 * t ** 2 / (HBAR * K_B * tc)


def generalized_diffusion(film: FilmProperties, width: float, theta_b: float) -> float:
    """D_p = D (1 + theta^2 w^2 / t^2)."""
    t = film.need("thickness_t")
    return film.need("diffusion_D") * (1.0 + theta_b ** 2 * width ** 2 / t ** 2)


def inplane_freq_shift(b_par, film: FilmProperties, geom: ResonatorGeometry, theta_b: float = 0.0):
    """Relative frequency shift under an in-plane field with misalignment ``theta_b`` (rad)."""
    b = np.asarray(b_par, dtype=float)
    if np.any(b < 0):
        raise DomainError("b_par must be >= 0")
    d_p = generalized_diffusion(film, geom.width_w, theta_b)
    value = -inplane_prefactor(film) * d_p * b ** 2
    return float(value) if np.ndim(value) == 0 else value


def inplane_critical_field(film: FilmProperties, width: float, theta_b: float = 0.0) -> float:
    """Critical field at which the in-plane law equals the quadratic -1/4 (B/B_C)^2 law."""
    c = inplane_prefactor(film) * generalized_diffusion(film, width, theta_b)
    return 1.0 / (2.0 * math.sqrt(c))


def diffusion_for_critical_field(film: FilmProperties, b_c: float, width: float = 0.0,
                                 theta_b: float = 0.0) -> float:
    """Diffusion constant D reproducing a given in-plane critical field."""
    t = film.need("thickness_t")
    d_p = 1.0 / (4.0 * b_c ** 2 * inplane_prefactor(film))
    return d_p / (1.0 + theta_b ** 2 * width ** 2 / t ** 2)


def quadratic_shift_bc(b, b_c: float):
    """Relative frequency shift -1/4 (B/B_C)^2."""
    if b_c <= 0:
        raise DomainError("b_c must be > 0")
    value = -0.25 * (np.asarray(b, dtype=float) / b_c) ** 2
    return float(value) if np.ndim(value) == 0 else value


def critical_field_from_shift(b: float, rel_shift: float) -> float:
    """Invert :func:`quadratic_shift_bc` for a single observation."""
    if rel_shift >= 0:
        raise DomainError("a critical field needs a negative shift")
    return abs(b) / (2.0 * math.sqrt(-rel_shift))


def gap_vs_field(b: float, film: FilmProperties, b_c: float) -> float:
    """Superconducting gap (J) suppressed by a field b <= b_c."""
    delta0 = film.need("gap_delta0")
    if b < 0 or b > b_c:
        raise DomainError("field must lie in [0, b_c]")
    return delta0 * math.sqrt(1.0 - (b / b_c) ** 2)


def lk_from_sheet_resistance(film: FilmProperties, temperature: float = 0.0) -> float:
    """Sheet kinetic inductance (H/sq) from normal-state sheet resistance.

    The gap is taken as the BCS value 1.764 k_B T_C regardless of any
    ``gap_delta0`` stored on the film.
    """
    r_sq = film.need("sheet_resistance")
    tc = film.need("critical_temp_Tc")
    if temperature < 0 or temperature >= tc:
        raise DomainError("temperature must lie in [0, T_C)")
    gap = BCS_GAP_RATIO * K_B * tc
    lk = r_sq * HBAR / (math.pi * gap)
    if temperature > 0:
        lk /= math.tanh(gap / (2.0 * K_B * temperature))
    return lk


def quarterwave_frequency(geom: ResonatorGeometry) -> float:
    """Fundamental of a quarter-wave line, Hz."""
    l = geom.need("length_l")
    lt = geom.need("inductance_per_length")
    ct = geom.need("capacitance_per_length")
    return 1.0 / (4.0 * l * math.sqrt(lt * ct))


def characteristic_impedance(geom: ResonatorGeometry) -> float:
    return math.sqrt(geom.need("inductance_per_length") / geom.need("capacitance_per_length"))


def capacitance_from_frequency(f_measured: float, geom: ResonatorGeometry) -> float:
    """Capacitance per length (F/m) reproducing ``f_measured`` for a known length and L~."""
    if f_measured <= 0:
        raise DomainError("frequency must be > 0")
    l = geom.need("length_l")
    lt = geom.need("inductance_per_length")
    return 1.0 / (16.0 * l ** 2 * f_measured ** 2 * lt)


def length_from_impedance(f0: float, impedance: float, inductance_per_length: float) -> float:
    """Quarter-wave length consistent with a resonance frequency and an impedance."""
    return impedance / (4.0 * f0 * inductance_per_length)
