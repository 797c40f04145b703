"""Synthetic traces, power maps and field sweeps from known parameters."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
import math

import numpy as np

from .constants import TWO_PI
from .data import ORIENTATIONS, ComplexTrace, FieldSweepSeries
from .errors import DomainError
from .models import (
    environment_factor,
    inplane_critical_field,
    inplane_freq_shift,
    input_photon_flux,
    quadratic_shift_bc,
    s21_linear,
    s21_nonlinear,
)
from .occupation import bifurcation_onset
from .params import (
    EnvironmentParams,
    FilmProperties,
    KerrModelParams,
    LossModelParams,
    QiTemplate,
    ResonanceParams,
    ResonatorGeometry,
)

RNG_ALGORITHM = "numpy.random.PCG64(SeedSequence)"
NONLINEAR_THRESHOLD = 1e-3


@dataclass(frozen=True)
class NoiseSpec:
    """Per-quadrature Gaussian noise level and 64-bit seed."""

    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.sigma >= 0:
            raise DomainError("sigma must be >= 0")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise DomainError("seed must be a 64-bit unsigned integer")

    def rng(self, *stream: int) -> np.random.Generator:
        """Independent generator for a sub-stream (e.g. trace index)."""
        seq = np.random.SeedSequence(int(self.seed), spawn_key=tuple(int(s) for s in stream))
        return np.random.Generator(np.random.PCG64(seq))

    def complex_noise(self, size: int, *stream: int) -> np.ndarray:
        if self.sigma == 0:
            return np.zeros(size, dtype=complex)
        draws = self.rng(*stream).standard_normal(2 * size)
        return self.sigma * (draws[:size] + 1j * draws[size:])


@dataclass(frozen=True)
class GeneratorTruth:
    """Everything needed to generate one resonator's synthetic data.

    ``b_c_par`` and ``b_c_perp`` (T) set the quadratic field laws directly;
    without ``b_c_par`` the in-plane shift follows the film diffusion model
    with misalignment ``theta_b`` (rad). ``qi_template`` shapes Q_i(B).
    """

    resonance: ResonanceParams
    env: EnvironmentParams = field(default_factory=EnvironmentParams)
    kerr: KerrModelParams = field(default_factory=KerrModelParams)
    loss: LossModelParams = field(default_factory=LossModelParams)
    film: FilmProperties = field(default_factory=FilmProperties)
    geometry: ResonatorGeometry | None = None
    b_c_par: float | None = None
    b_c_perp: float | None = None
    theta_b: float = 0.0
    qi_template: QiTemplate = field(default_factory=QiTemplate)

    _PARTS = {"resonance": ResonanceParams, "env": EnvironmentParams, "kerr": KerrModelParams,
              "loss": LossModelParams, "film": FilmProperties, "geometry": ResonatorGeometry,
              "qi_template": QiTemplate}

    def to_dict(self) -> dict:
        out = {}
        for key in ("resonance", "env", "kerr", "loss", "film", "geometry", "qi_template"):
            part = getattr(self, key)
            out[key] = None if part is None else part.to_dict()
        out.update(b_c_par=self.b_c_par, b_c_perp=self.b_c_perp, theta_b=self.theta_b)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "GeneratorTruth":
        known = set(cls._PARTS) | {"b_c_par", "b_c_perp", "theta_b"}
        unknown = set(data) - known
        if unknown:
            raise DomainError(f"unknown truth fields: {sorted(unknown)}")
        if "resonance" not in data:
            raise DomainError("truth needs a resonance")
        kwargs = {}
        for key, kind in cls._PARTS.items():
            if data.get(key) is not None:
                kwargs[key] = kind.from_dict(data[key])
        for key in ("b_c_par", "b_c_perp", "theta_b"):
            if data.get(key) is not None:
                kwargs[key] = float(data[key])
        return cls(**kwargs)

    def replace(self, **changes) -> "GeneratorTruth":
        return replace(self, **changes)

    def critical_field(self, orientation: str) -> float:
        if orientation == "out_of_plane":
            if self.b_c_perp is None:
                raise DomainError("out-of-plane generation needs b_c_perp")
            return self.b_c_perp
        if self.b_c_par is not None:
            return self.b_c_par
        if self.geometry is None:
            raise DomainError("in-plane generation needs b_c_par or a geometry")
        return inplane_critical_field(self.film, self.geometry.width_w, self.theta_b)

    def rel_shift(self, b, orientation: str):
        """Noise-free relative frequency shift at field(s) ``b``."""
        if orientation not in ORIENTATIONS:
            raise DomainError(f"orientation must be one of {ORIENTATIONS}")
        b = np.asarray(b, dtype=float)
        b_c = self.critical_field(orientation)
        if np.any(b < 0) or np.any(b > b_c):
            raise DomainError(f"field must lie in [0, {b_c:g}] T")
        if orientation == "out_of_plane" or self.b_c_par is not None:
            return quadratic_shift_bc(b, b_c)
        return inplane_freq_shift(b, self.film, self.geometry, self.theta_b)

    def resonance_at(self, b: float, orientation: str) -> ResonanceParams:
        """Resonance at field ``b``: shifted f0, templated Q_i and fixed Q_c."""
        res = self.resonance
        f0 = res.f0 * (1.0 + float(self.rel_shift(b, orientation)))
        return ResonanceParams.from_quality(f0, self.qi_template(b, res.q_i), res.q_c)


def _peak_photons(res: ResonanceParams, flux: float) -> float:
    return 2.0 * res.kappa_ext * flux / res.linewidth ** 2


def forward_trace(truth: GeneratorTruth, grid, flux: float | None = None):
    """Noise-free transmission and the model used (``linear`` or ``nonlinear``)."""
    flux = truth.kerr.drive_amplitude_sq if flux is None else flux
    res = truth.resonance
    k = truth.kerr.kerr_K
    if abs(k) * _peak_photons(res, flux) > NONLINEAR_THRESHOLD * res.linewidth:
        env = truth.env
        background = EnvironmentParams(env.amplitude_a, env.phase_alpha, env.delay_tau, 0.0)
        s = environment_factor(grid, background) * s21_nonlinear(
            grid, res, KerrModelParams(k, flux), env.impedance_mismatch_phi)
        return s, "nonlinear"
    return s21_linear(grid, res, truth.env), "linear"


def generate_trace(truth: GeneratorTruth, grid, noise: NoiseSpec = NoiseSpec(),
                   power_dbm: float | None = None, attenuation_db: float = 0.0,
                   stream: tuple = ()) -> ComplexTrace:
    """One synthetic trace.

    With ``power_dbm`` the drive flux follows from the source power; otherwise
    ``truth.kerr.drive_amplitude_sq`` is used. ``stream`` selects an
    independent noise sub-stream of ``noise.seed``.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or not np.all(np.diff(grid) > 0):
        raise DomainError("grid must be strictly increasing")
    flux = None
    if power_dbm is not None:
        flux = float(input_photon_flux(power_dbm, attenuation_db, truth.resonance.omega0))
    clean, model = forward_trace(truth, grid, flux)
    samples = clean + noise.complex_noise(grid.size, *stream)
    meta = {"model": model, "sigma": noise.sigma, "seed": int(noise.seed),
            "stream": list(stream), "rng": RNG_ALGORITHM}
    return ComplexTrace(grid, samples, power_dbm, attenuation_db, meta)


def generate_power_map(truth: GeneratorTruth, powers, grid, noise: NoiseSpec = NoiseSpec(),
                       attenuation_db: float = 0.0) -> list:
    """One trace per source power (dBm, ascending).

    ``meta['above_bifurcation']`` flags traces whose drive admits several
    occupations somewhere on the grid.
    """
    powers = [float(p) for p in powers]
    if any(b < a for a, b in zip(powers, powers[1:])):
        raise DomainError("powers must be ascending")
    res = truth.resonance
    grid = np.asarray(grid, dtype=float)
    delta = (TWO_PI * grid - res.omega0) / res.linewidth
    traces = []
    for i, p in enumerate(powers):
        tr = generate_trace(truth, grid, noise, p, attenuation_db, stream=(i,))
        flux = float(input_photon_flux(p, attenuation_db, res.omega0))
        xi = res.kappa_ext * flux * truth.kerr.kerr_K / res.linewidth ** 3
        flag = bool(bifurcation_onset((delta.min(), delta.max()), xi))
        traces.append(tr.with_meta(above_bifurcation=flag, xi=xi))
    return traces


def generate_field_sweep(truth: GeneratorTruth, b_values, orientation: str,
                         noise: NoiseSpec = NoiseSpec(), name: str = "") -> FieldSweepSeries:
    """Relative shift and quality factors versus field.

    Noise (``noise.sigma``) is added to the relative shift only; Q_i follows
    ``truth.qi_template`` and Q_c stays at its zero-field value.
    """
    b = np.asarray(b_values, dtype=float)
    if np.any(np.diff(b) < 0):
        raise DomainError("field values must be non-decreasing")
    shift = np.asarray(truth.rel_shift(b, orientation), dtype=float).reshape(b.shape)
    if noise.sigma:
        shift = shift + noise.sigma * noise.rng().standard_normal(b.size)
    q_i = np.array([truth.qi_template(x, truth.resonance.q_i) for x in b])
    q_c = np.full(b.size, truth.resonance.q_c)
    width = truth.geometry.width_w if truth.geometry is not None else None
    return FieldSweepSeries(orientation, b, shift, q_i, q_c, width, name)


def centered_grid(res: ResonanceParams, linewidths: float = 10.0, points: int = 401):
    """Frequency grid (Hz) spanning ``linewidths`` total linewidths around f0."""
    lw = res.linewidth / TWO_PI
    return np.linspace(res.f0 - 0.5 * linewidths * lw, res.f0 + 0.5 * linewidths * lw, points)


def expected_bifurcation_flux(res: ResonanceParams, kerr_K: float) -> float:
    """Input flux at which |xi| reaches the bistability threshold."""
    from .occupation import XI_BISTABLE_THRESHOLD

    if kerr_K == 0:
        return math.inf
    return XI_BISTABLE_THRESHOLD * res.linewidth ** 3 / (res.kappa_ext * abs(kerr_K))
