"""Parameter containers for resonances, loss models, films and geometries.

All rates are angular (rad/s). Conversions to Hz happen only at the
boundaries (file formats, reports, CLI). Invariants are checked once, at
construction.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
import math

from .constants import BCS_GAP_RATIO, K_B, TWO_PI
from .errors import DomainError


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise DomainError(message)


class _DictMixin:
    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise DomainError(f"unknown {cls.__name__} fields: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class EnvironmentParams(_DictMixin):
    """Background of the feedline: amplitude, phase, cable delay, mismatch."""

    amplitude_a: float = 1.0
    phase_alpha: float = 0.0
    delay_tau: float = 0.0
    impedance_mismatch_phi: float = 0.0

    def __post_init__(self):
        _require(self.amplitude_a > 0, "amplitude_a must be > 0")
        _require(
            -math.pi / 2 < self.impedance_mismatch_phi < math.pi / 2,
            "impedance_mismatch_phi must lie in (-pi/2, pi/2)",
        )


@dataclass(frozen=True)
class ResonanceParams(_DictMixin):
    omega0: float
    kappa_ext: float
    gamma_int: float

    def __post_init__(self):
        _require(self.omega0 > 0, "omega0 must be > 0")
        _require(self.kappa_ext >= 0, "kappa_ext must be >= 0")
        _require(self.gamma_int >= 0, "gamma_int must be >= 0")
        _require(self.kappa_ext + self.gamma_int > 0, "kappa + gamma must be > 0")

    @classmethod
    def from_quality(cls, f0_hz: float, q_i: float, q_c: float) -> "ResonanceParams":
        """Build from resonance frequency in Hz and the two quality factors.

        An infinite quality factor maps to a zero rate.
        """
        omega0 = TWO_PI * f0_hz
        gamma = 0.0 if math.isinf(q_i) else omega0 / q_i
        kappa = 0.0 if math.isinf(q_c) else omega0 / q_c
        return cls(omega0, kappa, gamma)

    @property
    def f0(self) -> float:
        return self.omega0 / TWO_PI

    @property
    def linewidth(self) -> float:
        """Total loss rate kappa + gamma (rad/s)."""
        return self.kappa_ext + self.gamma_int

    @property
    def q_i(self) -> float:
        return self.omega0 / self.gamma_int if self.gamma_int > 0 else math.inf

    @property
    def q_c(self) -> float:
        return self.omega0 / self.kappa_ext if self.kappa_ext > 0 else math.inf

    @property
    def q_loaded(self) -> float:
        return self.omega0 / self.linewidth


@dataclass(frozen=True)
class KerrModelParams(_DictMixin):
    """Self-Kerr coefficient (rad/s per photon) and input photon flux (1/s)."""

    kerr_K: float = 0.0
    drive_amplitude_sq: float = 0.0

    def __post_init__(self):
        _require(self.drive_amplitude_sq >= 0, "drive_amplitude_sq must be >= 0")
        _require(math.isfinite(self.kerr_K), "kerr_K must be finite")

    @property
    def kerr_hz(self) -> float:
        return self.kerr_K / TWO_PI


@dataclass(frozen=True)
class LossModelParams(_DictMixin):
    """TLS + quasiparticle + residual loss model of the internal quality factor.

    ``qp_loss`` holds the whole quasiparticle term evaluated at the measurement
    temperature; it is a fixed scalar because the quasiparticle density has no
    closed form here.
    """

    tls_loss_F_delta0: float = 0.0
    critical_photon_nC: float = 1.0
    saturation_beta: float = 0.5
    residual_delta0: float = 0.0
    qp_loss: float = 0.0
    temperature_T: float = 0.0

    def __post_init__(self):
        _require(self.tls_loss_F_delta0 >= 0, "tls_loss_F_delta0 must be >= 0")
        _require(self.critical_photon_nC > 0, "critical_photon_nC must be > 0")
        _require(0 < self.saturation_beta <= 2, "saturation_beta must be in (0, 2]")
        _require(self.residual_delta0 >= 0, "residual_delta0 must be >= 0")
        _require(self.qp_loss >= 0, "qp_loss must be >= 0")
        _require(self.temperature_T >= 0, "temperature_T must be >= 0")


@dataclass(frozen=True)
class FilmProperties(_DictMixin):
    """Superconducting film. Unknown quantities may be left as ``None``.

    Operations that need a missing field raise :class:`DomainError`.
    ``gap_delta0`` defaults to the BCS value from ``critical_temp_Tc``.
    """

    lk_sheet: float | None = None
    thickness_t: float | None = None
    critical_temp_Tc: float | None = None
    sheet_resistance: float | None = None
    gap_delta0: float | None = None
    diffusion_D: float | None = None
    depairing_current_Istar: float | None = None
    switching_current_Isw: float | None = None
    grain_size_a: float | None = None
    depairing_exponent_n: float = 2.21

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if value is not None:
                _require(value > 0, f"{f.name} must be > 0")
        if self.gap_delta0 is None and self.critical_temp_Tc is not None:
            object.__setattr__(self, "gap_delta0", BCS_GAP_RATIO * K_B * self.critical_temp_Tc)

    def need(self, name: str) -> float:
        value = getattr(self, name)
        if value is None:
            raise DomainError(f"film property {name!r} is required")
        return value

    def replace(self, **changes) -> "FilmProperties":
        data = self.to_dict()
        if "critical_temp_Tc" in changes and "gap_delta0" not in changes:
            data["gap_delta0"] = None
        data.update(changes)
        return FilmProperties(**data)


@dataclass(frozen=True)
class ResonatorGeometry(_DictMixin):
    """Wire width and length plus per-unit-length inductance/capacitance.

    Either per-length quantity may be ``None`` while a chain is being solved.
    """

    width_w: float
    length_l: float | None = None
    inductance_per_length: float | None = None
    capacitance_per_length: float | None = None

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if value is not None:
                _require(value > 0, f"{f.name} must be > 0")

    @classmethod
    def from_film(cls, film: FilmProperties, width: float, length: float | None = None,
                  capacitance_per_length: float | None = None) -> "ResonatorGeometry":
        """Wire whose inductance per length is the sheet inductance over the width."""
        return cls(width, length, film.need("lk_sheet") / width, capacitance_per_length)

    def need(self, name: str) -> float:
        value = getattr(self, name)
        if value is None:
            raise DomainError(f"geometry property {name!r} is required")
        return value

    def replace(self, **changes) -> "ResonatorGeometry":
        data = self.to_dict()
        data.update(changes)
        return ResonatorGeometry(**data)

    @property
    def total_inductance(self) -> float:
        return self.need("inductance_per_length") * self.need("length_l")


@dataclass(frozen=True)
class QiTemplate(_DictMixin):
    """Piecewise log-linear internal quality factor versus field.

    Used only by the synthetic generators to emulate measured Q_i(B)
    shapes; it makes no physical claim.
    """

    fields_t: tuple = field(default_factory=tuple)
    q_values: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "fields_t", tuple(float(x) for x in self.fields_t))
        object.__setattr__(self, "q_values", tuple(float(x) for x in self.q_values))
        _require(len(self.fields_t) == len(self.q_values), "template lengths differ")
        _require(all(q > 0 for q in self.q_values), "template Q values must be > 0")
        _require(
            all(b1 > b0 for b0, b1 in zip(self.fields_t, self.fields_t[1:])),
            "template fields must be strictly increasing",
        )

    def __call__(self, b: float, default: float) -> float:
        import numpy as np

        if not self.fields_t:
            return default
        return float(np.exp(np.interp(b, self.fields_t, np.log(self.q_values))))

    def to_dict(self) -> dict:
        return {"fields_t": list(self.fields_t), "q_values": list(self.q_values)}
