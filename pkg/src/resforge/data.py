"""Measurement containers: traces, power scans, field sweeps and fit results."""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import DomainError

MIN_TRACE_POINTS = 8


@dataclass(frozen=True)
class ComplexTrace:
    """Complex transmission sampled on a strictly increasing frequency grid (Hz)."""

    freqs: np.ndarray
    samples: np.ndarray
    power_dbm: float | None = None
    attenuation_db: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        freqs = np.asarray(self.freqs, dtype=float)
        samples = np.asarray(self.samples, dtype=complex)
        if freqs.ndim != 1 or samples.shape != freqs.shape:
            raise DomainError("freqs and samples must be 1-D and of equal length")
        if freqs.size < MIN_TRACE_POINTS:
            raise DomainError(f"a trace needs at least {MIN_TRACE_POINTS} points")
        if not np.all(np.diff(freqs) > 0):
            raise DomainError("freqs must be strictly increasing")
        if not (np.all(np.isfinite(freqs)) and np.all(np.isfinite(samples))):
            raise DomainError("trace contains non-finite values")
        freqs.setflags(write=False)
        samples.setflags(write=False)
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return self.freqs.size

    @property
    def span(self) -> float:
        return float(self.freqs[-1] - self.freqs[0])

    def decimated(self, step: int = 2) -> "ComplexTrace":
        return ComplexTrace(self.freqs[::step], self.samples[::step], self.power_dbm,
                            self.attenuation_db, dict(self.meta))

    def scaled(self, factor: complex) -> "ComplexTrace":
        return ComplexTrace(self.freqs, self.samples * factor, self.power_dbm,
                            self.attenuation_db, dict(self.meta))

    def with_meta(self, **meta) -> "ComplexTrace":
        merged = dict(self.meta)
        merged.update(meta)
        return ComplexTrace(self.freqs, self.samples, self.power_dbm, self.attenuation_db, merged)


@dataclass(frozen=True)
class FitResult:
    """Outcome of any fitter.

    ``params`` and ``std_errors`` use reporting units (Hz, dimensionless Q,
    Hz/photon, tesla, degrees). ``std_errors`` is empty unless the fit
    converged. ``covariance`` is ordered like ``params``.
    """

    params: dict
    std_errors: dict
    residual_norm: float
    converged: bool
    n_iterations: int
    model: str = ""
    covariance: np.ndarray | None = field(default=None, compare=False, repr=False)
    history: tuple = field(default=(), compare=False, repr=False)
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.residual_norm < 0:
            raise DomainError("residual_norm must be >= 0")
        if self.std_errors and not self.converged:
            raise DomainError("std_errors are only reported for converged fits")

    def __getitem__(self, name):
        return self.params[name]

    def error(self, name, default=math.nan):
        return self.std_errors.get(name, default)

    def to_dict(self) -> dict:
        out = {
            "model": self.model,
            "params": {k: float(v) for k, v in self.params.items()},
            "std_errors": {k: float(v) for k, v in self.std_errors.items()},
            "residual_norm": float(self.residual_norm),
            "converged": bool(self.converged),
            "n_iterations": int(self.n_iterations),
        }
        if self.meta:
            out["meta"] = self.meta
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "FitResult":
        return cls(dict(data["params"]), dict(data.get("std_errors", {})),
                   float(data["residual_norm"]), bool(data["converged"]),
                   int(data["n_iterations"]), data.get("model", ""), meta=dict(data.get("meta", {})))


@dataclass(frozen=True)
class PowerScan:
    """Internal quality factor versus mean intracavity photon number."""

    n_ph: np.ndarray
    q_i: np.ndarray
    q_i_err: np.ndarray

    def __post_init__(self):
        n = np.asarray(self.n_ph, dtype=float)
        q = np.asarray(self.q_i, dtype=float)
        e = np.asarray(self.q_i_err, dtype=float)
        if not (n.shape == q.shape == e.shape) or n.ndim != 1:
            raise DomainError("power scan columns must be 1-D and of equal length")
        if np.any(n <= 0) or np.any(q <= 0):
            raise DomainError("n_ph and q_i must be > 0")
        if np.any(e < 0):
            raise DomainError("q_i_err must be >= 0")
        object.__setattr__(self, "n_ph", n)
        object.__setattr__(self, "q_i", q)
        object.__setattr__(self, "q_i_err", e)

    @classmethod
    def from_points(cls, points) -> "PowerScan":
        arr = np.asarray(points, dtype=float).reshape(-1, 3)
        return cls(arr[:, 0], arr[:, 1], arr[:, 2])

    def __len__(self):
        return self.n_ph.size


ORIENTATIONS = ("in_plane", "out_of_plane")


@dataclass(frozen=True)
class FieldSweepSeries:
    """Tracked relative frequency shift and quality factors versus field."""

    orientation: str
    b: np.ndarray
    rel_shift: np.ndarray
    q_i: np.ndarray
    q_c: np.ndarray
    width: float | None = None
    name: str = ""

    def __post_init__(self):
        if self.orientation not in ORIENTATIONS:
            raise DomainError(f"orientation must be one of {ORIENTATIONS}")
        cols = [np.asarray(getattr(self, k), dtype=float) for k in ("b", "rel_shift", "q_i", "q_c")]
        if len({c.shape for c in cols}) != 1 or cols[0].ndim != 1:
            raise DomainError("field sweep columns must be 1-D and of equal length")
        if np.any(np.diff(cols[0]) < 0):
            raise DomainError("field values must be non-decreasing")
        for key, col in zip(("b", "rel_shift", "q_i", "q_c"), cols):
            object.__setattr__(self, key, col)

    @classmethod
    def from_points(cls, orientation, points, width=None, name="") -> "FieldSweepSeries":
        arr = np.asarray(points, dtype=float).reshape(-1, 4)
        return cls(orientation, arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], width, name)

    @property
    def points(self):
        return list(zip(self.b.tolist(), self.rel_shift.tolist(), self.q_i.tolist(),
                        self.q_c.tolist()))

    def __len__(self):
        return self.b.size

    def to_dict(self) -> dict:
        return {"orientation": self.orientation, "name": self.name, "width": self.width,
                "b": self.b.tolist(), "rel_shift": self.rel_shift.tolist(),
                "q_i": self.q_i.tolist(), "q_c": self.q_c.tolist()}
