"""Resonance tracking: coarse scan below the last frequency, then a detail fit."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..data import FitResult
from ..errors import LostResonance, NoDipFound, NotConverged
from ..fitting import fit_linear_resonance, qc_filter
from ..fitting.circle import find_dip
from .sources import ScanRequest


class AuditLog:
    """Append-only record of requests, fits and decisions with elapsed time (ms)."""

    def __init__(self):
        self.entries = []
        self.elapsed_ms = 0
        self._next_scan = 0

    def add(self, event: str, **data) -> dict:
        entry = {"seq": len(self.entries), "elapsed_ms": self.elapsed_ms, "event": event}
        entry.update(data)
        self.entries.append(entry)
        return entry

    def advance(self, ms: int) -> None:
        self.elapsed_ms += int(ms)

    def request(self, kind, resonator, field_b, f_start, f_stop, points, power_dbm,
                attenuation_db) -> ScanRequest:
        req = ScanRequest(self._next_scan, kind, resonator, float(field_b), float(f_start),
                          float(f_stop), int(points), float(power_dbm), float(attenuation_db))
        self._next_scan += 1
        self.add("scan_request", **req.to_dict())
        return req


@dataclass(frozen=True)
class TrackedResonance:
    resonator: str
    field_b: float
    f0_est: float
    fit: FitResult | None
    accepted: bool
    reason: str
    linewidth_hz: float = field(default=0.0, compare=False)

    def to_dict(self) -> dict:
        return {"resonator": self.resonator, "field_b": self.field_b, "f0_est": self.f0_est,
                "accepted": self.accepted, "reason": self.reason,
                "fit": None if self.fit is None else self.fit.to_dict()}


def dip_width(trace, idx: int) -> float:
    """Full width (Hz) of the magnitude dip at half depth; at least two grid steps."""
    mag = np.abs(trace.samples)
    base = float(np.quantile(mag, 0.9))
    half = 0.5 * (base + mag[idx])
    lo = idx
    while lo > 0 and mag[lo] < half:
        lo -= 1
    hi = idx
    while hi < mag.size - 1 and mag[hi] < half:
        hi += 1
    step = trace.span / (len(trace) - 1)
    return float(max(trace.freqs[hi] - trace.freqs[lo], 2.0 * step))


def detail_fit(source, config, log: AuditLog, resonator: str, field_b: float, center: float,
               linewidth_hz: float, power_dbm: float, kind: str = "detail") -> TrackedResonance:
    """Detail scan centered on ``center``, linear fit and QC decision."""
    span = config.scan.detail_linewidths * linewidth_hz
    req = log.request(kind, resonator, field_b, center - 0.5 * span, center + 0.5 * span,
                      config.scan.detail_points, power_dbm, config.attenuation_db)
    trace = source.scan(req)
    try:
        result = fit_linear_resonance(trace)
    except NoDipFound as exc:
        log.add("fit", scan_id=req.scan_id, resonator=resonator, field_b=field_b,
                converged=False, message=str(exc))
        log.add("qc", scan_id=req.scan_id, resonator=resonator, accepted=False, reason=str(exc))
        return TrackedResonance(resonator, field_b, center, None, False, str(exc), linewidth_hz)
    except NotConverged as exc:
        result = exc.result
    log.add("fit", scan_id=req.scan_id, resonator=resonator, field_b=field_b,
            **result.to_dict())
    verdict = qc_filter(result, config.qc_max_std_error)
    log.add("qc", scan_id=req.scan_id, resonator=resonator, accepted=verdict.accepted,
            reason=verdict.reason)
    f0 = result.params["f0"]
    width = linewidth_hz
    if result.converged:
        q_l = 1.0 / (1.0 / result.params["q_i"] + 1.0 / result.params["q_c"])
        if q_l > 0:
            width = f0 / q_l
    if not (abs(f0 - center) < 0.5 * span):
        f0 = center
    return TrackedResonance(resonator, field_b, float(f0), result, verdict.accepted,
                            verdict.reason, float(width))


def track_resonance(previous_f0: float, source, config, *, resonator: str, field_b: float,
                    linewidth_hz: float | None = None, log: AuditLog | None = None,
                    window_top: float | None = None) -> TrackedResonance:
    """Find the resonance below ``previous_f0`` and fit it.

    The fast scan covers ``[previous_f0 - fast_width, previous_f0]`` (or up
    to ``window_top`` when given, used for the zero-field search). Without
    ``linewidth_hz`` the detail window is sized from the coarse dip and the
    detail scan is repeated once with the fitted linewidth.

    Raises
    ------
    LostResonance
        When the fast scan shows no dip.
    """
    log = log if log is not None else AuditLog()
    top = previous_f0 if window_top is None else window_top
    req = log.request("fast", resonator, field_b, top - config.scan.fast_width_hz, top,
                      config.scan.fast_points, config.scan.power_dbm, config.attenuation_db)
    trace = source.scan(req)
    try:
        idx = find_dip(trace)
    except NoDipFound as exc:
        log.add("lost", scan_id=req.scan_id, resonator=resonator, field_b=field_b,
                reason=str(exc))
        raise LostResonance(f"{resonator}: no dip below {previous_f0:.9g} Hz at {field_b:g} T",
                            field_b, previous_f0) from None
    estimate = float(trace.freqs[idx])
    log.add("dip", scan_id=req.scan_id, resonator=resonator, f0_est=estimate)
    if linewidth_hz is None:
        first = detail_fit(source, config, log, resonator, field_b, estimate,
                           dip_width(trace, idx), config.scan.power_dbm)
        estimate, linewidth_hz = first.f0_est, first.linewidth_hz
    return detail_fit(source, config, log, resonator, field_b, estimate, linewidth_hz,
                      config.scan.power_dbm)
