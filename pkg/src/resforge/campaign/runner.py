"""Field-sweep campaign state machine.

Per campaign: zero-field reference of every resonator, optional zero-field
Kerr power map, then for each field step a ramp and settle (bookkept as
elapsed milliseconds, no sleeping), power scans at the configured fields and
one tracking step per active resonator.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math
import os

import numpy as np

from ..data import FieldSweepSeries, PowerScan
from ..errors import (BifurcationInFitWindow, ConfigError, DomainError, IllConditioned,
                      LostResonance, MissingInput, NoDipFound, NotConverged)
from ..fitting import (environment_from_fit, fit_kerr_2d, fit_linear_resonance, fit_power_scan,
                       qc_filter, resonance_from_fit)
from ..fitting.kerr import bifurcation_flags
from ..models import photon_number
from ..serialize import dumps17
from ..synth import RNG_ALGORITHM, NoiseSpec
from .config import CampaignConfig
from .sources import ReplaySource, SimulatedSource
from .tracking import AuditLog, detail_fit, track_resonance

FIELD_MATCH_TOL = 1e-9


def ramp_milliseconds(delta_b: float, rate_mt_per_min: float) -> int:
    """Ramp duration in whole milliseconds for a field change in tesla."""
    return int(round(abs(delta_b) * 1e3 / rate_mt_per_min * 60e3))


@dataclass
class CampaignResult:
    config: CampaignConfig
    orientation: str
    tracked: dict = field(default_factory=dict)
    series: dict = field(default_factory=dict)
    zero_field: dict = field(default_factory=dict)
    power_scans: dict = field(default_factory=dict)
    kerr: dict = field(default_factory=dict)
    lost: dict = field(default_factory=dict)
    log: list = field(default_factory=list)
    truths: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "name": self.config.name,
            "orientation": self.orientation,
            "config": self.config.raw,
            "truths": self.truths,
            "zero_field": {k: v.to_dict() for k, v in self.zero_field.items()},
            "series": {k: v.to_dict() for k, v in self.series.items()},
            "tracked": {k: [t.to_dict() for t in v] for k, v in self.tracked.items()},
            "power_scans": self.power_scans,
            "kerr": self.kerr,
            "lost": self.lost,
            "log": self.log,
        }


def _series_from_tracking(name, points, orientation, width, f_ref) -> FieldSweepSeries:
    rows = [(t.field_b, t.fit.params["f0"] / f_ref - 1.0, t.fit.params["q_i"],
             t.fit.params["q_c"]) for t in points if t.accepted]
    arr = np.array(rows, dtype=float).reshape(-1, 4)
    return FieldSweepSeries(orientation, arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], width, name)


def _power_scan(source, config, log, name, field_b, state) -> dict:
    points = []
    for p in sorted(config.powers):
        tracked = detail_fit(source, config, log, name, field_b, state["f0"],
                             state["linewidth"], p, kind="power")
        if tracked.accepted:
            fit = tracked.fit
            n = photon_number(p, config.attenuation_db, resonance_from_fit(fit))
            points.append([p, float(n), fit.params["q_i"], fit.std_errors["q_i"]])
    out = {"field_b": field_b, "points": points, "fit": None, "error": None}
    try:
        scan = PowerScan.from_points([pt[1:] for pt in points])
        result = fit_power_scan(scan, 2.0 * math.pi * state["f0"])
        out["fit"] = result.to_dict()
    except IllConditioned as exc:
        out["fit"] = exc.result.to_dict()
        out["error"] = f"IllConditioned: {exc}"
    except (DomainError, NotConverged) as exc:
        out["error"] = f"{type(exc).__name__}: {exc}"
    log.add("power_scan_fit", resonator=name, field_b=field_b, error=out["error"])
    return out


def fit_kerr_iteratively(traces, res, env, config_C=4.0):
    """Fit K, dropping traces that are bistable at the current estimate until none are.

    Returns (FitResult, flags over the input traces). Raises
    BifurcationInFitWindow when every trace is dropped.
    """
    keep = list(range(len(traces)))
    while keep:
        try:
            result = fit_kerr_2d([traces[i] for i in keep], res, config_C, env)
        except BifurcationInFitWindow as exc:
            drop = {keep[j] for j, f in enumerate(exc.flags) if f}
            keep = [i for i in keep if i not in drop]
            continue
        flags = bifurcation_flags(traces, res, result.meta["kerr_K"], config_C)
        return result, flags
    raise BifurcationInFitWindow("every trace is bistable", [True] * len(traces))


def _kerr_map(source, config, log, name, state) -> dict:
    traces = []
    for p in sorted(config.kerr_powers):
        span = config.scan.detail_linewidths * state["linewidth"]
        req = log.request("kerr", name, state["field_b"], state["f0"] - 0.5 * span, state["f0"] + 0.5 * span,
                          config.scan.detail_points, p, config.attenuation_db)
        traces.append(source.scan(req))
    out = {"powers": sorted(config.kerr_powers), "fit": None, "flags": None, "error": None}
    # kappa, gamma and the background from the lowest-power trace passing QC
    base = None
    for tr in traces:
        try:
            fit = fit_linear_resonance(tr)
        except (NoDipFound, NotConverged):
            continue
        if qc_filter(fit, config.qc_max_std_error).accepted:
            base = fit
            break
    if base is None:
        out["error"] = "no low-power trace passed QC"
    else:
        try:
            result, flags = fit_kerr_iteratively(traces, resonance_from_fit(base),
                                                 environment_from_fit(base))
            out["fit"] = result.to_dict()
            out["flags"] = flags
        except (BifurcationInFitWindow, NotConverged) as exc:
            out["error"] = f"{type(exc).__name__}: {exc}"
    log.add("kerr_fit", resonator=name, error=out["error"])
    return out


def run_field_campaign(config: CampaignConfig, source) -> CampaignResult:
    """Run the tracking protocol over the configured field axis.

    A resonator whose dip disappears is marked lost at that field and skipped
    afterwards; the campaign continues with the others.
    """
    axis = config.field
    fields = axis.values()
    if len(fields) < 1:
        raise ConfigError("empty field axis")
    log = AuditLog()
    result = CampaignResult(config, axis.orientation)
    if isinstance(source, SimulatedSource):
        result.truths = {k: v.to_dict() for k, v in source.truths.items()}
    names = [spec.name for spec in config.resonators]
    widths = {spec.name: spec.width for spec in config.resonators}
    state = {}
    log.add("start", orientation=axis.orientation, field_b=fields[0],
            resonators=names, rng=RNG_ALGORITHM)

    current = fields[0]
    for spec in config.resonators:
        half = 0.5 * config.scan.fast_width_hz
        try:
            ref = track_resonance(spec.design_f0 + half, source, config, resonator=spec.name,
                                  field_b=current, log=log, window_top=spec.design_f0 + half)
        except LostResonance as exc:
            result.lost[spec.name] = current
            log.add("inactive", resonator=spec.name, field_b=current, reason=str(exc))
            continue
        result.tracked[spec.name] = [ref]
        if ref.accepted:
            result.zero_field[spec.name] = ref.fit
        state[spec.name] = {"field_b": current, "f0": ref.f0_est, "linewidth": ref.linewidth_hz,
                            "f_ref": ref.fit.params["f0"] if ref.accepted else ref.f0_est}
        if config.kerr_powers:
            result.kerr[spec.name] = _kerr_map(source, config, log, spec.name, state[spec.name])

    for k, b in enumerate(fields):
        if k > 0:
            log.advance(ramp_milliseconds(b - current, axis.ramp_rate_mt_per_min))
            log.add("ramp", field_from=current, field_to=b)
            log.advance(int(round(axis.settle_time_s * 1e3)))
            log.add("settle", field_b=b)
            current = b
            for name in names:
                if name not in state or name in result.lost:
                    continue
                st = state[name]
                try:
                    tr = track_resonance(st["f0"], source, config, resonator=name, field_b=b,
                                         linewidth_hz=st["linewidth"], log=log)
                except LostResonance as exc:
                    result.lost[name] = b
                    log.add("inactive", resonator=name, field_b=b, reason=str(exc))
                    continue
                result.tracked[name].append(tr)
                st["f0"] = tr.f0_est
                if tr.accepted:
                    st["linewidth"] = tr.linewidth_hz
        if any(abs(b - fb) <= FIELD_MATCH_TOL for fb in axis.power_scan_fields) and config.powers:
            for name in names:
                if name in state and name not in result.lost:
                    result.power_scans.setdefault(name, []).append(
                        _power_scan(source, config, log, name, b, state[name]))

    for name in names:
        if name in result.tracked:
            result.series[name] = _series_from_tracking(
                name, result.tracked[name], axis.orientation, widths[name], state[name]["f_ref"])
    log.add("end", elapsed_ms=log.elapsed_ms)
    result.log = log.entries
    return result


def simulated_source(config: CampaignConfig, record_dir=None) -> SimulatedSource:
    truths = {spec.name: config.truth_of(spec) for spec in config.resonators}
    return SimulatedSource(truths, config.field.orientation,
                           NoiseSpec(config.noise_sigma, config.seed), record_dir)


def run_campaign_mode(config: CampaignConfig, mode: str, directory=None) -> CampaignResult:
    """``simulate`` (recording traces into ``directory/traces`` when given) or ``replay``."""
    if mode == "simulate":
        record = os.path.join(directory, "traces") if directory else None
        return run_field_campaign(config, simulated_source(config, record))
    if mode == "replay":
        if directory is None:
            raise ConfigError("replay needs a recorded campaign directory")
        return run_field_campaign(config, ReplaySource(os.path.join(directory, "traces")))
    raise ConfigError(f"unknown mode {mode!r}")


def write_results(result: CampaignResult, path) -> None:
    """Result document: the campaign record plus its report table (null if incomplete)."""
    from .report import build_report, report_document

    doc = result.to_dict()
    try:
        doc["report"] = report_document(build_report(result))
    except MissingInput as exc:
        doc["report"] = None
        doc["report_error"] = str(exc)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps17(doc))
