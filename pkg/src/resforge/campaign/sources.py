"""Trace providers for campaigns: simulated (optionally recorded) and replayed."""
from __future__ import annotations

from dataclasses import dataclass
import os

import numpy as np

from ..errors import ConfigError
from ..models import inverse_qi, photon_number
from ..params import ResonanceParams
from ..synth import GeneratorTruth, NoiseSpec, generate_trace
from .io import ingest_trace, write_trace

SCAN_FILE = "scan_{:05d}.csv"


@dataclass(frozen=True)
class ScanRequest:
    scan_id: int
    kind: str
    resonator: str
    field_b: float
    f_start: float
    f_stop: float
    points: int
    power_dbm: float
    attenuation_db: float

    @property
    def freqs(self) -> np.ndarray:
        return np.linspace(self.f_start, self.f_stop, self.points)

    def to_dict(self) -> dict:
        return {"scan_id": self.scan_id, "kind": self.kind, "resonator": self.resonator,
                "field_b": self.field_b, "f_start": self.f_start, "f_stop": self.f_stop,
                "points": self.points, "power_dbm": self.power_dbm,
                "attenuation_db": self.attenuation_db}


def _loss_active(truth: GeneratorTruth) -> bool:
    loss = truth.loss
    return loss.tls_loss_F_delta0 > 0 or loss.residual_delta0 > 0 or loss.qp_loss > 0


def resonance_under_drive(truth: GeneratorTruth, field_b: float, orientation: str,
                          power_dbm: float, attenuation_db: float,
                          max_iter: int = 200) -> ResonanceParams:
    """Resonance at a field and drive power.

    With an active loss model Q_i depends on the photon number, which in turn
    depends on Q_i; the pair is iterated to a fixed point. The field template
    rescales the zero-field loss-model value.
    """
    res = truth.resonance_at(field_b, orientation)
    if not _loss_active(truth):
        return res
    base = truth.resonance
    ratio = truth.qi_template(field_b, base.q_i) / truth.qi_template(0.0, base.q_i)
    q = res.q_i
    for _ in range(max_iter):
        trial = ResonanceParams.from_quality(res.f0, q, res.q_c)
        n = photon_number(power_dbm, attenuation_db, trial)
        q_new = ratio / inverse_qi(n, truth.loss, trial.omega0)
        if abs(q_new - q) <= 1e-13 * q:
            q = q_new
            break
        q = q_new
    return ResonanceParams.from_quality(res.f0, q, res.q_c)


class SimulatedSource:
    """Generates every requested scan from generator truths.

    Noise for scan ``k`` of resonator ``j`` comes from the sub-stream
    ``(j, k)`` of the seed, so results do not depend on scan timing. With
    ``record_dir`` each trace is written for later replay.
    """

    def __init__(self, truths: dict, orientation: str, noise: NoiseSpec = NoiseSpec(),
                 record_dir=None):
        self.truths = dict(truths)
        self.index = {name: i for i, name in enumerate(self.truths)}
        self.orientation = orientation
        self.noise = noise
        self.record_dir = record_dir
        if record_dir is not None:
            os.makedirs(record_dir, exist_ok=True)

    def scan(self, request: ScanRequest):
        truth = self.truths[request.resonator]
        res = resonance_under_drive(truth, request.field_b, self.orientation,
                                    request.power_dbm, request.attenuation_db)
        trace = generate_trace(truth.replace(resonance=res), request.freqs, self.noise,
                               request.power_dbm, request.attenuation_db,
                               stream=(self.index[request.resonator], request.scan_id))
        if self.record_dir is not None:
            write_trace(trace, os.path.join(self.record_dir, SCAN_FILE.format(request.scan_id)),
                        {"resonator": request.resonator, "kind": request.kind})
        return trace


class ReplaySource:
    """Serves recorded traces back in request order."""

    def __init__(self, directory):
        if not os.path.isdir(directory):
            raise ConfigError(f"{directory}: no recorded traces")
        self.directory = directory

    def scan(self, request: ScanRequest):
        path = os.path.join(self.directory, SCAN_FILE.format(request.scan_id))
        if not os.path.exists(path):
            raise ConfigError(f"replay has no trace for scan {request.scan_id}")
        trace = ingest_trace(path)
        if (trace.meta.get("resonator") != request.resonator or len(trace) != request.points
                or trace.freqs[0] != request.f_start):
            raise ConfigError(f"recorded scan {request.scan_id} does not match the request")
        return trace
