"""Campaign configuration documents (YAML or JSON, ``schema: 1``)."""
from __future__ import annotations

from dataclasses import dataclass, field
import math
import os
import re

import jsonschema
import yaml

from ..constants import TWO_PI
from ..data import ORIENTATIONS
from ..errors import ConfigError, DomainError
from ..params import (
    EnvironmentParams,
    FilmProperties,
    KerrModelParams,
    LossModelParams,
    QiTemplate,
    ResonanceParams,
    ResonatorGeometry,
)
from ..synth import GeneratorTruth

SCHEMA_VERSION = 1


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads exponent floats without a dot (``80e6``)."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"^[-+]?(?:[0-9][0-9_]*)(?:\.[0-9_]*)?[eE][-+]?[0-9]+$"),
    list("-+0123456789"),
)

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_FILM_KEYS = ("lk_sheet", "thickness_t", "critical_temp_Tc", "sheet_resistance", "gap_delta0",
              "diffusion_D", "depairing_current_Istar", "switching_current_Isw", "grain_size_a",
              "depairing_exponent_n")


def _obj(props, required=()):
    return {"type": "object", "properties": props, "required": list(required),
            "additionalProperties": False}


TRUTH_SCHEMA = _obj({
    "f0_hz": _POS, "q_i": _POS, "q_c": _POS, "kerr_hz": _NUM,
    "env": _obj({"amplitude_a": _POS, "phase_alpha": _NUM, "delay_tau": _NUM,
                 "impedance_mismatch_phi": _NUM}),
    "loss": _obj({k: _NUM for k in ("tls_loss_F_delta0", "critical_photon_nC", "saturation_beta",
                                    "residual_delta0", "qp_loss", "temperature_T")}),
    "b_c_par": _POS, "b_c_perp": _POS, "theta_b_deg": _NUM,
    "qi_template": _obj({"fields_t": {"type": "array", "items": _NUM},
                         "q_values": {"type": "array", "items": _POS}}),
}, ["q_i", "q_c"])

CONFIG_SCHEMA = _obj({
    "schema": {"const": SCHEMA_VERSION},
    "name": {"type": "string"},
    "films": {"type": "object", "additionalProperties": _obj({k: _POS for k in _FILM_KEYS})},
    "resonators": {"type": "array", "minItems": 1, "items": _obj({
        "name": {"type": "string"}, "film": {"type": "string"}, "width": _POS,
        "design_f0": _POS, "length": _POS, "truth": TRUTH_SCHEMA,
    }, ["name", "film", "width", "design_f0"])},
    "field": _obj({
        "orientation": {"enum": list(ORIENTATIONS)}, "start": {"type": "number", "minimum": 0},
        "max_field": {"type": "number", "minimum": 0}, "step": _NUM,
        "ramp_rate_mt_per_min": _NUM, "settle_time_s": {"type": "number", "minimum": 0},
        "power_scan_fields": {"type": "array", "items": _NUM},
    }, ["orientation", "max_field", "step"]),
    "powers": {"type": "array", "items": _NUM},
    "kerr_powers": {"type": "array", "items": _NUM},
    "attenuation_db": _NUM,
    "scan": _obj({"fast_width_hz": _POS, "fast_points": {"type": "integer", "minimum": 16},
                  "detail_linewidths": _POS, "detail_points": {"type": "integer", "minimum": 16},
                  "power_dbm": _NUM}),
    "qc": _obj({"max_std_error": _POS}),
    "simulation": _obj({"noise_sigma": {"type": "number", "minimum": 0},
                        "seed": {"type": "integer", "minimum": 0}}),
}, ["schema", "films", "resonators", "field"])


@dataclass(frozen=True)
class FieldAxis:
    orientation: str
    max_field: float
    step: float
    start: float = 0.0
    ramp_rate_mt_per_min: float = 100.0
    settle_time_s: float = 120.0
    power_scan_fields: tuple = ()

    def __post_init__(self):
        if self.step <= 0:
            raise ConfigError("field step must be > 0")
        if self.ramp_rate_mt_per_min <= 0:
            raise ConfigError("ramp rate must be > 0")
        if self.max_field < self.start:
            raise ConfigError("max_field must be >= start")

    def values(self) -> list:
        """Field set points, start to max_field inclusive."""
        count = int(math.floor((self.max_field - self.start) / self.step + 1e-9))
        points = [self.start + i * self.step for i in range(count + 1)]
        return [round(b, 12) for b in points]


@dataclass(frozen=True)
class ScanWindows:
    fast_width_hz: float = 80e6
    fast_points: int = 801
    detail_linewidths: float = 20.0
    detail_points: int = 401
    power_dbm: float = -60.0


@dataclass(frozen=True)
class ResonatorSpec:
    name: str
    film: str
    width: float
    design_f0: float
    length: float | None = None
    truth: dict | None = None


@dataclass(frozen=True)
class CampaignConfig:
    """Validated campaign description. Build with :func:`load_config`."""

    films: dict
    resonators: tuple
    field: FieldAxis
    name: str = "campaign"
    powers: tuple = ()
    kerr_powers: tuple = ()
    attenuation_db: float = 70.0
    scan: ScanWindows = ScanWindows()
    qc_max_std_error: float = 1e3
    noise_sigma: float = 0.0
    seed: int = 0
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    def film_of(self, spec: ResonatorSpec) -> FilmProperties:
        return self.films[spec.film]

    def geometry_of(self, spec: ResonatorSpec) -> ResonatorGeometry:
        return ResonatorGeometry.from_film(self.film_of(spec), spec.width, spec.length)

    def truth_of(self, spec: ResonatorSpec) -> GeneratorTruth:
        if spec.truth is None:
            raise ConfigError(f"resonator {spec.name!r} has no truth block for simulation")
        return truth_from_block(spec.truth, spec.design_f0, self.film_of(spec),
                                self.geometry_of(spec))

    def to_dict(self) -> dict:
        return self.raw


def truth_from_block(block: dict, design_f0: float, film: FilmProperties,
                     geometry: ResonatorGeometry | None) -> GeneratorTruth:
    """Build generator truth from the compact config form (Hz, degrees)."""
    try:
        res = ResonanceParams.from_quality(block.get("f0_hz", design_f0), block["q_i"], block["q_c"])
        kerr = KerrModelParams(TWO_PI * block.get("kerr_hz", 0.0))
        env = EnvironmentParams(**block.get("env", {}))
        loss = LossModelParams(**block.get("loss", {}))
        template = QiTemplate(**block.get("qi_template", {}))
        return GeneratorTruth(res, env, kerr, loss, film, geometry, block.get("b_c_par"),
                              block.get("b_c_perp"), math.radians(block.get("theta_b_deg", 0.0)),
                              template)
    except DomainError as exc:
        raise ConfigError(f"invalid truth: {exc}") from None


def parse_config(data: dict) -> CampaignConfig:
    """Validate a decoded document and build the configuration."""
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping")
    try:
        jsonschema.validate(data, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None
    try:
        films = {name: FilmProperties(**props) for name, props in data["films"].items()}
    except DomainError as exc:
        raise ConfigError(f"films: {exc}") from None
    resonators = []
    for item in data["resonators"]:
        if item["film"] not in films:
            raise ConfigError(f"resonator {item['name']!r} refers to unknown film {item['film']!r}")
        resonators.append(ResonatorSpec(item["name"], item["film"], item["width"],
                                        item["design_f0"], item.get("length"), item.get("truth")))
    names = [r.name for r in resonators]
    if len(set(names)) != len(names):
        raise ConfigError("resonator names must be unique")
    fdata = dict(data["field"])
    fdata["power_scan_fields"] = tuple(fdata.get("power_scan_fields", ()))
    axis = FieldAxis(**fdata)
    scan = ScanWindows(**data.get("scan", {}))
    sim = data.get("simulation", {})
    config = CampaignConfig(
        films, tuple(resonators), axis, data.get("name", "campaign"),
        tuple(data.get("powers", ())), tuple(data.get("kerr_powers", ())),
        float(data.get("attenuation_db", 70.0)), scan,
        float(data.get("qc", {}).get("max_std_error", 1e3)),
        float(sim.get("noise_sigma", 0.0)), int(sim.get("seed", 0)), data)
    for spec in resonators:
        if spec.truth is not None:
            truth = config.truth_of(spec)
            span = scan.detail_linewidths * truth.resonance.linewidth / TWO_PI
            if span > scan.fast_width_hz:
                raise ConfigError(f"detail scan of {spec.name!r} ({span:.4g} Hz) is wider "
                                  f"than the fast scan")
    return config


def load_config(path) -> CampaignConfig:
    if not os.path.exists(path):
        raise ConfigError(f"{path}: no such file")
    with open(path, encoding="utf-8") as fh:
        try:
            data = yaml.load(fh, Loader=_Loader)
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    return parse_config(data)
