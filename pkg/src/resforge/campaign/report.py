"""Summary table per resonator: geometry, resonance, Kerr and critical fields."""
from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
import io
import json
import math

import jsonschema

from ..errors import DomainError, MissingInput, PositiveShiftDominates
from ..fitting import fit_field_sweep_bc
from ..models import capacitance_from_frequency, characteristic_impedance
from ..serialize import dumps17, format_float

COLUMNS = ("width_nm", "f0_ghz", "q_i", "q_c", "z_kohm", "k_hz_per_photon", "b_c_par_t",
           "b_c_perp_mt")
HEADINGS = {"width_nm": "w (nm)", "f0_ghz": "f0 (GHz)", "q_i": "Q_i", "q_c": "Q_c",
            "z_kohm": "Z (kOhm)", "k_hz_per_photon": "K/2pi (Hz/photon)",
            "b_c_par_t": "B_C par (T)", "b_c_perp_mt": "B_C perp (mT)"}


@dataclass(frozen=True)
class Cell:
    value: float | None
    error: float | None
    flag: str = ""

    @classmethod
    def flagged(cls, reason: str) -> "Cell":
        return cls(None, None, reason)

    def to_dict(self) -> dict:
        out = {"value": self.value, "error": self.error}
        if self.flag:
            out["flag"] = self.flag
        return out


@dataclass(frozen=True)
class ResonatorReport:
    name: str
    cells: dict = field(default_factory=dict)

    def __getitem__(self, column) -> Cell:
        return self.cells[column]

    def to_dict(self) -> dict:
        out = {"name": self.name}
        out.update({c: self.cells[c].to_dict() for c in COLUMNS})
        return out


def report_schema() -> dict:
    text = resources.files("resforge.campaign").joinpath("report_schema.json").read_text()
    return json.loads(text)


def _q_at_single_photon(results, name, zero_fit):
    """Q_i nearest one photon from a zero-field power scan, else the tracking fit."""
    best = None
    for res in results:
        for scan in res.power_scans.get(name, []):
            if scan["field_b"] != res.config.field.values()[0] or not scan["points"]:
                continue
            for _, n, q, q_err in scan["points"]:
                d = abs(math.log10(n))
                if best is None or d < best[0]:
                    best = (d, q, q_err)
    if best is not None:
        return Cell(best[1], best[2])
    return Cell(zero_fit.params["q_i"], zero_fit.std_errors.get("q_i"))


def _critical_field_cell(results, name, orientation, scale):
    runs = [r for r in results if r.orientation == orientation and name in r.tracked]
    if not runs:
        return Cell.flagged(f"no {orientation.replace('_', '-')} sweep")
    run = runs[0]
    if name in run.lost:
        return Cell.flagged(f"lost at {run.lost[name]:g} T")
    series = run.series.get(name)
    if series is None or len(series) < 2:
        return Cell.flagged("too few tracked points")
    try:
        fit = fit_field_sweep_bc(series)
    except (PositiveShiftDominates, DomainError) as exc:
        return Cell.flagged(str(exc))
    return Cell(fit.params["b_c"] * scale, fit.std_errors.get("b_c", math.nan) * scale)


def _impedance_cell(config, spec, fit):
    if spec.length is None:
        return Cell.flagged("resonator length unknown")
    try:
        geom = config.geometry_of(spec)
    except DomainError as exc:
        return Cell.flagged(str(exc))
    f0 = fit.params["f0"]
    geom = geom.replace(capacitance_per_length=capacitance_from_frequency(f0, geom))
    z = characteristic_impedance(geom)
    # Z = 4 l f0 L~ scales linearly with f0
    return Cell(z / 1e3, z / 1e3 * fit.std_errors.get("f0", 0.0) / f0)


def _kerr_cell(results, name):
    for res in results:
        entry = res.kerr.get(name)
        if entry is None:
            continue
        if entry.get("fit") is None:
            return Cell.flagged(entry.get("error") or "Kerr fit failed")
        fit = entry["fit"]
        return Cell(fit["params"]["kerr_hz"], fit["std_errors"].get("kerr_hz"))
    return Cell.flagged("no Kerr power map")


def build_report(results) -> list:
    """One :class:`ResonatorReport` per resonator across the given campaigns.

    Raises
    ------
    MissingInput
        When a resonator lacks an accepted zero-field fit (f0, Q_i, Q_c).
    """
    if not isinstance(results, (list, tuple)):
        results = [results]
    order = []
    specs = {}
    for res in results:
        for spec in res.config.resonators:
            if spec.name not in specs:
                order.append(spec.name)
                specs[spec.name] = (res.config, spec)
    missing = {}
    rows = []
    for name in order:
        config, spec = specs[name]
        zero = next((r.zero_field[name] for r in results if name in r.zero_field), None)
        if zero is None:
            missing[name] = ["f0", "q_i", "q_c"]
            continue
        cells = {
            "width_nm": Cell(round(spec.width * 1e9, 9), 0.0),
            "f0_ghz": Cell(zero.params["f0"] / 1e9, zero.std_errors.get("f0", math.nan) / 1e9),
            "q_i": _q_at_single_photon(results, name, zero),
            "q_c": Cell(zero.params["q_c"], zero.std_errors.get("q_c")),
            "z_kohm": _impedance_cell(config, spec, zero),
            "k_hz_per_photon": _kerr_cell(results, name),
            "b_c_par_t": _critical_field_cell(results, name, "in_plane", 1.0),
            "b_c_perp_mt": _critical_field_cell(results, name, "out_of_plane", 1e3),
        }
        for key, cell in cells.items():
            if cell.error is not None and not math.isfinite(cell.error):
                cells[key] = Cell(cell.value, None, cell.flag or "no uncertainty")
        rows.append(ResonatorReport(name, cells))
    if missing:
        raise MissingInput(f"missing zero-field fits for {sorted(missing)}", missing)
    return rows


def report_document(rows) -> dict:
    doc = {"schema": 1, "columns": list(COLUMNS), "rows": [r.to_dict() for r in rows]}
    jsonschema.validate(doc, report_schema())
    return doc


def format_report(rows, fmt: str = "json") -> str:
    doc = report_document(rows)
    if fmt == "json":
        return dumps17(doc)
    if fmt == "csv":
        out = io.StringIO()
        head = ["name"] + [x for c in COLUMNS for x in (c, c + "_err")]
        out.write(",".join(head) + "\n")
        for row in doc["rows"]:
            vals = [row["name"]]
            for c in COLUMNS:
                for key in ("value", "error"):
                    v = row[c][key]
                    vals.append("" if v is None else format_float(v))
            out.write(",".join(vals) + "\n")
        return out.getvalue()
    if fmt == "table":
        return format_table(doc)
    raise ValueError(f"unknown format {fmt!r}")


def _cell_text(cell: dict) -> str:
    if cell["value"] is None:
        return "-"
    v, e = cell["value"], cell["error"]
    if e is None or e == 0:
        return f"{v:.6g}"
    return f"{v:.6g} +- {e:.2g}"


def format_table(doc: dict) -> str:
    head = ["name"] + [HEADINGS[c] for c in COLUMNS]
    body = [[row["name"]] + [_cell_text(row[c]) for c in COLUMNS] for row in doc["rows"]]
    widths = [max(len(r[i]) for r in [head] + body) for i in range(len(head))]
    lines = ["  ".join(s.rjust(w) for s, w in zip(r, widths)) for r in [head] + body]
    notes = [f"{row['name']}: {c}: {row[c]['flag']}" for row in doc["rows"] for c in COLUMNS
             if row[c].get("flag")]
    return "\n".join(lines + ([""] + notes if notes else [])) + "\n"
