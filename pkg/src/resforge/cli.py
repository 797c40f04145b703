"""Command-line entry point: ``resforge <subcommand> ...``.

Exit codes: 0 success, 1 input or processing error, 2 rejected by QC or
physics (e.g. every Kerr trace bistable). Results go to stdout or
``--output``; diagnostics go to stderr.

Common options resolve as: command-line flag, then ``RESFORGE_<NAME>``
environment variable, then the defaults file (``--defaults`` or
``RESFORGE_DEFAULTS``), then built-in defaults.
"""
from __future__ import annotations

import argparse
import glob
import logging
import os
import sys

import numpy as np
import yaml

from . import __version__
from .campaign import build_report, format_report, load_config, report_document, run_campaign_mode
from .campaign.config import parse_config, truth_from_block, _Loader
from .campaign.io import ingest_trace, write_trace
from .campaign.runner import fit_kerr_iteratively, write_results
from .constants import TWO_PI
from .errors import (BifurcationInFitWindow, ConfigError, DomainError, MissingInput,
                     NoDipFound, NotConverged, ResforgeError)
from .fitting import (environment_from_fit, fit_linear_resonance, fit_misalignment, qc_filter,
                      resonance_from_fit)
from .models import (capacitance_from_frequency, characteristic_impedance, kerr_bcs, kerr_jj,
                     length_from_impedance, lk_from_sheet_resistance, quarterwave_frequency)
from .params import FilmProperties, ResonatorGeometry
from .serialize import dumps17, format_float
from .synth import (NoiseSpec, centered_grid, generate_field_sweep, generate_power_map,
                    generate_trace)

log = logging.getLogger("resforge")

EXIT_OK, EXIT_ERROR, EXIT_REJECTED = 0, 1, 2
COMMON = {"format": "json", "seed": None, "output": None, "verbose": False}
FORMATS = ("json", "csv", "table")


class CliError(Exception):
    """Input problem reported with exit code 1."""


# ---------------------------------------------------------------- settings

def _env_value(name, raw):
    if name == "seed":
        return int(raw)
    if name == "verbose":
        return raw.strip().lower() in ("1", "true", "yes", "on")
    return raw


def resolve_common(args, environ=None) -> dict:
    """Merge flags, RESFORGE_* variables and the defaults file."""
    environ = os.environ if environ is None else environ
    settings = dict(COMMON)
    defaults_path = args.defaults or environ.get("RESFORGE_DEFAULTS")
    if defaults_path:
        try:
            with open(defaults_path, encoding="utf-8") as fh:
                data = yaml.load(fh, Loader=_Loader) or {}
        except OSError as exc:
            raise CliError(f"cannot read defaults file: {exc}") from None
        unknown = set(data) - set(COMMON)
        if unknown:
            raise CliError(f"unknown keys in defaults file: {sorted(unknown)}")
        settings.update(data)
    for name in COMMON:
        raw = environ.get(f"RESFORGE_{name.upper()}")
        if raw is not None:
            try:
                settings[name] = _env_value(name, raw)
            except ValueError:
                raise CliError(f"RESFORGE_{name.upper()} is not valid: {raw!r}") from None
    for name in COMMON:
        value = getattr(args, name, None)
        if value is not None and value is not False:
            settings[name] = value
    if settings["format"] not in FORMATS:
        raise CliError(f"format must be one of {FORMATS}")
    return settings


def _emit(text: str, settings: dict) -> None:
    path = settings["output"]
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_document(path):
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.load(fh, Loader=_Loader)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise CliError(f"{path}: {exc}") from None
    if not isinstance(data, dict):
        raise CliError(f"{path}: expected a mapping")
    return data


def _params_table(rows, fmt):
    """rows: list of (name, value, error-or-None)."""
    if fmt == "csv":
        out = ["name,value,std_error"]
        out += [f"{n},{format_float(v)},{'' if e is None else format_float(e)}" for n, v, e in rows]
        return "\n".join(out) + "\n"
    width = max(len(n) for n, _, _ in rows)
    lines = []
    for n, v, e in rows:
        err = "" if e is None else f" +- {e:.3g}"
        lines.append(f"{n.ljust(width)}  {v:.10g}{err}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- fit-trace

def cmd_fit_trace(args, settings) -> int:
    trace = ingest_trace(args.trace)
    try:
        result = fit_linear_resonance(trace)
    except NotConverged as exc:
        result = exc.result
    verdict = qc_filter(result)
    doc = result.to_dict()
    doc["qc"] = {"accepted": verdict.accepted, "reason": verdict.reason}
    if settings["format"] == "json":
        _emit(dumps17(doc), settings)
    else:
        rows = [(k, v, result.std_errors.get(k)) for k, v in result.params.items()]
        text = _params_table(rows, settings["format"])
        if settings["format"] == "table":
            text += f"qc: {'accepted' if verdict.accepted else 'rejected'} ({verdict.reason})\n"
        _emit(text, settings)
    if not verdict.accepted:
        log.error("QC rejected the fit: %s", verdict.reason)
        return EXIT_REJECTED
    return EXIT_OK


# ---------------------------------------------------------------- kerr

def _read_power_map(directory):
    paths = sorted(glob.glob(os.path.join(directory, "*.csv")))
    if not paths:
        raise CliError(f"{directory}: no trace files")
    traces = [ingest_trace(p) for p in paths]
    if any(t.power_dbm is None for t in traces):
        raise CliError("every trace needs a '# power_dbm=' header")
    order = sorted(range(len(traces)), key=lambda i: traces[i].power_dbm)
    return [traces[i] for i in order], [paths[i] for i in order]


def cmd_kerr(args, settings) -> int:
    traces, paths = _read_power_map(args.directory)
    if len(traces) < 3:
        raise CliError("a Kerr fit needs at least 3 powers")
    base = None
    for tr in traces:
        try:
            fit = fit_linear_resonance(tr)
        except (NoDipFound, NotConverged):
            continue
        if qc_filter(fit).accepted:
            base = fit
            break
    if base is None:
        log.error("no trace usable as the linear reference (all bistable or rejected by QC)")
        return EXIT_REJECTED
    log.info("fixed from %.4g dBm: f0=%.10g Hz q_i=%.6g q_c=%.6g", traces[0].power_dbm,
             base.params["f0"], base.params["q_i"], base.params["q_c"])
    try:
        result, flags = fit_kerr_iteratively(traces, resonance_from_fit(base),
                                             environment_from_fit(base), args.config_c)
    except BifurcationInFitWindow:
        log.error("every trace lies above the bifurcation threshold")
        return EXIT_REJECTED
    doc = {"kerr_hz": result.params["kerr_hz"], "kerr_hz_err": result.std_errors["kerr_hz"],
           "phi": result.params["phi"], "fixed": base.params,
           "traces": [{"file": os.path.basename(p), "power_dbm": t.power_dbm,
                       "above_bifurcation": f} for p, t, f in zip(paths, traces, flags)]}
    fmt = settings["format"]
    if fmt == "json":
        _emit(dumps17(doc), settings)
    elif fmt == "csv":
        lines = ["file,power_dbm,above_bifurcation"]
        lines += [f"{d['file']},{format_float(d['power_dbm'])},{str(d['above_bifurcation']).lower()}"
                  for d in doc["traces"]]
        _emit(f"# kerr_hz={format_float(doc['kerr_hz'])}\n"
              f"# kerr_hz_err={format_float(doc['kerr_hz_err'])}\n" + "\n".join(lines) + "\n",
              settings)
    else:
        text = f"K/2pi = {doc['kerr_hz']:.6g} +- {doc['kerr_hz_err']:.2g} Hz/photon\n"
        text += "".join(f"  {d['power_dbm']:8.3f} dBm  {'bistable' if d['above_bifurcation'] else 'ok'}"
                        f"  {d['file']}\n" for d in doc["traces"])
        _emit(text, settings)
    return EXIT_OK


# ---------------------------------------------------------------- field

def _misalignment(result):
    if result.orientation != "in_plane":
        return None
    film = None
    series = {}
    for spec in result.config.resonators:
        if spec.name in result.series and spec.name not in result.lost:
            series[spec.width] = result.series[spec.name]
            film = result.config.film_of(spec)
    if len(series) < 3 or film is None or film.thickness_t is None:
        return None
    try:
        fit = fit_misalignment(series, film)
    except (ResforgeError, DomainError) as exc:
        return {"error": str(exc)}
    return {"theta_b_deg": fit.params["theta_b_deg"],
            "theta_b_deg_err": fit.std_errors["theta_b_deg"],
            "d": fit.params["d"], "d_err": fit.std_errors["d"]}


def cmd_field(args, settings) -> int:
    results = []
    for path in args.config:
        config = load_config(path)
        if settings["seed"] is not None:
            raw = dict(config.raw)
            raw["simulation"] = dict(raw.get("simulation", {}), seed=int(settings["seed"]))
            config = parse_config(raw)
        directory = args.campaign_dir
        if directory and len(args.config) > 1:
            directory = os.path.join(directory, config.field.orientation)
        if args.mode == "replay" and not directory:
            raise CliError("--mode replay needs --campaign-dir")
        result = run_campaign_mode(config, args.mode, directory)
        for name, b in result.lost.items():
            log.warning("%s lost at %g T", name, b)
        if directory and args.mode == "simulate":
            os.makedirs(directory, exist_ok=True)
            write_results(result, os.path.join(directory, "results.json"))
        results.append(result)
    rows = build_report(results)
    extra = {}
    if args.misalignment:
        extra = {r.orientation: _misalignment(r) for r in results if r.orientation == "in_plane"}
    fmt = settings["format"]
    if fmt == "json":
        doc = report_document(rows)
        if args.misalignment:
            doc = {"report": doc, "misalignment": extra.get("in_plane")}
        _emit(dumps17(doc), settings)
    else:
        text = format_report(rows, fmt)
        mis = extra.get("in_plane")
        if mis and "theta_b_deg" in mis:
            text += (f"# misalignment theta_B = {format_float(mis['theta_b_deg'])} "
                     f"+- {format_float(mis['theta_b_deg_err'])} deg\n")
        _emit(text, settings)
    return EXIT_OK


# ---------------------------------------------------------------- synth

def _truth_from_document(doc):
    unknown = set(doc) - {"truth", "film", "width", "length", "grid", "noise", "powers",
                          "attenuation_db", "fields", "orientation"}
    if unknown:
        raise CliError(f"unknown keys in truth document: {sorted(unknown)}")
    if "truth" not in doc:
        raise CliError("truth document needs a 'truth' block")
    film = FilmProperties(**doc.get("film", {}))
    geom = None
    if "width" in doc:
        lt = film.lk_sheet / doc["width"] if film.lk_sheet else None
        geom = ResonatorGeometry(doc["width"], doc.get("length"), lt)
    block = doc["truth"]
    if "f0_hz" not in block:
        raise CliError("truth needs f0_hz")
    try:
        return truth_from_block(block, block["f0_hz"], film, geom)
    except ConfigError as exc:
        raise CliError(str(exc)) from None


def _grid(doc, res):
    g = doc.get("grid", {})
    if "start_hz" in g:
        return np.linspace(g["start_hz"], g["stop_hz"], int(g.get("points", 401)))
    return centered_grid(res, g.get("linewidths", 10.0), int(g.get("points", 401)))


def cmd_synth(args, settings) -> int:
    doc = _load_document(args.truth)
    truth = _truth_from_document(doc)
    noise_doc = doc.get("noise", {})
    seed = settings["seed"] if settings["seed"] is not None else noise_doc.get("seed", 0)
    noise = NoiseSpec(float(noise_doc.get("sigma", 0.0)), int(seed))
    out_dir = settings["output"]
    if not out_dir:
        raise CliError("synth needs --output DIRECTORY")
    os.makedirs(out_dir, exist_ok=True)
    files = []
    if args.kind == "trace":
        trace = generate_trace(truth, _grid(doc, truth.resonance), noise)
        path = os.path.join(out_dir, "trace.csv")
        write_trace(trace, path)
        files.append(path)
    elif args.kind == "powermap":
        powers = doc.get("powers")
        if not powers:
            raise CliError("powermap needs a 'powers' list")
        att = float(doc.get("attenuation_db", 0.0))
        traces = generate_power_map(truth, powers, _grid(doc, truth.resonance), noise, att)
        for i, tr in enumerate(traces):
            path = os.path.join(out_dir, f"power_{i:03d}.csv")
            write_trace(tr, path, {"above_bifurcation": str(tr.meta["above_bifurcation"]).lower()})
            files.append(path)
    else:
        fdoc = doc.get("fields")
        if not fdoc:
            raise CliError("fieldsweep needs a 'fields' block")
        if isinstance(fdoc, list):
            b = np.asarray(fdoc, dtype=float)
        else:
            b = np.arange(int(round(fdoc["max_field"] / fdoc["step"])) + 1) * fdoc["step"]
        series = generate_field_sweep(truth, b, doc.get("orientation", "out_of_plane"), noise)
        path = os.path.join(out_dir, "fieldsweep.csv")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"# orientation={series.orientation}\nb_t,rel_shift,q_i,q_c\n")
            for row in zip(series.b, series.rel_shift, series.q_i, series.q_c):
                fh.write(",".join(format_float(x) for x in row) + "\n")
        files.append(path)
    sidecar = os.path.join(out_dir, "truth.json")
    with open(sidecar, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps17({"truth": truth.to_dict(), "noise": {"sigma": noise.sigma,
                                                             "seed": noise.seed}}))
    files.append(sidecar)
    manifest = {"kind": args.kind, "files": [os.path.basename(f) for f in files]}
    sys.stdout.write(dumps17(manifest))
    return EXIT_OK


# ---------------------------------------------------------------- estimate

def estimate_chain(doc: dict) -> dict:
    """Closed-form estimates from a film + geometry document.

    Keys: ``film`` (FilmProperties fields), ``width``, optional ``length``,
    ``capacitance_per_length``, ``f0_hz``, ``impedance_ohm``,
    ``i_star`` (A) and ``temperature`` (K).
    """
    allowed = {"film", "width", "length", "capacitance_per_length", "f0_hz", "impedance_ohm",
               "i_star", "temperature"}
    unknown = set(doc) - allowed
    if unknown:
        raise CliError(f"unknown keys: {sorted(unknown)}")
    film = FilmProperties(**doc.get("film", {}))
    missing = []
    out = {"inputs": doc}
    est = {}
    if film.sheet_resistance and film.critical_temp_Tc:
        est["lk_from_sheet_resistance_ph"] = lk_from_sheet_resistance(
            film, doc.get("temperature", 0.0)) * 1e12
    if film.lk_sheet is None:
        if "lk_from_sheet_resistance_ph" not in est:
            raise MissingInput("missing inputs: film.lk_sheet (or sheet_resistance with "
                               "critical_temp_Tc)", {"film": ["lk_sheet"]})
        film = film.replace(lk_sheet=est["lk_from_sheet_resistance_ph"] * 1e-12)
    if "width" not in doc:
        raise MissingInput("missing inputs: width", {"geometry": ["width"]})
    lt = film.lk_sheet / doc["width"]
    length = doc.get("length")
    f0 = doc.get("f0_hz")
    if length is None and f0 is not None and "impedance_ohm" in doc:
        length = length_from_impedance(f0, doc["impedance_ohm"], lt)
        est["length_um"] = length * 1e6
    ct = doc.get("capacitance_per_length")
    if ct is None:
        if f0 is None or length is None:
            missing.append("capacitance_per_length (or f0_hz with length or impedance_ohm)")
        else:
            ct = capacitance_from_frequency(f0, ResonatorGeometry(doc["width"], length, lt))
            est["capacitance_per_length_pf_per_m"] = ct * 1e12
    if missing:
        raise MissingInput("missing inputs: " + "; ".join(missing), {"geometry": missing})
    if length is None:
        raise MissingInput("length is required", {"geometry": ["length"]})
    geom = ResonatorGeometry(doc["width"], length, lt, ct)
    f_r = quarterwave_frequency(geom)
    est["f0_quarterwave_ghz"] = f_r / 1e9
    est["z_kohm"] = characteristic_impedance(geom) / 1e3
    est["total_inductance_nh"] = geom.total_inductance * 1e9
    i_star = doc.get("i_star", film.depairing_current_Istar)
    if i_star:
        est["k_bcs_hz_per_photon"] = kerr_bcs(TWO_PI * f_r, geom.total_inductance, i_star) / TWO_PI
    if film.switching_current_Isw and film.grain_size_a and film.thickness_t:
        est["k_jj_hz_per_photon"] = kerr_jj(TWO_PI * f_r, film, geom) / TWO_PI
    out["estimates"] = est
    return out


def cmd_estimate(args, settings) -> int:
    doc = _load_document(args.document)
    result = estimate_chain(doc)
    fmt = settings["format"]
    if fmt == "json":
        _emit(dumps17(result), settings)
    else:
        rows = [(k, v, None) for k, v in result["estimates"].items()]
        _emit(_params_table(rows, fmt), settings)
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=FORMATS, default=None)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--output", "-o", default=None)
    common.add_argument("--verbose", "-v", action="store_true", default=False)
    common.add_argument("--defaults", default=None, help="YAML file of default options")

    parser = argparse.ArgumentParser(prog="resforge", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit-trace", parents=[common], help="fit one complex trace")
    p.add_argument("trace")
    p.set_defaults(func=cmd_fit_trace)

    p = sub.add_parser("kerr", parents=[common], help="fit K to a directory of power traces")
    p.add_argument("directory")
    p.add_argument("--config-c", type=float, default=4.0, help="hanger configuration constant")
    p.set_defaults(func=cmd_kerr)

    p = sub.add_parser("field", parents=[common], help="run or replay field campaigns")
    p.add_argument("config", nargs="+", help="campaign configuration file(s)")
    p.add_argument("--mode", choices=("simulate", "replay"), default="simulate")
    p.add_argument("--campaign-dir", default=None, help="where traces are recorded or replayed")
    p.add_argument("--misalignment", action="store_true", help="add the in-plane misalignment fit")
    p.set_defaults(func=cmd_field)

    p = sub.add_parser("synth", parents=[common], help="generate synthetic data")
    p.add_argument("truth", help="truth document")
    p.add_argument("--kind", choices=("trace", "powermap", "fieldsweep"), default="trace")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("estimate", parents=[common], help="closed-form film/geometry estimates")
    p.add_argument("document")
    p.set_defaults(func=cmd_estimate)
    return parser


def main(argv=None, environ=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    try:
        settings = resolve_common(args, environ)
    except CliError as exc:
        print(f"resforge: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    logging.basicConfig(level=logging.INFO if settings["verbose"] else logging.WARNING,
                        format="resforge: %(levelname)s: %(message)s", stream=sys.stderr,
                        force=True)
    try:
        return args.func(args, settings)
    except (CliError, ResforgeError, DomainError, OSError) as exc:
        print(f"resforge: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
