"""Trace files, configuration, tracking, the campaign runner and the report."""
import copy
import json

import jsonschema
import numpy as np
import pytest

from resforge.campaign.config import FieldAxis, load_config, parse_config
from resforge.campaign.io import format_trace, ingest_trace, write_trace
from resforge.campaign.report import (COLUMNS, build_report, format_report, report_document,
                                      report_schema)
from resforge.campaign.runner import (ramp_milliseconds, run_campaign_mode, run_field_campaign,
                                      simulated_source, write_results)
from resforge.campaign.sources import ScanRequest, SimulatedSource
from resforge.campaign.tracking import AuditLog, track_resonance
from resforge.errors import ConfigError, LostResonance, MissingInput, ParseError, UnitError
from resforge.presets import nbn_campaign_config
from resforge.synth import NoiseSpec, generate_trace

VALID = "# power_dbm=-60\n# attenuation_db=70\nfreq_hz,re,im\n" + "".join(
    f"{4e9 + i * 1e3:.17g},{0.5 + 0.01 * i},{-0.1 * i}\n" for i in range(20))


# ---- trace files

def test_ingest_valid_text():
    tr = ingest_trace(VALID)
    assert len(tr) == 20
    assert tr.power_dbm == -60.0 and tr.attenuation_db == 70.0
    assert tr.samples[3] == complex(0.5 + 0.01 * 3, -0.1 * 3)


def test_non_monotonic_row_names_line():
    lines = VALID.splitlines()
    lines[8], lines[9] = lines[9], lines[8]
    with pytest.raises(ParseError) as info:
        ingest_trace("\n".join(lines))
    assert info.value.line == 10
    assert "line 10" in str(info.value)


def test_bad_number_names_line_and_column():
    lines = VALID.splitlines()
    cells = lines[5].split(",")
    lines[5] = ",".join([cells[0], "abc", cells[2]])
    with pytest.raises(ParseError) as info:
        ingest_trace("\n".join(lines))
    assert (info.value.line, info.value.column) == (6, len(cells[0]) + 2)


@pytest.mark.parametrize("text", [
    VALID.replace("freq_hz,re,im", "freq_ghz,re,im"),
    VALID.replace("# attenuation_db=70", "# freq_unit=GHz"),
    VALID.replace("# attenuation_db=70", "# power_unit=mW"),
])
def test_unsupported_units(text):
    with pytest.raises(UnitError):
        ingest_trace(text)


@pytest.mark.parametrize("text", [
    "",
    VALID.replace("freq_hz,re,im\n", ""),
    VALID.replace("freq_hz,re,im", "frequency;re;im"),
    VALID + "4.1e9,1,2,3\n",
    VALID + "4.1e9,nan,0\n",
    "freq_hz,re,im\n1,0,0\n",
])
def test_malformed_files(text):
    with pytest.raises(ParseError):
        ingest_trace(text)


def test_write_ingest_round_trip_bit_identical(tmp_path, truth0, grid0):
    tr = generate_trace(truth0, grid0, NoiseSpec(1e-3, 9), power_dbm=-61.25, attenuation_db=70)
    path = tmp_path / "t.csv"
    write_trace(tr, path, {"resonator": "res0"})
    back = ingest_trace(path)
    assert np.array_equal(back.freqs, tr.freqs)
    assert np.array_equal(back.samples, tr.samples)
    assert back.power_dbm == tr.power_dbm and back.meta["resonator"] == "res0"
    assert format_trace(back, {"resonator": "res0"}) == path.read_text()
    with open(path) as fh:
        assert np.array_equal(ingest_trace(fh).samples, tr.samples)


# ---- configuration

def _small_config(**changes):
    doc = nbn_campaign_config(max_field=2.0, step=0.5)
    doc["resonators"] = doc["resonators"][:2]
    for key, value in changes.items():
        doc[key] = value
    return doc


def test_zero_step_rejected():
    doc = _small_config()
    doc["field"]["step"] = 0
    with pytest.raises(ConfigError):
        parse_config(doc)
    with pytest.raises(ConfigError):
        FieldAxis("in_plane", 6.0, 0.1, ramp_rate_mt_per_min=0)


@pytest.mark.parametrize("mutate", [
    lambda d: d.update(colour="blue"),
    lambda d: d["field"].update(speed=1),
    lambda d: d["resonators"][0]["truth"].update(q_x=1),
    lambda d: d.update(schema=2),
    lambda d: d["resonators"][0].update(film="nope"),
    lambda d: d["resonators"].append(copy.deepcopy(d["resonators"][0])),
    lambda d: d["scan"].update(fast_width_hz=1e5),
])
def test_invalid_documents_rejected(mutate):
    doc = _small_config()
    mutate(doc)
    with pytest.raises(ConfigError):
        parse_config(doc)


def test_yaml_config_loads(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("""
schema: 1
films: {nbn: {lk_sheet: 89e-12, thickness_t: 13e-9, critical_temp_Tc: 4.0}}
resonators:
  - {name: r, film: nbn, width: 200e-9, design_f0: 4.0743e9, truth: {q_i: 13805, q_c: 28241}}
field: {orientation: in_plane, max_field: 1, step: 0.25}
""")
    cfg = load_config(path)
    assert cfg.field.values() == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert cfg.scan.fast_width_hz == 80e6
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")


# ---- tracking

class _StaticSource:
    """Serves a resonance that does not move with field."""

    def __init__(self, truth):
        self.sim = SimulatedSource({"r": truth}, "in_plane", NoiseSpec(1e-3, 1))

    def scan(self, request: ScanRequest):
        return self.sim.scan(request)


def _tracking_config():
    return parse_config(_small_config())


def test_zero_shift_centers_detail_scan(truth0):
    config = _tracking_config()
    truth = truth0.replace(b_c_par=1e6)
    log = AuditLog()
    f0 = truth0.resonance.f0
    lw = truth0.resonance.linewidth / (2 * np.pi)
    out = track_resonance(f0, _StaticSource(truth), config, resonator="r", field_b=0.5,
                          linewidth_hz=lw, log=log)
    assert out.accepted
    detail = [e for e in log.entries if e["event"] == "scan_request" and e["kind"] == "detail"]
    center = 0.5 * (detail[0]["f_start"] + detail[0]["f_stop"])
    assert abs(center - f0) < lw
    assert out.fit["f0"] == pytest.approx(f0, rel=1e-6)


def test_shift_beyond_window_is_lost(truth0):
    config = _tracking_config()
    source = _StaticSource(truth0.replace(b_c_par=1e6))
    with pytest.raises(LostResonance):
        track_resonance(truth0.resonance.f0 - 100e6, source, config, resonator="r",
                        field_b=1.0, linewidth_hz=3e5)


# ---- runner

def test_ramp_bookkeeping():
    assert ramp_milliseconds(0.1, 100.0) == 60000
    assert ramp_milliseconds(-0.25, 100.0) == 150000
    cfg = _tracking_config()
    result = run_field_campaign(cfg, simulated_source(cfg))
    ramps = [e for e in result.log if e["event"] == "ramp"]
    assert len(ramps) == len(cfg.field.values()) - 1
    t = [e["elapsed_ms"] for e in result.log]
    assert t == sorted(t)
    end = result.log[-1]
    assert end["event"] == "end"
    assert end["elapsed_ms"] == len(ramps) * (300000 + 120000)


def test_audit_log_records_every_request_once():
    cfg = _tracking_config()
    result = run_field_campaign(cfg, simulated_source(cfg))
    requests = [e for e in result.log if e["event"] == "scan_request"]
    ids = [e["scan_id"] for e in requests]
    assert ids == list(range(len(ids)))
    fits = [e["scan_id"] for e in result.log if e["event"] == "fit"]
    qcs = [e["scan_id"] for e in result.log if e["event"] == "qc"]
    detail = [e["scan_id"] for e in requests if e["kind"] == "detail"]
    assert fits == qcs == detail
    for name, pts in result.tracked.items():
        b = [p.field_b for p in pts]
        assert b == sorted(b)
        f = [p.f0_est for p in pts if p.accepted]
        assert np.all(np.abs(np.diff(f)) < cfg.scan.fast_width_hz)


def test_replay_reproduces_simulation(tmp_path):
    cfg = _tracking_config()
    sim = run_campaign_mode(cfg, "simulate", str(tmp_path))
    rep = run_campaign_mode(cfg, "replay", str(tmp_path))
    for name in sim.series:
        assert sim.series[name].to_dict() == rep.series[name].to_dict()
    assert format_report(build_report(sim)) == format_report(build_report(rep))
    write_results(sim, tmp_path / "a.json")
    assert json.loads((tmp_path / "a.json").read_text())["report"]["rows"]


def test_replay_errors(tmp_path):
    cfg = _tracking_config()
    with pytest.raises(ConfigError):
        run_campaign_mode(cfg, "replay", str(tmp_path))
    with pytest.raises(ConfigError):
        run_campaign_mode(cfg, "dream", str(tmp_path))


def test_lost_resonator_flagged_others_intact():
    doc = _small_config()
    doc["field"]["max_field"] = 4.0
    doc["resonators"][1]["truth"]["b_c_par"] = 2.6
    cfg = parse_config(doc)
    result = run_field_campaign(cfg, simulated_source(cfg))
    assert "res1" in result.lost and "res0" not in result.lost
    rows = {r.name: r for r in build_report(result)}
    assert rows["res1"]["b_c_par_t"].value is None
    assert rows["res1"]["b_c_par_t"].flag.startswith("lost at")
    assert rows["res0"]["b_c_par_t"].value == pytest.approx(13.537, rel=0.01)


def test_report_schema_and_rows():
    cfg = _tracking_config()
    rows = build_report(run_field_campaign(cfg, simulated_source(cfg)))
    assert len(rows) == len(cfg.resonators)
    doc = report_document(rows)
    jsonschema.validate(doc, report_schema())
    assert doc["columns"] == list(COLUMNS)
    r0 = rows[0]
    assert r0["width_nm"].value == 200
    assert r0["f0_ghz"].value == pytest.approx(4.0743, rel=1e-6)
    assert r0["q_i"].value == pytest.approx(13805, rel=0.05)
    assert r0["z_kohm"].value == pytest.approx(2.725, rel=0.01)
    assert r0["b_c_perp_mt"].flag == "no out-of-plane sweep"
    assert r0["k_hz_per_photon"].flag == "no Kerr power map"
    bad = copy.deepcopy(doc)
    bad["rows"][0].pop("q_c")
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate(bad, report_schema())
    assert format_report(rows, "csv").splitlines()[0].startswith("name,width_nm,width_nm_err")
    assert "K/2pi" in format_report(rows, "table")


def test_missing_zero_field_fit_listed():
    doc = _small_config()
    # the design value sits far from the true resonance, so no dip is found
    doc["resonators"][1]["truth"]["f0_hz"] = 4.8282e9
    doc["resonators"][1]["design_f0"] = 5.5e9
    cfg = parse_config(doc)
    result = run_field_campaign(cfg, simulated_source(cfg))
    assert "res1" in result.lost
    with pytest.raises(MissingInput) as info:
        build_report(result)
    assert "res1" in str(info.value)
