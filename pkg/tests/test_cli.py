"""Command-line surface: exit codes, streams, option precedence and pipelines."""
import json
import os

import numpy as np
import pytest

from resforge.cli import main, resolve_common, build_parser
from resforge.campaign.io import ingest_trace
from resforge.models import power_for_flux, s21_linear
from resforge.presets import GRAL_FILM, NBN_FILM, nbn_campaign_config, nbn_misalignment_config
from resforge.serialize import dumps17
from resforge.synth import expected_bifurcation_flux

RES0_TRUTH = {"f0_hz": 4.0743e9, "q_i": 13805, "q_c": 28241, "kerr_hz": -4.506,
              "env": {"amplitude_a": 0.8, "phase_alpha": 0.4, "delay_tau": 47e-9,
                      "impedance_mismatch_phi": 0.1}}


def run(capsys, *argv, environ=None):
    code = main([str(a) for a in argv], environ={} if environ is None else environ)
    out, err = capsys.readouterr()
    return code, out, err


def _write(path, doc):
    path.write_text(dumps17(doc))
    return path


def _res0_powers():
    from resforge.constants import TWO_PI
    from resforge.params import ResonanceParams

    res = ResonanceParams.from_quality(4.0743e9, 13805, 28241)
    onset = expected_bifurcation_flux(res, TWO_PI * -4.506)
    return [float(power_for_flux(f * onset, 70.0, res.omega0)) for f in (0.02, 0.2, 0.5, 0.85)]


# ---- fit-trace

def test_fit_trace_accepted(tmp_path, capsys):
    truth = _write(tmp_path / "t.json", {"truth": RES0_TRUTH, "noise": {"sigma": 1e-3, "seed": 3}})
    code, out, _ = run(capsys, "synth", truth, "-o", tmp_path / "syn")
    assert code == 0
    code, out, err = run(capsys, "fit-trace", tmp_path / "syn" / "trace.csv")
    assert code == 0 and err == ""
    doc = json.loads(out)
    assert doc["qc"]["accepted"]
    assert doc["params"]["f0"] == pytest.approx(4.0743e9, rel=1e-6)
    assert doc["params"]["q_i"] == pytest.approx(13805, abs=286)
    code, out, _ = run(capsys, "fit-trace", tmp_path / "syn" / "trace.csv", "--format", "csv")
    assert out.startswith("name,value,std_error\nf0,")


def test_fit_trace_malformed(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("freq_hz,re,im\n1,2\n")
    code, out, err = run(capsys, "fit-trace", bad)
    assert code == 1 and out == ""
    assert "ParseError" in err and "line 2" in err


def test_fit_trace_qc_rejection(tmp_path, capsys):
    # a very weakly coupled resonance: the dip is found but Q_i is poorly determined
    truth = dict(RES0_TRUTH, q_i=2e5, q_c=2e7)
    doc = _write(tmp_path / "t.json", {"truth": truth, "noise": {"sigma": 2e-3, "seed": 1},
                                       "grid": {"linewidths": 10}})
    run(capsys, "synth", doc, "-o", tmp_path / "syn")
    code, out, err = run(capsys, "fit-trace", tmp_path / "syn" / "trace.csv")
    assert code == 2
    assert not json.loads(out)["qc"]["accepted"]
    assert "QC rejected" in err and "q_i" in err


def test_missing_file_and_bad_arguments(tmp_path, capsys):
    code, out, err = run(capsys, "fit-trace", tmp_path / "none.csv")
    assert code == 1 and out == "" and "error" in err
    assert run(capsys, "nonsense")[0] == 1
    assert run(capsys)[0] == 1


# ---- option precedence

def test_option_precedence(tmp_path):
    defaults = tmp_path / "d.yaml"
    defaults.write_text("format: table\nseed: 5\n")
    parser = build_parser()
    args = parser.parse_args(["estimate", "x", "--defaults", str(defaults)])
    assert resolve_common(args, {}) ["format"] == "table"
    assert resolve_common(args, {"RESFORGE_FORMAT": "csv"})["format"] == "csv"
    assert resolve_common(args, {"RESFORGE_SEED": "7"})["seed"] == 7
    args = parser.parse_args(["estimate", "x", "--defaults", str(defaults), "--format", "json"])
    assert resolve_common(args, {"RESFORGE_FORMAT": "csv"})["format"] == "json"
    args = parser.parse_args(["estimate", "x"])
    assert resolve_common(args, {"RESFORGE_DEFAULTS": str(defaults)})["seed"] == 5
    assert resolve_common(args, {})["format"] == "json"


def test_bad_defaults_rejected(tmp_path, capsys):
    defaults = tmp_path / "d.yaml"
    defaults.write_text("colour: red\n")
    code, _, err = run(capsys, "estimate", "x", "--defaults", defaults)
    assert code == 1 and "unknown keys" in err
    code, _, err = run(capsys, "estimate", "x", environ={"RESFORGE_SEED": "abc"})
    assert code == 1


# ---- synth

def test_synth_deterministic(tmp_path, capsys):
    doc = _write(tmp_path / "t.json", {"truth": RES0_TRUTH, "noise": {"sigma": 1e-3, "seed": 4},
                                       "powers": _res0_powers(), "attenuation_db": 70})
    for d in ("a", "b"):
        assert run(capsys, "synth", doc, "--kind", "powermap", "-o", tmp_path / d)[0] == 0
    names = sorted(os.listdir(tmp_path / "a"))
    assert names == ["power_000.csv", "power_001.csv", "power_002.csv", "power_003.csv",
                     "truth.json"]
    for n in names:
        assert (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()
    run(capsys, "synth", doc, "--kind", "powermap", "-o", tmp_path / "c", "--seed", 5)
    assert (tmp_path / "c" / names[0]).read_bytes() != (tmp_path / "a" / names[0]).read_bytes()


def test_synth_noise_free_matches_forward_model(tmp_path, capsys):
    truth = dict(RES0_TRUTH, kerr_hz=0.0)
    doc = _write(tmp_path / "t.json", {"truth": truth})
    code, out, _ = run(capsys, "synth", doc, "-o", tmp_path / "s")
    assert json.loads(out) == {"kind": "trace", "files": ["trace.csv", "truth.json"]}
    tr = ingest_trace(tmp_path / "s" / "trace.csv")
    from resforge.params import EnvironmentParams, ResonanceParams

    res = ResonanceParams.from_quality(4.0743e9, 13805, 28241)
    expected = s21_linear(tr.freqs, res, EnvironmentParams(**RES0_TRUTH["env"]))
    assert np.array_equal(tr.samples, expected)


def test_synth_field_sweep_and_invalid_truth(tmp_path, capsys):
    doc = _write(tmp_path / "t.json", {"truth": dict(RES0_TRUTH, b_c_perp=1.0766),
                                       "fields": {"max_field": 0.5, "step": 0.1}})
    assert run(capsys, "synth", doc, "--kind", "fieldsweep", "-o", tmp_path / "f")[0] == 0
    lines = (tmp_path / "f" / "fieldsweep.csv").read_text().splitlines()
    assert lines[:2] == ["# orientation=out_of_plane", "b_t,rel_shift,q_i,q_c"]
    assert len(lines) == 8
    bad = _write(tmp_path / "bad.json", {"truth": dict(RES0_TRUTH, q_i=-1)})
    code, out, err = run(capsys, "synth", bad, "-o", tmp_path / "x")
    assert code == 1 and out == "" and "invalid truth" in err
    code, _, err = run(capsys, "synth", doc, "-o", tmp_path / "y", "--kind", "powermap")
    assert code == 1 and "powers" in err


# ---- kerr

def test_synth_to_kerr_pipeline(tmp_path, capsys):
    doc = _write(tmp_path / "t.json", {"truth": RES0_TRUTH, "noise": {"sigma": 1e-3, "seed": 2},
                                       "powers": _res0_powers(), "attenuation_db": 70})
    run(capsys, "synth", doc, "--kind", "powermap", "-o", tmp_path / "m")
    code, out, err = run(capsys, "kerr", tmp_path / "m")
    assert code == 0, err
    res = json.loads(out)
    assert res["kerr_hz"] == pytest.approx(-4.506, rel=0.05)
    assert [t["above_bifurcation"] for t in res["traces"]] == [False] * 4
    code, out, _ = run(capsys, "kerr", tmp_path / "m", "--format", "table")
    assert out.startswith("K/2pi = ")


def test_kerr_zero_map_consistent_with_zero(tmp_path, capsys):
    doc = _write(tmp_path / "t.json", {"truth": dict(RES0_TRUTH, kerr_hz=0.0),
                                       "noise": {"sigma": 1e-3, "seed": 2},
                                       "powers": _res0_powers(), "attenuation_db": 70})
    run(capsys, "synth", doc, "--kind", "powermap", "-o", tmp_path / "m")
    code, out, _ = run(capsys, "kerr", tmp_path / "m")
    res = json.loads(out)
    assert code == 0 and abs(res["kerr_hz"]) < 3 * res["kerr_hz_err"]


def test_kerr_all_bistable_exit_2(tmp_path, capsys):
    strong = [p + 10.0 for p in _res0_powers()[1:]]
    doc = _write(tmp_path / "t.json", {"truth": RES0_TRUTH, "noise": {"sigma": 1e-3, "seed": 2},
                                       "powers": strong, "attenuation_db": 70})
    run(capsys, "synth", doc, "--kind", "powermap", "-o", tmp_path / "m")
    code, out, err = run(capsys, "kerr", tmp_path / "m")
    assert code == 2 and out == "" and "error" in err.lower()


def test_kerr_needs_three_traces(tmp_path, capsys):
    doc = _write(tmp_path / "t.json", {"truth": RES0_TRUTH, "powers": _res0_powers()[:2],
                                       "attenuation_db": 70})
    run(capsys, "synth", doc, "--kind", "powermap", "-o", tmp_path / "m")
    assert run(capsys, "kerr", tmp_path / "m")[0] == 1


# ---- field

def _small_campaign(tmp_path, **kw):
    doc = nbn_campaign_config(max_field=1.0, step=0.25, **kw)
    return _write(tmp_path / "c.json", doc)


def test_field_simulate_then_replay_identical(tmp_path, capsys):
    cfg = _small_campaign(tmp_path)
    camp = tmp_path / "camp"
    code, sim, err = run(capsys, "field", cfg, "--campaign-dir", camp)
    assert code == 0 and err == ""
    assert len(json.loads(sim)["rows"]) == 6
    assert (camp / "results.json").exists()
    code, rep, _ = run(capsys, "field", cfg, "--mode", "replay", "--campaign-dir", camp)
    assert code == 0 and rep == sim
    code, table, _ = run(capsys, "field", cfg, "--mode", "replay", "--campaign-dir", camp,
                         "--format", "table")
    assert "B_C par (T)" in table


def test_field_replay_needs_directory(tmp_path, capsys):
    cfg = _small_campaign(tmp_path)
    code, out, err = run(capsys, "field", cfg, "--mode", "replay")
    assert code == 1 and out == "" and "campaign-dir" in err


def test_field_config_error(tmp_path, capsys):
    doc = nbn_campaign_config()
    doc["field"]["step"] = 0
    code, out, err = run(capsys, "field", _write(tmp_path / "c.json", doc))
    assert code == 1 and out == "" and "ConfigError" in err


def test_field_loss_warns_but_succeeds(tmp_path, capsys):
    doc = nbn_campaign_config(max_field=2.0, step=0.5)
    doc["resonators"][5]["truth"]["b_c_par"] = 1.2
    code, out, err = run(capsys, "field", _write(tmp_path / "c.json", doc))
    assert code == 0
    assert "res5 lost" in err
    row = json.loads(out)["rows"][5]
    assert row["b_c_par_t"]["value"] is None


def test_field_misalignment_subreport(tmp_path, capsys):
    doc = nbn_misalignment_config(1.08, max_field=4.0, step=0.25)
    code, out, _ = run(capsys, "field", _write(tmp_path / "c.json", doc), "--misalignment")
    assert code == 0
    mis = json.loads(out)["misalignment"]
    assert mis["theta_b_deg"] == pytest.approx(1.08, rel=0.05)


# ---- estimate

def test_estimate_nbn_chain(tmp_path, capsys):
    doc = _write(tmp_path / "e.json", {"film": NBN_FILM, "width": 200e-9, "f0_hz": 4.0743e9,
                                       "impedance_ohm": 2725.0, "i_star": 74e-6})
    code, out, _ = run(capsys, "estimate", doc)
    est = json.loads(out)["estimates"]
    assert code == 0
    assert est["z_kohm"] == pytest.approx(2.725, rel=0.01)
    assert est["k_bcs_hz_per_photon"] == pytest.approx(-4.506, rel=0.3)


def test_estimate_gral_chain(tmp_path, capsys):
    film = dict(GRAL_FILM, switching_current_Isw=6.8e-6)
    doc = _write(tmp_path / "e.json", {"film": film, "width": 200e-9, "f0_hz": 4.2809e9,
                                       "impedance_ohm": 3530.0})
    code, out, _ = run(capsys, "estimate", doc)
    k = json.loads(out)["estimates"]["k_jj_hz_per_photon"]
    assert -50.0 <= k <= -30.0


def test_estimate_missing_capacitance(tmp_path, capsys):
    doc = _write(tmp_path / "e.json", {"film": NBN_FILM, "width": 200e-9, "length": 3.76e-4})
    code, out, err = run(capsys, "estimate", doc)
    assert code == 1 and out == ""
    assert "capacitance_per_length" in err
