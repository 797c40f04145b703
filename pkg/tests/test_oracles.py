"""The brute-force grid fit as an independent check on the engine optimum."""
import numpy as np
import pytest

from resforge.constants import TWO_PI
from resforge.errors import NoDipFound
from resforge.fitting import fit_linear_resonance, resonance_from_fit
from resforge.models import s21_linear
from resforge.oracles import oracle_grid_fit
from resforge.params import EnvironmentParams, ResonanceParams
from resforge.synth import GeneratorTruth, NoiseSpec, centered_grid, generate_trace


def _bounds(res):
    lw = res.linewidth / TWO_PI
    # deliberately off-center so the truth is not a grid node
    return {"f0": (res.f0 - 0.23 * lw, res.f0 + 0.19 * lw),
            "kappa": (0.55 * res.kappa_ext, 1.6 * res.kappa_ext),
            "gamma": (0.45 * res.gamma_int, 1.4 * res.gamma_int)}


def _cells_apart(fit, grid):
    r = resonance_from_fit(fit)
    p, c = grid["params"], grid["cell"]
    return max(abs(fit["f0"] - p["f0"]) / c["f0"], abs(r.kappa_ext - p["kappa"]) / c["kappa"],
               abs(r.gamma_int - p["gamma"]) / c["gamma"])


def test_reported_objective_is_the_model_residual(truth0, grid0):
    tr = generate_trace(truth0, grid0, NoiseSpec(1e-3, 4))
    g = oracle_grid_fit(tr, _bounds(truth0.resonance))
    p = g["params"]
    model = s21_linear(tr.freqs, ResonanceParams(TWO_PI * p["f0"], p["kappa"], p["gamma"]),
                       EnvironmentParams(p["a"], p["alpha"], p["tau"], p["phi"]))
    assert np.sum(np.abs(model - tr.samples) ** 2) == pytest.approx(g["objective"], rel=1e-8)


def test_engine_beats_grid_noise_free(truth0, grid0):
    tr = generate_trace(truth0, grid0)
    g = oracle_grid_fit(tr, _bounds(truth0.resonance))
    fit = fit_linear_resonance(tr)
    assert fit.residual_norm <= g["objective"]
    assert _cells_apart(fit, g) <= 1.0


@pytest.mark.slow
def test_engine_within_one_cell_of_grid_best(truth0, grid0):
    hits = 0
    for seed in range(100):
        tr = generate_trace(truth0, grid0, NoiseSpec(1e-3, seed))
        g = oracle_grid_fit(tr, _bounds(truth0.resonance))
        fit = fit_linear_resonance(tr)
        assert fit.residual_norm <= g["objective"] * (1 + 1e-12)
        hits += _cells_apart(fit, g) <= 1.0
    assert hits >= 95


def test_flat_trace_consistent_outcomes(res0, env0):
    grid = centered_grid(res0, 10, 401)
    flat = generate_trace(GeneratorTruth(ResonanceParams(res0.omega0, 0.0, res0.gamma_int), env0),
                          grid, NoiseSpec(1e-3, 1))
    g = oracle_grid_fit(flat, _bounds(res0))
    assert g["dip_depth"] < 0.01
    with pytest.raises(NoDipFound):
        fit_linear_resonance(flat)
