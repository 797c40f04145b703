"""Synthetic generators: determinism, noise statistics and forward-model fidelity."""
import math

import numpy as np
import pytest

from resforge.constants import TWO_PI
from resforge.errors import DomainError
from resforge.models import s21_linear, s21_nonlinear
from resforge.params import (FilmProperties, KerrModelParams, QiTemplate,
                             ResonatorGeometry)
from resforge.synth import (RNG_ALGORITHM, GeneratorTruth, NoiseSpec, centered_grid,
                            forward_trace, generate_field_sweep, generate_power_map,
                            generate_trace)


def test_sigma_zero_is_the_forward_model(truth0, grid0):
    tr = generate_trace(truth0, grid0)
    assert np.array_equal(tr.samples, s21_linear(grid0, truth0.resonance, truth0.env))
    assert tr.meta["model"] == "linear" and tr.meta["rng"] == RNG_ALGORITHM


def test_same_seed_same_trace(truth0, grid0):
    a = generate_trace(truth0, grid0, NoiseSpec(1e-3, 99), stream=(2, 5))
    b = generate_trace(truth0, grid0, NoiseSpec(1e-3, 99), stream=(2, 5))
    c = generate_trace(truth0, grid0, NoiseSpec(1e-3, 99), stream=(2, 6))
    assert np.array_equal(a.samples, b.samples)
    assert not np.array_equal(a.samples, c.samples)


def test_noise_level_off_resonance(truth0, grid0):
    tr = generate_trace(truth0, grid0, NoiseSpec(1e-3, 3))
    resid = tr.samples - s21_linear(grid0, truth0.resonance, truth0.env)
    wings = np.r_[0:100, 301:401]
    assert np.std(resid[wings].real) == pytest.approx(1e-3, rel=0.1)
    assert np.std(resid[wings].imag) == pytest.approx(1e-3, rel=0.1)


def test_noise_spec_rejects():
    with pytest.raises(DomainError):
        NoiseSpec(-1.0)
    with pytest.raises(DomainError):
        NoiseSpec(0.0, -1)


def test_grid_must_increase(truth0):
    with pytest.raises(DomainError):
        generate_trace(truth0, np.linspace(2e9, 1e9, 20))


def test_nonlinear_switch(truth0, grid0):
    strong = generate_trace(truth0, grid0, power_dbm=-25.0, attenuation_db=70.0)
    weak = generate_trace(truth0, grid0, power_dbm=-90.0, attenuation_db=70.0)
    assert strong.meta["model"] == "nonlinear"
    assert weak.meta["model"] == "linear"


def test_power_map_dip_moves_down_for_negative_kerr(truth0, res0):
    grid = centered_grid(res0, 10, 2001)
    powers = [-60, -40, -34, -30, -28, -26]
    traces = generate_power_map(truth0, powers, grid, attenuation_db=70.0)
    dips = [grid[np.argmin(np.abs(t.samples))] for t in traces]
    assert np.all(np.diff(dips) <= 0)
    assert dips[-1] < dips[0]
    flat = generate_power_map(truth0.replace(kerr=KerrModelParams(0.0)), powers, grid,
                              attenuation_db=70.0)
    assert len({grid[np.argmin(np.abs(t.samples))] for t in flat}) == 1


def test_power_map_requires_ascending(truth0, grid0):
    with pytest.raises(DomainError):
        generate_power_map(truth0, [-20, -30], grid0)


def test_field_sweep_out_of_plane_exact(truth0):
    truth = truth0.replace(b_c_perp=1.0766)
    b = np.linspace(0, 1.0, 11)
    series = generate_field_sweep(truth, b, "out_of_plane")
    assert np.array_equal(series.rel_shift, -0.25 * (b / 1.0766) ** 2)
    with pytest.raises(DomainError):
        generate_field_sweep(truth, [0.0, 1.2], "out_of_plane")


def test_field_sweep_in_plane_widths_identical_without_misalignment(res0):
    film = FilmProperties(lk_sheet=89e-12, thickness_t=13e-9, critical_temp_Tc=4.0,
                          diffusion_D=5e-5)
    b = np.linspace(0, 6, 13)
    out = []
    for w in (200e-9, 700e-9):
        truth = GeneratorTruth(res0, film=film, geometry=ResonatorGeometry.from_film(film, w))
        out.append(generate_field_sweep(truth, b, "in_plane").rel_shift)
    assert np.array_equal(out[0], out[1])


def test_qi_template_drives_field_sweep(truth0):
    truth = truth0.replace(b_c_perp=1.0, qi_template=QiTemplate((0.0, 0.5), (1e4, 1e3)))
    series = generate_field_sweep(truth, [0.0, 0.25, 0.5], "out_of_plane")
    assert series.q_i == pytest.approx([1e4, math.sqrt(1e7), 1e3], rel=1e-12)
    assert np.all(series.q_c == truth.resonance.q_c)


def test_truth_dict_round_trip(truth0):
    truth = truth0.replace(b_c_par=13.5, theta_b=0.01)
    assert GeneratorTruth.from_dict(truth.to_dict()) == truth
    with pytest.raises(DomainError):
        GeneratorTruth.from_dict({"resonance": truth.resonance.to_dict(), "bogus": 1})


def test_resonance_at_field_keeps_q_c(truth0):
    truth = truth0.replace(b_c_perp=1.0)
    res = truth.resonance_at(0.5, "out_of_plane")
    assert res.f0 == pytest.approx(truth.resonance.f0 * (1 - 0.25 * 0.25), rel=1e-14)
    assert res.q_c == pytest.approx(truth.resonance.q_c, rel=1e-12)


def test_forward_nonlinear_matches_model(truth0, grid0):
    flux = 3e11
    s, model = forward_trace(truth0, grid0, flux)
    assert model == "nonlinear"
    env = truth0.env
    bare = s21_nonlinear(grid0, truth0.resonance, KerrModelParams(truth0.kerr.kerr_K, flux),
                         env.impedance_mismatch_phi)
    factor = env.amplitude_a * np.exp(1j * (env.phase_alpha - TWO_PI * grid0 * env.delay_tau))
    assert np.allclose(s, factor * bare, rtol=0, atol=1e-15)
