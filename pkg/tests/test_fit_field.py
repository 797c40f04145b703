"""Critical-field, misalignment and capacitance fits."""
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from resforge.data import FieldSweepSeries
from resforge.errors import DomainError, NegativeSlope, PositiveShiftDominates
from resforge.fitting import fit_ctilde_from_frequency, fit_field_sweep_bc, fit_misalignment
from resforge.models import (characteristic_impedance, diffusion_for_critical_field,
                             quadratic_shift_bc, quarterwave_frequency)
from resforge.params import FilmProperties, ResonanceParams, ResonatorGeometry
from resforge.presets import NBN_FILM
from resforge.synth import GeneratorTruth, NoiseSpec, generate_field_sweep

B_C = 13.537
WIDTHS = [w * 1e-9 for w in (200, 300, 400, 500, 600, 700)]


def _series(b, shift, orientation="in_plane", width=None):
    b = np.asarray(b, dtype=float)
    ones = np.ones_like(b)
    return FieldSweepSeries(orientation, b, np.asarray(shift, dtype=float), 1e4 * ones,
                            2e4 * ones, width)


def test_noise_free_exact(res0):
    b = np.linspace(0, 6, 25)
    fit = fit_field_sweep_bc(_series(b, quadratic_shift_bc(b, B_C)))
    assert fit["b_c"] == pytest.approx(B_C, rel=1e-8)


@given(b=st.floats(0.01, 20), b_c=st.floats(0.05, 50))
def test_single_point_inverts_exactly(b, b_c):
    fit = fit_field_sweep_bc(_series([b], [-0.25 * (b / b_c) ** 2]))
    assert fit["b_c"] == pytest.approx(b_c, rel=1e-12)
    assert fit.std_errors == {}


def test_noisy_sweep_within_one_percent(res0):
    truth = GeneratorTruth(res0, b_c_par=B_C)
    b = np.linspace(0, 6, 60)
    errs = []
    for seed in range(100):
        s = generate_field_sweep(truth, b, "in_plane", NoiseSpec(1e-4, seed))
        errs.append(abs(fit_field_sweep_bc(s)["b_c"] / B_C - 1))
    assert np.median(errs) < 0.01


def test_positive_shift_rejected():
    with pytest.raises(PositiveShiftDominates):
        fit_field_sweep_bc(_series([0, 1, 2], [0, 1e-4, 4e-4]))
    with pytest.raises(DomainError):
        fit_field_sweep_bc(_series([0.0], [0.0]))


# ---- misalignment

def _family(theta_deg, sigma=0.0, seed=0, max_field=6.0, points=40):
    film = FilmProperties(**NBN_FILM)
    theta = math.radians(theta_deg)
    d = diffusion_for_critical_field(film, B_C, WIDTHS[0], theta)
    film = film.replace(diffusion_D=d)
    out = {}
    for k, w in enumerate(WIDTHS):
        res = ResonanceParams.from_quality(5e9, 2e4, 2e4)
        truth = GeneratorTruth(res, film=film, geometry=ResonatorGeometry(w), theta_b=theta)
        b = np.linspace(0, max_field, points)
        out[w] = generate_field_sweep(truth, b, "in_plane", NoiseSpec(sigma, seed * 10 + k))
    return out, film, d


def test_misalignment_round_trip():
    family, film, d = _family(1.08)
    fit = fit_misalignment(family, film)
    assert fit["theta_b_deg"] == pytest.approx(1.08, rel=1e-6)
    assert fit["d"] == pytest.approx(d, rel=1e-6)


def test_aligned_field_gives_zero_angle():
    family, film, _ = _family(0.0)
    fit = fit_misalignment(family, film)
    assert fit["theta_b_deg"] == 0.0
    assert abs(fit["slope"]) <= 2 * fit.error("slope") + 1e-9 * fit["d"]


def test_misalignment_error_coverage():
    # first-order errors: the truth lies within two std_errors in >= 90% of seeds
    covered = 0
    for seed in range(100):
        family, film, _ = _family(1.08, sigma=1e-4, seed=seed)
        fit = fit_misalignment(family, film)
        covered += abs(fit["theta_b_deg"] - 1.08) <= 2 * fit.error("theta_b_deg")
    assert covered >= 90


def test_decreasing_diffusion_raises():
    family, film, _ = _family(1.08)
    flipped = {}
    for w, w_rev in zip(WIDTHS, reversed(WIDTHS)):
        s = family[w_rev]
        flipped[w] = _series(s.b, s.rel_shift, width=w)
    with pytest.raises(NegativeSlope) as info:
        fit_misalignment(flipped, film)
    assert info.value.slope < 0


def test_misalignment_preconditions():
    family, film, _ = _family(1.08)
    with pytest.raises(DomainError):
        fit_misalignment(dict(list(family.items())[:2]), film)
    perp = {w: _series(s.b, s.rel_shift, "out_of_plane") for w, s in family.items()}
    with pytest.raises(DomainError):
        fit_misalignment(perp, film)


# ---- capacitance per length

RES0_GEOM = ResonatorGeometry(200e-9, 375.7452510626351e-6, 89e-12 / 200e-9)


def test_ctilde_res0_chain():
    c = fit_ctilde_from_frequency(4.0743e9, RES0_GEOM)
    assert c == pytest.approx(59.92761552057908e-12, rel=1e-12)
    z = characteristic_impedance(RES0_GEOM.replace(capacitance_per_length=c))
    assert z == pytest.approx(2725.0, rel=0.01)


def test_ctilde_scaling_and_round_trip():
    c = fit_ctilde_from_frequency(4.0743e9, RES0_GEOM)
    assert fit_ctilde_from_frequency(4.0743e9 / 2, RES0_GEOM) == pytest.approx(4 * c, rel=1e-14)
    f = quarterwave_frequency(RES0_GEOM.replace(capacitance_per_length=c))
    assert f == pytest.approx(4.0743e9, rel=1e-12)
