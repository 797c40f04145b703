"""Occupation cubic: closed-form solver against the dense-scan oracle."""
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from resforge.models import photon_number, power_for_photon_number
from resforge.occupation import (XI_BISTABLE_THRESHOLD, bifurcation_onset, count_roots,
                                 occupation_residual, occupation_roots, solve_photon_occupation,
                                 stable_occupation)
from resforge.oracles import oracle_cubic_roots, oracle_cubic_roots_batch


def test_trivial_roots():
    assert solve_photon_occupation(0.0, 0.0).roots == (2.0,)
    for d in (-3.0, -0.2, 0.7, 11.0):
        sol = solve_photon_occupation(d, 0.0)
        assert sol.roots == pytest.approx((0.5 / (d * d + 0.25),), rel=1e-15)
    assert oracle_cubic_roots(0.0, 0.0) == pytest.approx([2.0], abs=1e-13)
    assert oracle_cubic_roots(1.5, 0.0) == pytest.approx([0.5 / 2.5], abs=1e-13)


def test_delta_one_xi_tenth_against_oracle():
    fast = solve_photon_occupation(1.0, 0.1)
    slow = oracle_cubic_roots(1.0, 0.1)
    assert len(fast.roots) == len(slow) == 1
    assert fast.roots[0] == pytest.approx(slow[0], abs=1e-12)
    assert abs(occupation_residual(fast.roots[0], 1.0, 0.1)) < 1e-12


def test_three_roots_in_bistable_region():
    sol = solve_photon_occupation(-2.0, -1.0)
    assert len(sol.roots) == 3
    assert sol.stable_root == min(sol.roots)
    assert oracle_cubic_roots(-2.0, -1.0) == pytest.approx(list(sol.roots), abs=1e-10)


def test_threshold_constant():
    assert XI_BISTABLE_THRESHOLD == pytest.approx(2 / (3 * math.sqrt(3)), rel=1e-15)
    d = -math.sqrt(3) / 2
    assert count_roots(d, -XI_BISTABLE_THRESHOLD * 0.999) == 1
    grid = np.linspace(d - 0.5, d + 0.5, 2001)
    below = occupation_roots(grid, -XI_BISTABLE_THRESHOLD * 0.999)
    above = occupation_roots(grid, -XI_BISTABLE_THRESHOLD * 1.05)
    assert np.all(np.sum(np.isfinite(below), axis=1) == 1)
    assert np.any(np.sum(np.isfinite(above), axis=1) == 3)


@settings(max_examples=300, deadline=None)
@given(delta=st.floats(-20, 20), xi=st.floats(-5, 5))
def test_roots_positive_and_satisfy_cubic(delta, xi):
    sol = solve_photon_occupation(delta, xi)
    assert 1 <= len(sol.roots) <= 3
    assert sol.stable_root == sol.roots[0]
    for n in sol.roots:
        assert 0 < n <= 2.0 + 1e-12
        assert abs(occupation_residual(n, delta, xi)) < 1e-12


def test_batch_agreement_with_oracle():
    rng = np.random.default_rng(7)
    deltas = rng.uniform(-20, 20, 400)
    xis = rng.uniform(-5, 5, 400)
    # enrich the bistable corner
    deltas[:100] = rng.uniform(-4, 0, 100)
    xis[:100] = rng.uniform(-3, -0.3, 100)
    fast = occupation_roots(deltas, xis)
    slow, counts = oracle_cubic_roots_batch(deltas, xis)
    assert np.array_equal(np.sum(np.isfinite(fast), axis=1), counts)
    ok = np.isfinite(fast)
    assert np.max(np.abs(fast[ok] - slow[ok])) < 1e-10


def test_stable_occupation_shape():
    d = np.linspace(-3, 3, 12).reshape(3, 4)
    n = stable_occupation(d, 0.2)
    assert n.shape == (3, 4)
    assert np.all(n > 0)


def test_bifurcation_onset_limits():
    assert not bifurcation_onset((-100, 100), 0.0)
    assert bifurcation_onset((-100, 100), -5.0)
    assert not bifurcation_onset((0.0, 100.0), -5.0)  # negative K bistability lives at delta < 0


@settings(max_examples=60, deadline=None)
@given(lo=st.floats(-6, 6), width=st.floats(0.01, 6), xi=st.floats(-3, 3))
def test_bifurcation_onset_matches_dense_root_count(lo, width, xi):
    hi = lo + width
    grid = np.linspace(lo, hi, 4001)
    counts = np.sum(np.isfinite(occupation_roots(grid, xi)), axis=1)
    dense = bool(np.any(counts > 1))
    exact = bifurcation_onset((lo, hi), xi)
    if dense:
        assert exact
    # the closed form may catch a sliver the grid misses, never the other way round


def test_onset_power_near_kerr_photon_estimate(res0):
    from resforge.synth import generate_power_map, centered_grid, GeneratorTruth
    from resforge.params import KerrModelParams
    truth = GeneratorTruth(res0, kerr=KerrModelParams(2 * math.pi * -4.506))
    n_est = res0.linewidth / abs(truth.kerr.kerr_K)
    p_est = power_for_photon_number(n_est, 70.0, res0)
    powers = np.arange(p_est - 30, p_est + 30, 1.0)
    grid = centered_grid(res0, 30, 201)
    flags = [t.meta["above_bifurcation"] for t in generate_power_map(truth, powers, grid,
                                                                   attenuation_db=70.0)]
    first = powers[flags.index(True)]
    assert abs(photon_number(first, 70.0, res0) / n_est) < 10
    assert abs(photon_number(first, 70.0, res0) / n_est) > 0.1
