"""Addressability arithmetic: separations, channels, distances, couplings."""

import math
import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rotorspec import units
from rotorspec.qubitplan import (POISSON_MEAN_FACTOR, CrystalSpec, PlanError,
                                 addressable_channels, build_plan_report,
                                 coupling_estimate, delta_omega_table,
                                 nn_distance, nn_distance_mc)
from rotorspec.spectrum import Line


def _lines(freqs):
    return [Line(f, 1.0, f"lo{i}", f"up{i}", "IR") for i, f in enumerate(freqs)]


# ---------------------------------------------------------------- separations

def test_delta_omega_paper_values():
    table = delta_omega_table(_lines([3206.0, 3217.0]))
    assert table[0][2] == pytest.approx(11.0, abs=1e-12)
    assert table[0][3] == pytest.approx(329.77, abs=0.01)
    table = delta_omega_table(_lines([3230.0, 3235.0]))
    assert table[0][2] == pytest.approx(5.0, abs=1e-12)


def test_delta_omega_identical_frequencies():
    lines = [Line(3206.0, 1.0, "a", "b", "IR"), Line(3206.0, 1.0, "c", "d", "IR")]
    assert delta_omega_table(lines)[0][2] == 0.0


def test_delta_omega_requires_two_lines():
    with pytest.raises(PlanError, match="two lines"):
        delta_omega_table(_lines([3206.0]))


def test_delta_omega_sorted_descending():
    table = delta_omega_table(_lines([3206.0, 3217.0, 3230.0, 3235.0]))
    deltas = [row[2] for row in table]
    assert deltas == sorted(deltas, reverse=True)
    assert len(table) == 6


@given(st.lists(st.floats(min_value=1.0, max_value=4000.0), min_size=2,
                max_size=7, unique=True), st.randoms())
def test_delta_omega_permutation_invariant(freqs, rnd):
    base = delta_omega_table(_lines(freqs))
    shuffled = _lines(freqs)
    rnd.shuffle(shuffled)
    assert delta_omega_table(shuffled) == base


def test_ghz_conversion_single_constant():
    assert units.GHZ_PER_INV_CM == 29.9792458
    table = delta_omega_table(_lines([100.0, 101.0]))
    assert table[0][3] == table[0][2] * 29.9792458


# ---------------------------------------------------------------- channels

def test_channel_counts():
    assert addressable_channels(1.5, 1.0) == 44
    assert addressable_channels(3.0, 10.0) == 8
    assert addressable_channels(1.0, 1000.0) == 1


def test_channel_validation():
    with pytest.raises(PlanError):
        addressable_channels(0.0, 1.0)
    with pytest.raises(PlanError):
        addressable_channels(1.0, -2.0)


# ---------------------------------------------------------------- distances

def test_nn_distance_characteristic():
    assert nn_distance(CrystalSpec(1.0, 1.0)) == pytest.approx(1.0)
    assert nn_distance(CrystalSpec(1.0, 0.01)) == pytest.approx(4.6416, abs=1e-4)
    assert nn_distance(CrystalSpec(0.8, 0.01)) == pytest.approx(0.8 * 4.6416, abs=1e-3)


def test_nn_distance_poisson_mean():
    assert POISSON_MEAN_FACTOR == pytest.approx(0.55396, abs=1e-5)
    assert nn_distance(CrystalSpec(1.0, 0.01), "poisson_mean") == pytest.approx(2.5713, abs=1e-3)


def test_nn_distance_unknown_mode():
    with pytest.raises(PlanError, match="mode"):
        nn_distance(CrystalSpec(1.0, 0.1), "median")


@given(st.floats(min_value=0.001, max_value=1.0),
       st.floats(min_value=0.001, max_value=1.0))
def test_nn_distance_strictly_decreasing_in_c(c1, c2):
    lo, hi = sorted((c1, c2))
    if hi - lo < 1e-9:
        return
    for mode in ("characteristic", "poisson_mean"):
        assert nn_distance(CrystalSpec(1.0, hi), mode) < nn_distance(CrystalSpec(1.0, lo), mode)


def test_crystal_spec_validation():
    with pytest.raises(PlanError):
        CrystalSpec(a_nm=-1.0, c=0.5)
    with pytest.raises(PlanError):
        CrystalSpec(a_nm=1.0, c=0.0)
    with pytest.raises(PlanError):
        CrystalSpec(a_nm=1.0, c=1.5)


def test_monte_carlo_matches_poisson_mean():
    spec = CrystalSpec(a_nm=1.0, c=0.01)
    mc = nn_distance_mc(spec, n_samples=100_000, seed=0)
    closed = nn_distance(spec, "poisson_mean")
    assert abs(mc - closed) / closed < 0.05


@pytest.mark.parametrize("c", [0.005, 0.02, 0.05])
def test_monte_carlo_across_dilutions(c):
    spec = CrystalSpec(a_nm=1.3, c=c)
    mc = nn_distance_mc(spec, n_samples=50_000, seed=2)
    closed = nn_distance(spec, "poisson_mean")
    assert abs(mc - closed) / closed < 0.05


def test_monte_carlo_deterministic():
    spec = CrystalSpec(a_nm=1.0, c=0.02)
    assert nn_distance_mc(spec, 20_000, seed=7) == nn_distance_mc(spec, 20_000, seed=7)


# ---------------------------------------------------------------- couplings

def test_coupling_reference_value():
    # 1 debye at 5 nm is about 1.2 GHz
    assert coupling_estimate(1.0, 5.0) == pytest.approx(1.207e9, rel=1e-3)


def test_coupling_inverse_cube():
    assert coupling_estimate(1.0, 10.0) * 8 == pytest.approx(coupling_estimate(1.0, 5.0))


def test_coupling_zero_dipole():
    assert coupling_estimate(0.0, 5.0) == 0.0
    with pytest.raises(PlanError):
        coupling_estimate(1.0, 0.0)
    with pytest.raises(PlanError):
        coupling_estimate(-1.0, 5.0)


# ---------------------------------------------------------------- report

def test_build_plan_report():
    report = build_plan_report(_lines([3206.0, 3217.0, 3230.0, 3235.0]),
                               CrystalSpec(1.0, 0.01), band_fwhm_cm1=1.5,
                               source_linewidth_ghz=1.0, mu_debye=1.0)
    assert report.channels == 44
    assert report.r12_characteristic_nm == pytest.approx(4.6416, abs=1e-4)
    assert report.delta_omega_pairs[0][2] == pytest.approx(29.0)
    assert all(hz > 0 for _, _, hz in report.couplings)
