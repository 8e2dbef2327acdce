"""Peak-position and envelope calibration: round trips, determinism, bounds."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rotorspec import fitting, spectrum
from rotorspec.fitting import (EnvelopeModel, FitError, FitSpec, Peak,
                               PeakList, TransitionModel, fit_envelope,
                               fit_line_positions)

JMAX = 6


@pytest.fixture(scope="module")
def tmodel():
    return TransitionModel(jmax=JMAX)


# ---------------------------------------------------------------- peak list

def test_peaklist_validation():
    with pytest.raises(FitError, match="positive"):
        PeakList((Peak(-3.0), Peak(5.0)))
    with pytest.raises(FitError, match="duplicate"):
        PeakList((Peak(5.0), Peak(5.0)))


def test_fitspec_validation():
    with pytest.raises(FitError):
        fit_line_positions(PeakList.from_frequencies([3206.0, 3217.0]),
                           FitSpec(free_params=()), TransitionModel(jmax=JMAX))


def test_underdetermined_rejected(tmodel):
    peaks = PeakList.from_frequencies([3206.0, 3217.0])
    spec = FitSpec(free_params=("B", "beta", "nu0"))
    with pytest.raises(FitError, match="under-determined"):
        fit_line_positions(peaks, spec, tmodel)


def test_unknown_parameter_rejected(tmodel):
    peaks = PeakList.from_frequencies([3206.0, 3217.0, 3230.0])
    with pytest.raises(FitError, match="unknown parameter"):
        fit_line_positions(peaks, FitSpec(free_params=("Q",)), tmodel)


def test_unknown_label_rejected(tmodel):
    peaks = PeakList.from_frequencies([3206.0], labels=["(X9)1->(L1)1*"])
    with pytest.raises(FitError, match="matches no model transition"):
        fit_line_positions(peaks, FitSpec(free_params=("nu0",)), tmodel)


# ---------------------------------------------------------------- positions

TRUTH = {"B": 5.2, "beta": 1.3, "nu0": 3205.0, "excited_scale": 1.0,
         "dw_L1_star": 23.0, "dw_LE3_star": 28.0, "fwhm": 1.5, "scale": 1.0}

NAMES = ("(L1)1->(L1)1*", "(A1)1->(L1)1*", "(E2)1->(L1)1*",
         "(L1)1->(E2)1*", "(L1)1->(L1)2*", "(L1)1->(E3)1*")


def _synthetic_peaks(tmodel, names=NAMES):
    freqs = tmodel.frequencies(names, TRUTH)
    return PeakList(tuple(Peak(float(f), None, n) for f, n in zip(freqs, names)))


def test_round_trip_recovers_parameters(tmodel):
    """Zero-noise synthetic peaks; the E2-referencing lines pin B and beta
    separately, so the full parameter set is identifiable."""
    peaks = _synthetic_peaks(tmodel)
    spec = FitSpec(
        free_params=("B", "beta", "nu0", "extra_offsets"),
        bounds={"B": (4.0, 7.0), "beta": (0.3, 2.5)},
        initial={"B": 5.6, "beta": 1.0, "nu0": 3204.0},
        n_starts=4, tolerance=1e-14,
    )
    report = fit_line_positions(peaks, spec, tmodel, seed=0)
    assert report.converged
    for name in ("B", "beta", "nu0", "dw_L1_star", "dw_LE3_star"):
        assert report.values[name] == pytest.approx(TRUTH[name], rel=1e-4), name
    assert report.max_abs_residual() < 1e-4


def test_objective_equals_sum_of_squared_residuals(tmodel):
    peaks = _synthetic_peaks(tmodel)
    spec = FitSpec(free_params=("B", "beta", "nu0"), n_starts=2,
                   initial={"B": 5.5, "beta": 1.1, "nu0": 3204.5})
    report = fit_line_positions(peaks, spec, tmodel, seed=3)
    assert report.objective == pytest.approx(
        sum(r * r for _, _, _, r in report.residuals), abs=1e-12)


def test_fit_is_deterministic(tmodel):
    peaks = _synthetic_peaks(tmodel)
    spec = FitSpec(free_params=("B", "beta", "nu0"), n_starts=3)
    a = fit_line_positions(peaks, spec, tmodel, seed=11)
    b = fit_line_positions(peaks, spec, tmodel, seed=11)
    assert a == b
    assert a.values == b.values and a.trace == b.trace


def test_fitted_values_respect_bounds(tmodel):
    peaks = _synthetic_peaks(tmodel)
    spec = FitSpec(free_params=("B", "beta", "nu0"),
                   bounds={"B": (5.3, 5.45), "beta": (0.8, 1.1)}, n_starts=3)
    report = fit_line_positions(peaks, spec, tmodel, seed=0)
    assert 5.3 <= report.values["B"] <= 5.45
    assert 0.8 <= report.values["beta"] <= 1.1


def test_best_objective_trace_never_increases(tmodel):
    peaks = _synthetic_peaks(tmodel)
    spec = FitSpec(free_params=("B", "beta", "nu0"), n_starts=2)
    report = fit_line_positions(peaks, spec, tmodel, seed=5)
    trace = report.trace
    assert all(b <= a for a, b in zip(trace, trace[1:]))


def test_shrinking_bounds_around_truth_never_worsens(tmodel):
    peaks = _synthetic_peaks(tmodel)
    results = []
    for width in (0.6, 0.2, 0.05):
        spec = FitSpec(
            free_params=("B", "beta"),
            bounds={"B": (TRUTH["B"] - width, TRUTH["B"] + width),
                    "beta": (TRUTH["beta"] - width, TRUTH["beta"] + width)},
            initial={k: v for k, v in TRUTH.items()},
            n_starts=3,
        )
        spec = FitSpec(free_params=spec.free_params, bounds=spec.bounds,
                       initial={**TRUTH, "B": TRUTH["B"] - width / 2,
                                "beta": TRUTH["beta"] + width / 2},
                       n_starts=3)
        results.append(fit_line_positions(peaks, spec, tmodel, seed=1).objective)
    assert results[1] <= results[0] + 1e-12
    assert results[2] <= results[1] + 1e-12


def test_nearest_frequency_fallback_flagged(tmodel):
    freqs = tmodel.frequencies(("(L1)1->(L1)1*", "(A1)1->(L1)1*"), TRUTH)
    peaks = PeakList.from_frequencies([float(f) for f in freqs])
    spec = FitSpec(free_params=("nu0",), initial=dict(TRUTH), n_starts=2)
    report = fit_line_positions(peaks, spec, tmodel, seed=0)
    assert len(report.nearest_assigned) == 2
    assert report.converged


def test_extra_offsets_counts_as_one_parameter(tmodel):
    # 4 peaks, free (B, beta, nu0, extra_offsets) = 4 named parameters
    names = ("(L1)1->(L1)1*", "(A1)1->(L1)1*", "(L1)1->(L1)2*", "(L1)1->(E3)1*")
    peaks = _synthetic_peaks(tmodel, names)
    spec = FitSpec(free_params=("B", "beta", "nu0", "extra_offsets"), n_starts=2)
    report = fit_line_positions(peaks, spec, tmodel, seed=0)
    assert report.converged
    assert report.max_abs_residual() < 1e-3


def test_transition_model_matches_line_generator(tmodel):
    """The fit-side frequency table and the spectrum-side line generator are
    two encodings of the same transitions; they must agree, both with fixed
    band offsets and with model-derived ones."""
    from rotorspec import rotor

    for params in (
        dict(TRUTH),
        dict(TRUTH, excited_scale=1.2),
        dict(TRUTH, dw_L1_star=None, dw_LE3_star=None),
    ):
        model = rotor.RotorModel.create(B=params["B"], beta=params["beta"], Jmax=JMAX)
        levels = rotor.classify_levels(rotor.diagonalize(model), max_energy=60.0)
        offsets = {k: params[k] for k in ("dw_L1_star", "dw_LE3_star")
                   if params.get(k) is not None}
        band = spectrum.VibrationBandModel(nu0=params["nu0"],
                                           excited_scale=params["excited_scale"],
                                           extra_offsets=offsets)
        pop = spectrum.PopulationModel(mode="spin_frozen", T=7.0)
        lines = spectrum.vibration_orientation_lines(levels, band, pop)
        generated = {f"{l.lower}->{l.upper}": l.frequency for l in lines}
        for name in tmodel.NAMES:
            if name not in generated:
                continue
            predicted = tmodel.frequency(name, params)
            assert generated[name] == pytest.approx(predicted, abs=5e-7), (name, params)


# ---------------------------------------------------------------- envelope

@pytest.fixture(scope="module")
def emodel():
    return EnvelopeModel(jmax=JMAX)


def test_envelope_round_trip(emodel):
    truth = dict(TRUTH, nu0=3206.5, fwhm=2.0, scale=3.0, beta=1.0)
    freqs = np.arange(3150.0, 3300.0, 0.25)
    amps = emodel.amplitude(truth, freqs)
    spec = FitSpec(free_params=("nu0", "fwhm", "scale"),
                   bounds={"nu0": (3195.0, 3215.0), "fwhm": (0.5, 6.0),
                           "scale": (0.1, 10.0)},
                   initial=dict(truth, nu0=3204.0, fwhm=1.2, scale=1.0),
                   n_starts=3, tolerance=1e-16)
    report = fit_envelope(freqs, amps, spec, emodel, seed=0)
    assert report.converged
    assert report.values["nu0"] == pytest.approx(3206.5, rel=1e-3)
    assert report.values["fwhm"] == pytest.approx(2.0, rel=1e-3)
    assert report.values["scale"] == pytest.approx(3.0, rel=1e-3)


def test_envelope_flat_zero_drives_scale_to_zero(emodel):
    freqs = np.arange(3150.0, 3300.0, 0.5)
    amps = np.zeros_like(freqs)
    spec = FitSpec(free_params=("scale",), initial=dict(TRUTH, beta=1.0),
                   n_starts=2)
    report = fit_envelope(freqs, amps, spec, emodel, seed=0)
    assert report.converged
    assert abs(report.values["scale"]) < 1e-8


def test_envelope_grid_without_lines_flags_nonconvergence(emodel):
    freqs = np.arange(500.0, 600.0, 1.0)
    amps = np.ones_like(freqs)
    spec = FitSpec(free_params=("nu0",), initial=dict(TRUTH, beta=1.0), n_starts=2)
    report = fit_envelope(freqs, amps, spec, emodel, seed=0)
    assert not report.converged
    assert "no model line overlaps" in report.message


def test_envelope_rejects_bad_grid(emodel):
    spec = FitSpec(free_params=("scale",), initial=dict(TRUTH))
    with pytest.raises(FitError, match="increasing"):
        fit_envelope(np.array([2.0, 1.0, 3.0]), np.zeros(3), spec, emodel)
    with pytest.raises(FitError, match="equal-length"):
        fit_envelope(np.array([1.0, 2.0]), np.zeros(3), spec, emodel)
