import math
from itertools import permutations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from openplan.core import (
    A_WEIGHTS_DB,
    BAND_CENTERS,
    MetricSet,
    MissingBandError,
    OctaveBandSpectrum,
    PathMeasurement,
    ReceiverPoint,
    ValidationError,
    a_weighted_sum,
    band_snr,
    energetic_mean,
    energetic_mean_spectrum,
)

levels = st.floats(min_value=-20, max_value=120, allow_nan=False)
spectra = st.lists(levels, min_size=7, max_size=7).map(lambda v: OctaveBandSpectrum(tuple(v)))


def test_a_weighted_single_band_at_1k():
    spec = OctaveBandSpectrum(tuple(60.0 if fc == 1000 else -math.inf for fc in BAND_CENTERS))
    assert a_weighted_sum(spec) == pytest.approx(60.0, abs=1e-12)


def test_a_weighted_flat_matches_hand_sum():
    total = 0.0
    for a in A_WEIGHTS_DB:
        total += 10 ** ((60 + a) / 10)
    assert a_weighted_sum(OctaveBandSpectrum.flat(60.0)) == pytest.approx(10 * math.log10(total), abs=1e-12)


@given(spectra, st.floats(-30, 30))
def test_a_weighted_homogeneous(spec, c):
    assert a_weighted_sum(spec.shifted(c)) == pytest.approx(a_weighted_sum(spec) + c, abs=1e-9)


# levels kept within a 40 dB span so a step is not lost to rounding
@given(st.lists(st.floats(40, 80), min_size=7, max_size=7).map(lambda v: OctaveBandSpectrum(tuple(v))),
       st.integers(0, 6), st.floats(0.1, 10))
def test_a_weighted_strictly_monotone(spec, band, step):
    lv = list(spec.levels)
    lv[band] += step
    assert a_weighted_sum(OctaveBandSpectrum(tuple(lv))) > a_weighted_sum(spec)


def test_absent_band_is_an_error_not_zero():
    spec = OctaveBandSpectrum((60.0, None, 60, 60, 60, 60, 60))
    with pytest.raises(MissingBandError, match="250 Hz"):
        a_weighted_sum(spec)


def test_spectrum_rejects_nan_and_wrong_length():
    with pytest.raises(ValidationError):
        OctaveBandSpectrum((math.nan,) * 7)
    with pytest.raises(ValidationError):
        OctaveBandSpectrum((1.0,) * 6)


def test_energetic_mean_examples():
    assert energetic_mean([60, 60, 60]) == pytest.approx(60.0)
    assert energetic_mean([60, 70]) == pytest.approx(10 * math.log10((1e6 + 1e7) / 2), abs=1e-12)
    assert energetic_mean([60, 70]) == pytest.approx(67.40, abs=0.005)
    vals = [40.0, 55.5, 61.2]
    out = {round(energetic_mean(p), 12) for p in permutations(vals)}
    assert len(out) == 1


@given(levels, st.integers(1, 20))
def test_energetic_mean_of_copies(level, n):
    assert energetic_mean([level] * n) == pytest.approx(level, abs=1e-9)


@given(st.lists(levels, min_size=1, max_size=10))
def test_energetic_mean_at_least_arithmetic(vals):
    assert energetic_mean(vals) >= np.mean(vals) - 1e-9


def test_band_snr():
    a = OctaveBandSpectrum.flat(60)
    assert np.all(band_snr(a, a) == 0)
    assert np.all(band_snr(a, OctaveBandSpectrum.flat(45)) == 15)


@given(spectra, spectra)
def test_band_snr_antisymmetric(a, b):
    assert np.allclose(band_snr(a, b), -band_snr(b, a))


def test_energetic_mean_spectrum_two_receivers():
    out = energetic_mean_spectrum([OctaveBandSpectrum.flat(40), OctaveBandSpectrum.flat(50)])
    assert out.levels[0] == pytest.approx(47.40, abs=0.005)


def _receivers(dists):
    return tuple(ReceiverPoint(d, OctaveBandSpectrum.flat(70 - d), receiver_id=f"R{i + 1}") for i, d in enumerate(dists))


def test_path_rejects_non_increasing_distances_naming_pair():
    with pytest.raises(ValidationError, match="R2 at 4.0 m followed by R3 at 3.0 m"):
        PathMeasurement("1", "1", 1, _receivers([2, 4, 3, 6, 8]), OctaveBandSpectrum.flat(90))


def test_path_receiver_count_bounds_configurable():
    with pytest.raises(ValidationError, match="outside allowed range"):
        PathMeasurement("1", "1", 1, _receivers([2, 4, 6]), OctaveBandSpectrum.flat(90))
    p = PathMeasurement("1", "1", 1, _receivers([2, 4, 6]), OctaveBandSpectrum.flat(90), min_receivers=3)
    assert p.key == ("1", "1", 1)


def test_receiver_validation():
    with pytest.raises(ValidationError):
        ReceiverPoint(0.0, OctaveBandSpectrum.flat(60))
    with pytest.raises(ValidationError, match="7x14"):
        ReceiverPoint(1.0, OctaveBandSpectrum.flat(60), mtf=((1.0,) * 14,) * 6)


def test_metric_set_validation():
    with pytest.raises(ValidationError):
        MetricSet(6.0, 48.0, -1.0, False, 1.0, 1.0)
    ms = MetricSet(6.0, 48.0, None, False, 1.0, None)
    assert not ms.rd_defined


@given(spectra)
def test_spectrum_list_round_trip(spec):
    assert OctaveBandSpectrum.from_list(spec.to_list()) == spec


def test_minus_inf_serializes_as_marker():
    spec = OctaveBandSpectrum((-math.inf, 1, 2, 3, 4, 5, None))
    assert spec.to_list()[0] == "-inf"
    assert OctaveBandSpectrum.from_list(spec.to_list()) == spec
