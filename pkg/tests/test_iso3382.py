import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from openplan import iso3382, synth
from openplan.core import (
    BAND_CENTERS,
    OctaveBandSpectrum,
    PathMeasurement,
    ReceiverPoint,
    ValidationError,
    a_weighted_sum,
)
from openplan.iso3382 import AnalysisOptions

band_lists = st.lists(st.floats(20, 100), min_size=7, max_size=7)


# -- speech transposition ---------------------------------------------------------


def test_speech_level_identity_and_sign():
    speech = iso3382.SpeechSpectrumModel()
    meas = OctaveBandSpectrum((70, 71, 72, 73, 74, 75, 76))
    assert iso3382.speech_level_at_receiver(meas, speech.spectrum(), speech) == meas
    src = list(speech.power_db)
    src[2] += 3
    out = iso3382.speech_level_at_receiver(meas, OctaveBandSpectrum(tuple(src)), speech)
    assert out.levels[2] == pytest.approx(72 - 3)
    assert out.levels[3] == pytest.approx(73)


@given(band_lists, band_lists)
def test_speech_level_matches_per_band_arithmetic(m, s):
    out = iso3382.speech_level_at_receiver(OctaveBandSpectrum(tuple(m)), OctaveBandSpectrum(tuple(s)))
    for k in range(7):
        assert out.levels[k] == pytest.approx(m[k] - s[k] + iso3382.SPEECH_POWER_DB[k], abs=1e-9)


# -- spatial decay ----------------------------------------------------------------


def test_fit_exact_line():
    pts = [(r, 60 - 6 * math.log2(r)) for r in (2, 3, 4, 6, 8, 12)]
    fit = iso3382.fit_spatial_decay(pts)
    assert fit.d2s_db == pytest.approx(6.0, abs=1e-12)
    assert fit.lpas4m_db == pytest.approx(48.0, abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0)


def test_fit_jittered_matches_normal_equations(rng):
    d = np.array([2.0, 3.5, 5.0, 6.5, 8.0, 9.5, 11.0])
    y = 60 - 6 * np.log2(d) + rng.uniform(-0.5, 0.5, d.size)
    fit = iso3382.fit_spatial_decay(list(zip(d, y)))
    A = np.column_stack([np.ones(d.size), np.log2(d)])
    coef = np.linalg.solve(A.T @ A, A.T @ y)
    assert fit.intercept == pytest.approx(coef[0], abs=1e-9)
    assert fit.slope == pytest.approx(coef[1], abs=1e-9)


def test_fit_r2_on_dispersed_synthetic_paths():
    # paths shaped like a field survey: 1 dB receiver scatter around a 4-9 dB decay
    rng = np.random.default_rng(2024)
    r2 = []
    for _ in range(36):
        d = np.sort(rng.uniform(2, 16, 6))
        if np.any(np.diff(d) < 0.5):
            d = np.linspace(2, 16, 6)
        y = 55 - rng.uniform(4, 9) * np.log2(d) + rng.normal(0, 1.0, d.size)
        r2.append(iso3382.fit_spatial_decay(list(zip(d, y))).r_squared)
    r2 = np.array(r2)
    assert 0.75 <= r2.min() and r2.max() <= 1.0
    assert abs(r2.mean() - 0.94) <= 0.05


def test_fit_validation():
    with pytest.raises(ValidationError):
        iso3382.fit_spatial_decay([(2, 50)])
    with pytest.raises(ValidationError):
        iso3382.fit_spatial_decay([(2, 50), (2, 49)])


# -- STI --------------------------------------------------------------------------


def test_sti_anchor_values():
    assert iso3382.sti(np.ones((7, 14))) == pytest.approx(1.0)
    assert iso3382.sti(np.zeros((7, 14))) == 0.0
    assert iso3382.sti(np.full((7, 14), 0.5)) == pytest.approx(0.5, abs=1e-12)
    assert sum(iso3382.MALE_ALPHA) - sum(iso3382.MALE_BETA) == pytest.approx(1.0)


@given(st.lists(st.floats(0, 1), min_size=98, max_size=98), st.integers(0, 97), st.floats(0, 1))
def test_sti_monotone_in_each_entry(vals, idx, bump):
    m = np.array(vals).reshape(7, 14)
    m2 = m.copy()
    m2.flat[idx] = min(1.0, m2.flat[idx] + bump)
    assert iso3382.sti(m2) >= iso3382.sti(m) - 1e-12


def test_sti_rejects_bad_matrix():
    with pytest.raises(ValidationError):
        iso3382.sti(np.ones((7, 13)))
    with pytest.raises(ValidationError):
        iso3382.sti(np.full((7, 14), 1.5))


# -- rD ---------------------------------------------------------------------------


def test_rd_constructed_line():
    pts = [(r, 0.9 - 0.2 * math.log2(r)) for r in (1, 2, 3, 5, 8)]
    assert iso3382.sti_profile_and_rd(pts).rd_m == pytest.approx(4.0, abs=1e-12)


def test_rd_undefined_for_flat_profile():
    prof = iso3382.sti_profile_and_rd([(r, 0.6) for r in (2, 4, 6, 8, 10)])
    assert not prof.rd_defined
    assert not iso3382.validate_rd(prof.rd_m, prof.distances)


def test_rd_jittered_matches_root_scan(rng):
    d = np.array([2.0, 4.0, 6.0, 8.0, 10.0, 12.0])
    s = 0.85 - 0.15 * np.log2(d) + rng.normal(0, 0.02, d.size)
    prof = iso3382.sti_profile_and_rd(list(zip(d, s)))
    b, a = np.polyfit(np.log2(d), s, 1)
    x = np.linspace(1.0, 5.0, 4_000_001)
    y = a + b * x - 0.5
    i = np.nonzero(np.diff(np.sign(y)))[0][0]
    root = x[i] - y[i] * (x[i + 1] - x[i]) / (y[i + 1] - y[i])
    assert prof.rd_m == pytest.approx(2 ** root, abs=1e-6)


def test_rd_undefined_when_crossing_overflows():
    # nearly flat, barely decreasing line far above 0.5: 2**x_cross overflows a float
    prof = iso3382.sti_profile_and_rd([(r, 0.95 - 1e-6 * math.log2(r)) for r in (2, 4, 8, 16, 32)])
    assert not prof.rd_defined


def test_rd_linear_abscissa():
    pts = [(r, 0.9 - 0.05 * r) for r in (2, 4, 6, 8, 10)]
    assert iso3382.sti_profile_and_rd(pts, "linear").rd_m == pytest.approx(8.0)


@given(st.permutations(range(6)))
def test_rd_invariant_under_receiver_order(order):
    d = [2.0, 4.0, 6.0, 8.0, 10.0, 12.0]
    s = [0.8, 0.71, 0.6, 0.55, 0.52, 0.41]
    base = iso3382.sti_profile_and_rd(list(zip(d, s))).rd_m
    perm = iso3382.sti_profile_and_rd([(d[i], s[i]) for i in order]).rd_m
    assert perm == pytest.approx(base, rel=1e-12)


def test_validate_rd_window():
    d = [2, 4, 8, 16]
    assert iso3382.validate_rd(17.0, d)
    assert not iso3382.validate_rd(1.5, d)
    assert not iso3382.validate_rd(17.7, d)
    assert iso3382.validate_rd(1.8, d) and iso3382.validate_rd(17.6, d)


# -- background-noise gain --------------------------------------------------------


def _office(noise_db, seed=0):
    spec = synth.SyntheticOfficeSpec(distances=(2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0),
                                     noise=(noise_db,) * 7, t30=(0.4,) * 7, seed=seed)
    return [synth.generate_path(spec, i)[0] for i in (1, 2)]


def test_gain_zero_when_already_valid():
    runs = _office(32.0)
    gain, profiles = iso3382.adjust_background_gain(runs)
    assert gain == 0.0
    assert profiles == [iso3382.sti_profile_for_run(r) for r in runs]


def test_gain_matches_dense_sweep_oracle():
    runs = _office(28.5)
    assert not iso3382.sti_profile_for_run(runs[0]).rd_valid
    gain, _ = iso3382.adjust_background_gain(runs)
    oracle = next(
        g for g in np.arange(0, 10, 0.01)
        if all(iso3382.sti_profile_for_run(r, gain_db=g).rd_valid for r in runs)
    )
    assert 2.0 < oracle < 4.0
    assert abs(gain - oracle) <= 0.1
    assert all(iso3382.sti_profile_for_run(r, gain_db=gain).rd_valid for r in runs)


def test_rd_non_increasing_in_gain():
    run = _office(26.0)[0]
    rds = [iso3382.sti_profile_for_run(run, gain_db=g).rd_m for g in np.arange(-5, 10, 0.5)]
    assert all(b <= a + 1e-9 for a, b in zip(rds, rds[1:]))


def test_gain_without_noise_raises():
    spec = synth.SyntheticOfficeSpec(noise=None, sti_model="linear", sti_intercept=1.4)
    run = synth.generate_path(spec)[0]
    with pytest.raises(iso3382.AdjustmentError) as exc:
        iso3382.adjust_background_gain([run])
    assert exc.value.n_invalid == 1


# -- background level and classification -------------------------------------------


def test_lp_a_b():
    s = OctaveBandSpectrum((30, 35, 40, 38, 33, 28, 20))
    assert iso3382.lp_a_b([s, s, s]) == pytest.approx(a_weighted_sum(s))
    two = iso3382.lp_a_b([OctaveBandSpectrum.flat(40), OctaveBandSpectrum.flat(50)])
    band = 10 * math.log10((1e4 + 1e5) / 2)
    assert two == pytest.approx(a_weighted_sum(OctaveBandSpectrum.flat(band)), abs=1e-12)
    a, b = OctaveBandSpectrum.flat(40), OctaveBandSpectrum((50, 45, 41, 39, 38, 30, 20))
    assert iso3382.lp_a_b([a, b]) == pytest.approx(iso3382.lp_a_b([b, a]), abs=1e-12)


def test_classify_examples():
    assert iso3382.classify_annex_a("d2s", 8.7) == "good"
    assert iso3382.classify_annex_a("rd", 10.5) == "poor"
    assert iso3382.classify_annex_a("d2s", 6.2) == "unclassified"
    with pytest.raises(ValidationError):
        iso3382.classify_annex_a("sti", 0.5)


def test_classify_table_override(tmp_path):
    p = tmp_path / "t.json"
    p.write_text('{"d2s": {"good": 6.0, "poor": 4.0, "higher_is_better": true}}')
    table = iso3382.AnnexAThresholds.load(p)
    assert iso3382.classify_annex_a("d2s", 6.2, table) == "good"
    assert iso3382.classify_annex_a("rd", 4.0, table) == "good"


# -- full metric set ---------------------------------------------------------------


def test_metric_set_recovers_constructed_path():
    spec = synth.SyntheticOfficeSpec(sti_model="linear", noise=None)
    run, truth = synth.generate_path(spec)
    ms = iso3382.compute_metric_set(run)
    assert ms.d2s_db == pytest.approx(6.0, abs=1e-6)
    assert ms.d2s_db == pytest.approx(truth.d2s, abs=1e-6)
    assert ms.lpas4m_db == pytest.approx(truth.lpas4m, abs=1e-6)
    assert ms.rd_m == pytest.approx(4.0, abs=1e-4)


def test_metric_set_with_undefined_rd_keeps_other_metrics():
    spec = synth.SyntheticOfficeSpec(sti_model="linear", noise=None, sti_slope=0.05)
    run, truth = synth.generate_path(spec)
    gain, sets = iso3382.compute_office([run])
    ms = sets[0]
    assert not ms.rd_defined and not ms.rd_valid
    assert ms.d2s_db == pytest.approx(truth.d2s, abs=1e-9)
    assert any("undefined" in w for w in ms.warnings)


@pytest.mark.parametrize("d2s,lp4", [(6.2, 46.5), (8.7, 47.1), (3.9, 52.4), (10.0, 44.0)])
def test_metric_set_on_table_shaped_fixture(d2s, lp4):
    # invert the regression: each receiver's speech spectrum is the nominal one, shifted
    src = OctaveBandSpectrum((92, 91, 90, 89, 88, 87, 86))
    a_speech = a_weighted_sum(OctaveBandSpectrum(iso3382.SPEECH_POWER_DB))
    recs = []
    for i, r in enumerate((2.0, 4.5, 7.0, 9.5, 12.0)):
        shift = lp4 - d2s * math.log2(r / 4) - a_speech
        meas = tuple(s + shift for s in src.levels)
        recs.append(ReceiverPoint(r, OctaveBandSpectrum(meas), t30=(0.5,) * 7, receiver_id=f"R{i}"))
    ms = iso3382.compute_metric_set(PathMeasurement("x", "1", 1, tuple(recs), src))
    assert ms.d2s_db == pytest.approx(d2s, abs=0.05)
    assert ms.lpas4m_db == pytest.approx(lp4, abs=0.05)
    assert ms.t30_mid_s == pytest.approx(0.5)


@given(st.floats(-20, 20))
def test_level_metrics_invariant_under_common_shift(c):
    run, _ = synth.generate_path(synth.SyntheticOfficeSpec())
    shifted = PathMeasurement(
        run.office_id, run.path_id, 1,
        tuple(ReceiverPoint(r.distance_m, r.spectrum.shifted(c), r.noise, r.mtf, r.t30, r.receiver_id)
              for r in run.receivers),
        run.source_power.shifted(c),
    )
    a, b = iso3382.compute_metric_set(run), iso3382.compute_metric_set(shifted)
    assert b.d2s_db == pytest.approx(a.d2s_db, abs=1e-9)
    assert b.lpas4m_db == pytest.approx(a.lpas4m_db, abs=1e-9)


def test_zero_gain_is_bit_identical_for_noise_free_paths():
    run, _ = synth.generate_path(synth.SyntheticOfficeSpec(noise=None, sti_model="linear"))
    gain, sets = iso3382.compute_office([run], AnalysisOptions())
    assert gain == 0.0
    assert sets[0] == iso3382.compute_metric_set(run, AnalysisOptions(), 0.0)


def test_extrapolation_warning():
    spec = synth.SyntheticOfficeSpec(distances=(5.0, 6.0, 7.0, 8.0, 9.0))
    ms = iso3382.compute_metric_set(synth.generate_path(spec)[0])
    assert any("extrapolated" in w for w in ms.warnings)
