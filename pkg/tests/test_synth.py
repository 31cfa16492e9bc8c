import math
import warnings

import numpy as np
import pytest

from openplan import dsp, iso3382, synth
from openplan.core import ValidationError
from openplan.repeatstats import delta_range, variance_components


def test_flat_decay_ground_truth():
    run, truth = synth.generate_path(synth.SyntheticOfficeSpec())
    assert truth.d2s == pytest.approx(6.0, abs=1e-12)
    assert truth.lpab == pytest.approx(iso3382.lp_a_b([r.noise for r in run.receivers]))
    assert truth.t30_mid == 0.5


def test_noiseless_rd_matches_root_scan():
    spec = synth.SyntheticOfficeSpec(noise=None, sti_model="linear", sti_intercept=0.95, sti_slope=-0.17)
    run, truth = synth.generate_path(spec)
    x = np.linspace(0, 6, 6_000_001)
    y = 0.95 - 0.17 * x - 0.5
    i = np.nonzero(np.diff(np.sign(y)))[0][0]
    scan = 2 ** (x[i] - y[i] * (x[i + 1] - x[i]) / (y[i + 1] - y[i]))
    ms = iso3382.compute_metric_set(run)
    assert ms.rd_m == pytest.approx(scan, abs=1e-4)
    assert truth.rd == pytest.approx(scan, abs=1e-4)


@pytest.mark.parametrize("noise", [None, (32.0,) * 7])
def test_snr_model_round_trip(noise):
    run, truth = synth.generate_path(synth.SyntheticOfficeSpec(noise=noise, decay_db=(5, 5.5, 6, 6.5, 7, 7.5, 8)))
    ms = iso3382.compute_metric_set(run)
    assert ms.d2s_db == pytest.approx(truth.d2s, abs=1e-6)
    assert ms.lpas4m_db == pytest.approx(truth.lpas4m, abs=1e-6)
    if truth.rd is None:
        assert ms.rd_m is None
    else:
        assert ms.rd_m == pytest.approx(truth.rd, abs=1e-4)


def test_zero_perturbation_pair_has_zero_ranges():
    (a, ta), (b, tb) = synth.generate_repeat_pair(synth.SyntheticOfficeSpec())
    ma, mb = iso3382.compute_metric_set(a), iso3382.compute_metric_set(b)
    assert ma.d2s_db == mb.d2s_db and ma.lpas4m_db == mb.lpas4m_db and ma.rd_m == mb.rd_m
    assert ta == tb


def test_perturbed_pair_is_seeded():
    spec = synth.SyntheticOfficeSpec(level_sd_db=1.0, decay_sd_db=0.5, seed=3)
    first = [t for _, t in synth.generate_repeat_pair(spec)]
    again = [t for _, t in synth.generate_repeat_pair(spec)]
    assert first == again
    assert first[0].d2s != first[1].d2s


def test_generate_ir_t30_and_mtf():
    ir = synth.generate_ir(0.5, seed=1)
    assert dsp.t30(dsp.schroeder_decay(ir)).t30_s == pytest.approx(0.5, rel=0.01)
    ir1 = synth.generate_ir(1.0, seed=2)
    assert dsp.mtf_from_ir(ir1, frequencies=[1.0])[0] == pytest.approx(0.910, abs=0.005)


def test_generate_ir_deterministic_and_short_warning():
    assert np.array_equal(synth.generate_ir(0.4, seed=5).samples, synth.generate_ir(0.4, seed=5).samples)
    with pytest.warns(synth.ShortIRWarning):
        synth.generate_ir(1.0, length=1.0)
    with pytest.raises(ValidationError):
        synth.generate_ir(0.0)


def test_repeat_study_without_within_noise():
    groups, truth = synth.generate_repeat_study(20, 2, 2.0, 0.0, seed=1)
    assert truth.icc == 1.0
    assert variance_components(groups).icc == 1.0


def test_repeat_study_icc_recovery():
    groups, truth = synth.generate_repeat_study(500, 2, 3.0, 1.0, seed=9)
    assert truth.icc == pytest.approx(0.9)
    assert variance_components(groups).icc == pytest.approx(0.9, abs=0.03)


def test_repeat_study_mean_range():
    groups, _ = synth.generate_repeat_study(100_000, 2, 1.0, 0.8, seed=2)
    mean = np.mean([delta_range(g).delta for g in groups])
    assert mean == pytest.approx(2 * 0.8 / math.sqrt(math.pi), rel=0.02)


def test_spec_validation():
    with pytest.raises(ValidationError):
        synth.SyntheticOfficeSpec(distances=(4.0, 3.0))
    with pytest.raises(ValidationError):
        synth.SyntheticOfficeSpec(level_1m=(80.0,) * 6)
