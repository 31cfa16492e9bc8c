"""Synthetic offices, impulse responses and repeat studies with known answers."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Literal, Optional, Sequence

import numpy as np

from . import dsp, iso3382
from .core import (
    A_WEIGHTS_DB,
    BAND_CENTERS,
    N_BANDS,
    OctaveBandSpectrum,
    PathMeasurement,
    ReceiverPoint,
    ValidationError,
    a_weighted_sum,
)
from .repeatstats import RepeatGroup


class ShortIRWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SyntheticOfficeSpec:
    """Parameters of one synthetic path.

    Measured band level at distance r is ``level_1m - decay_db * log2(r)``.
    With ``sti_model="snr"`` the STI follows from exponential-decay MTFs
    (``t30``) degraded by the noise; with ``"linear"`` every receiver's MTF is
    set so that STI = ``sti_intercept + sti_slope * log2(r)`` exactly.
    """

    distances: tuple[float, ...] = (2.0, 4.0, 6.0, 8.0, 10.0, 12.0)
    level_1m: tuple[float, ...] = (85.0,) * N_BANDS
    decay_db: tuple[float, ...] = (6.0,) * N_BANDS
    source_power: tuple[float, ...] = (90.0,) * N_BANDS
    noise: Optional[tuple[float, ...]] = (30.0,) * N_BANDS
    t30: tuple[float, ...] = (0.5,) * N_BANDS
    sti_model: Literal["snr", "linear"] = "snr"
    sti_intercept: float = 0.9
    sti_slope: float = -0.2
    level_sd_db: float = 0.0
    decay_sd_db: float = 0.0
    seed: int = 0
    office_id: str = "S1"
    path_id: str = "1"

    def __post_init__(self):
        d = np.asarray(self.distances, dtype=float)
        if d.size < 2 or np.any(d <= 0) or np.any(np.diff(d) <= 0):
            raise ValidationError("distances must be positive and strictly increasing")
        if min(self.decay_db) < 0:
            raise ValidationError("decay rates must be >= 0")
        for name in ("level_1m", "decay_db", "source_power", "t30"):
            if len(getattr(self, name)) != N_BANDS:
                raise ValidationError(f"{name} needs {N_BANDS} bands")


@dataclass(frozen=True)
class GroundTruth:
    d2s: float
    lpas4m: float
    rd: Optional[float]
    lpab: Optional[float]
    t30_mid: float

    def to_dict(self) -> dict:
        return {"d2s": self.d2s, "lpas4m": self.lpas4m, "rd": self.rd, "lpab": self.lpab, "t30_mid": self.t30_mid}


def _uniform_mtf_for_sti(target: float) -> np.ndarray:
    """7 x 14 MTF whose STI equals ``target`` (male weights sum to one)."""
    ti = min(max(target, 0.0), 1.0)
    snr = 30.0 * ti - 15.0
    m = 1.0 / (1.0 + 10.0 ** (-snr / 10.0))
    return np.full((N_BANDS, len(dsp.MODULATION_FREQUENCIES)), m)


def _root_scan(fn, lo: float, hi: float, n: int = 200_001) -> Optional[float]:
    """First sign change of ``fn`` on a dense grid, refined linearly."""
    x = np.linspace(lo, hi, n)
    y = fn(x)
    idx = np.nonzero(np.diff(np.sign(y)) != 0)[0]
    if idx.size == 0:
        return None
    i = idx[0]
    return float(x[i] - y[i] * (x[i + 1] - x[i]) / (y[i + 1] - y[i]))


def generate_path(
    spec: SyntheticOfficeSpec,
    run_index: int = 1,
    rng: Optional[np.random.Generator] = None,
) -> tuple[PathMeasurement, GroundTruth]:
    """One run along the path; ``rng`` adds the spec's repeat perturbations."""
    level = np.asarray(spec.level_1m, dtype=float)
    decay = np.asarray(spec.decay_db, dtype=float)
    if rng is not None:
        level = level + rng.normal(0.0, spec.level_sd_db) if spec.level_sd_db else level
        decay = decay + rng.normal(0.0, spec.decay_sd_db) if spec.decay_sd_db else decay
    d = np.asarray(spec.distances, dtype=float)
    src = OctaveBandSpectrum(spec.source_power)
    noise = None if spec.noise is None else OctaveBandSpectrum(spec.noise)

    # exact speech spectra and A-levels, computed without the pipeline
    speech_shift = np.asarray(iso3382.SPEECH_POWER_DB) - np.asarray(spec.source_power)
    a_w = np.asarray(A_WEIGHTS_DB)
    band_speech = level[None, :] - decay[None, :] * np.log2(d)[:, None] + speech_shift[None, :]
    a_levels = 10 * np.log10(np.sum(10 ** ((band_speech + a_w) / 10), axis=1))
    slope, intercept = np.polyfit(np.log2(d), a_levels, 1)

    receivers = []
    sti_vals = []
    for j, r in enumerate(d):
        meas = OctaveBandSpectrum(tuple(level - decay * math.log2(r)))
        kw = {}
        if spec.sti_model == "linear":
            target = spec.sti_intercept + spec.sti_slope * math.log2(r)
            m = _uniform_mtf_for_sti(target)
            kw["mtf"] = tuple(map(tuple, m))
        else:
            m = np.array([dsp.exponential_mtf(t) for t in spec.t30])
            kw["t30"] = tuple(spec.t30)
        if noise is not None:
            snr = band_speech[j] - np.asarray(spec.noise)
            m = m / (1.0 + 10 ** (-snr[:, None] / 10))
        sti_vals.append(iso3382.sti(m))
        receivers.append(ReceiverPoint(float(r), meas, noise, receiver_id=f"R{j + 1}", **kw))

    if spec.sti_model == "linear" and noise is None:
        b, a = spec.sti_slope, spec.sti_intercept
        rd = 2.0 ** ((0.5 - a) / b) if b < 0 else None
    else:
        sb, sa = np.polyfit(np.log2(d), sti_vals, 1)
        rd = None
        if sb < 0:
            x = _root_scan(lambda x: sa + sb * x - 0.5, -10.0, 10.0)
            rd = None if x is None else 2.0 ** x

    run = PathMeasurement(
        spec.office_id, spec.path_id, run_index, tuple(receivers), src,
        direction="forward" if run_index == 1 else "reverse",
        min_receivers=min(5, len(receivers)),
    )
    truth = GroundTruth(
        d2s=float(-slope),
        lpas4m=float(intercept + slope * 2.0),
        rd=rd,
        lpab=None if noise is None else a_weighted_sum(noise),
        t30_mid=float(np.mean([spec.t30[BAND_CENTERS.index(500)], spec.t30[BAND_CENTERS.index(1000)]])),
    )
    return run, truth


def generate_repeat_pair(spec: SyntheticOfficeSpec) -> list[tuple[PathMeasurement, GroundTruth]]:
    """Two runs of the same path, independently perturbed per the spec's SDs."""
    rng = np.random.default_rng(spec.seed)
    return [generate_path(spec, i, rng) for i in (1, 2)]


def generate_ir(
    t60: float,
    sample_rate: float = 48_000,
    length: Optional[float] = None,
    seed: int = 0,
    receiver_id: str = "",
) -> dsp.ImpulseResponse:
    """Gaussian noise under an exponential envelope decaying 60 dB in ``t60`` seconds."""
    if not t60 > 0:
        raise ValidationError("reverberation time must be > 0")
    if length is None:
        length = 2.0 * t60
    if length < 1.5 * t60:
        warnings.warn(f"IR length {length} s is shorter than 1.5 T ({1.5 * t60} s)", ShortIRWarning)
    n = int(round(length * sample_rate))
    t = np.arange(n) / sample_rate
    noise = np.random.default_rng(seed).standard_normal(n)
    return dsp.ImpulseResponse(noise * np.exp(-0.5 * dsp.DECAY_60DB * t / t60), sample_rate, receiver_id)


def synthesize_sweep_recording(sweep: dsp.SweepSpec, ir: Sequence[float]) -> np.ndarray:
    """Sweep convolved with an impulse response (full linear convolution)."""
    from scipy.signal import fftconvolve

    return fftconvolve(sweep.generate(), np.asarray(ir, dtype=float))


@dataclass(frozen=True)
class RepeatStudyTruth:
    sigma_b: float
    sigma_w: float
    seed: int

    @property
    def icc(self) -> float:
        tot = self.sigma_b ** 2 + self.sigma_w ** 2
        return self.sigma_b ** 2 / tot if tot else math.nan


def generate_repeat_study(
    n_groups: int,
    k: int,
    sigma_b: float,
    sigma_w: float,
    seed: int = 0,
    mean: float = 0.0,
    metric_id: str = "synthetic",
) -> tuple[list[RepeatGroup], RepeatStudyTruth]:
    if n_groups < 2 or k < 2:
        raise ValidationError("need n_groups >= 2 and k >= 2")
    rng = np.random.default_rng(seed)
    centers = mean + rng.normal(0.0, sigma_b, n_groups)
    obs = centers[:, None] + rng.normal(0.0, sigma_w, (n_groups, k))
    groups = [RepeatGroup(f"G{i + 1}", metric_id, tuple(row)) for i, row in enumerate(obs)]
    return groups, RepeatStudyTruth(sigma_b, sigma_w, seed)
