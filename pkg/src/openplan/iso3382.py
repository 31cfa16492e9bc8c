"""ISO 3382-3 single-number quantities for one measurement path.

Speech levels are obtained by transposing the measured band levels from the
calibrated source's sound power to the normal-effort speech spectrum. The
spatial decay of A-weighted speech gives D2,S and Lp,A,S,4m; the decay of STI
gives the distraction distance rD.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Literal, Optional, Sequence

import numpy as np

from .core import (
    BAND_CENTERS,
    N_BANDS,
    MetricSet,
    OctaveBandSpectrum,
    PathMeasurement,
    ValidationError,
    a_weighted_sum,
    energetic_mean_spectrum,
)
from . import dsp

log = logging.getLogger(__name__)

# ISO 3382-3:2012 Table 1, sound power of normal-effort speech, dB re 1 pW.
SPEECH_POWER_DB: tuple[float, ...] = (60.9, 65.3, 69.0, 63.0, 55.8, 49.8, 44.5)

# IEC 60268-16:2011 Table A.3, male octave weights and redundancy factors.
MALE_ALPHA: tuple[float, ...] = (0.085, 0.127, 0.230, 0.233, 0.309, 0.224, 0.173)
MALE_BETA: tuple[float, ...] = (0.085, 0.078, 0.065, 0.011, 0.047, 0.095)

STI_THRESHOLD = 0.5

Abscissa = Literal["log2", "linear"]


class AdjustmentError(RuntimeError):
    """No uniform noise gain within the search window validates every path."""

    def __init__(self, message: str, best_gain_db: float, n_invalid: int):
        super().__init__(message)
        self.best_gain_db = best_gain_db
        self.n_invalid = n_invalid


@dataclass(frozen=True)
class SpeechSpectrumModel:
    power_db: tuple[float, ...] = SPEECH_POWER_DB

    def __post_init__(self):
        if len(self.power_db) != N_BANDS:
            raise ValidationError("speech spectrum needs 7 bands")

    def spectrum(self) -> OctaveBandSpectrum:
        return OctaveBandSpectrum(self.power_db)


@dataclass(frozen=True)
class StiWeights:
    alpha: tuple[float, ...] = MALE_ALPHA
    beta: tuple[float, ...] = MALE_BETA

    def __post_init__(self):
        if len(self.alpha) != N_BANDS or len(self.beta) != N_BANDS - 1:
            raise ValidationError("STI weights need 7 alpha and 6 beta values")


@dataclass(frozen=True)
class AnnexAThresholds:
    """Good/poor limits per metric. ``higher_is_better`` flips the comparisons."""

    limits: dict = field(default_factory=lambda: {
        "rd": {"good": 5.0, "poor": 10.0, "higher_is_better": False},
        "d2s": {"good": 7.0, "poor": 5.0, "higher_is_better": True},
        "lpas4m": {"good": 48.0, "poor": 50.0, "higher_is_better": False},
    })

    @classmethod
    def load(cls, path) -> "AnnexAThresholds":
        data = json.loads(Path(path).read_text())
        base = cls().limits
        base.update(data)
        return cls(base)


@dataclass(frozen=True)
class SpatialDecayFit:
    slope: float
    intercept: float
    r_squared: float
    n_points: int

    @property
    def d2s_db(self) -> float:
        return -self.slope

    def level_at(self, distance_m: float) -> float:
        return self.intercept + self.slope * math.log2(distance_m)

    @property
    def lpas4m_db(self) -> float:
        return self.level_at(4.0)


@dataclass(frozen=True)
class StiProfile:
    distances: tuple[float, ...]
    sti: tuple[float, ...]
    slope: float
    intercept: float
    r_squared: float
    rd_m: Optional[float]
    abscissa: str = "log2"
    rd_valid: bool = False
    noise_gain_db: float = 0.0

    @property
    def rd_defined(self) -> bool:
        return self.rd_m is not None


@dataclass(frozen=True)
class AnalysisOptions:
    abscissa: Abscissa = "log2"
    speech: SpeechSpectrumModel = SpeechSpectrumModel()
    weights: StiWeights = StiWeights()
    gain_window_db: float = 20.0
    gain_grid_db: float = 0.5
    gain_resolution_db: float = 0.1
    adjust_noise: bool = True
    mtf_noise_subtract: bool = False


def _r_squared(y: np.ndarray, fitted: np.ndarray) -> float:
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0:
        return 1.0
    return min(1.0, max(0.0, 1.0 - ss_res / ss_tot))


def _ols(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    return slope, float(ym - slope * xm)


def speech_level_at_receiver(
    measured: OctaveBandSpectrum,
    source_power: OctaveBandSpectrum,
    speech_model: SpeechSpectrumModel = SpeechSpectrumModel(),
) -> OctaveBandSpectrum:
    lv = measured.array("measured") - source_power.array("source power") + np.asarray(speech_model.power_db)
    return OctaveBandSpectrum(tuple(lv))


def fit_spatial_decay(points: Sequence[tuple[float, float]]) -> SpatialDecayFit:
    """OLS of A-weighted speech level on log2(distance)."""
    if len(points) < 2:
        raise ValidationError("spatial decay fit needs at least two points")
    d = np.array([p[0] for p in points], dtype=float)
    y = np.array([p[1] for p in points], dtype=float)
    if np.any(d <= 0):
        raise ValidationError("distances must be positive")
    x = np.log2(d)
    if np.ptp(x) == 0:
        raise ValidationError("all distances are equal")
    slope, intercept = _ols(x, y)
    return SpatialDecayFit(slope, intercept, _r_squared(y, intercept + slope * x), len(points))


def sti(mtf: np.ndarray, weights: StiWeights = StiWeights()) -> float:
    """STI from a 7 x 14 matrix of (noise-corrected) modulation transfer values."""
    m = np.asarray(mtf, dtype=float)
    if m.shape != (N_BANDS, len(dsp.MODULATION_FREQUENCIES)):
        raise ValidationError(f"MTF matrix must be 7x14, got {m.shape}")
    if np.any(~np.isfinite(m)) or m.min() < 0 or m.max() > 1:
        raise ValidationError("MTF entries must lie in [0, 1]")
    with np.errstate(divide="ignore"):
        snr = 10 * np.log10(m / (1 - m))
    snr = np.clip(snr, -15.0, 15.0)
    ti = (snr + 15.0) / 30.0
    mti = ti.mean(axis=1)
    alpha, beta = np.asarray(weights.alpha), np.asarray(weights.beta)
    value = float(alpha @ mti - beta @ np.sqrt(mti[:-1] * mti[1:]))
    return min(1.0, max(0.0, value))


def _abscissa(d: np.ndarray, mode: str) -> np.ndarray:
    if mode == "log2":
        return np.log2(d)
    if mode == "linear":
        return d
    raise ValidationError(f"unknown abscissa {mode!r}")


def sti_profile_and_rd(
    receivers: Sequence[tuple[float, float]], abscissa: Abscissa = "log2"
) -> StiProfile:
    """Regress STI on distance and locate the 0.5 crossing.

    rD is left undefined unless the fitted line decreases with distance and
    the crossing maps back to a finite positive distance.
    """
    if len(receivers) < 2:
        raise ValidationError("STI regression needs at least two receivers")
    d = np.array([r[0] for r in receivers], dtype=float)
    s = np.clip(np.array([r[1] for r in receivers], dtype=float), 0.0, 1.0)
    x = _abscissa(d, abscissa)
    if np.ptp(x) == 0:
        raise ValidationError("all distances are equal")
    slope, intercept = _ols(x, s)
    rd = None
    if slope < 0:
        x_cross = (STI_THRESHOLD - intercept) / slope
        try:
            cand = 2.0 ** x_cross if abscissa == "log2" else x_cross
        except OverflowError:
            cand = math.inf
        if math.isfinite(cand) and cand > 0:
            rd = float(cand)
    return StiProfile(tuple(d), tuple(s), slope, intercept,
                      _r_squared(s, intercept + slope * x), rd, abscissa)


def validate_rd(rd_m: Optional[float], distances: Sequence[float]) -> bool:
    if rd_m is None:
        return False
    d = np.asarray(distances, dtype=float)
    return bool(0.9 * d.min() <= rd_m <= 1.1 * d.max())


def lp_a_b(noise_spectra: Sequence[OctaveBandSpectrum]) -> float:
    if not noise_spectra:
        raise ValidationError("no background noise spectra")
    return a_weighted_sum(energetic_mean_spectrum(list(noise_spectra)))


def classify_annex_a(metric_id: str, value: float, table: AnnexAThresholds = AnnexAThresholds()) -> str:
    try:
        lim = table.limits[metric_id]
    except KeyError:
        raise ValidationError(f"unknown metric {metric_id!r}; known: {sorted(table.limits)}") from None
    good, poor = lim["good"], lim["poor"]
    if lim.get("higher_is_better", False):
        if value >= good:
            return "good"
        if value < poor:
            return "poor"
    else:
        if value <= good:
            return "good"
        if value >= poor:
            return "poor"
    return "unclassified"


# -- per-run pipeline -------------------------------------------------------


def path_noise_spectrum(run: PathMeasurement) -> Optional[OctaveBandSpectrum]:
    """Energetic mean of the noise spectra recorded along the path, if any."""
    spectra = [r.noise for r in run.receivers if r.noise is not None]
    return energetic_mean_spectrum(spectra) if spectra else None


def receiver_mtf(receiver, options: AnalysisOptions) -> np.ndarray:
    """Noise-free 7 x 14 MTF for one receiver."""
    if receiver.mtf is not None:
        return np.asarray(receiver.mtf, dtype=float)
    n_mod = len(dsp.MODULATION_FREQUENCIES)
    if receiver.t30 is not None:
        rows = []
        for t in receiver.t30:
            rows.append(np.ones(n_mod) if t is None or t <= 0 else dsp.exponential_mtf(t))
        return np.array(rows)
    return np.ones((N_BANDS, n_mod))


def speech_levels(run: PathMeasurement, options: AnalysisOptions = AnalysisOptions()) -> list[OctaveBandSpectrum]:
    return [speech_level_at_receiver(r.spectrum, run.source_power, options.speech) for r in run.receivers]


def sti_profile_for_run(
    run: PathMeasurement, options: AnalysisOptions = AnalysisOptions(), gain_db: float = 0.0
) -> StiProfile:
    """STI at every receiver with the path-averaged noise raised by ``gain_db``."""
    noise = path_noise_spectrum(run)
    if noise is not None:
        noise_arr = noise.array("noise") + gain_db
    pts = []
    for rec, speech in zip(run.receivers, speech_levels(run, options)):
        m = receiver_mtf(rec, options)
        if noise is not None:
            snr = speech.array("speech") - noise_arr
            m = dsp.apply_noise_correction(m, snr[:, None])
        pts.append((rec.distance_m, sti(m, options.weights)))
    prof = sti_profile_and_rd(pts, options.abscissa)
    return replace(prof, rd_valid=validate_rd(prof.rd_m, run.distances), noise_gain_db=gain_db)


def _office_valid(runs: Sequence[PathMeasurement], options: AnalysisOptions, gain: float) -> tuple[bool, int]:
    profiles = [sti_profile_for_run(r, options, gain) for r in runs]
    n_bad = sum(not p.rd_valid for p in profiles)
    return n_bad == 0, n_bad


def adjust_background_gain(
    runs: Sequence[PathMeasurement], options: AnalysisOptions = AnalysisOptions()
) -> tuple[float, list[StiProfile]]:
    """Smallest-magnitude uniform noise gain making every run's rD valid.

    Candidates on the grid are tried in order of increasing magnitude
    (positive before negative on ties); the first valid one is refined by
    bisection against its invalid neighbour toward zero.
    """
    if not runs:
        raise ValidationError("no runs to adjust")
    ok, n_bad = _office_valid(runs, options, 0.0)
    if ok:
        return 0.0, [sti_profile_for_run(r, options, 0.0) for r in runs]
    if all(path_noise_spectrum(r) is None for r in runs):
        raise AdjustmentError("no background noise recorded; gain cannot change rD", 0.0, n_bad)

    step, window = options.gain_grid_db, options.gain_window_db
    n_steps = int(round(window / step))
    best_gain, best_bad = 0.0, n_bad
    found = None
    for i in range(1, n_steps + 1):
        for sign in (1.0, -1.0):
            g = sign * i * step
            ok, n_bad = _office_valid(runs, options, g)
            if ok:
                found = g
                break
            if n_bad < best_bad:
                best_gain, best_bad = g, n_bad
        if found is not None:
            break
    if found is None:
        raise AdjustmentError(
            f"no uniform gain within +/-{window} dB validates all {len(runs)} paths "
            f"(best attempt {best_gain:+.1f} dB leaves {best_bad} invalid)",
            best_gain, best_bad,
        )

    valid_g, invalid_g = found, found - math.copysign(step, found)
    while abs(valid_g - invalid_g) > options.gain_resolution_db:
        mid = 0.5 * (valid_g + invalid_g)
        if _office_valid(runs, options, mid)[0]:
            valid_g = mid
        else:
            invalid_g = mid
    return valid_g, [sti_profile_for_run(r, options, valid_g) for r in runs]


def compute_metric_set(
    run: PathMeasurement,
    options: AnalysisOptions = AnalysisOptions(),
    noise_gain_db: float = 0.0,
    t30_mid_s: Optional[float] = None,
) -> MetricSet:
    warnings = []
    points = [(r.distance_m, a_weighted_sum(s)) for r, s in zip(run.receivers, speech_levels(run, options))]
    fit = fit_spatial_decay(points)
    d = run.distances
    if not d.min() <= 4.0 <= d.max():
        warnings.append(f"Lp,A,S,4m extrapolated: receivers span {d.min():g}-{d.max():g} m")

    prof = sti_profile_for_run(run, options, noise_gain_db)
    if not prof.rd_defined:
        warnings.append("rD undefined: STI regression does not fall through 0.5")
    elif not prof.rd_valid:
        warnings.append(f"rD {prof.rd_m:.2f} m outside the 10%-extended measured span")

    noise = [r.noise for r in run.receivers if r.noise is not None]
    lpab = lp_a_b(noise) if noise else None

    if t30_mid_s is None:
        per_rec = [dict(zip(BAND_CENTERS, r.t30)) for r in run.receivers if r.t30 is not None]
        if per_rec:
            try:
                t30_mid_s = dsp.t30_mid(per_rec)
            except ValidationError:
                t30_mid_s = None

    return MetricSet(
        d2s_db=fit.d2s_db,
        lpas4m_db=fit.lpas4m_db,
        rd_m=prof.rd_m,
        rd_valid=prof.rd_valid,
        fit_r2_speech=fit.r_squared,
        fit_r2_sti=prof.r_squared,
        lpab_dba=lpab,
        t30_mid_s=t30_mid_s,
        noise_gain_db=noise_gain_db,
        warnings=tuple(warnings),
    )


def compute_office(
    runs: Sequence[PathMeasurement], options: AnalysisOptions = AnalysisOptions()
) -> tuple[float, list[MetricSet]]:
    """Metric sets for every run in one office, with a shared noise gain if needed.

    When no gain achieves validity the runs are still evaluated at 0 dB and
    the failure is carried as a warning.
    """
    gain, note = 0.0, None
    if options.adjust_noise:
        try:
            gain, _ = adjust_background_gain(runs, options)
        except AdjustmentError as exc:
            note = str(exc)
            log.warning("office %s: %s", runs[0].office_id, exc)
    out = []
    for run in runs:
        ms = compute_metric_set(run, options, gain)
        if note:
            ms = replace(ms, warnings=ms.warnings + (note,))
        elif gain != 0.0:
            ms = replace(ms, warnings=ms.warnings + (f"background noise adjusted by {gain:+.2f} dB",))
        out.append(ms)
    return gain, out
