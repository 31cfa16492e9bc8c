"""Sweep deconvolution, octave filtering, Schroeder decay, T30 and MTF.

All routines are pure functions of numpy arrays; nothing here touches disk.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy import fft as sp_fft
from scipy import signal as sps

from .core import ValidationError

MODULATION_FREQUENCIES: tuple[float, ...] = (
    0.63, 0.8, 1.0, 1.25, 1.6, 2.0, 2.5, 3.15, 4.0, 5.0, 6.3, 8.0, 10.0, 12.5,
)

# ln(10^6): 60 dB of energy decay expressed in nepers of the energy envelope
DECAY_60DB = 6.0 * np.log(10.0)


class InsufficientDecayError(ValueError):
    pass


@dataclass(frozen=True)
class ImpulseResponse:
    """Sampled impulse response; ``onset`` is the index of lag zero."""

    samples: np.ndarray
    sample_rate: float
    receiver_id: str = ""
    onset: int = 0

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=float)
        if x.ndim != 1 or x.size == 0:
            raise ValidationError("impulse response must be a non-empty 1-D sequence")
        if not self.sample_rate > 0:
            raise ValidationError(f"sample_rate must be > 0, got {self.sample_rate}")
        if not np.all(np.isfinite(x)):
            raise ValidationError("impulse response contains non-finite samples")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)

    @property
    def times(self) -> np.ndarray:
        return (np.arange(self.samples.size) - self.onset) / self.sample_rate

    def replace(self, samples: np.ndarray, onset: Optional[int] = None) -> "ImpulseResponse":
        return ImpulseResponse(samples, self.sample_rate, self.receiver_id,
                               self.onset if onset is None else onset)


@dataclass(frozen=True)
class SweepSpec:
    """Exponential sine sweep, unit amplitude."""

    f_start: float
    f_end: float
    duration: float
    sample_rate: float
    amplitude: float = 1.0

    def __post_init__(self):
        if not 0 < self.f_start < self.f_end <= self.sample_rate / 2:
            raise ValidationError(
                f"sweep needs 0 < f_start < f_end <= Nyquist, got "
                f"{self.f_start}, {self.f_end} at fs={self.sample_rate}"
            )
        if not self.duration > 0:
            raise ValidationError("sweep duration must be > 0")

    @property
    def n_samples(self) -> int:
        return int(round(self.duration * self.sample_rate))

    def generate(self) -> np.ndarray:
        t = np.arange(self.n_samples) / self.sample_rate
        rate = self.duration / np.log(self.f_end / self.f_start)
        return self.amplitude * np.sin(2 * np.pi * self.f_start * rate * (np.exp(t / rate) - 1))


@dataclass(frozen=True)
class DecayCurve:
    times: np.ndarray
    levels_db: np.ndarray
    truncation_index: int
    degenerate: bool


@dataclass(frozen=True)
class T30Result:
    t30_s: float
    slope_db_per_s: float
    intercept_db: float
    correlation: float
    n_points: int


def deconvolve_sweep(
    recording: Sequence[float],
    sweep: SweepSpec,
    recording_rate: Optional[float] = None,
    ir_length: Optional[float] = None,
    pre_window: float = 0.005,
    regularization: float = 1e-6,
    receiver_id: str = "",
) -> ImpulseResponse:
    """Linear deconvolution of a sweep recording by regularized spectral division.

    The full linear (non-circular) product is formed, so harmonic distortion
    products appear at negative lags; the returned window keeps ``pre_window``
    seconds before lag zero and ``ir_length`` seconds after it (default: the
    recording's excess length over the sweep).
    """
    rec = np.asarray(recording, dtype=float)
    fs = sweep.sample_rate if recording_rate is None else recording_rate
    if fs != sweep.sample_rate:
        raise ValidationError(f"recording rate {fs} Hz does not match sweep rate {sweep.sample_rate} Hz")
    x = sweep.generate()
    if rec.size < x.size:
        raise ValidationError(f"recording ({rec.size} samples) shorter than sweep ({x.size} samples)")

    n = int(sp_fft.next_fast_len(rec.size + x.size))
    X = np.fft.rfft(x, n)
    R = np.fft.rfft(rec, n)
    freqs = np.fft.rfftfreq(n, 1 / fs)
    power = np.abs(X) ** 2
    in_band = (freqs >= sweep.f_start) & (freqs <= sweep.f_end)
    ref = power[in_band].max()
    # weak regularization in band, strong outside it
    eps = np.where(in_band, regularization * ref, ref)
    h = np.fft.irfft(R * np.conj(X) / (power + eps), n)

    n_pre = int(round(pre_window * fs))
    if ir_length is None:
        n_post = rec.size - x.size + int(round(0.1 * fs))
    else:
        n_post = int(round(ir_length * fs))
    n_post = max(1, min(n_post, n - n_pre))
    out = np.concatenate([h[n - n_pre:], h[:n_post]]) if n_pre else h[:n_post]
    return ImpulseResponse(out, fs, receiver_id, onset=n_pre)


def octave_band_edges(band_center: float) -> tuple[float, float]:
    return band_center / np.sqrt(2.0), band_center * np.sqrt(2.0)


def octave_sos(band_center: float, sample_rate: float, order: int = 12) -> np.ndarray:
    """Butterworth band-pass sections; ``order`` counts the band-pass order."""
    lo, hi = octave_band_edges(band_center)
    if hi >= sample_rate / 2:
        raise ValidationError(
            f"{band_center} Hz octave (upper edge {hi:.0f} Hz) is above Nyquist at fs={sample_rate}"
        )
    if order % 2:
        raise ValidationError("band-pass order must be even")
    return sps.butter(order // 2, [lo, hi], btype="bandpass", fs=sample_rate, output="sos")


def octave_filter(ir: ImpulseResponse, band_center: float, zero_phase: bool = False, order: int = 12) -> ImpulseResponse:
    """Octave band-pass. ``zero_phase=True`` runs the filter forward and backward."""
    sos = octave_sos(band_center, ir.sample_rate, order)
    if zero_phase:
        y = sps.sosfiltfilt(sos, ir.samples)
    else:
        y = sps.sosfilt(sos, ir.samples)
    return ir.replace(y)


def estimate_noise_power(samples: np.ndarray, tail_fraction: float = 0.1) -> float:
    sq = np.asarray(samples, dtype=float) ** 2
    n_tail = max(1, int(round(tail_fraction * sq.size)))
    return float(np.mean(sq[-n_tail:]))


def noise_crossing_index(
    ir: ImpulseResponse, tail_fraction: float = 0.1, block: float = 0.01
) -> int:
    """First sample after the peak where the block-averaged energy meets the noise estimate."""
    sq = ir.samples ** 2
    noise = estimate_noise_power(ir.samples, tail_fraction)
    nb = max(1, int(round(block * ir.sample_rate)))
    start = int(np.argmax(sq))
    n_blocks = (sq.size - start) // nb
    if n_blocks < 1:
        return sq.size
    env = sq[start:start + n_blocks * nb].reshape(n_blocks, nb).mean(axis=1)
    below = np.nonzero(env <= noise)[0]
    if below.size == 0:
        return sq.size
    return min(sq.size, start + int(below[0]) * nb)


def schroeder_decay(
    ir_band: ImpulseResponse,
    truncate_at: Optional[float] = None,
    tail_fraction: float = 0.1,
) -> DecayCurve:
    """Backward-integrated energy decay in dB, 0 dB at the onset.

    Integration stops at the noise crossing (automatic) or at ``truncate_at``
    seconds after the onset.
    """
    sq = ir_band.samples[ir_band.onset:] ** 2
    if sq.size < 2:
        raise ValidationError("impulse response too short for a decay curve")
    if truncate_at is not None:
        stop = int(round(truncate_at * ir_band.sample_rate))
        if stop > sq.size:
            raise ValidationError(f"truncation at {truncate_at} s is beyond the IR length")
    else:
        stop = max(0, noise_crossing_index(ir_band, tail_fraction) - ir_band.onset)
        if stop < 2:
            stop = sq.size
    sq = sq[:stop]
    energy = np.cumsum(sq[::-1])[::-1]
    total = energy[0]
    if total <= 0:
        raise ValidationError("impulse response has no energy after onset")
    with np.errstate(divide="ignore"):
        levels = 10 * np.log10(energy / total)
    times = np.arange(stop) / ir_band.sample_rate
    in_range = np.isfinite(levels) & (levels <= -5) & (levels >= -35)
    degenerate = bool(np.count_nonzero(in_range) < 2)
    return DecayCurve(times, levels, stop, degenerate)


def t30(decay: DecayCurve, upper_db: float = -5.0, lower_db: float = -35.0) -> T30Result:
    """Least-squares line through the -5 to -35 dB portion, extrapolated to 60 dB."""
    lv = decay.levels_db
    finite = np.isfinite(lv)
    if not finite.any() or lv[finite].min() > lower_db:
        raise InsufficientDecayError(
            f"decay curve does not reach {lower_db} dB (minimum {lv[finite].min() if finite.any() else 'n/a'})"
        )
    first = int(np.argmax(lv <= upper_db))
    last = int(np.argmax(lv < lower_db))
    sel = slice(first, last)
    t, y = decay.times[sel], lv[sel]
    if t.size < 2:
        raise InsufficientDecayError("fewer than two points in the evaluation range")
    slope, intercept = np.polyfit(t, y, 1)
    if slope >= 0:
        raise InsufficientDecayError("non-decaying curve in evaluation range")
    corr = float(np.corrcoef(t, y)[0, 1])
    return T30Result(float(-60.0 / slope), float(slope), float(intercept), corr, int(t.size))


def t30_mid(per_receiver: Sequence[Mapping[int, Optional[float]]]) -> float:
    """Mean over receivers of the mean of the 500 Hz and 1 kHz values.

    A receiver with only one mid band uses that one; receivers with neither
    are skipped.
    """
    vals = []
    for rec in per_receiver:
        mids = [rec.get(b) for b in (500, 1000)]
        mids = [v for v in mids if v is not None]
        if mids:
            vals.append(float(np.mean(mids)))
    if not vals:
        raise ValidationError("no receiver carries a 500 Hz or 1 kHz reverberation time")
    return float(np.mean(vals))


def mtf_from_ir(
    ir_band: ImpulseResponse,
    noise_subtract: bool = False,
    tail_fraction: float = 0.1,
    frequencies: Sequence[float] = MODULATION_FREQUENCIES,
) -> np.ndarray:
    """Noise-free modulation transfer |FT(h^2)(F)| / sum(h^2) at each modulation frequency."""
    sq = ir_band.samples[ir_band.onset:] ** 2
    if noise_subtract:
        sq = np.clip(sq - estimate_noise_power(ir_band.samples, tail_fraction), 0, None)
    total = sq.sum()
    if not total > 0:
        raise ValidationError("zero-energy impulse response")
    t = np.arange(sq.size) / ir_band.sample_rate
    F = np.asarray(frequencies, dtype=float)[:, None]
    m = np.abs(np.exp(-2j * np.pi * F * t) @ sq) / total
    return np.clip(m, 0.0, 1.0)


def exponential_mtf(t60: float, frequencies: Sequence[float] = MODULATION_FREQUENCIES) -> np.ndarray:
    """Closed-form MTF of an exponentially decaying energy envelope with reverberation time ``t60``."""
    F = np.asarray(frequencies, dtype=float)
    return 1.0 / np.sqrt(1.0 + (2 * np.pi * F * t60 / DECAY_60DB) ** 2)


def apply_noise_correction(m, snr_db):
    """Scale modulation depth by the noise factor 1 / (1 + 10^(-SNR/10))."""
    return np.asarray(m) / (1.0 + 10.0 ** (-np.asarray(snr_db, dtype=float) / 10.0))


def band_energy_db(ir_band: ImpulseResponse) -> float:
    """10 log10 of the time-integrated squared response (dB re 1 unit^2 s)."""
    e = np.sum(ir_band.samples ** 2) / ir_band.sample_rate
    with np.errstate(divide="ignore"):
        return float(10 * np.log10(e))


def band_power_db(samples: np.ndarray) -> float:
    """10 log10 of the mean square of a steady recording."""
    with np.errstate(divide="ignore"):
        return float(10 * np.log10(np.mean(np.asarray(samples, dtype=float) ** 2)))
