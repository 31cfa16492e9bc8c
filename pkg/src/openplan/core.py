"""Band-level value types and energetic arithmetic shared by every other module."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np

BAND_CENTERS: tuple[int, ...] = (125, 250, 500, 1000, 2000, 4000, 8000)
N_BANDS = len(BAND_CENTERS)

# A-weighting at the nominal octave centers, IEC 61672-1 (rounded to 0.1 dB).
A_WEIGHTS_DB: tuple[float, ...] = (-16.1, -8.6, -3.2, 0.0, 1.2, 1.0, -1.1)

DEFAULT_MIN_RECEIVERS = 5
DEFAULT_MAX_RECEIVERS = 8


class ValidationError(ValueError):
    """Input data violates a structural or range constraint."""


class MissingBandError(ValidationError):
    def __init__(self, band_hz: int, what: str = "spectrum"):
        super().__init__(f"{what}: band {band_hz} Hz is absent")
        self.band_hz = band_hz


@dataclass(frozen=True)
class OctaveBandSpectrum:
    """Seven octave-band levels in dB, 125 Hz to 8 kHz.

    A band may be ``None`` to mark it explicitly absent. ``-inf`` is accepted
    as "no energy in this band" and contributes nothing to energetic sums.
    """

    levels: tuple[Optional[float], ...]

    def __post_init__(self):
        levels = tuple(self.levels)
        if len(levels) != N_BANDS:
            raise ValidationError(f"expected {N_BANDS} band levels, got {len(levels)}")
        clean = []
        for fc, v in zip(BAND_CENTERS, levels):
            if v is None:
                clean.append(None)
                continue
            v = float(v)
            if math.isnan(v) or v == math.inf:
                raise ValidationError(f"band {fc} Hz: level must be finite, got {v}")
            clean.append(v)
        object.__setattr__(self, "levels", tuple(clean))

    @classmethod
    def flat(cls, level: float) -> "OctaveBandSpectrum":
        return cls((level,) * N_BANDS)

    @property
    def complete(self) -> bool:
        return all(v is not None for v in self.levels)

    def array(self, what: str = "spectrum") -> np.ndarray:
        """Levels as a float array; raises if any band is absent."""
        for fc, v in zip(BAND_CENTERS, self.levels):
            if v is None:
                raise MissingBandError(fc, what)
        return np.array(self.levels, dtype=float)

    def __getitem__(self, band_hz: int) -> Optional[float]:
        return self.levels[BAND_CENTERS.index(band_hz)]

    def shifted(self, gain_db: float) -> "OctaveBandSpectrum":
        return OctaveBandSpectrum(tuple(None if v is None else v + gain_db for v in self.levels))

    def to_list(self) -> list:
        return [None if v is None else (v if math.isfinite(v) else "-inf") for v in self.levels]

    @classmethod
    def from_list(cls, values: Sequence) -> "OctaveBandSpectrum":
        return cls(tuple(None if v is None else float(v) for v in values))


class Direction(str, Enum):
    forward = "forward"
    reverse = "reverse"


@dataclass(frozen=True)
class ReceiverPoint:
    """One microphone position on a path.

    ``spectrum`` holds the measured band SPL with the calibrated source
    running. ``mtf`` optionally carries the 7 x 14 noise-free modulation
    transfer matrix; ``t30`` optionally carries per-band reverberation times
    from which an exponential-decay MTF is derived when ``mtf`` is absent.
    """

    distance_m: float
    spectrum: OctaveBandSpectrum
    noise: Optional[OctaveBandSpectrum] = None
    mtf: Optional[tuple[tuple[float, ...], ...]] = None
    t30: Optional[tuple[Optional[float], ...]] = None
    receiver_id: str = ""

    def __post_init__(self):
        d = float(self.distance_m)
        if not math.isfinite(d) or d <= 0:
            raise ValidationError(f"receiver {self.receiver_id or '?'}: distance must be > 0, got {d}")
        object.__setattr__(self, "distance_m", d)
        if self.mtf is not None:
            m = np.asarray(self.mtf, dtype=float)
            if m.shape != (N_BANDS, 14):
                raise ValidationError(f"receiver {self.receiver_id or '?'}: mtf must be 7x14, got {m.shape}")
            if np.any(~np.isfinite(m)) or m.min() < 0 or m.max() > 1:
                raise ValidationError(f"receiver {self.receiver_id or '?'}: mtf entries must lie in [0, 1]")
            object.__setattr__(self, "mtf", tuple(tuple(float(v) for v in row) for row in m))
        if self.t30 is not None:
            if len(self.t30) != N_BANDS:
                raise ValidationError(f"receiver {self.receiver_id or '?'}: t30 needs {N_BANDS} bands")
            object.__setattr__(self, "t30", tuple(None if v is None else float(v) for v in self.t30))


@dataclass(frozen=True)
class PathMeasurement:
    office_id: str
    path_id: str
    run_index: int
    receivers: tuple[ReceiverPoint, ...]
    source_power: OctaveBandSpectrum
    direction: Direction = Direction.forward
    min_receivers: int = DEFAULT_MIN_RECEIVERS
    max_receivers: int = DEFAULT_MAX_RECEIVERS

    def __post_init__(self):
        object.__setattr__(self, "receivers", tuple(self.receivers))
        object.__setattr__(self, "direction", Direction(self.direction))
        object.__setattr__(self, "office_id", str(self.office_id))
        object.__setattr__(self, "path_id", str(self.path_id))
        tag = f"office {self.office_id} path {self.path_id} run {self.run_index}"
        if self.run_index not in (1, 2):
            raise ValidationError(f"{tag}: run_index must be 1 or 2")
        n = len(self.receivers)
        if not self.min_receivers <= n <= self.max_receivers:
            raise ValidationError(
                f"{tag}: {n} receivers outside allowed range "
                f"[{self.min_receivers}, {self.max_receivers}]"
            )
        for a, b in zip(self.receivers, self.receivers[1:]):
            if b.distance_m <= a.distance_m:
                raise ValidationError(
                    f"{tag}: distances must strictly increase, receiver "
                    f"{a.receiver_id or '?'} at {a.distance_m} m followed by "
                    f"{b.receiver_id or '?'} at {b.distance_m} m"
                )

    @property
    def distances(self) -> np.ndarray:
        return np.array([r.distance_m for r in self.receivers])

    @property
    def key(self) -> tuple[str, str, int]:
        return (self.office_id, self.path_id, self.run_index)


@dataclass(frozen=True)
class MetricSet:
    """ISO 3382-3 single-number quantities for one measurement run."""

    d2s_db: float
    lpas4m_db: float
    rd_m: Optional[float]
    rd_valid: bool
    fit_r2_speech: float
    fit_r2_sti: Optional[float]
    lpab_dba: Optional[float] = None
    t30_mid_s: Optional[float] = None
    noise_gain_db: float = 0.0
    warnings: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.rd_m is not None and not self.rd_m > 0:
            raise ValidationError(f"rd_m must be > 0, got {self.rd_m}")
        for name in ("fit_r2_speech", "fit_r2_sti"):
            v = getattr(self, name)
            if v is not None and not -1e-12 <= v <= 1 + 1e-12:
                raise ValidationError(f"{name} outside [0, 1]: {v}")

    @property
    def rd_defined(self) -> bool:
        return self.rd_m is not None


def a_weighted_sum(spectrum: OctaveBandSpectrum, weights: Sequence[float] = A_WEIGHTS_DB) -> float:
    levels = spectrum.array()
    with np.errstate(divide="ignore"):
        return float(10 * np.log10(np.sum(10 ** ((levels + np.asarray(weights)) / 10))))


def energetic_mean(levels: Iterable[float]) -> float:
    arr = np.asarray(list(levels), dtype=float)
    if arr.size == 0:
        raise ValidationError("energetic mean of an empty list")
    if np.any(np.isnan(arr)) or np.any(arr == np.inf):
        raise ValidationError("energetic mean needs finite levels")
    with np.errstate(divide="ignore"):
        return float(10 * np.log10(np.mean(10 ** (arr / 10))))


def energetic_mean_spectrum(spectra: Sequence[OctaveBandSpectrum]) -> OctaveBandSpectrum:
    """Per-band energetic mean across several spectra."""
    if not spectra:
        raise ValidationError("no spectra to average")
    stack = np.array([s.array() for s in spectra])
    return OctaveBandSpectrum(tuple(energetic_mean(stack[:, k]) for k in range(N_BANDS)))


def band_snr(signal: OctaveBandSpectrum, noise: OctaveBandSpectrum) -> np.ndarray:
    return signal.array("signal") - noise.array("noise")
