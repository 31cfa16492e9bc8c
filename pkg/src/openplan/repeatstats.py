"""Repeatability and reliability statistics for repeated measurements.

Range statistics, percentile bootstrap, robust (bisquare MM-type) regression,
Kendall's tau-b, one-way random-effects variance components, ICC and the
repeatability coefficient.

Resampling uses fixed blocks of replicates, each block drawing from its own
child of a ``SeedSequence``; replicate ``i`` is therefore the same whatever
the number of workers.
"""

from __future__ import annotations

import logging
import math
import warnings
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterator, Mapping, Optional, Sequence

import numpy as np
from scipy import integrate, stats

log = logging.getLogger(__name__)

BLOCK = 2048
DEFAULT_LEVELS = (0.68, 0.95)
REPEATABILITY_FACTORS: dict[int, float] = {2: 2.8, 3: 3.3, 4: 3.6}
HUBER_K = 1.345
BISQUARE_EFFICIENCY_C = 4.685061
BISQUARE_BREAKDOWN_C = 1.547645


class BootstrapError(RuntimeError):
    pass


class DegenerateDataError(ValueError):
    pass


# -- data records -----------------------------------------------------------


@dataclass(frozen=True)
class RepeatGroup:
    group_id: str
    metric_id: str
    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if len(vals) < 2:
            raise DegenerateDataError(f"group {self.group_id}: need at least 2 values, got {len(vals)}")
        if not all(math.isfinite(v) for v in vals):
            raise DegenerateDataError(f"group {self.group_id}: non-finite value")
        object.__setattr__(self, "values", vals)

    @property
    def k(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class DeltaRecord:
    group_id: str
    metric_id: str
    delta: float
    group_mean: float


@dataclass(frozen=True)
class BootstrapResult:
    point: float
    n_resamples: int
    intervals: Mapping[float, tuple[float, float]]
    seed: int
    replicates: Optional[np.ndarray] = field(default=None, repr=False, compare=False)
    n_dropped: int = 0

    def ci(self, level: float = 0.95) -> tuple[float, float]:
        return self.intervals[level]


@dataclass(frozen=True)
class RegressionResult:
    slope: float
    intercept: float
    r_squared: float
    scale: float
    weights: np.ndarray = field(repr=False)
    slope_ci: Optional[tuple[float, float]] = None
    intercept_ci: Optional[tuple[float, float]] = None
    r_squared_ci: Optional[tuple[float, float]] = None
    n_resamples: int = 0
    n_dropped: int = 0


@dataclass(frozen=True)
class TauResult:
    tau: float
    ci: Optional[tuple[float, float]]
    n_resamples: int = 0
    n_dropped: int = 0


@dataclass(frozen=True)
class VarianceComponents:
    sigma_b: float
    sigma_w: float
    n_groups: int
    k_eff: float
    robust: bool
    truncated: bool = False

    @property
    def icc(self) -> float:
        return icc(self.sigma_b, self.sigma_w)


@dataclass(frozen=True)
class ReliabilityReport:
    sigma_w: float
    sigma_b: float
    icc: float
    icc_ci: Optional[tuple[float, float]]
    k: int
    f_factor: float
    r_coefficient: float
    classification: str
    n_groups: int
    robust: bool
    n_resamples: int = 0
    seed: Optional[int] = None


# -- resampling ---------------------------------------------------------------


def stream_id(label: str) -> int:
    """Stable integer for naming an independent random stream."""
    return zlib.crc32(label.encode("utf-8"))


def _block_rng(seed: int, stream: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(stream, block))))


def resample_blocks(n: int, n_resamples: int, seed: int, stream: int = 0) -> Iterator[tuple[int, np.ndarray]]:
    """Yield ``(start, idx)`` with ``idx`` of shape (block, n) of with-replacement indices."""
    for b, start in enumerate(range(0, n_resamples, BLOCK)):
        size = min(BLOCK, n_resamples - start)
        yield start, _block_rng(seed, stream, b).integers(0, n, size=(size, n))


def _map_blocks(fn, n: int, n_resamples: int, seed: int, stream: int, workers: int) -> list:
    blocks = list(resample_blocks(n, n_resamples, seed, stream))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(lambda b: fn(*b), blocks))
    return [fn(*b) for b in blocks]


def percentile_interval(replicates: np.ndarray, level: float) -> tuple[float, float]:
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(replicates, [alpha, 1.0 - alpha], method="linear")
    return float(lo), float(hi)


def bootstrap_ci(
    data: Sequence[float],
    statistic: Callable = np.mean,
    n_resamples: int = 100_000,
    levels: Sequence[float] = DEFAULT_LEVELS,
    seed: int = 0,
    vectorized: bool = False,
    stream: int = 0,
    workers: int = 1,
    keep_replicates: bool = False,
) -> BootstrapResult:
    """Percentile bootstrap of ``statistic`` over ``data``.

    With ``vectorized=True`` the statistic receives a (block, n) array and
    must reduce along ``axis=1``.
    """
    x = np.asarray(data, dtype=float)
    if x.size == 0:
        raise BootstrapError("bootstrap of empty data")
    if n_resamples < 1:
        raise BootstrapError("need at least one resample")

    def run(start, idx):
        sample = x[idx]
        if vectorized:
            vals = np.asarray(statistic(sample, axis=1), dtype=float)
            bad = np.nonzero(~np.isfinite(vals))[0]
            if bad.size:
                raise BootstrapError(f"statistic not finite on replicate {start + int(bad[0])}")
            return vals
        vals = np.empty(idx.shape[0])
        for i, row in enumerate(sample):
            try:
                vals[i] = float(statistic(row))
            except Exception as exc:
                raise BootstrapError(f"statistic failed on replicate {start + i}: {exc}") from exc
            if not math.isfinite(vals[i]):
                raise BootstrapError(f"statistic not finite on replicate {start + i}")
        return vals

    reps = np.concatenate(_map_blocks(run, x.size, n_resamples, seed, stream, workers))
    point = float(statistic(x[None, :], axis=1)[0]) if vectorized else float(statistic(x))
    return BootstrapResult(
        point=point,
        n_resamples=n_resamples,
        intervals={lv: percentile_interval(reps, lv) for lv in levels},
        seed=seed,
        replicates=reps if keep_replicates else None,
    )


# -- range statistics ---------------------------------------------------------


def delta_range(group: RepeatGroup) -> DeltaRecord:
    v = np.asarray(group.values)
    return DeltaRecord(group.group_id, group.metric_id, float(v.max() - v.min()), float(v.mean()))


def mean_delta(deltas: Sequence) -> float:
    vals = [d.delta if isinstance(d, DeltaRecord) else float(d) for d in deltas]
    if not vals:
        raise DegenerateDataError("mean of an empty delta list")
    return float(np.mean(vals))


# -- robust regression ----------------------------------------------------------


def _bisquare_rho(u: np.ndarray) -> np.ndarray:
    """Tukey bisquare rho normalised to 1 at |u| >= 1."""
    u2 = np.minimum(u * u, 1.0)
    return 1.0 - (1.0 - u2) ** 3


def _bisquare_weight(u: np.ndarray) -> np.ndarray:
    return np.where(np.abs(u) < 1.0, (1.0 - u * u) ** 2, 0.0)


@lru_cache(maxsize=None)
def bisquare_r2_correction(c: float = BISQUARE_EFFICIENCY_C) -> float:
    """E[w(Z)] / E[psi'(Z)] for standard normal Z, used by the weighted R^2."""
    def w(z):
        return (1 - (z / c) ** 2) ** 2

    def dpsi(z):
        u2 = (z / c) ** 2
        return (1 - u2) * (1 - 5 * u2)

    ew = integrate.quad(lambda z: w(z) * stats.norm.pdf(z), -c, c)[0]
    ed = integrate.quad(lambda z: dpsi(z) * stats.norm.pdf(z), -c, c)[0]
    return ew / ed


def _nanmedian_last(a: np.ndarray) -> np.ndarray:
    """Median over the last axis ignoring NaN (NaN where a slice is all-NaN)."""
    a = np.sort(a, axis=-1)
    cnt = np.sum(~np.isnan(a), axis=-1)
    lo = np.maximum((cnt - 1) // 2, 0)[..., None]
    hi = np.maximum(cnt // 2, 0)[..., None]
    med = 0.5 * (np.take_along_axis(a, lo, -1) + np.take_along_axis(a, hi, -1))[..., 0]
    return np.where(cnt > 0, med, np.nan)


def _repeated_median(X: np.ndarray, Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Siegel repeated-median line for each row of X, Y (shape (b, n))."""
    dx = X[:, None, :] - X[:, :, None]
    dy = Y[:, None, :] - Y[:, :, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(dx != 0, dy / dx, np.nan)
    slope = _nanmedian_last(_nanmedian_last(s))
    intercept = np.median(Y - slope[:, None] * X, axis=1)
    return slope, intercept


def _m_scale(r: np.ndarray, c: float = BISQUARE_BREAKDOWN_C, b: float = 0.5, iters: int = 200) -> np.ndarray:
    """Bisquare M-scale of residual rows: mean(rho(r / (c s))) = b."""
    s = np.median(np.abs(r), axis=1) / 0.6744897501960817
    s = np.where(s <= 0, np.mean(np.abs(r), axis=1), s)
    active = np.nonzero(s > 0)[0]
    for _ in range(iters):
        if active.size == 0:
            break
        sa = s[active]
        new = sa * np.sqrt(np.mean(_bisquare_rho(r[active] / (c * sa[:, None])), axis=1) / b)
        s[active] = new
        active = active[np.abs(new - sa) > 1e-10 * sa]
    return s


def _wls_line(X, Y, W):
    sw = W.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        xm = (W * X).sum(axis=1) / sw
        ym = (W * Y).sum(axis=1) / sw
        sxx = (W * (X - xm[:, None]) ** 2).sum(axis=1)
        slope = (W * (X - xm[:, None]) * (Y - ym[:, None])).sum(axis=1) / sxx
    return slope, ym - slope * xm


def _mm_fit(X: np.ndarray, Y: np.ndarray, c: float = BISQUARE_EFFICIENCY_C, max_iter: int = 200, tol: float = 1e-10):
    """Batched bisquare IRLS from a repeated-median start with a fixed M-scale.

    Returns slope, intercept, scale, weights and the weighted R^2 per row;
    rows with no x spread come back as NaN.
    """
    slope, intercept = _repeated_median(X, Y)
    r = Y - intercept[:, None] - slope[:, None] * X
    scale = _m_scale(r)
    exact = scale <= 1e-12 * (1.0 + np.abs(Y).max(axis=1))
    # exact fits of a majority keep the zero-residual points only
    W = (np.abs(r) <= 1e-12 * (1.0 + np.abs(Y))).astype(float)
    active = np.nonzero(~exact)[0]
    cs = c * scale
    for _ in range(max_iter):
        if active.size == 0:
            break
        Xa, Ya = X[active], Y[active]
        Wa = _bisquare_weight(r[active] / cs[active, None])
        s_new, i_new = _wls_line(Xa, Ya, Wa)
        change = np.maximum(np.abs(s_new - slope[active]), np.abs(i_new - intercept[active]))
        slope[active], intercept[active], W[active] = s_new, i_new, Wa
        r[active] = Ya - i_new[:, None] - s_new[:, None] * Xa
        active = active[np.isfinite(change) & (change >= tol)]
    sw = W.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        ym = (W * Y).sum(axis=1) / sw
        yMy = (W * (Y - ym[:, None]) ** 2).sum(axis=1)
        rMr = (W * r * r).sum(axis=1)
        corr = bisquare_r2_correction(c)
        r2 = np.where(rMr <= 0, np.where(yMy > 0, 1.0, np.nan), (yMy - rMr) / (yMy + rMr * (corr - 1.0)))
    no_spread = np.ptp(X, axis=1) == 0
    for arr in (slope, intercept, r2):
        arr[no_spread] = np.nan
    return slope, intercept, scale, W, r2


def robust_linreg(
    x: Sequence[float],
    y: Sequence[float],
    n_resamples: int = 0,
    seed: int = 0,
    level: float = 0.95,
    stream: int = 0,
    workers: int = 1,
) -> RegressionResult:
    """Robust straight-line fit y ~ a + b x with optional pairs-bootstrap CIs."""
    X = np.asarray(x, dtype=float)
    Y = np.asarray(y, dtype=float)
    if X.shape != Y.shape or X.ndim != 1:
        raise DegenerateDataError("x and y must be 1-D and of equal length")
    if X.size < 3:
        raise DegenerateDataError("robust regression needs at least 3 points")
    if np.ptp(X) == 0:
        raise DegenerateDataError("x has zero spread")
    slope, intercept, scale, W, r2 = _mm_fit(X[None, :], Y[None, :])
    kw = {}
    dropped = 0
    if n_resamples:
        def run(start, idx):
            s, i, _, _, r = _mm_fit(X[idx], Y[idx])
            return np.stack([s, i, r], axis=1)

        reps = np.concatenate(_map_blocks(run, X.size, n_resamples, seed, stream, workers))
        ok = np.all(np.isfinite(reps), axis=1)
        dropped = int((~ok).sum())
        reps = reps[ok]
        kw = dict(
            slope_ci=percentile_interval(reps[:, 0], level),
            intercept_ci=percentile_interval(reps[:, 1], level),
            r_squared_ci=percentile_interval(reps[:, 2], level),
        )
    return RegressionResult(
        slope=float(slope[0]), intercept=float(intercept[0]), r_squared=float(r2[0]),
        scale=float(scale[0]), weights=W[0], n_resamples=n_resamples, n_dropped=dropped, **kw,
    )


# -- Kendall tau ------------------------------------------------------------------


def _tau_b(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    sx = np.sign(X[:, :, None] - X[:, None, :])
    sy = np.sign(Y[:, :, None] - Y[:, None, :])
    num = (sx * sy).sum(axis=(1, 2))
    den = np.sqrt((sx * sx).sum(axis=(1, 2)) * (sy * sy).sum(axis=(1, 2)))
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(den > 0, num / den, np.nan)


def kendall_tau(
    x: Sequence[float],
    y: Sequence[float],
    n_resamples: int = 0,
    seed: int = 0,
    level: float = 0.95,
    stream: int = 0,
    workers: int = 1,
) -> TauResult:
    """Tie-corrected Kendall tau-b with a pairs-bootstrap percentile CI."""
    X = np.asarray(x, dtype=float)
    Y = np.asarray(y, dtype=float)
    if X.shape != Y.shape or X.size < 2:
        raise DegenerateDataError("kendall tau needs at least 2 paired values")
    if np.ptp(X) == 0 and np.ptp(Y) == 0:
        raise DegenerateDataError("both variables have zero variance")
    tau = float(_tau_b(X[None, :], Y[None, :])[0])
    if not n_resamples:
        return TauResult(tau, None)
    reps = np.concatenate(_map_blocks(lambda s, idx: _tau_b(X[idx], Y[idx]), X.size, n_resamples, seed, stream, workers))
    ok = np.isfinite(reps)
    return TauResult(tau, percentile_interval(reps[ok], level), n_resamples, int((~ok).sum()))


# -- variance components and reliability -----------------------------------------


@lru_cache(maxsize=None)
def huber_consistency(df: int, k: float = HUBER_K) -> tuple[float, float]:
    """(E[w], E[w z^2]) for z = within-group SD / sigma with ``df`` degrees of freedom.

    ``w = min(1, k / z)``; the ratio corrects the down-weighted pooled
    variance back to sigma^2 under normality.
    """
    dist = stats.chi(df, scale=1.0 / math.sqrt(df))
    hi = dist.ppf(1 - 1e-14)
    ew = integrate.quad(lambda z: min(1.0, k / z) * dist.pdf(z) if z > 0 else dist.pdf(z), 0, hi, points=[k], limit=200)[0]
    ewz2 = integrate.quad(lambda z: min(z * z, k * z) * dist.pdf(z), 0, hi, points=[k], limit=200)[0]
    return ew, ewz2


def _vc_balanced(Y: np.ndarray, robust: bool, k_huber: float = HUBER_K, iters: int = 100):
    """Variance components for batches of balanced designs, Y shape (b, g, k).

    Returns (sigma_b^2, sigma_w^2, truncated).
    """
    b, g, k = Y.shape
    gm = Y.mean(axis=2)
    ssw = ((Y - gm[:, :, None]) ** 2).sum(axis=2)
    if not robust:
        msw = ssw.sum(axis=1) / (g * (k - 1))
        msb = k * ((gm - gm.mean(axis=1, keepdims=True)) ** 2).sum(axis=1) / (g - 1)
        raw = (msb - msw) / k
        return np.maximum(raw, 0.0), msw, raw < 0

    ew, ewz2 = huber_consistency(k - 1, k_huber)
    corr = ew / ewz2
    s = np.sqrt(ssw / (k - 1))
    med = stats.chi2.ppf(0.5, k - 1) / (k - 1)
    sw = np.sqrt(np.median(s * s, axis=1) / med)
    sw = np.where(sw > 0, sw, np.sqrt((s * s).mean(axis=1)))
    w = np.ones_like(s)
    for _ in range(iters):
        pos = sw > 0
        safe = np.where(pos, sw, 1.0)
        z = s / safe[:, None]
        with np.errstate(divide="ignore"):
            w = np.where(pos[:, None], np.minimum(1.0, k_huber / np.maximum(z, 1e-300)), 1.0)
        msw = corr * (w * ssw).sum(axis=1) / ((k - 1) * w.sum(axis=1))
        new = np.where(pos, np.sqrt(msw), 0.0)
        if np.allclose(new, sw, rtol=1e-12, atol=1e-15):
            sw = new
            break
        sw = new
    msw = sw * sw
    W = w.sum(axis=1)
    mu = (w * gm).sum(axis=1) / W
    msb = k * (w * (gm - mu[:, None]) ** 2).sum(axis=1) / (W - (w * w).sum(axis=1) / W)
    raw = (msb - msw) / k
    return np.maximum(raw, 0.0), msw, raw < 0


def _vc_unbalanced(groups: Sequence[Sequence[float]], robust: bool, k_huber: float = HUBER_K):
    ks = np.array([len(v) for v in groups], dtype=float)
    gm = np.array([np.mean(v) for v in groups])
    ssw = np.array([np.sum((np.asarray(v) - np.mean(v)) ** 2) for v in groups])
    df = ks - 1
    w = np.ones_like(ks)
    if robust:
        e = np.array([huber_consistency(int(d), k_huber) for d in df])
        s = np.sqrt(ssw / df)
        meds = stats.chi2.ppf(0.5, df) / df
        sw = math.sqrt(np.median(s * s / meds))
        if sw == 0:
            sw = math.sqrt(np.mean(s * s))
        for _ in range(100):
            if sw == 0:
                break
            w = np.minimum(1.0, k_huber / np.maximum(s / sw, 1e-300))
            corr = np.sum(df * e[:, 0]) / np.sum(df * e[:, 1])
            new = math.sqrt(corr * np.sum(w * ssw) / np.sum(w * df))
            if abs(new - sw) <= 1e-12 * max(new, 1e-300):
                sw = new
                break
            sw = new
        msw = sw * sw
    else:
        msw = ssw.sum() / df.sum()
    wk = w * ks
    mu = np.sum(wk * gm) / wk.sum()
    denom = w.sum() - np.sum(w * w * ks) / wk.sum()
    msb = np.sum(wk * (gm - mu) ** 2) / denom
    k_eff = (wk.sum() - np.sum(wk * wk) / wk.sum()) / denom
    raw = (msb - msw) / k_eff
    return max(raw, 0.0), msw, raw < 0, k_eff


def variance_components(groups: Sequence[RepeatGroup], robust: bool = False, k_huber: float = HUBER_K) -> VarianceComponents:
    """One-way random-effects components (sigma_b, sigma_w).

    The classical estimator pools within-group mean squares and takes
    sigma_b^2 = max(0, (MSB - MSW) / k0). With ``robust=True`` groups whose
    studentised within-group SD exceeds the Huber constant are down-weighted
    (weight k / z) in both mean squares, and the pooled within variance is
    rescaled to stay consistent under normality.
    """
    if len(groups) < 2:
        raise DegenerateDataError("variance components need at least 2 groups")
    values = [g.values for g in groups]
    ks = {len(v) for v in values}
    if len(ks) == 1:
        k = ks.pop()
        sb2, sw2, trunc = _vc_balanced(np.asarray(values, dtype=float)[None], robust, k_huber)
        sb2, sw2, trunc, k_eff = float(sb2[0]), float(sw2[0]), bool(trunc[0]), float(k)
    else:
        sb2, sw2, trunc, k_eff = _vc_unbalanced(values, robust, k_huber)
    if trunc:
        log.warning("negative between-group variance estimate truncated to zero")
    return VarianceComponents(math.sqrt(sb2), math.sqrt(sw2), len(groups), k_eff, robust, bool(trunc))


def icc(sigma_b: float, sigma_w: float) -> float:
    """sigma_b^2 / (sigma_b^2 + sigma_w^2); NaN when both are zero."""
    if sigma_b < 0 or sigma_w < 0:
        raise ValueError("variance components must be non-negative")
    tot = sigma_b ** 2 + sigma_w ** 2
    if tot == 0:
        return math.nan
    return sigma_b ** 2 / tot


def icc_bootstrap(
    groups: Sequence[RepeatGroup],
    robust: bool = False,
    n_resamples: int = 10_000,
    seed: int = 0,
    level: float = 0.95,
    stream: int = 0,
    workers: int = 1,
) -> tuple[tuple[float, float], int]:
    """Percentile CI for the ICC by resampling whole groups; returns (ci, n_dropped)."""
    values = [g.values for g in groups]
    balanced = len({len(v) for v in values}) == 1
    if balanced:
        A = np.asarray(values, dtype=float)

        def run(start, idx):
            sb2, sw2, _ = _vc_balanced(A[idx], robust)
            with np.errstate(invalid="ignore", divide="ignore"):
                return sb2 / (sb2 + sw2)
    else:
        def run(start, idx):
            out = np.empty(idx.shape[0])
            for i, row in enumerate(idx):
                sb2, sw2, _, _ = _vc_unbalanced([values[j] for j in row], robust)
                out[i] = sb2 / (sb2 + sw2) if sb2 + sw2 > 0 else np.nan
            return out

    reps = np.concatenate(_map_blocks(run, len(values), n_resamples, seed, stream, workers))
    ok = np.isfinite(reps)
    return percentile_interval(reps[ok], level), int((~ok).sum())


def repeatability_factor(k: int, table: Optional[Mapping[int, float]] = None, override: Optional[float] = None) -> float:
    if override is not None:
        return float(override)
    table = REPEATABILITY_FACTORS if table is None else table
    try:
        return float(table[k])
    except KeyError:
        raise ValueError(f"no repeatability factor for k={k}; known k: {sorted(table)}") from None


def repeatability_coefficient(sigma_w: float, k: int, table: Optional[Mapping[int, float]] = None, override: Optional[float] = None) -> float:
    if sigma_w < 0:
        raise ValueError("sigma_w must be non-negative")
    return repeatability_factor(k, table, override) * sigma_w


def classify_icc(value: float) -> str:
    if value > 0.75:
        return "excellent"
    if value >= 0.40:
        return "fair_to_good"
    return "poor"


def reliability_report(
    groups: Sequence[RepeatGroup],
    robust: bool = True,
    n_resamples: int = 0,
    seed: int = 0,
    stream: int = 0,
    workers: int = 1,
    factor_table: Optional[Mapping[int, float]] = None,
) -> ReliabilityReport:
    vc = variance_components(groups, robust)
    k = groups[0].k
    f = repeatability_factor(k, factor_table)
    value = vc.icc
    ci = None
    if n_resamples:
        ci, _ = icc_bootstrap(groups, robust, n_resamples, seed, stream=stream, workers=workers)
    return ReliabilityReport(
        sigma_w=vc.sigma_w, sigma_b=vc.sigma_b, icc=value, icc_ci=ci, k=k, f_factor=f,
        r_coefficient=f * vc.sigma_w, classification=classify_icc(value),
        n_groups=len(groups), robust=robust, n_resamples=n_resamples, seed=seed if n_resamples else None,
    )
