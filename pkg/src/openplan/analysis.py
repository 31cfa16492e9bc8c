"""Assemble repeat groups from tidy metric tables and compute the summary tables.

A tidy table has one row per observation with keys ``office``, ``path``,
``run``, ``metric`` and ``value``.
"""

from __future__ import annotations

import csv
import io
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Literal, Mapping, Optional, Sequence, Union

import numpy as np

from . import repeatstats as rs

Retention = Union[Literal["drop-last", "drop-first"], Mapping[str, Sequence[str]]]


@dataclass(frozen=True)
class AnalysisConfig:
    n_resamples: int = 100_000
    seed: int = 0
    robust_variance: bool = True
    type2_retention: Retention = "drop-last"
    workers: int = 1


def read_tidy(text: str) -> list[dict]:
    rows = []
    body = "\n".join(ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#"))
    for i, row in enumerate(csv.DictReader(io.StringIO(body), delimiter="\t"), start=2):
        try:
            rows.append({
                "office": str(row["office"]), "path": str(row["path"]), "run": int(row["run"]),
                "metric": row["metric"], "value": float(row["value"]),
            })
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"tidy table line {i}: {exc}") from None
    return rows


def _path_sort_key(p: str):
    return (0, int(p)) if p.isdigit() else (1, p)


def _by_path(rows: Iterable[dict], metric: str) -> dict[tuple[str, str], dict[int, float]]:
    out: dict[tuple[str, str], dict[int, float]] = defaultdict(dict)
    for r in rows:
        if r["metric"] != metric:
            continue
        key = (str(r["office"]), str(r["path"]))
        if r["run"] in out[key]:
            raise ValueError(f"duplicate run {r['run']} for office {key[0]} path {key[1]} metric {metric}")
        out[key][int(r["run"])] = float(r["value"])
    return out


def type1_groups(rows: Iterable[dict], metric: str) -> list[rs.RepeatGroup]:
    """One group per path holding both runs; paths missing a run are skipped."""
    groups = []
    by_path = _by_path(rows, metric)
    for (office, path) in sorted(by_path, key=lambda k: (_path_sort_key(k[0]), _path_sort_key(k[1]))):
        runs = by_path[(office, path)]
        if len(runs) >= 2:
            groups.append(rs.RepeatGroup(path, metric, tuple(runs[r] for r in sorted(runs))))
    return groups


def retained_paths(office: str, paths: Sequence[str], retention: Retention) -> list[str]:
    paths = sorted(paths, key=_path_sort_key)
    if isinstance(retention, Mapping):
        if office in retention:
            keep = [str(p) for p in retention[office]]
            missing = set(keep) - set(paths)
            if missing:
                raise ValueError(f"office {office}: retained paths {sorted(missing)} not measured")
            return keep
        return paths[:2]
    if retention == "drop-last":
        return paths[:2]
    if retention == "drop-first":
        return paths[-2:]
    raise ValueError(f"unknown retention policy {retention!r}")


def type2_groups(
    rows: Iterable[dict], metric: str, offices: Sequence, retention: Retention = "drop-last"
) -> list[rs.RepeatGroup]:
    """One group per office: both runs of two retained paths (k = 4)."""
    by_path = _by_path(rows, metric)
    groups = []
    for office in [str(o) for o in offices]:
        paths = [p for (o, p), runs in by_path.items() if o == office and len(runs) >= 2]
        if len(paths) < 2:
            continue
        vals = []
        for p in retained_paths(office, paths, retention):
            runs = by_path[(office, p)]
            vals.extend(runs[r] for r in sorted(runs))
        groups.append(rs.RepeatGroup(office, metric, tuple(vals)))
    return groups


def parse_retention(text: Optional[str]) -> Retention:
    """``drop-last``, ``drop-first`` or ``18:18,19;21:23,25``."""
    if text is None or text in ("drop-last", "drop-first"):
        return text or "drop-last"
    out = {}
    for part in text.split(";"):
        office, _, paths = part.partition(":")
        out[office.strip()] = [p.strip() for p in paths.split(",") if p.strip()]
    return out


# -- table builders ------------------------------------------------------------


def delta_summary(groups: Sequence[rs.RepeatGroup], cfg: AnalysisConfig, label: str) -> dict:
    """Mean range with 68/95 % CIs, plus robust regression of range on group mean."""
    deltas = [rs.delta_range(g) for g in groups]
    d = np.array([x.delta for x in deltas])
    m = np.array([x.group_mean for x in deltas])
    boot = rs.bootstrap_ci(d, np.mean, cfg.n_resamples, seed=cfg.seed, vectorized=True,
                           stream=rs.stream_id(label + ".mean"), workers=cfg.workers)
    out = {
        "n": len(groups),
        "mean_delta": boot.point,
        "ci95": list(boot.ci(0.95)),
        "ci68": list(boot.ci(0.68)),
    }
    if np.ptp(m) > 0 and len(groups) >= 3:
        reg = rs.robust_linreg(m, d, cfg.n_resamples, seed=cfg.seed,
                               stream=rs.stream_id(label + ".reg"), workers=cfg.workers)
        out.update({
            "r2_delta_mean": reg.r_squared,
            "r2_ci95": list(reg.r_squared_ci) if reg.r_squared_ci else None,
            "slope": reg.slope,
            "slope_ci95": list(reg.slope_ci) if reg.slope_ci else None,
            "slope_significant": bool(reg.slope_ci and (reg.slope_ci[0] > 0 or reg.slope_ci[1] < 0)),
            "dropped_resamples": reg.n_dropped,
        })
    return out


def tau_matrix(deltas: Mapping[str, Sequence[float]], cfg: AnalysisConfig, label: str) -> list[dict]:
    metrics = list(deltas)
    out = []
    for i, a in enumerate(metrics):
        for b in metrics[i + 1:]:
            res = rs.kendall_tau(deltas[a], deltas[b], cfg.n_resamples, seed=cfg.seed,
                                 stream=rs.stream_id(f"{label}.tau.{a}.{b}"), workers=cfg.workers)
            out.append({
                "x": a, "y": b, "tau": res.tau, "ci95": list(res.ci) if res.ci else None,
                "significant": bool(res.ci and (res.ci[0] > 0 or res.ci[1] < 0)),
            })
    return out


def reliability_summary(groups: Sequence[rs.RepeatGroup], cfg: AnalysisConfig, label: str) -> dict:
    rep = rs.reliability_report(groups, robust=cfg.robust_variance, n_resamples=cfg.n_resamples,
                                seed=cfg.seed, stream=rs.stream_id(label + ".icc"), workers=cfg.workers)
    return {
        "n": rep.n_groups, "k": rep.k, "sigma_w": rep.sigma_w, "sigma_b": rep.sigma_b,
        "icc": rep.icc, "icc_ci95": list(rep.icc_ci) if rep.icc_ci else None,
        "f_factor": rep.f_factor, "r": rep.r_coefficient, "classification": rep.classification,
        "estimator": "robust" if rep.robust else "anova",
    }


def repeatability_tables(
    rows: Sequence[dict],
    metrics: Sequence[str],
    cfg: AnalysisConfig,
    type2_offices: Optional[Sequence] = None,
) -> dict:
    """Range, correlation and reliability tables for Type1 and (optionally) Type2 repeats."""
    out: dict = {"type1": {}, "type2": {}}
    kinds = [("type1", lambda m: type1_groups(rows, m))]
    if type2_offices:
        kinds.append(("type2", lambda m: type2_groups(rows, m, type2_offices, cfg.type2_retention)))
    for kind, make in kinds:
        deltas = {}
        for m in metrics:
            groups = make(m)
            if len(groups) < 2:
                continue
            deltas[m] = [rs.delta_range(g).delta for g in groups]
            out[kind][m] = {
                "delta": delta_summary(groups, cfg, f"{kind}.{m}"),
                "reliability": reliability_summary(groups, cfg, f"{kind}.{m}"),
            }
        if len(deltas) >= 2:
            out[kind]["kendall"] = tau_matrix(deltas, cfg, kind)
    return out
