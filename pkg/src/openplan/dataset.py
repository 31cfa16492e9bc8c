"""Bundled per-path metric table and office characteristics for the 36-path study."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, fields
from importlib import resources
from typing import Optional, Sequence

TYPE2_OFFICES: tuple[int, ...] = (18, 21, 22, 23, 24, 26, 27)
METRICS: tuple[str, ...] = ("rd", "d2s", "lpas4m")
UNITS = {"rd": "m", "d2s": "dB", "lpas4m": "dB", "lpab": "dB"}

_T2_HEADER = (
    "building", "office", "path", "t30_mid", "lpab", "rd_1", "rd_2", "d2s_1", "d2s_2",
    "lpas4m_1", "lpas4m_2", "flag_rd_1", "flag_rd_2", "flag_d2s_1", "flag_d2s_2",
    "flag_lpas4m_1", "flag_lpas4m_2",
)
_FLAG_NAMES = {"*": "poor", "#": "good", "": "unclassified"}


@dataclass(frozen=True)
class PathRecord:
    building: str
    office: int
    path: int
    t30_mid: float
    lpab: float
    rd_1: float
    rd_2: float
    d2s_1: float
    d2s_2: float
    lpas4m_1: float
    lpas4m_2: float
    flag_rd_1: str = ""
    flag_rd_2: str = ""
    flag_d2s_1: str = ""
    flag_d2s_2: str = ""
    flag_lpas4m_1: str = ""
    flag_lpas4m_2: str = ""

    def values(self, metric: str) -> tuple[float, float]:
        return getattr(self, f"{metric}_1"), getattr(self, f"{metric}_2")

    def flags(self, metric: str) -> tuple[str, str]:
        return getattr(self, f"flag_{metric}_1"), getattr(self, f"flag_{metric}_2")

    def flag_class(self, metric: str, run: int) -> str:
        return _FLAG_NAMES[getattr(self, f"flag_{metric}_{run}")]


@dataclass(frozen=True)
class OfficeRecord:
    building: str
    office: int
    path_first: int
    path_last: int
    ceiling: str
    floor: str
    length_m: float
    width_m: float
    workstations_per_100m2: float
    partitions: str

    @property
    def floor_area_m2(self) -> float:
        return self.length_m * self.width_m

    @property
    def paths(self) -> tuple[int, ...]:
        return tuple(range(self.path_first, self.path_last + 1))


def _read_tsv(text: str) -> tuple[list[str], list[dict]]:
    comments = [ln for ln in text.splitlines() if ln.startswith("#")]
    body = "\n".join(ln for ln in text.splitlines() if not ln.startswith("#"))
    return comments, list(csv.DictReader(io.StringIO(body), delimiter="\t"))


def _coerce(cls, row: dict):
    kw = {}
    for f in fields(cls):
        raw = row[f.name]
        typ = f.type if isinstance(f.type, str) else f.type.__name__
        if typ == "int":
            kw[f.name] = int(raw)
        elif typ == "float":
            kw[f.name] = float(raw)
        else:
            kw[f.name] = raw or ""
    return cls(**kw)


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass(frozen=True)
class BundledDataset:
    paths: tuple[PathRecord, ...]
    offices: tuple[OfficeRecord, ...]
    type2_offices: tuple[int, ...] = TYPE2_OFFICES
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        if len(self.paths) != 36:
            raise ValueError(f"expected 36 path rows, got {len(self.paths)}")

    @classmethod
    def load(cls) -> "BundledDataset":
        pkg = resources.files("openplan") / "data"
        notes, rows = _read_tsv((pkg / "table2.tsv").read_text(encoding="utf-8"))
        _, orows = _read_tsv((pkg / "table1.tsv").read_text(encoding="utf-8"))
        return cls(
            tuple(_coerce(PathRecord, r) for r in rows),
            tuple(_coerce(OfficeRecord, r) for r in orows),
            notes=tuple(notes),
        )

    @classmethod
    def from_tsv(cls, text: str, offices: Optional[Sequence[OfficeRecord]] = None) -> "BundledDataset":
        notes, rows = _read_tsv(text)
        return cls(tuple(_coerce(PathRecord, r) for r in rows),
                   tuple(offices) if offices is not None else cls.load().offices, notes=tuple(notes))

    def to_tsv(self) -> str:
        lines = list(self.notes) + ["\t".join(_T2_HEADER)]
        for rec in self.paths:
            lines.append("\t".join(_fmt(getattr(rec, h)) for h in _T2_HEADER))
        return "\n".join(lines) + "\n"

    def office(self, office_id: int) -> OfficeRecord:
        for o in self.offices:
            if o.office == office_id:
                return o
        raise KeyError(office_id)

    def paths_in_office(self, office_id: int) -> list[PathRecord]:
        return [p for p in self.paths if p.office == office_id]

    def office_of_path(self, path_id: int) -> OfficeRecord:
        for o in self.offices:
            if path_id in o.paths:
                return o
        raise KeyError(path_id)

    def tidy(self) -> list[dict]:
        """One row per (office, path, run, metric)."""
        out = []
        for p in self.paths:
            for m in METRICS:
                for run, v in zip((1, 2), p.values(m)):
                    out.append({"office": p.office, "path": p.path, "run": run, "metric": m, "value": v})
        return out
