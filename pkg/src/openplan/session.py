"""Session manifests: parsing, canonical serialization and the analyze driver.

A manifest describes one office. Each receiver carries either inline band
levels or references to audio files (a sweep recording and optionally a
background-noise recording), so the whole statistics chain can run without
any audio at all.

Minimal YAML example::

    office: {id: "7", building: C}
    source_power: [90, 90, 90, 90, 90, 90, 90]
    paths:
      - id: "7"
        runs:
          - run: 1
            receivers:
              - {distance_m: 2, levels: [80, 80, 80, 80, 80, 80, 80]}
              ...
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np
import yaml

from . import dsp, iso3382
from .core import (
    BAND_CENTERS,
    N_BANDS,
    MetricSet,
    OctaveBandSpectrum,
    PathMeasurement,
    ReceiverPoint,
    ValidationError,
)

MIN_NOISE_SECONDS = 60.0
OFFICE_FIELDS = ("id", "building", "ceiling", "floor", "length_m", "width_m",
                 "workstations_per_100m2", "partitions")


class ManifestError(ValidationError):
    """Manifest problem, addressed by field path (and file/line when known)."""

    def __init__(self, where: str, message: str, source: Optional[str] = None, line: Optional[int] = None):
        loc = where
        if source:
            loc = f"{source}:{line}: {where}" if line else f"{source}: {where}"
        super().__init__(f"{loc}: {message}")
        self.where = where
        self.line = line


class ShortNoiseRecordingWarning(UserWarning):
    pass


@dataclass(frozen=True)
class AudioSettings:
    sweep: dsp.SweepSpec
    calibration_db: tuple[float, ...] = (0.0,) * N_BANDS
    ir_length: Optional[float] = None
    mtf_noise_subtract: bool = False


@dataclass(frozen=True)
class SessionManifest:
    office: dict
    source_power: OctaveBandSpectrum
    runs: tuple[PathMeasurement, ...]
    audio: Optional[AudioSettings] = None
    base_dir: Optional[str] = field(default=None, compare=False)

    @property
    def office_id(self) -> str:
        return str(self.office.get("id", ""))


# -- field readers -------------------------------------------------------------


def _num(value, where: str) -> float:
    if isinstance(value, bool):
        raise ManifestError(where, f"expected a number, got {value!r}")
    if isinstance(value, str):
        if value.strip().lower() in ("-inf", "-infinity"):
            return -math.inf
        try:
            value = float(value)
        except ValueError:
            raise ManifestError(where, f"malformed number {value!r}") from None
    if not isinstance(value, (int, float)):
        raise ManifestError(where, f"expected a number, got {type(value).__name__}")
    return float(value)


def _bands(value, where: str, allow_none: bool = True) -> tuple:
    if not isinstance(value, (list, tuple)) or len(value) != N_BANDS:
        raise ManifestError(where, f"expected a list of {N_BANDS} band values")
    out = []
    for i, v in enumerate(value):
        if v is None and allow_none:
            out.append(None)
        else:
            out.append(_num(v, f"{where}[{i}]"))
    return tuple(out)


def _spectrum(value, where: str) -> OctaveBandSpectrum:
    vals = _bands(value, where)
    try:
        return OctaveBandSpectrum(vals)
    except ValidationError as exc:
        raise ManifestError(where, str(exc)) from None


def _require(mapping: dict, key: str, where: str):
    if not isinstance(mapping, dict):
        raise ManifestError(where, "expected a mapping")
    if key not in mapping:
        raise ManifestError(f"{where}.{key}" if where else key, "required field missing")
    return mapping[key]


# -- audio ---------------------------------------------------------------------


def read_wav(path: Path, channel: Optional[int], where: str) -> tuple[np.ndarray, float]:
    from scipy.io import wavfile

    try:
        fs, data = wavfile.read(path)
    except FileNotFoundError:
        raise ManifestError(where, f"file not found: {path}") from None
    except ValueError as exc:
        raise ManifestError(where, f"cannot read {path}: {exc}") from None
    if np.issubdtype(data.dtype, np.integer):
        data = data.astype(float) / float(np.iinfo(data.dtype).max)
    data = np.asarray(data, dtype=float)
    if data.ndim == 2:
        ch = 0 if channel is None else channel
        if not 0 <= ch < data.shape[1]:
            raise ManifestError(where, f"channel {ch} not in {path} ({data.shape[1]} channels)")
        data = data[:, ch]
    elif channel not in (None, 0):
        raise ManifestError(where, f"{path} is mono, channel {channel} requested")
    return data, float(fs)


def receiver_from_audio(
    recording: np.ndarray,
    audio: AudioSettings,
    noise: Optional[np.ndarray] = None,
    receiver_id: str = "",
    distance_m: float = 1.0,
) -> ReceiverPoint:
    """Band levels, per-band T30 and MTF from a sweep recording (plus optional noise)."""
    ir = dsp.deconvolve_sweep(recording, audio.sweep, ir_length=audio.ir_length, receiver_id=receiver_id)
    fs = audio.sweep.sample_rate
    levels, t30s, mtf = [], [], []
    for fc, cal in zip(BAND_CENTERS, audio.calibration_db):
        band = dsp.octave_filter(ir, fc)
        levels.append(dsp.band_energy_db(band) + cal)
        mtf.append(dsp.mtf_from_ir(band, noise_subtract=audio.mtf_noise_subtract))
        try:
            t30s.append(dsp.t30(dsp.schroeder_decay(dsp.octave_filter(ir, fc, zero_phase=True))).t30_s)
        except (dsp.InsufficientDecayError, ValidationError):
            t30s.append(None)
    noise_spec = None
    if noise is not None:
        sig = dsp.ImpulseResponse(noise, fs)
        noise_spec = OctaveBandSpectrum(tuple(
            dsp.band_power_db(dsp.octave_filter(sig, fc).samples) + cal
            for fc, cal in zip(BAND_CENTERS, audio.calibration_db)
        ))
    return ReceiverPoint(distance_m, OctaveBandSpectrum(tuple(levels)), noise_spec,
                         mtf=tuple(map(tuple, np.array(mtf))), t30=tuple(t30s), receiver_id=receiver_id)


def _audio_settings(raw, where: str) -> AudioSettings:
    sw = _require(raw, "sweep", where)
    sw_where = f"{where}.sweep"
    try:
        sweep = dsp.SweepSpec(
            _num(_require(sw, "f_start", sw_where), f"{sw_where}.f_start"),
            _num(_require(sw, "f_end", sw_where), f"{sw_where}.f_end"),
            _num(_require(sw, "duration", sw_where), f"{sw_where}.duration"),
            _num(_require(sw, "sample_rate", sw_where), f"{sw_where}.sample_rate"),
            _num(sw.get("amplitude", 1.0), f"{sw_where}.amplitude"),
        )
    except ValidationError as exc:
        if isinstance(exc, ManifestError):
            raise
        raise ManifestError(sw_where, str(exc)) from None
    cal = raw.get("calibration_db", [0.0] * N_BANDS)
    ir_len = raw.get("ir_length")
    return AudioSettings(
        sweep,
        _bands(cal, f"{where}.calibration_db", allow_none=False),
        None if ir_len is None else _num(ir_len, f"{where}.ir_length"),
        bool(raw.get("mtf_noise_subtract", False)),
    )


# -- parsing -------------------------------------------------------------------


def _receiver(raw, where: str, audio: Optional[AudioSettings], base: Path) -> ReceiverPoint:
    if not isinstance(raw, dict):
        raise ManifestError(where, "expected a mapping")
    rid = str(raw.get("id", ""))
    dist = _num(_require(raw, "distance_m", where), f"{where}.distance_m")
    if "recording" in raw:
        if audio is None:
            raise ManifestError(f"{where}.recording", "audio receivers need a top-level 'audio' block")
        rec, fs = read_wav(base / str(raw["recording"]), raw.get("channel"), f"{where}.recording")
        if fs != audio.sweep.sample_rate:
            raise ManifestError(f"{where}.recording", f"sample rate {fs} Hz != sweep rate {audio.sweep.sample_rate} Hz")
        noise = None
        if "noise_recording" in raw:
            noise, nfs = read_wav(base / str(raw["noise_recording"]), raw.get("noise_channel"), f"{where}.noise_recording")
            seconds = noise.size / nfs
            if seconds < MIN_NOISE_SECONDS:
                warnings.warn(
                    f"{where}.noise_recording: {seconds:.1f} s is shorter than {MIN_NOISE_SECONDS:.0f} s",
                    ShortNoiseRecordingWarning,
                )
        try:
            return receiver_from_audio(rec, audio, noise, rid, dist)
        except ValidationError as exc:
            raise ManifestError(where, str(exc)) from None

    levels = _spectrum(_require(raw, "levels", where), f"{where}.levels")
    noise = _spectrum(raw["noise"], f"{where}.noise") if raw.get("noise") is not None else None
    mtf = raw.get("mtf")
    if mtf is not None:
        if not isinstance(mtf, list) or len(mtf) != N_BANDS:
            raise ManifestError(f"{where}.mtf", f"expected {N_BANDS} rows of 14 values")
        mtf = tuple(tuple(_num(v, f"{where}.mtf[{i}][{j}]") for j, v in enumerate(row)) for i, row in enumerate(mtf))
    t30 = _bands(raw["t30"], f"{where}.t30") if raw.get("t30") is not None else None
    try:
        return ReceiverPoint(dist, levels, noise, mtf=mtf, t30=t30, receiver_id=rid)
    except ValidationError as exc:
        raise ManifestError(where, str(exc)) from None


def manifest_from_dict(data: Any, base_dir: Optional[Path] = None, source: Optional[str] = None) -> SessionManifest:
    base = Path(base_dir) if base_dir is not None else Path(".")
    if not isinstance(data, dict):
        raise ManifestError("<root>", "manifest must be a mapping", source)
    office = data.get("office", {}) or {}
    if not isinstance(office, dict):
        raise ManifestError("office", "expected a mapping", source)
    office = {k: office[k] for k in office}
    office_id = str(office.get("id", ""))
    source_power = _spectrum(_require(data, "source_power", ""), "source_power")
    audio = _audio_settings(data["audio"], "audio") if data.get("audio") else None

    paths = _require(data, "paths", "")
    if not isinstance(paths, list) or not paths:
        raise ManifestError("paths", "expected a non-empty list")
    runs, seen = [], {}
    for pi, p in enumerate(paths):
        pw = f"paths[{pi}]"
        pid = str(_require(p, "id", pw))
        rlist = _require(p, "runs", pw)
        if not isinstance(rlist, list) or not rlist:
            raise ManifestError(f"{pw}.runs", "expected a non-empty list")
        for ri, r in enumerate(rlist):
            rw = f"{pw}.runs[{ri}]"
            idx = _require(r, "run", rw)
            if not isinstance(idx, int) or isinstance(idx, bool):
                raise ManifestError(f"{rw}.run", f"expected an integer, got {idx!r}")
            if (pid, idx) in seen:
                raise ManifestError(rw, f"duplicate path {pid!r} run {idx} (first defined at {seen[(pid, idx)]})")
            seen[(pid, idx)] = rw
            recs = _require(r, "receivers", rw)
            if not isinstance(recs, list):
                raise ManifestError(f"{rw}.receivers", "expected a list")
            receivers = []
            for k, raw in enumerate(recs):
                rec = _receiver(raw, f"{rw}.receivers[{k}]", audio, base)
                if not rec.receiver_id:
                    rec = ReceiverPoint(rec.distance_m, rec.spectrum, rec.noise, rec.mtf, rec.t30, f"R{k + 1}")
                receivers.append(rec)
            for k in range(1, len(receivers)):
                a, b = receivers[k - 1], receivers[k]
                if b.distance_m <= a.distance_m:
                    raise ManifestError(
                        f"{rw}.receivers[{k}].distance_m",
                        f"distances must strictly increase: receiver {a.receiver_id} at {a.distance_m:g} m "
                        f"is followed by receiver {b.receiver_id} at {b.distance_m:g} m",
                    )
            direction = r.get("direction", "forward" if idx == 1 else "reverse")
            try:
                runs.append(PathMeasurement(
                    office_id, pid, idx, tuple(receivers),
                    _spectrum(r["source_power"], f"{rw}.source_power") if "source_power" in r else source_power,
                    direction=direction,
                    min_receivers=int(r.get("min_receivers", 5)),
                    max_receivers=int(r.get("max_receivers", 8)),
                ))
            except ValidationError as exc:
                if isinstance(exc, ManifestError):
                    raise
                raise ManifestError(rw, str(exc)) from None
    return SessionManifest(office, source_power, tuple(runs), audio, str(base))


def parse_session(path) -> SessionManifest:
    """Read a YAML or JSON manifest; relative audio paths resolve against its folder."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ManifestError("<file>", f"manifest not found: {path}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        line = exc.problem_mark.line + 1 if exc.problem_mark else None
        raise ManifestError("<syntax>", str(exc.problem), str(path), line) from None
    try:
        return manifest_from_dict(data, path.parent)
    except ManifestError as exc:
        raise ManifestError(exc.where, str(exc).split(": ", 1)[1] if ": " in str(exc) else str(exc),
                            str(path)) from None


# -- canonical serialization ---------------------------------------------------


def _num_out(v):
    if v is None:
        return None
    if v == -math.inf:
        return "-inf"
    return float(v)


def manifest_to_dict(m: SessionManifest) -> dict:
    """Inline-band form of a manifest (audio receivers are stored as their derived levels)."""
    by_path: dict[str, list] = {}
    for run in m.runs:
        recs = []
        for r in run.receivers:
            d = {"id": r.receiver_id, "distance_m": r.distance_m,
                 "levels": [_num_out(v) for v in r.spectrum.levels]}
            if r.noise is not None:
                d["noise"] = [_num_out(v) for v in r.noise.levels]
            if r.t30 is not None:
                d["t30"] = [_num_out(v) for v in r.t30]
            if r.mtf is not None:
                d["mtf"] = [list(row) for row in r.mtf]
            recs.append(d)
        entry = {"run": run.run_index, "direction": run.direction.value, "receivers": recs}
        if run.source_power != m.source_power:
            entry["source_power"] = [_num_out(v) for v in run.source_power.levels]
        by_path.setdefault(run.path_id, []).append(entry)
    return {
        "office": dict(m.office),
        "source_power": [_num_out(v) for v in m.source_power.levels],
        "paths": [{"id": pid, "runs": rl} for pid, rl in by_path.items()],
    }


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def dump_session(m: SessionManifest) -> str:
    return canonical_json(manifest_to_dict(m))


# -- analyze driver ------------------------------------------------------------


ANALYZE_COLUMNS = (
    "office", "path", "run", "d2s_db", "lpas4m_db", "rd_m", "rd_defined", "rd_valid",
    "lpab_dba", "t30_mid_s", "noise_gain_db", "class_rd", "class_d2s", "class_lpas4m", "warnings",
)


def metric_row(run: PathMeasurement, ms: MetricSet, table: iso3382.AnnexAThresholds) -> dict:
    return {
        "office": run.office_id,
        "path": run.path_id,
        "run": run.run_index,
        "d2s_db": ms.d2s_db,
        "lpas4m_db": ms.lpas4m_db,
        "rd_m": ms.rd_m,
        "rd_defined": ms.rd_defined,
        "rd_valid": ms.rd_valid,
        "lpab_dba": ms.lpab_dba,
        "t30_mid_s": ms.t30_mid_s,
        "noise_gain_db": ms.noise_gain_db,
        "class_rd": iso3382.classify_annex_a("rd", ms.rd_m, table) if ms.rd_defined else "undefined",
        "class_d2s": iso3382.classify_annex_a("d2s", ms.d2s_db, table),
        "class_lpas4m": iso3382.classify_annex_a("lpas4m", ms.lpas4m_db, table),
        "warnings": list(ms.warnings),
    }


def run_analyze(
    session: SessionManifest,
    options: iso3382.AnalysisOptions = iso3382.AnalysisOptions(),
    table: iso3382.AnnexAThresholds = iso3382.AnnexAThresholds(),
) -> list[dict]:
    """One row per run, in manifest order."""
    _, sets = iso3382.compute_office(list(session.runs), options)
    return [metric_row(run, ms, table) for run, ms in zip(session.runs, sets)]


def format_rows(rows: Sequence[dict], columns: Sequence[str], fmt: str = "tsv") -> str:
    if fmt == "json":
        return canonical_json([{c: r.get(c) for c in columns} for r in rows])

    def cell(v):
        if v is None:
            return ""
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, float):
            return f"{v:.4f}"
        if isinstance(v, (list, tuple)):
            return "; ".join(map(str, v))
        return str(v)

    lines = ["\t".join(columns)]
    lines += ["\t".join(cell(r.get(c)) for c in columns) for r in rows]
    return "\n".join(lines) + "\n"


# -- synthetic fixtures --------------------------------------------------------


def write_fixture(specs: Sequence, out_dir, office: Optional[dict] = None) -> tuple[Path, Path]:
    """Write ``session.json`` and ``truth.json`` for synthetic paths (two runs each)."""
    from . import synth

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    runs, truth = [], []
    for spec in specs:
        for run, gt in synth.generate_repeat_pair(spec):
            runs.append(run)
            truth.append({"path": spec.path_id, "run": run.run_index, **gt.to_dict()})
    src = runs[0].source_power
    office = dict(office or {"id": runs[0].office_id})
    m = SessionManifest(office, src, tuple(runs))
    sp, tp = out / "session.json", out / "truth.json"
    sp.write_text(dump_session(m), encoding="utf-8")
    tp.write_text(canonical_json(truth), encoding="utf-8")
    return sp, tp
