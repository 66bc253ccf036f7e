"""File formats: sweep-trace CSV, spectrum-map CSV + JSON header, JSON reports.

All writers return text; :func:`write_all` commits a batch atomically per file
(temp file + rename) only after every artifact has been rendered.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .analysis import SweepTrace
from .synth import DB_CONVENTION, SpectrumMap

TRACE_FORMAT = "esrkit-sweep-trace/1"
MAP_FORMAT = "esrkit-spectrum-map/1"
PEAKS_FORMAT = "esrkit-peaks/1"


class SchemaError(ValueError):
    pass


def num(x) -> str:
    return repr(float(x))


def clean(obj):
    """Recursively turn numpy scalars/arrays into JSON types; non-finite -> None."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dumps(obj) -> str:
    return json.dumps(clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def config_hash(resolved: dict) -> str:
    canon = json.dumps(clean(resolved), sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def write_all(files: dict[Path, str]) -> list[Path]:
    written = []
    for path, text in files.items():
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", newline="") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        written.append(path)
    return written


# -- sweep traces ---------------------------------------------------------

def trace_csv(trace: SweepTrace, extra: dict | None = None) -> str:
    header = {
        "format": TRACE_FORMAT,
        "mode_frequency_hz": float(trace.mode_frequency),
        "db_convention": DB_CONVENTION,
        **(extra or {}),
    }
    lines = ["# " + json.dumps(clean(header), sort_keys=True, allow_nan=False), "b_tesla,s21_db"]
    lines += [f"{num(b)},{num(v)}" for b, v in zip(trace.b_points, trace.s21_db)]
    return "\n".join(lines) + "\n"


def validate_trace_header(header) -> list[str]:
    errors = []
    if not isinstance(header, dict):
        return ["header must be a JSON object"]
    if header.get("format") != TRACE_FORMAT:
        errors.append(f"format: expected {TRACE_FORMAT!r}")
    f = header.get("mode_frequency_hz")
    if not isinstance(f, (int, float)) or isinstance(f, bool) or not f > 0:
        errors.append("mode_frequency_hz: required positive number")
    if header.get("db_convention") != DB_CONVENTION:
        errors.append(f"db_convention: expected {DB_CONVENTION!r}")
    if not isinstance(header.get("config_hash"), str):
        errors.append("config_hash: required string")
    return errors


def parse_trace(text: str, source: str = "<string>") -> tuple[SweepTrace, dict]:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("#"):
        raise SchemaError(f"{source}: missing '# {{json}}' header line")
    try:
        header = json.loads(lines[0][1:])
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{source}: header is not valid JSON ({exc})") from None
    errors = validate_trace_header(header)
    if len(lines) < 2 or lines[1].strip() != "b_tesla,s21_db":
        errors.append("columns: expected 'b_tesla,s21_db'")
    if errors:
        raise SchemaError(f"{source}: " + "; ".join(errors))
    try:
        rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[2:] if ln.strip()])
    except ValueError as exc:
        raise SchemaError(f"{source}: bad numeric row ({exc})") from None
    if rows.ndim != 2 or rows.shape[1] != 2:
        raise SchemaError(f"{source}: expected two numeric columns")
    meta = {k: header[k] for k in ("seed", "source", "mode_index", "theta") if k in header}
    trace = SweepTrace(header["mode_frequency_hz"], rows[:, 0], rows[:, 1], metadata=meta)
    return trace, header


def read_trace(path) -> tuple[SweepTrace, dict]:
    return parse_trace(Path(path).read_text(), str(path))


# -- spectrum maps --------------------------------------------------------

def map_csv(b_axis, f_axis, s21) -> str:
    lines = ["b_tesla,freq_hz,s21_db"]
    for i, b in enumerate(b_axis):
        bs = num(b)
        for j, f in enumerate(f_axis):
            lines.append(f"{bs},{num(f)},{num(s21[i, j])}")
    return "\n".join(lines) + "\n"


def map_header(smap: SpectrumMap, index: int, extra: dict | None = None) -> dict:
    b, f, _ = smap.mode_map(index)
    mode = smap.modes[index]
    return {
        "format": MAP_FORMAT,
        "columns": {"b_tesla": "T", "freq_hz": "Hz", "s21_db": DB_CONVENTION},
        "mode": {"frequency": mode.frequency, "loaded_q": mode.loaded_q,
                 "theta": mode.theta, "fill_factor": mode.fill_factor},
        "b_axis": {"start": float(b[0]), "stop": float(b[-1]), "count": len(b)},
        "f_axis": {"start": float(f[0]), "stop": float(f[-1]), "count": len(f)},
        "rng_seed": smap.rng_seed,
        **smap.metadata,
        **(extra or {}),
    }


def parse_map_csv(text: str):
    lines = text.splitlines()
    if not lines or lines[0].strip() != "b_tesla,freq_hz,s21_db":
        raise SchemaError("map CSV must start with 'b_tesla,freq_hz,s21_db'")
    rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:] if ln.strip()])
    b = np.unique(rows[:, 0])
    f = np.unique(rows[:, 1])
    return b, f, rows[:, 2].reshape(len(b), len(f))


# -- peak lists -----------------------------------------------------------

def validate_peaks_doc(doc) -> list[str]:
    errors = []
    if not isinstance(doc, dict):
        return ["document must be a JSON object"]
    if doc.get("format") != PEAKS_FORMAT:
        errors.append(f"format: expected {PEAKS_FORMAT!r}")
    if not isinstance(doc.get("config_hash"), str):
        errors.append("config_hash: required string")
    traces = doc.get("traces")
    if not isinstance(traces, list):
        errors.append("traces: required list")
        return errors
    for k, tr in enumerate(traces):
        if not isinstance(tr, dict):
            errors.append(f"traces[{k}]: must be an object")
            continue
        f = tr.get("mode_frequency_hz")
        if not isinstance(f, (int, float)) or not f > 0:
            errors.append(f"traces[{k}].mode_frequency_hz: required positive number")
        peaks = tr.get("peaks")
        if not isinstance(peaks, list):
            errors.append(f"traces[{k}].peaks: required list")
            continue
        for j, p in enumerate(peaks):
            if not isinstance(p, dict) or not isinstance(p.get("b_center"), (int, float)):
                errors.append(f"traces[{k}].peaks[{j}].b_center: required number")
    return errors


def read_peaks(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from None
    errors = validate_peaks_doc(doc)
    if errors:
        raise SchemaError(f"{path}: " + "; ".join(errors))
    return doc
