"""JSON run configuration: structural and physical validation with aggregated
errors, default filling and a stable hash of the resolved configuration."""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass

from .hamiltonian import SWEEP_STEP, SpinSystem
from .io import config_hash
from .lineshape import AsymmetryParams
from .spin import validate_spin
from .synth import ModeSpec

DEFAULT_MODES_HZ = (0.4546e9, 0.5993e9, 0.6228e9)

REQUIRED = object()


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        super().__init__("invalid configuration:\n  " + "\n  ".join(errors))
        self.errors = errors


def _number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _positive(v):
    return _number(v) and v > 0


def _nonneg(v):
    return _number(v) and v >= 0


def _half_integer(v):
    try:
        validate_spin(v)
        return _number(v)
    except ValueError:
        return False


def _fraction_open(v):
    return _number(v) and 0 < v <= 1


def _odd_int(v):
    return isinstance(v, int) and not isinstance(v, bool) and v >= 3 and v % 2 == 1


def _int(v):
    return isinstance(v, int) and not isinstance(v, bool) and v >= 0


def _bool(v):
    return isinstance(v, bool)


def _asym(v):
    return v is None or (_number(v) and -1 < v < 1)


def _free_list(v):
    from .analysis import FREE_PARAMETERS
    return (isinstance(v, list) and len(v) > 0 and len(set(v)) == len(v)
            and all(p in FREE_PARAMETERS for p in v))


# key -> (default, predicate, constraint text)
SPIN_SCHEMA = {
    "S": (0.5, _half_integer, "non-negative half-integer"),
    "I": (0.0, _half_integer, "non-negative half-integer"),
    "g_par": (REQUIRED, _positive, "g_par > 0"),
    "g_perp": (0.0, _number, "finite number"),
    "A_par": (0.0, _number, "finite number (Hz)"),
    "E_rhombic": (0.0, _number, "finite number (Hz)"),
    "D_fine": (0.0, _number, "finite number (Hz)"),
    "line_width_fwhm": (3e5, _positive, "line_width_fwhm > 0 (Hz)"),
}
MODE_SCHEMA = {
    "frequency": (REQUIRED, _positive, "frequency > 0 (Hz)"),
    "loaded_q": (1000.0, _positive, "loaded_q > 0"),
    "theta": (math.pi / 2, _number, "finite angle (rad)"),
    "fill_factor": (1.0, _fraction_open, "0 < fill_factor <= 1"),
}
SECTION_SCHEMAS = {
    "sweep": {
        "b_min": (0.0, _nonneg, "b_min >= 0 (T)"),
        "b_max": (0.015, _positive, "b_max > 0 (T)"),
        "b_step": (SWEEP_STEP, _positive, "b_step > 0 (T)"),
    },
    "synth": {
        "spin_signal_depth_db": (10.0, _nonneg, "spin_signal_depth_db >= 0"),
        "noise_db": (0.0, _nonneg, "noise_db >= 0"),
        "asymmetry_a_s": (None, _asym, "null or -1 < a_s < 1"),
        "baseline_peak_db": (-20.0, _number, "finite number (dB)"),
        "freq_points": (101, _odd_int, "odd integer >= 3"),
        "span_linewidths": (5.0, _positive, "span_linewidths > 0"),
    },
    "peaks": {
        "snr_threshold": (5.0, _positive, "snr_threshold > 0"),
    },
    "fitg": {
        "force_zero_intercept": (True, _bool, "boolean"),
    },
    "fit": {
        "free": (["g_par"], _free_list, "non-empty list of distinct names from g_par, A_par, E_rhombic, D_fine"),
        "max_iter": (5000, _int, "non-negative integer"),
    },
}
TOP_LEVEL = {"spin_system", "modes", "seed", "output_dir", *SECTION_SCHEMAS}


def _fill(raw, schema, path, errors):
    out = {}
    if not isinstance(raw, dict):
        errors.append(f"{path}: must be a JSON object")
        return out
    for key in sorted(set(raw) - set(schema)):
        errors.append(f"{path}.{key}: unknown key (allowed: {', '.join(schema)})")
    for key, (default, pred, text) in schema.items():
        if key not in raw:
            if default is REQUIRED:
                errors.append(f"{path}.{key}: required key missing ({text})")
            else:
                out[key] = copy.deepcopy(default)
            continue
        v = raw[key]
        if not pred(v):
            errors.append(f"{path}.{key}: {v!r} violates constraint {text}")
        out[key] = v
    return out


@dataclass(frozen=True)
class RunConfig:
    resolved: dict

    @property
    def spin_system(self) -> SpinSystem:
        return SpinSystem(**self.resolved["spin_system"])

    @property
    def modes(self) -> list[ModeSpec]:
        return [ModeSpec(**m) for m in self.resolved["modes"]]

    @property
    def seed(self) -> int:
        return self.resolved["seed"]

    @property
    def asymmetry(self) -> AsymmetryParams | None:
        a = self.resolved["synth"]["asymmetry_a_s"]
        return None if a is None else AsymmetryParams(a)

    @property
    def output_dir(self) -> str | None:
        return self.resolved.get("output_dir")

    def section(self, name: str) -> dict:
        return self.resolved[name]

    @property
    def hash(self) -> str:
        """Hash of everything except the output location."""
        return config_hash({k: v for k, v in self.resolved.items() if k != "output_dir"})


def resolve(raw) -> RunConfig:
    """Validate a parsed JSON object; raises :class:`ConfigError` listing every problem."""
    errors: list[str] = []
    if not isinstance(raw, dict):
        raise ConfigError(["<root>: configuration must be a JSON object"])
    for key in sorted(set(raw) - TOP_LEVEL):
        errors.append(f"{key}: unknown top-level key (allowed: {', '.join(sorted(TOP_LEVEL))})")
    out = {}
    if "spin_system" not in raw:
        errors.append("spin_system: required key missing")
    else:
        out["spin_system"] = _fill(raw["spin_system"], SPIN_SCHEMA, "spin_system", errors)
    if "modes" not in raw:
        errors.append("modes: required key missing (non-empty list of mode objects)")
    elif not isinstance(raw["modes"], list) or not raw["modes"]:
        errors.append("modes: must be a non-empty list of mode objects")
    else:
        out["modes"] = [_fill(m, MODE_SCHEMA, f"modes[{i}]", errors) for i, m in enumerate(raw["modes"])]
    for name, schema in SECTION_SCHEMAS.items():
        out[name] = _fill(raw.get(name, {}), schema, name, errors)
    seed = raw.get("seed", 0)
    if not _int(seed):
        errors.append(f"seed: {seed!r} violates constraint non-negative integer")
    out["seed"] = seed
    od = raw.get("output_dir")
    if od is not None and not isinstance(od, str):
        errors.append("output_dir: must be a string or null")
    out["output_dir"] = od

    sw = out["sweep"]
    if _number(sw.get("b_min")) and _number(sw.get("b_max")) and not sw["b_max"] > sw["b_min"]:
        errors.append("sweep.b_max: must exceed sweep.b_min")
    ss = out.get("spin_system", {})
    if "spin_system" in out and not any(e.startswith("spin_system") for e in errors):
        try:
            SpinSystem(**ss)
        except ValueError as exc:
            errors.append(f"spin_system: {exc}")
    if "modes" in out and not any(e.startswith("modes") for e in errors):
        freqs = sorted(out["modes"], key=lambda m: m["frequency"])
        span = out["synth"].get("span_linewidths", 5.0)
        if _positive(span):
            for lo, hi in zip(freqs, freqs[1:]):
                if hi["frequency"] - lo["frequency"] <= span * (
                        lo["frequency"] / lo["loaded_q"] + hi["frequency"] / hi["loaded_q"]):
                    errors.append(f"modes: windows of {lo['frequency']} Hz and {hi['frequency']} Hz overlap")
    if errors:
        raise ConfigError(errors)
    return RunConfig(out)


def validate_config(text: str) -> RunConfig:
    if not text.strip():
        raise ConfigError([
            "<root>: empty configuration; required keys: spin_system (with g_par), "
            "modes (list of objects with frequency)"
        ])
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"<root>: not valid JSON ({exc})"]) from None
    return resolve(raw)


def default_raw() -> dict:
    return {
        "spin_system": {"g_par": 5.51},
        "modes": [{"frequency": f} for f in DEFAULT_MODES_HZ],
    }


def default_config() -> RunConfig:
    return resolve(default_raw())
