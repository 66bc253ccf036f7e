"""Command-line entry point: ``esrkit {synth,peaks,fitg,fit,gmodel,sense,validate}``."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import io, ligand
from .analysis import PeakEstimate, detect_peaks, fit_g_linear, fit_spin_params
from .config import ConfigError, default_config, validate_config
from .constants import CONSTANTS
from .hamiltonian import sweep_grid
from .sensitivity import LatticeSpec, SensitivityInput, cylinder_volume, sensitivity_row
from .synth import ModeSpec, synth_map

OUTPUT_ENV = "ESRKIT_OUTPUT_DIR"
DEFAULT_OUTPUT = "esrkit-out"


def _load_config(path):
    if path is None:
        return default_config()
    return validate_config(Path(path).read_text())


def _out_dir(args, cfg=None) -> Path:
    if args.out:
        return Path(args.out)
    if cfg is not None and cfg.output_dir:
        return Path(cfg.output_dir)
    return Path(os.environ.get(OUTPUT_ENV, DEFAULT_OUTPUT))


def _stamp(cfg) -> dict:
    return {"config_hash": cfg.hash, "seed": cfg.seed}


def cmd_synth(args):
    cfg = _load_config(args.config)
    sw, sy = cfg.section("sweep"), cfg.section("synth")
    grid = sweep_grid(sw["b_min"], sw["b_max"], sw["b_step"])
    smap = synth_map(
        cfg.spin_system, cfg.modes, grid,
        spin_signal_depth=sy["spin_signal_depth_db"], asym=cfg.asymmetry,
        noise_db=sy["noise_db"], seed=cfg.seed,
        freq_points=sy["freq_points"], span_linewidths=sy["span_linewidths"],
        baseline_peak_db=sy["baseline_peak_db"],
    )
    out = _out_dir(args, cfg)
    files, listing = {}, []
    for i, mode in enumerate(smap.modes):
        b, f, s = smap.mode_map(i)
        stem = f"mode{i}"
        files[out / f"{stem}_map.csv"] = io.map_csv(b, f, s)
        files[out / f"{stem}_map.json"] = io.dumps(io.map_header(smap, i, _stamp(cfg)))
        files[out / f"{stem}_trace.csv"] = io.trace_csv(
            smap.trace(i), {**_stamp(cfg), "theta": mode.theta, "source": "synth", "mode_index": i})
        listing.append({"mode_frequency_hz": mode.frequency,
                        "files": [f"{stem}_map.csv", f"{stem}_map.json", f"{stem}_trace.csv"]})
    summary = {"command": "synth", **_stamp(cfg), "config": cfg.resolved, "modes": listing}
    files[out / "synth.json"] = io.dumps(summary)
    io.write_all(files)
    return summary


def cmd_peaks(args):
    cfg = _load_config(args.config)
    thr = args.snr_threshold if args.snr_threshold is not None else cfg.section("peaks")["snr_threshold"]
    traces = []
    for path in args.traces:
        trace, header = io.read_trace(path)
        peaks = detect_peaks(trace, thr)
        traces.append({
            "source": Path(path).name,
            "input_config_hash": header["config_hash"],
            "mode_frequency_hz": trace.mode_frequency,
            "theta": header.get("theta", math.pi / 2),
            "peaks": [p.to_dict() for p in peaks],
        })
    doc = {"format": io.PEAKS_FORMAT, "command": "peaks", **_stamp(cfg),
           "snr_threshold": thr, "db_convention": io.DB_CONVENTION, "traces": traces}
    io.write_all({_out_dir(args, cfg) / "peaks.json": io.dumps(doc)})
    return doc


def _points(doc):
    return [(p["b_center"], tr["mode_frequency_hz"]) for tr in doc["traces"] for p in tr["peaks"]]


def cmd_fitg(args):
    cfg = _load_config(args.config)
    doc = io.read_peaks(args.peaks)
    zero = cfg.section("fitg")["force_zero_intercept"] and not args.free_intercept
    pts = _points(doc)
    res = fit_g_linear(pts, force_zero_intercept=zero)
    out = _out_dir(args, cfg)
    report = {"command": "fitg", **_stamp(cfg), "input_config_hash": doc["config_hash"],
              "points": [{"b_tesla": b, "freq_hz": f} for b, f in pts], **res.to_dict()}
    lines = ["# " + json.dumps({**_stamp(cfg), "columns": "b_tesla,freq_hz,freq_fit_hz"}, sort_keys=True),
             "b_tesla,freq_hz,freq_fit_hz"]
    for b, f in sorted(pts):
        lines.append(f"{io.num(b)},{io.num(f)},{io.num(res.slope * b + res.intercept)}")
    io.write_all({out / "fitg.json": io.dumps(report), out / "fitg_plot.csv": "\n".join(lines) + "\n"})
    return report


def cmd_fit(args):
    cfg = _load_config(args.config)
    doc = io.read_peaks(args.peaks)
    fit_cfg = cfg.section("fit")
    groups = []
    pairs = []
    for tr in doc["traces"]:
        mode = ModeSpec(tr["mode_frequency_hz"], theta=tr.get("theta", math.pi / 2))
        mine = [(mode, PeakEstimate(p["b_center"], p.get("depth_db", 0.0), p.get("fwhm_b", 1.0),
                                    p.get("snr", 0.0))) for p in tr["peaks"]]
        pairs += mine
        groups.append((tr["mode_frequency_hz"], mine))
    results = []
    if args.per_mode:
        for f, mine in groups:
            sys_fit, rep = fit_spin_params(mine, cfg.spin_system, fit_cfg["free"], max_iter=fit_cfg["max_iter"])
            results.append({"mode_frequency_hz": f, "spin_system": sys_fit.to_dict(), "report": rep.to_dict()})
    else:
        sys_fit, rep = fit_spin_params(pairs, cfg.spin_system, fit_cfg["free"], max_iter=fit_cfg["max_iter"])
        results.append({"spin_system": sys_fit.to_dict(), "report": rep.to_dict()})
    report = {"command": "fit", **_stamp(cfg), "input_config_hash": doc["config_hash"],
              "per_mode": bool(args.per_mode), "results": results}
    io.write_all({_out_dir(args, cfg) / "fit.json": io.dumps(report)})
    return report


def _pair(text):
    a, b = (float(v) for v in text.split(","))
    return a, b


def cmd_gmodel(args):
    params = {"eta": args.eta, "k": args.k, "target_g": args.target_g, "k_range": args.k_range,
              "k_step": args.k_step, "eta_range": args.eta_range, "eta_step": args.eta_step}
    report = {"command": "gmodel", "config_hash": io.config_hash(params), "seed": None,
              "parameters": params}
    if args.eta is not None:
        report["forward"] = ligand.forward_table(args.eta, args.k)
    if args.target_g is not None:
        k_lo, k_hi = args.k_range
        n = int(round((k_hi - k_lo) / args.k_step))
        ks = [k_lo + args.k_step * i for i in range(n + 1)]
        rows = []
        for k in ks:
            roots = ligand.solve_eta(args.target_g, k, args.eta_range, step=args.eta_step)
            rows.append({"k": k, "roots": [{"eta": r.eta, "g_par": r.g_par, "g_perp": r.g_perp,
                                            "branch": r.branch} for r in roots],
                         "note": ligand.boundary_note(args.target_g, k)})
        bound = ligand.feasible_gmax((k_lo, k_hi))
        report["inverse"] = {
            "target_g": args.target_g,
            "root_count": sum(len(r["roots"]) for r in rows),
            "per_k": rows,
        }
        grid_max, grid_eta, grid_k = ligand.grid_gmax(args.eta_range, (k_lo, k_hi), args.eta_step, args.k_step)
        report["feasibility"] = {"sup_abs_g_par": bound.bound, "grid_max_abs_g_par": grid_max,
                                 "grid_argmax": {"eta": grid_eta, "k": grid_k}, "k_at_sup": bound.k_at_max,
                                 "b_sq_at_sup": bound.b_sq_at_max, "attained_at_finite_eta": bound.attained,
                                 "target_feasible": args.target_g < bound.bound}
    if args.out_file:
        io.write_all({Path(args.out_file): io.dumps(report)})
    return report


SENSE_KEYS = set(SensitivityInput.__dataclass_fields__) | {"mode_frequencies", "crystal_diameter",
                                                          "crystal_height", "lattice_constant"}


def cmd_sense(args):
    raw = {}
    if args.params:
        raw = json.loads(Path(args.params).read_text())
        if not isinstance(raw, dict):
            raise ConfigError(["<root>: parameters must be a JSON object"])
        unknown = sorted(set(raw) - SENSE_KEYS)
        if unknown:
            raise ConfigError([f"{k}: unknown key (allowed: {', '.join(sorted(SENSE_KEYS))})" for k in unknown])
    raw = dict(raw)
    freqs = raw.pop("mode_frequencies", None)
    lattice = LatticeSpec(raw.pop("lattice_constant", LatticeSpec().lattice_constant))
    if "crystal_diameter" in raw or "crystal_height" in raw:
        d = raw.pop("crystal_diameter", 3.27e-3)
        h = raw.pop("crystal_height", 3.66e-3)
        raw.setdefault("mode_volume", cylinder_volume(d, h))
    base = SensitivityInput(**raw)
    inputs = [base] if not freqs else [SensitivityInput(**{**base.to_dict(), "mode_frequency": f}) for f in freqs]
    rows = [sensitivity_row(inp, lattice) for inp in inputs]
    resolved = {"input": base.to_dict(), "mode_frequencies": freqs, "lattice_constant": lattice.lattice_constant}
    report = {"command": "sense", "config_hash": io.config_hash(resolved), "seed": None,
              "resolved": resolved, "rows": rows}
    if args.out_file:
        io.write_all({Path(args.out_file): io.dumps(report)})
    return report


def cmd_validate(args):
    cfg = validate_config(Path(args.config).read_text())
    return {"command": "validate", **_stamp(cfg), "config": cfg.resolved}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="esrkit", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", help="JSON run configuration (defaults to the built-in three-mode setup)")
        sp.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or ./{DEFAULT_OUTPUT})")

    sp = sub.add_parser("synth", help="synthesize transmission maps and mode-centre traces")
    common(sp)
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("peaks", help="detect ESR dips in trace CSVs")
    common(sp)
    sp.add_argument("traces", nargs="+")
    sp.add_argument("--snr-threshold", type=float)
    sp.set_defaults(func=cmd_peaks)

    sp = sub.add_parser("fitg", help="effective g from resonance fields")
    common(sp)
    sp.add_argument("peaks")
    sp.add_argument("--free-intercept", action="store_true")
    sp.set_defaults(func=cmd_fitg)

    sp = sub.add_parser("fit", help="refine spin-system parameters against detected lines")
    common(sp)
    sp.add_argument("peaks")
    sp.add_argument("--per-mode", action="store_true", help="fit every trace separately")
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("gmodel", help="ligand-field g-factor model: forward, inverse, feasibility")
    sp.add_argument("--eta", type=float, nargs="+")
    sp.add_argument("--k", type=float, default=0.33)
    sp.add_argument("--target-g", type=float)
    sp.add_argument("--k-range", type=_pair, default=(0.0, ligand.K0))
    sp.add_argument("--k-step", type=float, default=1e-2)
    sp.add_argument("--eta-range", type=_pair, default=(-100.0, 100.0))
    sp.add_argument("--eta-step", type=float, default=ligand.ETA_STEP)
    sp.add_argument("--out-file")
    sp.set_defaults(func=cmd_gmodel)

    sp = sub.add_parser("sense", help="minimum detectable spin number and ppm")
    sp.add_argument("params", nargs="?", help="JSON parameter file (defaults to the SrTiO3 resonator operating point)")
    sp.add_argument("--out-file")
    sp.set_defaults(func=cmd_sense)

    sp = sub.add_parser("validate", help="validate a configuration and echo it resolved")
    sp.add_argument("config")
    sp.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        result = args.func(args)
    except ConfigError as exc:
        print(json.dumps({"error": "ConfigError", "errors": exc.errors}, indent=2), file=sys.stderr)
        return 2
    except (ValueError, OSError, np.linalg.LinAlgError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}, indent=2), file=sys.stderr)
        return 1
    sys.stdout.write(io.dumps(result))
    return 0


if __name__ == "__main__":
    sys.exit(main())
