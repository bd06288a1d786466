"""Command-line entry point: ``plessner-lab SUBCOMMAND --config run.json --out DIR``.

Exit status 0 on success, 2 on validation errors, 3 on numeric errors
(budget, non-convergence, critical proximity). Nothing is written unless the
computation succeeds.
"""
from __future__ import annotations

import argparse
import copy
import csv
import json
import math
import os
import sys

from . import __version__
from .dichotomy import (
    Thresholds,
    classify_point,
    default_schedule,
    divergence_profile,
    nt_limit_probe,
    write_profile_csv,
    write_scan_csv,
    wr_scan,
)
from .errors import InvalidParamsError, NumericError, ValidationError
from .funcorpus import DESCRIPTIONS, corpus_get, corpus_names
from .geometry import DEFAULT_MAX_CELLS, region_from_dict
from .levelset import DEFAULT_RESOLUTION, LevelTarget, exclude_critical, extract, write_polylines_csv
from .parallel import default_threads
from .quad import area_image_integral, arc_integral, coarea_check, spencer_integral, stein_integral

COMMANDS = ("levelset", "arclen", "spencer", "stein", "area", "coarea", "profile", "probe", "classify", "scan",
            "corpus")

DEFAULTS = {
    "function": {"name": "identity", "params": [], "truncation": None, "pole_exclusion": 1e-4},
    "region": {"setting": "disc", "vertex": 0.0, "delta": 0.5, "eps": 0.01, "rho_c": 0.0},
    "target": None,  # filled per function: circle |f| = 0.5 or harmonic level 0
    "band": {"w": [0.0, 0.0], "a": 0.2, "b": 0.4},
    "vertex": 0.0,
    "j": 2,
    "wr_list": [],
    "box": [[-1.0, 1.0], [-1.0, 1.0], [0.5, 3.0]],
    "n_samples": 100,
    "knobs": {
        "resolution": DEFAULT_RESOLUTION,
        "max_cells": DEFAULT_MAX_CELLS,
        "rho_c": 1e-3,
        "n_levels": 16,
        "K": 12,
        "scan_K": 8,
        "rerun_flagged": True,
        "probe_depths": 30,
        "limit_tol": 1e-6,
        "thresholds": Thresholds().to_dict(),
    },
    "seed": 0,
    "outputs": {"json": None, "csv": None},
}

BOX_DEFAULTS = {"setting": "box", "x": [0.0, 1.0], "y": [0.0, 1.0], "eps": 1e-3, "rho_c": 0.0}


def _merge(section, given, defaults):
    if given is None:
        return copy.deepcopy(defaults)
    if not isinstance(given, dict):
        raise InvalidParamsError(f"config section {section!r} must be an object")
    unknown = set(given) - set(defaults)
    if unknown:
        raise InvalidParamsError(f"unknown keys in {section!r}: {sorted(unknown)}")
    out = copy.deepcopy(defaults)
    for k, v in given.items():
        if isinstance(defaults[k], dict) and defaults[k]:
            out[k] = _merge(f"{section}.{k}", v, defaults[k])
        else:
            out[k] = v
    return out


def _complex(v, what):
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(float(v), 0.0)
    raise InvalidParamsError(f"{what} must be a number or [re, im]")


def resolve_config(raw):
    """Apply defaults and validate types; the result feeds back in unchanged."""
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise InvalidParamsError("config must be a JSON object")
    unknown = set(raw) - set(DEFAULTS)
    if unknown:
        raise InvalidParamsError(f"unknown config keys: {sorted(unknown)}")
    cfg = {}
    for key, dflt in DEFAULTS.items():
        if key == "target":
            continue
        if key == "region" and isinstance(raw.get("region"), dict) and raw["region"].get("setting") == "box":
            dflt = BOX_DEFAULTS
        cfg[key] = _merge(key, raw.get(key), dflt) if isinstance(dflt, dict) else copy.deepcopy(raw.get(key, dflt))
    fn = build_function(cfg)
    t = raw.get("target")
    if t is None:
        t = {"mode": "harmonic", "t": 0.0} if fn.is_harmonic else {"mode": "circle", "w": [0.0, 0.0], "r": 0.5}
    if not isinstance(t, dict) or t.get("mode") not in ("circle", "harmonic"):
        raise InvalidParamsError("target must be {mode: circle, w, r} or {mode: harmonic, t}")
    if t["mode"] == "circle":
        t = _merge("target", t, {"mode": "circle", "w": [0.0, 0.0], "r": 0.5})
        w = _complex(t["w"], "target.w")
        t["w"], t["r"] = [w.real, w.imag], float(t["r"])
    else:
        t = _merge("target", t, {"mode": "harmonic", "t": 0.0})
        t["t"] = float(t["t"])
    cfg["target"] = t
    w = _complex(cfg["band"]["w"], "band.w")
    cfg["band"] = {"w": [w.real, w.imag], "a": float(cfg["band"]["a"]), "b": float(cfg["band"]["b"])}
    k = cfg["knobs"]
    for name in ("resolution", "rho_c", "limit_tol"):
        k[name] = float(k[name])
    for name in ("max_cells", "n_levels", "K", "scan_K", "probe_depths"):
        if int(k[name]) != k[name]:
            raise InvalidParamsError(f"knobs.{name} must be an integer")
        k[name] = int(k[name])
    if not (0.0 < k["resolution"] <= 1.0):
        raise InvalidParamsError("knobs.resolution must lie in (0, 1]")
    if k["K"] < 2 or k["scan_K"] < 2:
        raise InvalidParamsError("schedules need at least 2 points")
    th = k["thresholds"]
    k["thresholds"] = {"slope": float(th["slope"]), "ratio": float(th["ratio"]), "floor": float(th["floor"]),
                       "window": int(th["window"])}
    cfg["vertex"] = float(cfg["vertex"])
    cfg["seed"] = int(cfg["seed"])
    if not 0 <= cfg["seed"] < 2**64:
        raise InvalidParamsError("seed must be an unsigned 64-bit integer")
    region_from_dict(cfg["region"])  # validates
    cfg["region"] = region_from_dict(cfg["region"]).to_dict()
    cfg["function"] = dict(cfg["function"], pole_exclusion=float(cfg["function"]["pole_exclusion"]))
    return cfg


def build_function(cfg):
    f = cfg["function"]
    return corpus_get(f["name"], f["params"], f["truncation"], float(f["pole_exclusion"]))


def _target(cfg):
    t = cfg["target"]
    if t["mode"] == "circle":
        return LevelTarget.circle(complex(*t["w"]), t["r"])
    return LevelTarget.harmonic(t["t"])


def _vertex(fn, cfg):
    v = cfg["vertex"]
    if fn.setting == "halfplane":
        return complex(v, 0.0)
    return complex(math.cos(v), math.sin(v))


def _wr_list(fn, cfg):
    out = []
    for item in cfg["wr_list"]:
        if fn.is_harmonic:
            out.append(float(item[0] if isinstance(item, (list, tuple)) else item))
        elif isinstance(item, (list, tuple)) and len(item) == 3:
            out.append((complex(float(item[0]), float(item[1])), float(item[2])))
        else:
            raise InvalidParamsError("wr_list entries must be [w_re, w_im, r]")
    return out


def _json_safe(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, complex):
        return [_json_safe(obj.real), _json_safe(obj.imag)]
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(x) if isinstance(x, float) else x for x in r])


def run(command, cfg, threads=None):
    """Compute ``command``; returns (result dict, csv writer or None, summary line)."""
    fn = build_function(cfg)
    k = cfg["knobs"]
    res, mc = k["resolution"], k["max_cells"]
    thresholds = Thresholds(**k["thresholds"])

    def region():
        return region_from_dict(cfg["region"])

    if command == "levelset":
        reg = exclude_critical(fn, region(), region().rho_c)
        polys = extract(fn, reg, _target(cfg), res, mc)
        result = {
            "n_polylines": len(polys),
            "closed": [p.closed for p in polys],
            "n_vertices": [int(p.vertices.shape[0]) for p in polys],
            "lengths": [p.length for p in polys],
            "weighted_lengths": [p.weighted_length for p in polys],
            "max_residual": max((float(p.residuals.max()) for p in polys if p.residuals.size), default=0.0),
        }
        return result, (lambda path: write_polylines_csv(polys, path)), f"{len(polys)} polylines"
    if command == "arclen":
        reg = exclude_critical(fn, region(), region().rho_c)
        q = arc_integral(extract(fn, reg, _target(cfg), res, mc), fn)
        return q.to_dict(), None, f"value={q.value!r} err={q.err!r}"
    if command in ("spencer", "stein", "area"):
        if command == "spencer":
            q = spencer_integral(fn, region(), res, mc, threads)
        elif command == "stein":
            q = stein_integral(fn, region(), res, mc, threads)
        else:
            t = cfg["target"]
            if t["mode"] != "circle":
                raise InvalidParamsError("area needs a circle target")
            q = area_image_integral(fn, region(), complex(*t["w"]), t["r"], res, mc, threads)
        return q.to_dict(), None, f"value={q.value!r} err={q.err!r}"
    if command == "coarea":
        b = cfg["band"]
        reg = exclude_critical(fn, region(), region().rho_c)
        c = coarea_check(fn, reg, complex(*b["w"]), b["a"], b["b"], k["n_levels"], res, mc, threads)
        rows = list(zip(c.levels, c.level_values))
        return c.to_dict(), (lambda path: _write_rows(path, ["t", "L"], rows)), \
            f"lhs={c.lhs.value!r} rhs={c.rhs.value!r} gap={c.relative_gap!r}"
    zeta = _vertex(fn, cfg)
    j = cfg["j"]
    if command == "profile":
        p = divergence_profile(fn, zeta, j, _target(cfg), default_schedule(j, k["K"]), thresholds, res, mc,
                               k["rho_c"])
        return p.to_dict(), (lambda path: write_profile_csv(p, path)), p.classification
    if command == "probe":
        p = nt_limit_probe(fn, zeta, 1.0 / j, k["probe_depths"], k["limit_tol"])
        return p.to_dict(), None, f"converged={p.converged}"
    if command == "classify":
        c = classify_point(fn, zeta, j, _wr_list(fn, cfg), default_schedule(j, k["K"]), thresholds, res, mc,
                           k["rho_c"], threads)
        return c.to_dict(), None, c.label
    if command == "scan":
        s = wr_scan(fn, zeta, j, cfg["box"], cfg["n_samples"], cfg["seed"], k["scan_K"], thresholds, res, mc,
                    k["rho_c"], threads, k["rerun_flagged"], k["K"])
        return s.to_dict(), (lambda path: write_scan_csv(s, path)), \
            f"bounded_fraction={s.bounded_fraction!r} +- {s.stderr!r}"
    raise InvalidParamsError(f"unknown command {command!r}")


def _parser():
    ap = argparse.ArgumentParser(prog="plessner-lab", description="Level-set and boundary-behaviour experiments.")
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="JSON run configuration")
    ap.add_argument("--out", default=".", help="output directory (default: current directory)")
    ap.add_argument("--threads", type=int, default=None, help="worker threads (default: $PLESSNER_LAB_THREADS or all cores)")
    ap.add_argument("--seed", type=int, default=None, help="unsigned 64-bit seed, overrides the config")
    return ap


def main(argv=None):
    args = _parser().parse_args(argv)
    if args.command == "corpus":
        for name in corpus_names():
            print(f"{name}\t{DESCRIPTIONS.get(name, '')}")
        return 0
    threads = args.threads if args.threads is not None else default_threads()
    try:
        raw = {}
        if args.config:
            try:
                with open(args.config, encoding="utf-8") as fh:
                    raw = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                raise InvalidParamsError(f"cannot read config: {exc}") from exc
        if isinstance(raw, dict) and "config" in raw and "result" in raw:
            raw = raw["config"]  # a previous output document: re-run its echoed config
        if args.seed is not None:
            raw = dict(raw, seed=args.seed)
        if threads < 1:
            raise InvalidParamsError("--threads must be >= 1")
        cfg = resolve_config(raw)
        result, csv_writer, summary = run(args.command, cfg, threads)
    except ValidationError as exc:
        print(f"plessner-lab: validation error: {exc}", file=sys.stderr)
        return 2
    except (KeyError, TypeError, ValueError) as exc:
        print(f"plessner-lab: validation error: {exc!r}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"plessner-lab: numeric error: {exc}", file=sys.stderr)
        return 3
    os.makedirs(args.out, exist_ok=True)
    doc = {"command": args.command, "version": __version__, "config": cfg, "result": result}
    json_path = os.path.join(args.out, cfg["outputs"]["json"] or f"{args.command}.json")
    with open(json_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_json_safe(doc), fh, indent=2)
        fh.write("\n")
    written = [json_path]
    if csv_writer is not None:
        csv_path = os.path.join(args.out, cfg["outputs"]["csv"] or f"{args.command}.csv")
        csv_writer(csv_path)
        written.append(csv_path)
    print(f"{args.command}: {summary}")
    for p in written:
        print(f"  wrote {p}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
