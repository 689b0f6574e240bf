"""Command-line surface: test, select, simulate, study.

Every command reads an optional `--config` key-value file, applies CLI flag
overrides on top, and echoes the effective configuration (seed included)
into its JSON output, so a result file is enough to rerun the analysis.
JSON is emitted with sorted keys and a trailing newline; identical config
and seed give byte-identical output. Exit codes: 0 success, 2 validation
or configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from .config import DEFAULTS, KEY_REGISTRY, merge_config, parse_value, read_config_file
from .dataset import read_csv, write_csv
from .engine import ShiftPlan
from .errors import ConfigError, ShiftregError
from .fields import generate_design, substream
from .geometry import Window
from .harness import PRESETS, MethodSpec, StudySpec, power_study, run_study
from .kernels import ns_local_parameters
from .selection import backward_select, shift_test
from .svg import render_study_svg

_CONFIG_KEYS_BY_COMMAND = {
    "test": ("data", "response", "window", "standardize", "interest", "fitter",
             "g_fitter", "theta", "statistic", "correction", "K", "tail",
             "shift_mode", "shift_separation", "r_max", "min_retained", "seed",
             "dcov.center", "max_parallel_dcov", "gam.lambda_grid",
             "nw.bandwidth", "lm.family", "lm.shape"),
    "select": ("data", "response", "window", "standardize", "fitter",
               "g_fitter", "theta", "statistic", "correction", "K", "tail",
               "shift_mode", "shift_separation", "r_max", "min_retained",
               "seed", "alpha", "dcov.center", "gam.lambda_grid",
               "nw.bandwidth", "lm.family", "lm.shape"),
    "simulate": ("design", "trend", "scenario", "scenario.variance", "n",
                 "seed", "effect", "dependence_scale", "window"),
    "study": ("preset", "R", "K", "n", "seed", "alpha", "workers", "interest",
              "effect", "dependence_scale", "scenario.variance", "window",
              "min_retained", "r_max", "tail", "study.designs", "study.trends",
              "study.scenarios", "study.methods", "study.label"),
}


def _emit_json(payload: dict, path: str | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _window_from(cfg) -> Window | None:
    raw = cfg.get("window")
    if raw is None:
        return None
    if len(raw) != 4:
        raise ConfigError("window needs exactly 4 numbers: x_min x_max y_min y_max")
    return Window(*[float(v) for v in raw])


def _load_dataset(cfg):
    if not cfg.get("data"):
        raise ConfigError("no input CSV given (key `data` / flag --data)")
    data = read_csv(cfg["data"], response=cfg["response"],
                    window=_window_from(cfg))
    if cfg["standardize"]:
        data = data.standardized()
    return data


def _plan_from(cfg, seed=None) -> ShiftPlan:
    return ShiftPlan(
        correction=cfg["correction"], statistic=cfg["statistic"], K=cfg["K"],
        master_seed=cfg["seed"] if seed is None else seed, tail=cfg["tail"],
        shift_mode=cfg["shift_mode"], separation=cfg["shift_separation"],
        r_max=cfg["r_max"], min_retained=cfg["min_retained"],
        dcov_center=cfg["dcov.center"])


def _fitter_options(cfg) -> dict:
    return {"lm_family": cfg["lm.family"], "lm_shape": cfg["lm.shape"],
            "nw_bandwidth": cfg["nw.bandwidth"],
            "gam_lambda_grid": cfg["gam.lambda_grid"]}


def _effective(cfg, command: str) -> dict:
    return {key: cfg.get(key, DEFAULTS.get(key))
            for key in _CONFIG_KEYS_BY_COMMAND[command]}


def _cmd_test(cfg, args) -> int:
    if not cfg.get("interest"):
        raise ConfigError("the test command needs --interest <covariate>")
    data = _load_dataset(cfg)
    result = shift_test(data, cfg["interest"], _plan_from(cfg),
                        fitter=cfg["fitter"], theta=cfg["theta"],
                        g_fitter=cfg["g_fitter"],
                        fitter_options=_fitter_options(cfg))
    payload = result.to_dict()
    payload["config"] = _effective(cfg, "test")
    _emit_json(payload, args.out)
    return 0


def _cmd_select(cfg, args) -> int:
    data = _load_dataset(cfg)
    trace = backward_select(data, alpha=cfg["alpha"], plan=_plan_from(cfg),
                            fitter=cfg["fitter"], theta=cfg["theta"],
                            g_fitter=cfg["g_fitter"],
                            fitter_options=_fitter_options(cfg))
    payload = trace.to_dict()
    payload["config"] = _effective(cfg, "select")
    _emit_json(payload, args.out)

    lines = ["round  removed  p-values"]
    for rnd in trace.rounds:
        ps = ", ".join(f"{name}={rnd.p_values[name]:.4g}" for name in rnd.active)
        lines.append(f"{rnd.index:>5}  {rnd.removed or '-':<7}  {ps}")
    lines.append(f"final set: {', '.join(trace.final_set) or '(empty)'}")
    print("\n".join(lines), file=sys.stderr)
    return 0


def _cmd_simulate(cfg, args) -> int:
    window = _window_from(cfg)
    kwargs = {} if window is None else {"window": window}
    data = generate_design(cfg["design"], cfg["trend"], cfg["n"],
                           substream(cfg["seed"]),
                           scenario=cfg["scenario"],
                           scenario_variance=cfg["scenario.variance"],
                           effect=cfg["effect"],
                           dependence_scale=cfg["dependence_scale"], **kwargs)
    if args.dump_ns_params:
        params = {f"({cx:g}, {cy:g})": list(v)
                  for (cx, cy), v in ns_local_parameters().items()}
        payload = {"anchors": params, "config": _effective(cfg, "simulate")}
        _emit_json(payload, None)
        if args.out:
            write_csv(data, args.out)
        return 0
    if args.out:
        write_csv(data, args.out)
    else:
        write_csv(data, sys.stdout)
    return 0


def _parse_method(entry) -> MethodSpec:
    if entry == "classical" or (isinstance(entry, (list, tuple))
                                and entry and entry[0] == "classical"):
        return MethodSpec(kind="classical", fitter="lm")
    if not isinstance(entry, (list, tuple)) or len(entry) != 4:
        raise ConfigError(
            "each study.methods entry is [fitter, statistic, correction, theta] "
            'or "classical"')
    fitter, statistic, correction, theta = entry
    return MethodSpec(kind="shift", fitter=str(fitter), statistic=str(statistic),
                      correction=str(correction), theta=float(theta))


def _study_spec(cfg, explicit) -> StudySpec:
    preset = cfg.get("preset")
    if preset is not None:
        if preset not in PRESETS:
            known = ", ".join(sorted(PRESETS))
            raise ConfigError(f"unknown preset {preset!r}; choose from: {known}")
        spec = PRESETS[preset]
    else:
        if not cfg.get("study.methods"):
            raise ConfigError("a custom study needs study.methods (or use --preset)")
        spec = StudySpec(
            designs=tuple(cfg.get("study.designs") or (cfg["design"],)),
            trends=tuple(cfg.get("study.trends") or (cfg["trend"],)),
            scenarios=tuple(cfg.get("study.scenarios") or (cfg["scenario"],)),
            methods=tuple(_parse_method(m) for m in cfg["study.methods"]),
            interest=cfg.get("interest") or "x2",
            label=cfg.get("study.label") or "custom study")

    overrides = {}
    for field, key in (("R", "R"), ("K", "K"), ("n", "n"), ("alpha", "alpha"),
                       ("master_seed", "seed"), ("workers", "workers"),
                       ("effect", "effect"),
                       ("dependence_scale", "dependence_scale"),
                       ("scenario_variance", "scenario.variance"),
                       ("min_retained", "min_retained"), ("r_max", "r_max"),
                       ("tail", "tail"), ("interest", "interest"),
                       ("label", "study.label")):
        if key in explicit and cfg.get(key) is not None:
            overrides[field] = cfg[key]
    if "window" in explicit:
        window = _window_from(cfg)
        if window is not None:
            overrides["window"] = window
    return dataclasses.replace(spec, **overrides) if overrides else spec


def _cmd_study(cfg, args) -> int:
    spec = _study_spec(cfg, args.explicit_keys)

    if args.describe:
        spec_dict = dataclasses.asdict(spec)
        spec_dict["window"] = list(spec.window.as_tuple())
        payload = {"R": spec.R, "K": spec.K, "n": spec.n,
                   "alpha": spec.alpha, "seed": spec.master_seed,
                   "cells": len(spec.grid) * len(spec.methods),
                   "spec": spec_dict, "config": _effective(cfg, "study")}
        _emit_json(payload, args.json)
        return 0

    def progress(done, total):
        if done % max(1, total // 20) == 0 or done == total:
            print(f"\r{done}/{total} replicates", end="", file=sys.stderr)
            if done == total:
                print(file=sys.stderr)

    quiet = args.quiet
    report_fn = power_study if spec.effect != 0.0 else run_study
    report = report_fn(spec, progress=None if quiet else progress)

    payload = report.to_dict()
    payload["config"] = _effective(cfg, "study")
    _emit_json(payload, args.json)
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(report.csv_text())
    if args.svg:
        with open(args.svg, "w") as fh:
            fh.write(render_study_svg(report))
    if not quiet:
        print(f"total wall time {report.total_wall_time:.1f}s over "
              f"{len(report.cells)} cells", file=sys.stderr)
        for cell in report.cells:
            rate = "aborted" if cell.rate is None else f"{cell.rate:.3f}"
            print(f"  {cell.scenario}/{cell.trend} {cell.method.label}: "
                  f"{rate} ({cell.wall_time:.1f}s)", file=sys.stderr)
    return 0


def _add_config_flags(sub, keys) -> dict:
    """Declare one flag per config key; returns flag-dest -> key mapping."""
    mapping = {}
    for key in keys:
        spec = KEY_REGISTRY[key]
        flag = "--" + key.replace(".", "-").replace("_", "-")
        dest = key.replace(".", "__")
        mapping[dest] = key
        if key == "window":
            sub.add_argument(flag, dest=dest, nargs=4, type=float, default=None,
                             metavar=("X_MIN", "X_MAX", "Y_MIN", "Y_MAX"),
                             help=spec.description)
        elif spec.kind == "bool":
            sub.add_argument(flag, dest=dest, action="store_const", const=True,
                             default=None, help=spec.description)
        elif spec.kind in ("list", "number_or_list"):
            sub.add_argument(flag, dest=dest, type=parse_value, default=None,
                             help=spec.description + " (JSON syntax)")
        else:
            typ = {"int": int, "float": float, "str": str}[spec.kind]
            sub.add_argument(flag, dest=dest, type=typ, default=None,
                             choices=spec.choices, help=spec.description)
    return mapping


def build_parser():
    parser = argparse.ArgumentParser(
        prog="shiftreg",
        description="Random-shift Monte Carlo significance tests for "
                    "spatial regression.")
    subs = parser.add_subparsers(dest="command", required=True)
    mappings = {}

    for name, brief in (("test", "test one covariate on a CSV dataset"),
                        ("select", "backward covariate selection"),
                        ("simulate", "generate a synthetic dataset CSV"),
                        ("study", "run a rejection-rate study")):
        sub = subs.add_parser(name, help=brief)
        sub.add_argument("--config", default=None,
                         help="key = value config file; flags override it")
        mappings[name] = _add_config_flags(sub, _CONFIG_KEYS_BY_COMMAND[name])
        if name in ("test", "select"):
            sub.add_argument("--out", default=None,
                             help="JSON output path (default stdout)")
        elif name == "simulate":
            sub.add_argument("--out", default=None,
                             help="CSV output path (default stdout)")
            sub.add_argument("--dump-ns-params", action="store_true",
                             help="print the nonstationary anchor parameters "
                                  "(lam1, lam2, eta) as JSON instead of the CSV")
        else:
            sub.add_argument("--json", default=None,
                             help="JSON report path (default stdout)")
            sub.add_argument("--csv", default=None, help="CSV table path")
            sub.add_argument("--svg", default=None, help="SVG bar chart path")
            sub.add_argument("--quiet", action="store_true",
                             help="suppress stderr progress")
            sub.add_argument("--describe", action="store_true",
                             help="print the resolved study spec as JSON "
                                  "without running it")
    return parser, mappings


def main(argv=None) -> int:
    parser, mappings = build_parser()
    args = parser.parse_args(argv)
    try:
        file_cfg = read_config_file(args.config) if args.config else None
        overrides = {key: getattr(args, dest)
                     for dest, key in mappings[args.command].items()}
        cfg = merge_config(file_cfg, overrides)
        args.explicit_keys = set(file_cfg or ()) | {
            key for key, value in overrides.items() if value is not None}
        handler = {"test": _cmd_test, "select": _cmd_select,
                   "simulate": _cmd_simulate, "study": _cmd_study}[args.command]
        return handler(cfg, args)
    except ShiftregError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
