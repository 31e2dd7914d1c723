"""Command-line front end.

Subcommands: estimate (density from a sample file), simulate (Monte Carlo
risk study), calibrate (penalty constant over random histogram targets),
ratecheck (empirical convergence-rate verification).

All randomness flows from --seed.  Config may come from a JSON file
(--config); explicit flags override file values; --dump-config echoes the
resolved configuration and exits without running.

Exit codes: 0 ok, 1 check failed, 2 bad input or config, 3 model
assumption violated.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .mellin import FrequencyGrid, Sample
from .models import (AssumptionViolation, default_chi, make_target,
                     resolve_error)
from .estimator import EstimatorConfig, estimate_noisy, weighted_ise
from .selection import (CalibrationConfig, PenaltyConfig, adaptive_estimate,
                        calibrate_chi)
from .experiments import MCConfig, fit_slope, monte_carlo, rate_study

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_BAD_INPUT = 2
EXIT_ASSUMPTION = 3


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_BAD_INPUT):
        super().__init__(message)
        self.code = code


def _fmt(v: float) -> str:
    return f"{float(v):.17g}"


def _write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


_COMMON_DEFAULTS = {
    "seed": 0,
    "threads": None,  # resolved from env / cpu count below
    "step": 0.01,
    "k_max": 200.0,
}

_DEFAULTS = {
    "estimate": {
        **_COMMON_DEFAULTS,
        "input": None,
        "error": "dirac",
        "mode": "adaptive",
        "chi": None,
        "k": None,
        "k_cap": 50,
        "output": None,
    },
    "simulate": {
        **_COMMON_DEFAULTS,
        "target": "gamma5",
        "error": "dirac",
        "n": 1000,
        "reps": 50,
        "mode": "adaptive",
        "chi": None,
        "k": None,
        "k_cap": 50,
        "output": None,
    },
    "calibrate": {
        **_COMMON_DEFAULTS,
        "error": "dirac",
        "chi_grid": [0.01, 0.1, 0.3, 0.8, 1.2, 4.8],
        "histograms": 50,
        "reps": 20,
        "n": 1000,
        "k_cap": 30,
        "k_max": 30.0,
    },
    "ratecheck": {
        **_COMMON_DEFAULTS,
        "target": "scaled_beta",
        "error": "uniform01",
        "s": 4.0,
        "n_list": [1000, 2000, 4000, 8000, 16000],
        "reps": 200,
        "slope_tol": 0.15,
        "step": 0.05,
        "k_max": 20.0,
        "k_scale": 5.0,
        "synthetic_slope": None,
    },
}


def _resolve_config(cmd: str, args: argparse.Namespace) -> dict:
    resolved = dict(_DEFAULTS[cmd])
    if args.config is not None:
        try:
            with open(args.config) as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read config file: {exc}")
        if not isinstance(file_cfg, dict):
            raise CliError("config file must hold a JSON object")
        unknown = set(file_cfg) - set(resolved)
        if unknown:
            raise CliError(f"unknown config keys: {sorted(unknown)}")
        resolved.update(file_cfg)
    for key in resolved:
        val = getattr(args, key, None)
        if val is not None:
            resolved[key] = val
    if resolved["threads"] is None:
        env = os.environ.get("MELLIN_DECONV_THREADS")
        resolved["threads"] = int(env) if env else (os.cpu_count() or 1)
    return resolved


def _estimator_config(cfg: dict) -> EstimatorConfig:
    try:
        return EstimatorConfig(
            grid=FrequencyGrid(k_max=float(cfg["k_max"]), step=float(cfg["step"])))
    except ValueError as exc:
        raise CliError(str(exc))


def _read_sample(path: str) -> Sample:
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise CliError(f"cannot read input: {exc}")
    values, bad = [], []
    for i, line in enumerate(lines, start=1):
        text = line.strip()
        if not text:
            continue
        try:
            v = float(text)
        except ValueError:
            if i == 1:  # optional header
                continue
            bad.append(i)
            continue
        if not np.isfinite(v) or v <= 0:
            bad.append(i)
            continue
        values.append(v)
    if bad:
        raise CliError(f"nonpositive or non-numeric input on line(s) "
                       f"{', '.join(map(str, bad))}")
    if not values:
        raise CliError("input file contains no observations")
    return Sample(np.asarray(values))


def _cmd_estimate(cfg: dict) -> int:
    if not cfg["input"] or not cfg["output"]:
        raise CliError("estimate requires --input and --output")
    sample = _read_sample(cfg["input"])
    try:
        g = resolve_error(cfg["error"])
    except ValueError as exc:
        raise CliError(str(exc))
    est_cfg = _estimator_config(cfg)
    if cfg["mode"] == "fixed":
        if cfg["k"] is None:
            raise CliError("fixed mode requires --k")
        est = estimate_noisy(sample, g, float(cfg["k"]), est_cfg)
        sel = None
    elif cfg["mode"] == "adaptive":
        chi = cfg["chi"] if cfg["chi"] is not None else default_chi(g.gamma)
        pc = PenaltyConfig(chi=float(chi), gamma=g.gamma, k_cap=int(cfg["k_cap"]))
        est, sel = adaptive_estimate(sample, g, pc, est_cfg)
    else:
        raise CliError(f"unknown mode '{cfg['mode']}'")
    values = est.clipped_values() if est_cfg.truncation_negative else est.values
    _write_csv(cfg["output"], ["x", "f_hat"], zip(est_cfg.x_grid, values))
    if sel is not None:
        sidecar = {
            "k_hat": sel.k_hat,
            "K_n": sel.k_n,
            "chi": float(chi),
            "n": sample.n,
            "table": [
                {"k": k, "omega_norm_sq": norm, "pen": pen, "contrast": con}
                for k, norm, pen, con in sel.table_rows()
            ],
        }
        with open(cfg["output"] + ".selection.json", "w", newline="\n") as fh:
            json.dump(sidecar, fh, indent=2)
            fh.write("\n")
    return EXIT_OK


def _cmd_simulate(cfg: dict) -> int:
    if not cfg["output"]:
        raise CliError("simulate requires --output (file prefix)")
    try:
        target = make_target(cfg["target"])
        g = resolve_error(cfg["error"])
        mc = MCConfig(
            target=cfg["target"], error=cfg["error"], n=int(cfg["n"]),
            reps=int(cfg["reps"]), master_seed=int(cfg["seed"]),
            mode={"fixed": "fixed_k"}.get(cfg["mode"], cfg["mode"]),
            chi=None if cfg["chi"] is None else float(cfg["chi"]),
            k=None if cfg["k"] is None else float(cfg["k"]),
            k_cap=int(cfg["k_cap"]), threads=int(cfg["threads"]))
    except ValueError as exc:
        raise CliError(str(exc))
    report = monte_carlo(mc, _estimator_config(cfg), target, g)
    _write_csv(cfg["output"] + "_risk.csv", ["rep", "ise", "k_selected"],
               ((r, ise, k) for r, (ise, k)
                in enumerate(zip(report.ises, report.k_selected))))
    _write_csv(cfg["output"] + "_curve.csv", ["x", "truth", "median_estimate"],
               zip(report.x_grid, report.truth_curve, report.median_curve))
    print(f"mean_ise={_fmt(report.mean)} median_ise={_fmt(report.median)}")
    return EXIT_OK


def _cmd_calibrate(cfg: dict) -> int:
    try:
        g = resolve_error(cfg["error"])
        chi_grid = [float(c) for c in cfg["chi_grid"]]
        cal = CalibrationConfig(
            n_histograms=int(cfg["histograms"]), reps=int(cfg["reps"]),
            n=int(cfg["n"]), seed=int(cfg["seed"]), k_cap=int(cfg["k_cap"]),
            cfg=_estimator_config(cfg))
        chi = calibrate_chi(g, chi_grid, cal)
    except ValueError as exc:
        raise CliError(str(exc))
    print(f"chi={_fmt(chi)}")
    return EXIT_OK


def _cmd_ratecheck(cfg: dict) -> int:
    theoretical = -2.0 * float(cfg["s"]) / (2.0 * float(cfg["s"])
                                            + 2.0 * resolve_error(cfg["error"]).gamma + 1.0)
    if cfg["synthetic_slope"] is not None:
        # test hook: exact power-law risk sequence instead of Monte Carlo
        beta = float(cfg["synthetic_slope"])
        n_arr = np.asarray([int(n) for n in cfg["n_list"]], dtype=float)
        slope = fit_slope(n_arr, n_arr ** beta)
        target_slope = beta
    else:
        try:
            target = make_target(cfg["target"])
            g = resolve_error(cfg["error"])
            study = rate_study(target, g, float(cfg["s"]),
                               [int(n) for n in cfg["n_list"]],
                               int(cfg["reps"]), _estimator_config(cfg),
                               master_seed=int(cfg["seed"]),
                               threads=int(cfg["threads"]),
                               k_scale=float(cfg["k_scale"]))
        except ValueError as exc:
            raise CliError(str(exc))
        slope = study.slope
        target_slope = study.theoretical_exponent
    ok = abs(slope - target_slope) <= float(cfg["slope_tol"])
    print(f"slope={_fmt(slope)} theoretical={_fmt(target_slope)} "
          f"tol={_fmt(cfg['slope_tol'])} {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mellin-deconv",
        description="Density estimation under multiplicative measurement errors")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--dump-config", action="store_true",
                       help="print resolved config as JSON and exit")
        p.add_argument("--seed", type=int)
        p.add_argument("--threads", type=int)
        p.add_argument("--step", type=float, help="t-grid spacing")
        p.add_argument("--k-max", dest="k_max", type=float, help="t-grid bound")

    p = sub.add_parser("estimate", help="estimate a density from a sample file")
    add_common(p)
    p.add_argument("--input", help="one positive observation per line")
    p.add_argument("--error", help="error law name")
    p.add_argument("--mode", choices=["adaptive", "fixed"])
    p.add_argument("--chi", type=float)
    p.add_argument("--k", type=float)
    p.add_argument("--k-cap", dest="k_cap", type=int)
    p.add_argument("--output", help="output CSV path")

    p = sub.add_parser("simulate", help="Monte Carlo risk study")
    add_common(p)
    p.add_argument("--target")
    p.add_argument("--error")
    p.add_argument("--n", type=int)
    p.add_argument("--reps", type=int)
    p.add_argument("--mode", choices=["adaptive", "oracle_k", "fixed", "fixed_k"])
    p.add_argument("--chi", type=float)
    p.add_argument("--k", type=float)
    p.add_argument("--k-cap", dest="k_cap", type=int)
    p.add_argument("--output", help="output file prefix")

    p = sub.add_parser("calibrate", help="select the penalty constant")
    add_common(p)
    p.add_argument("--error")
    p.add_argument("--chi-grid", dest="chi_grid",
                   type=lambda s: [float(v) for v in s.split(",")])
    p.add_argument("--histograms", type=int)
    p.add_argument("--reps", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--k-cap", dest="k_cap", type=int)

    p = sub.add_parser("ratecheck", help="verify the empirical convergence rate")
    add_common(p)
    p.add_argument("--target")
    p.add_argument("--error")
    p.add_argument("--s", type=float, help="smoothness index")
    p.add_argument("--n-list", dest="n_list",
                   type=lambda s: [int(v) for v in s.split(",")])
    p.add_argument("--reps", type=int)
    p.add_argument("--slope-tol", dest="slope_tol", type=float)
    p.add_argument("--k-scale", dest="k_scale", type=float,
                   help="prefactor of the oracle cut-off")
    p.add_argument("--synthetic-slope", dest="synthetic_slope", type=float,
                   help="test hook: check the regression on an exact power law")

    return parser


_RUNNERS = {
    "estimate": _cmd_estimate,
    "simulate": _cmd_simulate,
    "calibrate": _cmd_calibrate,
    "ratecheck": _cmd_ratecheck,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _resolve_config(args.command, args)
        if args.dump_config:
            print(json.dumps(cfg, indent=2, sort_keys=True))
            return EXIT_OK
        return _RUNNERS[args.command](cfg)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except AssumptionViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION


if __name__ == "__main__":
    sys.exit(main())
