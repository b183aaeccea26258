"""Command-line front end: derivative checks, propagation studies, single marches.

``minmarch study --problem logistic1d`` runs the full pipeline with the
built-in defaults (nominal solve, per-sample marching, Newton oracle,
convergence statistics, density estimates) and writes plot-ready CSV files
plus a JSON manifest.  Plotting itself is out of process.
"""

from __future__ import annotations

import argparse
import copy
import json
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .derivatives import check_derivatives
from .exceptions import ConfigError, MinmarchError
from .marching import MarchConfig, Scheme, march
from .newton import solve_nominal
from .problems import (
    DoubleWellProblem,
    LogisticWellProblem,
    ParameterBox,
    QuadraticProblem,
    make_advdiff_problem,
)
from .reporting import (
    save_study,
    write_errors_csv,
    write_kde_joint_csv,
    write_kde_marginal_csv,
    write_manifest,
    write_samples_csv,
    write_sensitivity_csv,
    write_trajectory_csv,
)
from .sensitivity import ParameterLine
from .uq import (
    SampleStudy,
    SensitivityLogRow,
    kde,
    propagate_study,
    silverman_bandwidth,
    summary_errors,
)
from .uq import _solve_result_to_dict as solve_result_dict

PROBLEM_NAMES = ("quadratic", "cubic", "logistic1d", "advdiff")

# experiment defaults per problem; study runs need no flags beyond the name
_DEFAULTS: dict[str, dict] = {
    "quadratic": {
        "box": {"nominal": [0.4], "relative": 0.40},
        "num_samples": 5000,
        "N_list": [1, 2, 4, 8, 16],
        "problem_options": {},
    },
    "cubic": {
        "box": {"nominal": [0.3, 0.75], "half_widths": [0.1, 0.1]},
        "num_samples": 5000,
        "N_list": [1, 2, 4, 8, 16],
        "problem_options": {},
    },
    "logistic1d": {
        "box": {"nominal": [1.0, 3.0, 0.1], "relative": 0.40},
        "num_samples": 5000,
        "N_list": [1, 2, 4, 8, 16],
        "problem_options": {},
    },
    "advdiff": {
        "box": {"nominal": [10.0, 0.05, 1.0], "relative": 0.20},
        "num_samples": 5000,
        "N_list": [1, 6, 12, 20],
        "problem_options": {
            "grid_cells": 200,
            "beta": 1e-3,
            "m_true": [0.05, 0.4],
            "m_prior": [0.06, 0.32],
            "noise_std": 0.0,
            "noise_seed": 0,
        },
    },
}

_TOP_KEYS = {
    "problem",
    "box",
    "num_samples",
    "seed",
    "N_list",
    "scheme",
    "with_oracle",
    "workers",
    "output_dir",
    "fd_step",
    "problem_options",
}
_BOX_KEYS = {"nominal", "relative", "half_widths"}
_ADVDIFF_OPTION_KEYS = {"grid_cells", "beta", "m_true", "m_prior", "noise_std", "noise_seed"}

# derivative-check pass thresholds; the PDE problem tolerates FD-through-solver noise
CHECK_TOLERANCES = {
    "quadratic": 1e-7,
    "cubic": 1e-6,
    "logistic1d": 1e-6,
    "advdiff": 1e-4,
}


@dataclass
class RunConfig:
    problem: str
    box: ParameterBox
    num_samples: int = 5000
    seed: int = 7
    N_list: list[int] = field(default_factory=lambda: [1, 2, 4, 8, 16])
    scheme: Scheme = Scheme.FORWARD_EULER
    with_oracle: bool = True
    workers: int = 1
    output_dir: str = ""
    fd_step: float = 1e-6
    problem_options: dict = field(default_factory=dict)

    def echo(self) -> dict:
        return {
            "problem": self.problem,
            "box": {
                "nominal": self.box.nominal.tolist(),
                "half_widths": self.box.half_widths.tolist(),
            },
            "num_samples": self.num_samples,
            "seed": self.seed,
            "N_list": self.N_list,
            "scheme": self.scheme.value,
            "with_oracle": self.with_oracle,
            "workers": self.workers,
            "output_dir": self.output_dir,
            "fd_step": self.fd_step,
            "problem_options": self.problem_options,
        }


def _load_config_file(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as err:
        raise ConfigError(f"cannot read config file {path!r}: {err}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"config file {path!r} is not valid JSON: {err}") from err
    if not isinstance(data, dict):
        raise ConfigError("config file must contain a JSON object")
    return data


def _reject_unknown(given: dict, allowed: set, where: str) -> None:
    unknown = set(given) - allowed
    if unknown:
        raise ConfigError(f"unknown {where} key(s): {', '.join(sorted(unknown))}")


def resolve_config(file_cfg: dict | None, overrides: dict) -> RunConfig:
    """Merge defaults <- config file <- command-line flags, validating strictly."""
    file_cfg = copy.deepcopy(file_cfg) if file_cfg else {}
    _reject_unknown(file_cfg, _TOP_KEYS, "config")

    problem = overrides.get("problem") or file_cfg.get("problem")
    if problem is None:
        raise ConfigError("no problem selected; pass --problem or set it in the config file")
    if problem not in PROBLEM_NAMES:
        raise ConfigError(
            f"unknown problem {problem!r}; choose from {', '.join(PROBLEM_NAMES)}"
        )

    merged = copy.deepcopy(_DEFAULTS[problem])
    merged.setdefault("seed", 7)
    merged.setdefault("scheme", "euler")
    merged.setdefault("with_oracle", True)
    merged.setdefault("workers", os.cpu_count() or 1)
    merged.setdefault("output_dir", f"out_{problem}")
    merged.setdefault("fd_step", 1e-6)
    for key, value in file_cfg.items():
        if key == "problem":
            continue
        if key == "problem_options":
            _reject_unknown(
                value,
                _ADVDIFF_OPTION_KEYS if problem == "advdiff" else set(),
                f"problem_options ({problem})",
            )
            merged["problem_options"].update(value)
        elif key == "box":
            _reject_unknown(value, _BOX_KEYS, "box")
            merged["box"] = value
        else:
            merged[key] = value
    for key, value in overrides.items():
        if key != "problem" and value is not None:
            merged[key] = value

    box_cfg = merged["box"]
    if "nominal" not in box_cfg:
        raise ConfigError("box requires a nominal parameter vector")
    has_rel = "relative" in box_cfg
    has_hw = "half_widths" in box_cfg
    if has_rel == has_hw:
        raise ConfigError("box requires exactly one of 'relative' or 'half_widths'")
    try:
        if has_rel:
            box = ParameterBox.relative(box_cfg["nominal"], box_cfg["relative"])
        else:
            box = ParameterBox(
                np.asarray(box_cfg["nominal"], dtype=float),
                np.asarray(box_cfg["half_widths"], dtype=float),
            )
    except ValueError as err:
        raise ConfigError(f"invalid box: {err}") from err

    if int(merged["num_samples"]) < 1:
        raise ConfigError("num_samples must be >= 1")
    N_list = [int(N) for N in merged["N_list"]]
    if not N_list or any(N < 1 for N in N_list):
        raise ConfigError("N_list must contain positive integers")
    try:
        scheme = Scheme(merged["scheme"])
    except ValueError as err:
        raise ConfigError(
            f"unknown scheme {merged['scheme']!r}; choose from "
            f"{', '.join(s.value for s in Scheme)}"
        ) from err
    if int(merged["workers"]) < 1:
        raise ConfigError("workers must be >= 1")
    if float(merged["fd_step"]) <= 0:
        raise ConfigError("fd_step must be positive")

    return RunConfig(
        problem=problem,
        box=box,
        num_samples=int(merged["num_samples"]),
        seed=int(merged["seed"]),
        N_list=N_list,
        scheme=scheme,
        with_oracle=bool(merged["with_oracle"]),
        workers=int(merged["workers"]),
        output_dir=str(merged["output_dir"]),
        fd_step=float(merged["fd_step"]),
        problem_options=merged["problem_options"],
    )


def build_problem(cfg: RunConfig):
    if cfg.problem == "quadratic":
        return QuadraticProblem()
    if cfg.problem == "cubic":
        return DoubleWellProblem()
    if cfg.problem == "logistic1d":
        return LogisticWellProblem()
    opts = cfg.problem_options
    return make_advdiff_problem(
        grid_cells=int(opts["grid_cells"]),
        m_true=opts["m_true"],
        theta_data=cfg.box.nominal,
        beta=float(opts["beta"]),
        m_prior=opts["m_prior"],
        noise_std=float(opts["noise_std"]),
        noise_seed=int(opts["noise_seed"]),
    )


# ---------------------------------------------------------------------------
# check


_CHECK_POINTS = {
    "quadratic": (np.array([0.3]), None),
    "cubic": (np.array([0.75]), None),
    "logistic1d": (np.array([0.9]), None),
    "advdiff": (None, None),  # decision point filled from m_true
}


def cmd_check(args) -> int:
    file_cfg = _load_config_file(args.config) if args.config else None
    if file_cfg is not None:
        _reject_unknown(file_cfg, _TOP_KEYS, "config")
        named = file_cfg.get("problem")
        if named is not None and named not in PROBLEM_NAMES:
            raise ConfigError(
                f"unknown problem {named!r}; choose from {', '.join(PROBLEM_NAMES)}"
            )
    status = 0
    rng = np.random.default_rng(args.seed if args.seed is not None else 7)
    for name in PROBLEM_NAMES:
        overrides = {"problem": name, "fd_step": args.fd_step, "seed": args.seed}
        # a config file applies to the problem it names; others keep defaults
        applies = file_cfg is not None and file_cfg.get("problem", name) == name
        cfg = resolve_config(file_cfg if applies else None, overrides)
        problem = build_problem(cfg)
        tol = CHECK_TOLERANCES[name]

        m_canon, _ = _CHECK_POINTS[name]
        if m_canon is None:
            m_canon = np.asarray(cfg.problem_options["m_true"], dtype=float)
        points = [(m_canon, cfg.box.nominal)]
        for _ in range(args.random_points):
            if problem.basin_hint is not None:
                lo, hi = problem.basin_hint
                m_rand = rng.uniform(lo, hi)
            else:
                m_rand = m_canon + rng.uniform(-0.3, 0.3, m_canon.size)
            theta_rand = cfg.box.nominal + cfg.box.half_widths * rng.uniform(
                -1.0, 1.0, cfg.box.p
            )
            points.append((m_rand, theta_rand))

        worst = 0.0
        ok = True
        failure = None
        try:
            for m_pt, theta_pt in points:
                report = check_derivatives(problem, m_pt, theta_pt, cfg.fd_step)
                worst = max(worst, report.worst())
                ok = ok and report.passed(tol)
        except (MinmarchError, ValueError) as err:
            # evaluation broke at a perturbed point; report it, never skip it
            ok = False
            failure = err
        verdict = "PASS" if ok else "FAIL"
        detail = f" ({failure})" if failure is not None else ""
        print(
            f"{name:10s} worst_rel_error={worst:.3e} tol={tol:.0e} "
            f"fd_step={cfg.fd_step:g} points={len(points)} {verdict}{detail}"
        )
        if not ok:
            status = 1
    return status


# ---------------------------------------------------------------------------
# study


def _study_kde_files(study: SampleStudy, out_dir: str) -> list[str]:
    mask = study.valid_mask()
    if mask.sum() < 30:
        return []
    d = study.d
    sources: dict[str, np.ndarray] = {}
    if study.with_oracle:
        sources["oracle"] = study.oracle_minimizers()[mask]
    for N in study.N_list:
        sources[f"N{N}"] = study.euler_finals(N)[mask]

    written = []
    for k in range(d):
        columns = {label: data[:, k] for label, data in sources.items()}
        span_lo = min(
            col.min() - 4.0 * silverman_bandwidth(col) for col in columns.values()
        )
        span_hi = max(
            col.max() + 4.0 * silverman_bandwidth(col) for col in columns.values()
        )
        axis = np.linspace(span_lo, span_hi, 256)
        for label, col in columns.items():
            est = kde(col, grid=(axis,))
            path = os.path.join(out_dir, f"kde_marginal_{k + 1}_{label}.csv")
            write_kde_marginal_csv(path, est)
            written.append(os.path.basename(path))

    if d == 2:
        axes = []
        for k in range(2):
            lo = min(
                data[:, k].min() - 4.0 * silverman_bandwidth(data[:, k], 2)
                for data in sources.values()
            )
            hi = max(
                data[:, k].max() + 4.0 * silverman_bandwidth(data[:, k], 2)
                for data in sources.values()
            )
            axes.append(np.linspace(lo, hi, 101))
        for label, data in sources.items():
            est = kde(data, grid=tuple(axes))
            path = os.path.join(out_dir, f"kde_joint_{label}.csv")
            write_kde_joint_csv(path, est)
            written.append(os.path.basename(path))
    return written


def cmd_study(args) -> int:
    file_cfg = _load_config_file(args.config) if args.config else None
    cfg = resolve_config(file_cfg, _study_overrides(args))
    problem = build_problem(cfg)
    out_dir = cfg.output_dir
    os.makedirs(out_dir, exist_ok=True)

    timings: dict[str, float] = {}
    t_total = time.perf_counter()

    t0 = time.perf_counter()
    study = propagate_study(
        problem,
        cfg.box,
        cfg.num_samples,
        cfg.N_list,
        cfg.seed,
        with_oracle=cfg.with_oracle,
        scheme=cfg.scheme,
        workers=cfg.workers,
    )
    timings["propagate"] = time.perf_counter() - t0

    slopes = None
    t0 = time.perf_counter()
    summary = None
    if cfg.with_oracle:
        try:
            summary = summary_errors(study)
        except ValueError:
            pass  # fewer than two usable samples: no statistics to report
        else:
            def _clean(values):
                return [None if np.isnan(v) else float(v) for v in values]

            slopes = {
                "mean": _clean(summary.mean.slopes),
                "std": _clean(summary.std.slopes),
                "per_sample": _clean(summary.per_sample.slopes),
            }
    timings["statistics"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    kde_files = _study_kde_files(study, out_dir)
    timings["kde"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    write_samples_csv(os.path.join(out_dir, "samples.csv"), study)
    if summary is not None:
        write_errors_csv(os.path.join(out_dir, "errors_vs_N.csv"), summary)
    save_study(os.path.join(out_dir, "study.json"), study)
    timings["write"] = time.perf_counter() - t0
    timings["total"] = time.perf_counter() - t_total

    manifest = {
        "command": "study",
        "version": __version__,
        "config": cfg.echo(),
        "newton": {
            "grad_tol": study.newton_config.grad_tol,
            "max_iters": study.newton_config.max_iters,
            "armijo_c": study.newton_config.armijo_c,
            "backtrack_factor": study.newton_config.backtrack_factor,
            "max_backtracks": study.newton_config.max_backtracks,
        },
        "timings_sec": timings,
        "failure_counts": study.failure_counts(),
        "excluded_from_statistics": int(cfg.num_samples - study.valid_mask().sum()),
        "nominal": solve_result_dict(study.nominal),
        "fitted_slopes": slopes,
        "kde_files": kde_files,
    }
    write_manifest(os.path.join(out_dir, "manifest.json"), manifest)

    counts = study.failure_counts()
    print(f"study written to {out_dir}")
    print(
        f"  samples={cfg.num_samples} N_list={cfg.N_list} "
        f"oracle_failures={counts['newton_not_converged']}"
    )
    if slopes is not None:
        print(f"  fitted slopes: mean={slopes['mean']} std={slopes['std']}")
    return 0


def _study_overrides(args) -> dict:
    return {
        "problem": args.problem,
        "num_samples": args.samples,
        "seed": args.seed,
        "N_list": args.steps,
        "scheme": args.scheme,
        "with_oracle": args.oracle,
        "workers": args.workers,
        "output_dir": args.out,
    }


# ---------------------------------------------------------------------------
# trajectory


def cmd_trajectory(args) -> int:
    file_cfg = _load_config_file(args.config) if args.config else None
    cfg = resolve_config(file_cfg, _study_overrides(args))
    problem = build_problem(cfg)

    theta = np.asarray([float(v) for v in args.theta.split(",")], dtype=float)
    theta = cfg.box.require_member(theta)

    out_dir = cfg.output_dir
    os.makedirs(out_dir, exist_ok=True)
    N = cfg.N_list[0] if args.steps else max(cfg.N_list)

    nominal = solve_nominal(problem, cfg.box)
    line = ParameterLine(cfg.box.nominal, theta)
    traj = march(
        problem,
        nominal.minimizer,
        line,
        MarchConfig(N, cfg.scheme, record_trajectory=True),
    )
    write_trajectory_csv(os.path.join(out_dir, "trajectory.csv"), traj)

    rows = []
    if traj.rhs_values is not None:
        rows = [
            SensitivityLogRow(0, i, traj.times[i], float(np.linalg.norm(f)), f)
            for i, f in enumerate(traj.rhs_values)
        ]
    write_sensitivity_csv(
        os.path.join(out_dir, "sensitivity.csv"), rows, traj.states.shape[1]
    )

    manifest = {
        "command": "trajectory",
        "version": __version__,
        "config": cfg.echo(),
        "theta": theta.tolist(),
        "num_steps": N,
        "status": traj.status.value,
        "left_basin": traj.left_basin,
        "final_state": traj.final_state.tolist(),
        "nominal": solve_result_dict(nominal),
    }
    write_manifest(os.path.join(out_dir, "manifest.json"), manifest)
    print(f"trajectory ({traj.status.value}) written to {out_dir}")
    print(f"  final state: {traj.final_state.tolist()}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _steps_list(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"bad step list {text!r}") from err


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="PATH", help="JSON config file")
    parser.add_argument("--problem", choices=PROBLEM_NAMES)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--samples", type=int, dest="samples")
    parser.add_argument("--steps", type=_steps_list, metavar="N1,N2,...")
    parser.add_argument("--scheme", choices=[s.value for s in Scheme])
    parser.add_argument(
        "--oracle",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="re-solve each sample with Newton as ground truth",
    )
    parser.add_argument("--workers", type=int)
    parser.add_argument("--out", metavar="DIR", help="output directory")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="minmarch",
        description="march minimizers of parameterized optimization problems "
        "through parameter space and quantify their uncertainty",
    )
    parser.add_argument("--version", action="version", version=f"minmarch {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_check = sub.add_parser("check", help="verify derivatives of all built-in problems")
    p_check.add_argument("--config", metavar="PATH")
    p_check.add_argument("--fd-step", type=float, dest="fd_step", default=None)
    p_check.add_argument("--seed", type=int, default=None)
    p_check.add_argument("--random-points", type=int, default=3, dest="random_points")
    p_check.set_defaults(func=cmd_check)

    p_study = sub.add_parser("study", help="run the full propagation study")
    _add_common(p_study)
    p_study.set_defaults(func=cmd_study)

    p_traj = sub.add_parser("trajectory", help="march a single parameter sample")
    _add_common(p_traj)
    p_traj.add_argument("--theta", required=True, help="sample, comma separated")
    p_traj.set_defaults(func=cmd_trajectory)

    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except MinmarchError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
