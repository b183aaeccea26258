"""CSV and JSON artifact writers.

Floats are written with 17 significant digits so every output round-trips
losslessly and repeated runs can be compared byte for byte.
"""

from __future__ import annotations

import csv
import json
import os

import numpy as np

from .marching import Trajectory
from .newton import BatchSolveReport
from .uq import DensityEstimate, SampleStudy, SensitivityLogRow, StudyErrorSummary


def fmt(value) -> str:
    """Render one CSV cell."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if value is None:
        return ""
    return str(value)


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def samples_header(p: int, d: int, N_list) -> list[str]:
    header = ["sample_index"] + [f"theta_{k + 1}" for k in range(p)]
    for N in N_list:
        header += [f"N{N}_m_{j + 1}" for j in range(d)] + [f"N{N}_status"]
    header += [f"oracle_m_{j + 1}" for j in range(d)] + ["oracle_converged"]
    return header


def write_samples_csv(path, study: SampleStudy) -> None:
    d = study.d
    p = study.box.p
    rows = []
    for rec in study.records:
        row: list = [rec.index] + list(rec.theta)
        for N in study.N_list:
            out = rec.outcomes[N]
            row += list(out.final_state) + [out.status.value]
        if rec.oracle is not None:
            row += list(rec.oracle.minimizer) + [rec.oracle.converged]
        else:
            row += [None] * d + [None]
        rows.append(row)
    _write_rows(path, samples_header(p, d, study.N_list), rows)


def errors_header(d: int) -> list[str]:
    return (
        ["N", "h"]
        + [f"mean_err_{j + 1}" for j in range(d)]
        + [f"std_err_{j + 1}" for j in range(d)]
        + ["per_sample_err"]
    )


def write_errors_csv(path, summary: StudyErrorSummary) -> None:
    mean = summary.mean
    d = mean.errors.shape[1]
    rows = []
    for i, N in enumerate(mean.N_list):
        rows.append(
            [N, mean.h[i]]
            + list(mean.errors[i])
            + list(summary.std.errors[i])
            + [summary.per_sample.errors[i]]
        )
    _write_rows(path, errors_header(d), rows)


def write_kde_marginal_csv(path, estimate: DensityEstimate) -> None:
    if estimate.dimension != 1:
        raise ValueError("marginal writer expects a 1-d estimate")
    _write_rows(
        path,
        ["x", "density"],
        zip(estimate.axes[0], estimate.density),
    )


def write_kde_joint_csv(path, estimate: DensityEstimate) -> None:
    if estimate.dimension != 2:
        raise ValueError("joint writer expects a 2-d estimate")
    xs, ys = estimate.axes
    rows = (
        (xs[i], ys[j], estimate.density[i, j])
        for i in range(xs.size)
        for j in range(ys.size)
    )
    _write_rows(path, ["x", "y", "density"], rows)


def write_trajectory_csv(path, traj: Trajectory) -> None:
    d = traj.states.shape[1]
    rows = []
    for i, t in enumerate(traj.times):
        eig = traj.min_eigenvalues[i] if i < traj.min_eigenvalues.size else float("nan")
        rows.append([t] + list(traj.states[i]) + [eig])
    _write_rows(path, ["t"] + [f"m_{j + 1}" for j in range(d)] + ["min_eig"], rows)


def write_sensitivity_csv(path, rows: list[SensitivityLogRow], d: int) -> None:
    header = ["sample_index", "step", "t", "f_norm"] + [f"f_{j + 1}" for j in range(d)]
    _write_rows(
        path,
        header,
        ([r.sample_index, r.step, r.t, r.rhs_norm] + list(r.rhs) for r in rows),
    )


def write_newton_batch_csv(path, samples: np.ndarray, report: BatchSolveReport) -> None:
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    p = samples.shape[1]
    d = report.results[0].minimizer.size
    header = (
        ["sample_index"]
        + [f"theta_{k + 1}" for k in range(p)]
        + [f"m_{j + 1}" for j in range(d)]
        + ["converged", "iterations", "grad_norm"]
    )
    rows = (
        [i] + list(theta) + list(r.minimizer) + [r.converged, r.iterations, r.grad_norm]
        for i, (theta, r) in enumerate(zip(samples, report.results))
    )
    _write_rows(path, header, rows)


def save_study(path, study: SampleStudy) -> None:
    with open(path, "w") as fh:
        json.dump(study.to_dict(), fh)


def load_study(path) -> SampleStudy:
    with open(path) as fh:
        return SampleStudy.from_dict(json.load(fh))


def write_manifest(path, manifest: dict) -> None:
    """Write run metadata atomically so partial runs never leave a manifest."""
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)
