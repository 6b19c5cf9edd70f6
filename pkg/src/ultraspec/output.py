"""CSV/JSON writers for grids, spectra and convergence traces.

Floats are serialized with ``repr`` (shortest round-trip form), so reruns of
the same configuration produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .fields import format_element
from .finite import Grid, ZERO_SHELL
from .spectra import ConvergenceTrace, SpectrumReport

__all__ = [
    "grid_rows",
    "spectrum_rows",
    "eigenvector_rows",
    "trajectory_rows",
    "level_cluster_rows",
    "write_table",
    "write_spectrum_outputs",
    "write_convergence_outputs",
    "write_matrix_text",
]

GRID_HEADER = ["index", "digits", "shell", "abs_value", "mass"]
SPECTRUM_HEADER = ["rank", "eigenvalue", "cluster_id", "multiplicity", "classification", "shell_profile"]
EIGENVECTOR_HEADER = ["point_index", "digits", "shell", "re", "im"]
TRAJECTORY_HEADER = ["trajectory", "level", "value", "multiplicity", "drift", "alignment"]
LEVEL_CLUSTER_HEADER = ["level", "cluster_id", "value", "multiplicity"]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if value == ZERO_SHELL:
            return "-inf"
        return repr(value)
    return str(value)


def _shell_str(k: float) -> str:
    return "-inf" if k == ZERO_SHELL else str(int(k))


def _profile_str(profile: dict) -> str:
    return ";".join(f"{_shell_str(k)}:{repr(float(v))}" for k, v in sorted(profile.items()))


def grid_rows(grid: Grid):
    q = float(grid.field.q)
    for i, point in enumerate(grid.points):
        shell = grid.shells[i]
        yield [
            i,
            format_element(point),
            _shell_str(shell),
            q**shell if shell != ZERO_SHELL else 0.0,
            grid.mass,
        ]


def spectrum_rows(report: SpectrumReport):
    cluster_id = {}
    for ci, cluster in enumerate(report.clusters):
        for i in cluster.indices:
            cluster_id[i] = ci
    for rank, value in enumerate(report.eigenvalues):
        cluster = report.clusters[cluster_id[rank]]
        cls = report.classifications[rank]
        yield [
            rank,
            float(value),
            cluster_id[rank],
            cluster.multiplicity,
            cls.label(),
            _profile_str(cls.profile),
        ]


def eigenvector_rows(grid: Grid, vector: np.ndarray):
    vector = np.asarray(vector)
    for i, point in enumerate(grid.points):
        value = complex(vector[i])
        yield [
            i,
            format_element(point),
            _shell_str(grid.shells[i]),
            value.real,
            value.imag,
        ]


def trajectory_rows(trace: ConvergenceTrace):
    for ti, traj in enumerate(trace.trajectories):
        for step in traj.steps:
            yield [ti, step.level, step.value, step.multiplicity, step.drift, step.alignment]


def level_cluster_rows(trace: ConvergenceTrace):
    for level in trace.per_level:
        for ci, (value, mult) in enumerate(level.clusters):
            yield [level.level, ci, value, mult]


def write_table(path, header, rows, fmt: str = "csv"):
    """Write rows as CSV or as a JSON list of records."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = list(rows)
    if fmt == "csv":
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])
    elif fmt == "json":
        records = [dict(zip(header, row)) for row in rows]
        with open(path, "w") as handle:
            json.dump(records, handle, indent=1, sort_keys=True, default=_fmt)
            handle.write("\n")
    else:
        raise ValueError(f"unknown output format {fmt!r}")
    return path


def write_spectrum_outputs(outdir, report: SpectrumReport, fmt: str = "csv"):
    """Write the standard spectrum artifacts; returns the file paths."""
    outdir = Path(outdir)
    ext = fmt
    paths = [
        write_table(outdir / f"grid.{ext}", GRID_HEADER, grid_rows(report.grid), fmt),
        write_table(outdir / f"eigenvalues.{ext}", SPECTRUM_HEADER, spectrum_rows(report), fmt),
        write_table(
            outdir / f"ground_state.{ext}",
            EIGENVECTOR_HEADER,
            eigenvector_rows(report.grid, report.eigenvectors[:, 0]),
            fmt,
        ),
    ]
    bundle = []
    for j in range(report.eigenvectors.shape[1]):
        for row in eigenvector_rows(report.grid, report.eigenvectors[:, j]):
            bundle.append([j] + row)
    paths.append(
        write_table(
            outdir / f"eigenvectors.{ext}", ["vector"] + EIGENVECTOR_HEADER, bundle, fmt
        )
    )
    return paths


def write_convergence_outputs(outdir, trace: ConvergenceTrace, fmt: str = "csv"):
    outdir = Path(outdir)
    return [
        write_table(
            outdir / f"level_clusters.{fmt}", LEVEL_CLUSTER_HEADER, level_cluster_rows(trace), fmt
        ),
        write_table(
            outdir / f"trajectories.{fmt}", TRAJECTORY_HEADER, trajectory_rows(trace), fmt
        ),
    ]


def write_matrix_text(path, matrix: np.ndarray):
    """Debug dump: row-major complex pairs, one row per line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    matrix = np.asarray(matrix)
    with open(path, "w") as handle:
        for row in matrix:
            handle.write(
                " ".join(f"({repr(float(np.real(v)))},{repr(float(np.imag(v)))})" for v in row)
            )
            handle.write("\n")
    return path
