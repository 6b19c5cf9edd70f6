"""Spectral analysis of the finite models.

Diagonalizes the assembled Hermitian matrices, groups eigenvalues into
multiplicity clusters, rotates degenerate eigenspaces onto a shell-adapted
basis (a generic eigensolver returns arbitrary bases inside a degenerate
cluster; the shell projections restricted to the cluster span are jointly
block-diagonalized to make the shell structure reproducible), classifies
eigenvectors as radial / shell / mixed, and tracks clusters across grid
levels.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .errors import NoConvergence, NotAnEigenspace, ResidualTooLarge
from .finite import (
    Grid,
    HamiltonianModel,
    ZERO_SHELL,
    ZeroCellConvention,
    assemble_hamiltonian,
    build_grid,
)

__all__ = [
    "DEFAULT_CLUSTER_TOL",
    "DEFAULT_RADIAL_TOL",
    "DEFAULT_SHELL_TOL",
    "DEFAULT_RESIDUAL_TOL",
    "Radial",
    "Shell",
    "Mixed",
    "Classification",
    "EigenCluster",
    "SpectrumReport",
    "TrajectoryStep",
    "Trajectory",
    "ConvergenceTrace",
    "eigensolve",
    "cluster_eigenvalues",
    "classify_eigenvector",
    "shell_adapt",
    "embed_function",
    "convergence_report",
]

DEFAULT_CLUSTER_TOL = 1e-6
DEFAULT_RADIAL_TOL = 1e-8
DEFAULT_SHELL_TOL = 1e-10
DEFAULT_RESIDUAL_TOL = 1e-9


# ---------------------------------------------------------------------------
# Classifications
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Radial:
    """Constant on every shell; carries the worst within-shell deviation."""

    max_deviation: float
    profile: dict

    kind = "radial"

    def label(self) -> str:
        return "radial"


@dataclass(frozen=True)
class Shell:
    """Supported on a single shell k up to ``leakage`` of squared norm."""

    k: float
    leakage: float
    profile: dict

    kind = "shell"

    def label(self) -> str:
        return f"shell({_format_shell(self.k)})"


@dataclass(frozen=True)
class Mixed:
    """Neither radial nor single-shell; carries the squared-norm profile."""

    profile: dict

    kind = "mixed"

    def label(self) -> str:
        return "mixed"


Classification = Union[Radial, Shell, Mixed]


def _format_shell(k: float) -> str:
    return "-inf" if k == ZERO_SHELL else str(int(k))


def classify_eigenvector(
    grid: Grid,
    v: np.ndarray,
    radial_tol: float = DEFAULT_RADIAL_TOL,
    shell_tol: float = DEFAULT_SHELL_TOL,
) -> Classification:
    """Classify a normalized eigenvector by its shell support.

    Shell(k) when at least 1 - shell_tol of the squared norm sits on one
    shell; otherwise Radial when the values deviate from their shell means
    by at most radial_tol on every shell; otherwise Mixed.
    """
    v = np.asarray(v)
    norms = {}
    for k in grid.shell_labels():
        norms[k] = float((np.abs(v[grid.shells == k]) ** 2).sum())
    total = sum(norms.values())
    profile = {k: val / total for k, val in norms.items()}
    top = max(profile, key=profile.get)
    if profile[top] >= 1.0 - shell_tol:
        return Shell(k=top, leakage=1.0 - profile[top], profile=profile)
    max_dev = 0.0
    for k in grid.shell_labels():
        vals = v[grid.shells == k]
        max_dev = max(max_dev, float(np.abs(vals - vals.mean()).max()))
    if max_dev <= radial_tol:
        return Radial(max_deviation=max_dev, profile=profile)
    return Mixed(profile=profile)


# ---------------------------------------------------------------------------
# Eigenvalue clustering
# ---------------------------------------------------------------------------


@dataclass
class EigenCluster:
    """A run of numerically equal eigenvalues."""

    rep: float  # first member, the joining reference
    indices: list
    mean: float

    @property
    def multiplicity(self) -> int:
        return len(self.indices)


def cluster_eigenvalues(values: Sequence[float], cluster_tol: float = DEFAULT_CLUSTER_TOL):
    """Greedy left-to-right clustering of an ascending eigenvalue list.

    A value joins the open cluster iff it lies within
    cluster_tol * max(1, |rep|) of the cluster's first member.
    """
    clusters = []
    for i, val in enumerate(values):
        val = float(val)
        if clusters:
            rep = clusters[-1].rep
            if abs(val - rep) <= cluster_tol * max(1.0, abs(rep)):
                clusters[-1].indices.append(i)
                continue
        clusters.append(EigenCluster(rep=val, indices=[i], mean=val))
    for c in clusters:
        c.mean = float(np.mean([values[i] for i in c.indices]))
    return clusters


# ---------------------------------------------------------------------------
# Shell adaptation of degenerate clusters
# ---------------------------------------------------------------------------


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude entry of each column real positive."""
    out = vectors.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        i = int(np.argmax(np.abs(col)))  # ties resolve to the lowest index
        pivot = col[i]
        if pivot != 0:
            out[:, j] = col * (abs(pivot) / pivot)
    if not np.iscomplexobj(out):
        return out
    return out


def shell_adapt(
    grid: Grid,
    vectors: np.ndarray,
    model: Optional[HamiltonianModel] = None,
    tol: float = 1e-6,
    split_tol: float = 1e-7,
) -> np.ndarray:
    """Rotate an eigenspace basis onto shell-concentrated vectors.

    Within the span, each shell-indicator projector restricts to a Hermitian
    matrix; the family is jointly block-diagonalized by sequential
    refinement, so every output vector is concentrated on as few shells as
    the eigenspace allows.  When ``model`` is given, the columns are first
    checked to span a common eigenspace (raises NotAnEigenspace).
    """
    v = np.asarray(vectors)
    if v.ndim == 1:
        v = v[:, None]
    m = v.shape[1]
    if model is not None:
        hv = model.matrix @ v
        rayleigh = np.real(np.einsum("ij,ij->j", v.conj(), hv))
        lam = float(rayleigh.mean())
        residual = float(np.linalg.norm(hv - lam * v, axis=0).max())
        if residual > tol * max(1.0, abs(lam)):
            raise NotAnEigenspace(
                f"eigen-residual {residual:.3e} at lambda = {lam:.6g} exceeds tolerance"
            )
    if m == 1:
        return _fix_phases(v)
    basis = v.astype(np.complex128 if np.iscomplexobj(v) else np.float64, copy=True)
    blocks = [list(range(m))]
    for k in grid.shell_labels():
        mask = grid.shells == k
        new_blocks = []
        for block in blocks:
            if len(block) == 1:
                new_blocks.append(block)
                continue
            sub = basis[:, block]
            restricted = sub.conj().T @ (mask[:, None] * sub)
            restricted = (restricted + restricted.conj().T) / 2
            eigvals, rot = np.linalg.eigh(restricted)
            basis[:, block] = sub @ rot
            start = 0
            for j in range(1, len(block) + 1):
                if j == len(block) or eigvals[j] - eigvals[start] > split_tol:
                    new_blocks.append(block[start:j])
                    start = j
        blocks = new_blocks
    return _fix_phases(basis)


# ---------------------------------------------------------------------------
# Full spectrum report
# ---------------------------------------------------------------------------


@dataclass
class SpectrumReport:
    """Eigendecomposition plus clustering and per-vector classifications."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # orthonormal columns, phase-fixed
    residuals: np.ndarray
    clusters: list
    classifications: list
    grid: Grid
    model: HamiltonianModel

    def cluster_of(self, index: int) -> EigenCluster:
        for c in self.clusters:
            if index in c.indices:
                return c
        raise IndexError(index)

    def cluster_kind(self, cluster: EigenCluster) -> str:
        kinds = {self.classifications[i].kind for i in cluster.indices}
        if kinds == {"radial"}:
            return "radial"
        if "radial" not in kinds:
            return "shell"
        return "mixed"

    def summary_rows(self):
        """(mean value, multiplicity, kind) per cluster, ascending."""
        return [(c.mean, c.multiplicity, self.cluster_kind(c)) for c in self.clusters]


def eigensolve(
    model: HamiltonianModel,
    tol: float = DEFAULT_RESIDUAL_TOL,
    cluster_tol: float = DEFAULT_CLUSTER_TOL,
    radial_tol: float = DEFAULT_RADIAL_TOL,
    shell_tol: float = DEFAULT_SHELL_TOL,
    adapt: bool = True,
) -> SpectrumReport:
    """Dense Hermitian eigendecomposition with residual enforcement.

    Eigenvectors are Euclidean-normalized and phase-fixed (largest entry
    real positive, ties to the lowest index).  Residuals ||Hv - lambda v||
    are measured on the solver output and checked against
    tol * max|H| * size; shell adaptation afterwards only rotates bases
    inside clusters, which can move residuals by at most the cluster width.
    """
    matrix = model.matrix
    try:
        eigenvalues, eigenvectors = np.linalg.eigh(matrix)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(f"eigensolver failed: {exc}") from exc
    residuals = np.linalg.norm(matrix @ eigenvectors - eigenvectors * eigenvalues, axis=0)
    scale = max(1.0, float(np.abs(matrix).max()))
    threshold = tol * scale * model.size
    worst = float(residuals.max())
    if worst > threshold:
        raise ResidualTooLarge(f"residual {worst:.3e} exceeds {threshold:.3e}")
    eigenvectors = _fix_phases(eigenvectors)
    clusters = cluster_eigenvalues(eigenvalues, cluster_tol)
    if adapt:
        for cluster in clusters:
            if cluster.multiplicity > 1:
                idx = cluster.indices
                eigenvectors[:, idx] = shell_adapt(
                    model.grid, eigenvectors[:, idx], split_tol=max(shell_tol, 1e-9)
                )
    classifications = [
        classify_eigenvector(model.grid, eigenvectors[:, i], radial_tol, shell_tol)
        for i in range(model.size)
    ]
    return SpectrumReport(
        eigenvalues=eigenvalues,
        eigenvectors=eigenvectors,
        residuals=residuals,
        clusters=clusters,
        classifications=classifications,
        grid=model.grid,
        model=model,
    )


# ---------------------------------------------------------------------------
# Cross-level embedding and convergence traces
# ---------------------------------------------------------------------------


def embed_function(grid_from: Grid, grid_to: Grid, values: np.ndarray) -> np.ndarray:
    """Lift a level-n grid function to level n+1.

    Constant on refined cells, extended by zero outside the smaller ball,
    rescaled to unit Euclidean norm.
    """
    if grid_to.n != grid_from.n + 1:
        raise ValueError("embedding is defined between consecutive levels")
    q = grid_from.field.q
    width = 2 * grid_from.n
    inner = grid_to.digits[:, 1 : width + 1].astype(np.int64)
    weights = q ** np.arange(width - 1, -1, -1, dtype=np.int64)
    parent = inner @ weights
    out = np.asarray(values)[parent].astype(np.complex128)
    out[grid_to.digits[:, 0] != 0] = 0.0
    norm = np.linalg.norm(out)
    if norm > 0:
        out = out / norm
    return out


@dataclass
class TrajectoryStep:
    level: int
    value: float
    multiplicity: int
    drift: Optional[float]  # |value - previous value|, None on the first step
    alignment: Optional[float]  # worst embedded-basis distance to the new span


@dataclass
class Trajectory:
    steps: list

    @property
    def start_level(self) -> int:
        return self.steps[0].level

    @property
    def values(self):
        return [s.value for s in self.steps]


@dataclass
class LevelClusters:
    level: int
    clusters: list  # (mean value, multiplicity) pairs
    lowest_eigenvalue: float


@dataclass
class ConvergenceTrace:
    levels: list
    per_level: list  # LevelClusters, ascending levels
    trajectories: list
    warnings: list


def convergence_report(
    field,
    alpha: float,
    a: float,
    potential,
    levels: Sequence[int],
    convention=ZeroCellConvention.AVERAGE_OF_POWER,
    cluster_tol: float = DEFAULT_CLUSTER_TOL,
    radial_tol: float = DEFAULT_RADIAL_TOL,
    shell_tol: float = DEFAULT_SHELL_TOL,
    residual_tol: float = DEFAULT_RESIDUAL_TOL,
    window: float = 0.5,
    ground_state_bound: Optional[float] = None,
    grid_cap: Optional[int] = None,
) -> ConvergenceTrace:
    """Run the spectral pipeline at several levels and match clusters.

    Matching is greedy nearest-value within ``window`` between consecutive
    levels.  The alignment of a matched pair is the largest distance from an
    embedded basis vector of the old cluster to the span of the new one
    (embedding is the canonical constant-on-refined-cells lift, composed
    across levels when they are not consecutive).
    """
    levels = sorted(set(int(n) for n in levels))
    if not levels:
        raise ValueError("need at least one level")
    build_kwargs = {} if grid_cap is None else {"cap": grid_cap}
    per_level = []
    reports = {}
    grids = {}

    def grid_for(n):
        if n not in grids:
            grids[n] = build_grid(field, n, **build_kwargs)
        return grids[n]

    trace_warnings = []
    for n in levels:
        grid = grid_for(n)
        model = assemble_hamiltonian(grid, alpha, a, potential, convention)
        report = eigensolve(
            model,
            tol=residual_tol,
            cluster_tol=cluster_tol,
            radial_tol=radial_tol,
            shell_tol=shell_tol,
        )
        grids[n] = grid
        reports[n] = report
        lowest = float(report.eigenvalues[0])
        per_level.append(
            LevelClusters(
                level=n,
                clusters=[(c.mean, c.multiplicity) for c in report.clusters],
                lowest_eigenvalue=lowest,
            )
        )
        if ground_state_bound is not None and not 0.0 < lowest < ground_state_bound:
            message = (
                f"ground state {lowest:.6f} at level {n} outside (0, {ground_state_bound:.6f})"
            )
            trace_warnings.append(message)
            warnings.warn(message, stacklevel=2)

    trajectories = [
        Trajectory(steps=[TrajectoryStep(levels[0], c.mean, c.multiplicity, None, None)])
        for c in reports[levels[0]].clusters
    ]
    open_traj = list(trajectories)
    for prev, cur in zip(levels, levels[1:]):
        cur_clusters = reports[cur].clusters
        taken = set()
        matches = {}
        for traj in sorted(open_traj, key=lambda t: t.steps[-1].value):
            last = traj.steps[-1].value
            best, best_dist = None, window
            for ci, cluster in enumerate(cur_clusters):
                if ci in taken:
                    continue
                dist = abs(cluster.mean - last)
                if dist <= best_dist:
                    best, best_dist = ci, dist
            if best is not None:
                taken.add(best)
                matches[id(traj)] = best
        still_open = []
        for traj in open_traj:
            ci = matches.get(id(traj))
            if ci is None:
                continue
            cluster = cur_clusters[ci]
            alignment = _cluster_alignment(grid_for, reports, prev, cur, traj, cluster)
            traj.steps.append(
                TrajectoryStep(
                    level=cur,
                    value=cluster.mean,
                    multiplicity=cluster.multiplicity,
                    drift=abs(cluster.mean - traj.steps[-1].value),
                    alignment=alignment,
                )
            )
            still_open.append(traj)
        for ci, cluster in enumerate(cur_clusters):
            if ci not in taken:
                traj = Trajectory(
                    steps=[TrajectoryStep(cur, cluster.mean, cluster.multiplicity, None, None)]
                )
                trajectories.append(traj)
                still_open.append(traj)
        open_traj = still_open
    trajectories.sort(key=lambda t: (t.start_level, t.steps[0].value))
    return ConvergenceTrace(
        levels=levels,
        per_level=per_level,
        trajectories=trajectories,
        warnings=trace_warnings,
    )


def _cluster_alignment(grid_for, reports, prev, cur, traj, cluster):
    prev_report = reports[prev]
    prev_cluster = None
    for c in prev_report.clusters:
        if abs(c.mean - traj.steps[-1].value) < 1e-12 * max(1.0, abs(c.mean)):
            prev_cluster = c
            break
    if prev_cluster is None:
        return None
    basis_new = reports[cur].eigenvectors[:, cluster.indices]
    worst = 0.0
    for i in prev_cluster.indices:
        vec = prev_report.eigenvectors[:, i]
        for level in range(prev, cur):
            vec = embed_function(grid_for(level), grid_for(level + 1), vec)
        coeffs = basis_new.conj().T @ vec
        residual = float(np.linalg.norm(vec - basis_new @ coeffs))
        worst = max(worst, residual)
    return worst
