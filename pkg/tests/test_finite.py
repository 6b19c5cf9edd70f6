import numpy as np
import pytest

from ultraspec import (
    EisensteinExtension,
    GridTooLarge,
    HamiltonianModel,
    LaurentField,
    MonomialPotential,
    NonConfiningPotentialWarning,
    TablePotential,
    ZERO_SHELL,
    ZeroCellConvention,
    assemble_hamiltonian,
    build_grid,
    character,
    elem_mul,
    fourier_apply,
    fourier_matrix,
    make_field,
    position_diagonal,
    project_cutoff,
    project_smooth,
    zero_cell_average,
)
from ultraspec.finite import GridFunction
import ultraspec.finite as finite


def rand_fn(rng, size):
    return rng.standard_normal(size) + 1j * rng.standard_normal(size)


# ---------------------------------------------------------------------------
# Grid
# ---------------------------------------------------------------------------


def test_grid_sizes(grid_n1, grid_n2):
    assert grid_n1.size == 9
    assert grid_n2.size == 81
    q5 = make_field(EisensteinExtension(p=5, e=1))
    assert build_grid(q5, 1).size == 25


def test_grid_shell_sizes(grid_n2):
    assert grid_n2.shell_sizes == {2.0: 54, 1.0: 18, 0.0: 6, -1.0: 2, ZERO_SHELL: 1}


def test_grid_total_mass(grid_n2):
    q, n = 3, 2
    assert grid_n2.size * grid_n2.mass == pytest.approx(q**n)


def test_grid_shell_partition_counts(grid_n2):
    q, n = 3, 2
    for k in range(-(n - 1), n + 1):
        assert grid_n2.shell_sizes[float(k)] == q ** (n + k) - q ** (n + k - 1)


def test_grid_cap_enforced(q3sqrt3):
    with pytest.raises(GridTooLarge):
        build_grid(q3sqrt3, 8)  # 3**16 exceeds the default cap


def test_grid_index_round_trip(grid_n2):
    for i in (0, 1, 17, 80):
        assert grid_n2.index_of_element(grid_n2.points[i]) == i


def test_grid_function_validates_length(grid_n1):
    GridFunction(grid_n1, np.zeros(9))
    with pytest.raises(ValueError):
        GridFunction(grid_n1, np.zeros(8))


# ---------------------------------------------------------------------------
# Fourier transform
# ---------------------------------------------------------------------------


def test_fourier_of_cell_indicator_matches_character_sum(grid_n2, q3sqrt3):
    # single-term oracle: (F 1_z)(x) = q**-n * chi(-x z)
    rng = np.random.default_rng(0)
    for z in rng.choice(grid_n2.size, size=5, replace=False):
        f = np.zeros(grid_n2.size)
        f[z] = 1.0
        out = fourier_apply(grid_n2, f)
        expected = np.array(
            [
                np.conj(character(q3sqrt3, elem_mul(q3sqrt3, x, grid_n2.points[z]))) / 9.0
                for x in grid_n2.points
            ]
        )
        assert np.abs(out - expected).max() < 1e-13


def test_fourier_of_constant_is_zero_cell_spike(grid_n2):
    out = fourier_apply(grid_n2, np.ones(grid_n2.size))
    expected = np.zeros(grid_n2.size)
    expected[grid_n2.zero_index] = 9.0  # q**n
    assert np.abs(out - expected).max() < 1e-12


def test_fourier_fixes_unit_ball_indicator(grid_n2):
    ball = (grid_n2.shells <= 0).astype(complex)
    assert np.abs(fourier_apply(grid_n2, ball) - ball).max() < 1e-12


def test_fourier_unitary_dense(grid_n2):
    fmat = fourier_matrix(grid_n2)
    assert np.abs(fmat.conj().T @ fmat - np.eye(grid_n2.size)).max() < 1e-12


def test_fourier_fourth_power_is_identity(grid_n2):
    rng = np.random.default_rng(1)
    f = rand_fn(rng, grid_n2.size)
    out = f
    for _ in range(4):
        out = fourier_apply(grid_n2, out)
    assert np.abs(out - f).max() < 1e-12


def test_fourier_reflection(grid_n2):
    rng = np.random.default_rng(2)
    f = rand_fn(rng, grid_n2.size)
    twice = fourier_apply(grid_n2, fourier_apply(grid_n2, f))
    neg = np.array([grid_n2.neg_index(i) for i in range(grid_n2.size)])
    assert np.abs(twice - f[neg]).max() < 1e-12


def test_fourier_preserves_mass_weighted_norm(grid_n2):
    rng = np.random.default_rng(3)
    f = rand_fn(rng, grid_n2.size)
    before = grid_n2.mass * np.sum(np.abs(f) ** 2)
    after = grid_n2.mass * np.sum(np.abs(fourier_apply(grid_n2, f)) ** 2)
    assert before == pytest.approx(after, rel=1e-12)


def test_fourier_blocked_path_matches_dense(grid_n2, monkeypatch):
    rng = np.random.default_rng(4)
    f = rand_fn(rng, grid_n2.size)
    dense = fourier_apply(grid_n2, f)
    monkeypatch.setattr(finite, "FOURIER_DENSE_CAP", 16)
    blocked = fourier_apply(grid_n2, f)
    assert np.abs(dense - blocked).max() < 1e-12


def test_fourier_matrix_capped(grid_n2, monkeypatch):
    monkeypatch.setattr(finite, "FOURIER_DENSE_CAP", 16)
    with pytest.raises(ValueError):
        fourier_matrix(grid_n2)


def test_fourier_works_in_positive_characteristic():
    f9 = make_field(LaurentField(p=3, f=2))
    grid = build_grid(f9, 1)
    fmat = fourier_matrix(grid)
    assert np.abs(fmat.conj().T @ fmat - np.eye(grid.size)).max() < 1e-12
    ball = (grid.shells <= 0).astype(complex)
    assert np.abs(fmat @ ball - ball).max() < 1e-12


def test_free_model_oracle_in_positive_characteristic(zero_potential):
    f4 = make_field(LaurentField(p=2, f=2))
    grid = build_grid(f4, 2)  # 256 points, q = 4
    model = assemble_hamiltonian(grid, alpha=1.0, a=1.0, potential=zero_potential)
    spectrum = np.linalg.eigvalsh(model.matrix)
    assert np.abs(spectrum - np.sort(model.kinetic_diagonal)).max() < 1e-10


# ---------------------------------------------------------------------------
# Projections
# ---------------------------------------------------------------------------


def test_cutoff_at_top_level_is_identity(grid_n2):
    rng = np.random.default_rng(5)
    f = rand_fn(rng, grid_n2.size)
    assert np.array_equal(project_cutoff(grid_n2, grid_n2.n, f), f)


def test_cutoff_removes_outer_shell(grid_n2):
    f = (grid_n2.shells == grid_n2.n).astype(float)
    assert not project_cutoff(grid_n2, grid_n2.n - 1, f).any()


def test_projections_idempotent(grid_n2):
    rng = np.random.default_rng(6)
    f = rand_fn(rng, grid_n2.size)
    for k in range(-1, 2):
        cf = project_cutoff(grid_n2, k, f)
        assert np.array_equal(project_cutoff(grid_n2, k, cf), cf)
        sf = project_smooth(grid_n2, k, f)
        assert np.abs(project_smooth(grid_n2, k, sf) - sf).max() < 1e-14


def test_smooth_fixes_constants(grid_n2):
    f = np.full(grid_n2.size, 2.5 + 1j)
    for k in range(-1, 2):
        assert np.abs(project_smooth(grid_n2, k, f) - f).max() < 1e-15


def test_cutoff_and_smooth_commute_for_nonnegative_k(grid_n2):
    rng = np.random.default_rng(7)
    for k in (0, 1):
        for _ in range(10):
            f = rand_fn(rng, grid_n2.size)
            cs = project_cutoff(grid_n2, k, project_smooth(grid_n2, k, f))
            sc = project_smooth(grid_n2, k, project_cutoff(grid_n2, k, f))
            assert np.abs(cs - sc).max() < 1e-12


def test_fourier_intertwines_cutoff_and_smooth(grid_n2):
    rng = np.random.default_rng(8)
    for k in (-1, 0, 1):
        for _ in range(10):
            f = rand_fn(rng, grid_n2.size)
            lhs = fourier_apply(grid_n2, project_cutoff(grid_n2, k, f))
            rhs = project_smooth(grid_n2, k, fourier_apply(grid_n2, f))
            assert np.abs(lhs - rhs).max() < 1e-12


def test_smooth_requires_resolvable_blocks(grid_n2):
    with pytest.raises(ValueError):
        project_smooth(grid_n2, grid_n2.n, np.zeros(grid_n2.size))


# ---------------------------------------------------------------------------
# Zero-cell averages and diagonals
# ---------------------------------------------------------------------------


def test_zero_cell_average_matches_series_oracle(q3sqrt3):
    # direct geometric series: q**n * sum_k w(q**-k) (q**-k - q**-k-1)
    def series(n, c, s, terms=400):
        total = 0.0
        for k in range(n, n + terms):
            total += c * 3.0 ** (-k * s) * (3.0**-k - 3.0 ** (-k - 1))
        return 3.0**n * total

    assert zero_cell_average(q3sqrt3, 1, 1.0) == pytest.approx(0.25, abs=1e-15)
    assert zero_cell_average(q3sqrt3, 1, 1.0) == pytest.approx(series(1, 1, 1), rel=1e-14)
    assert zero_cell_average(q3sqrt3, 2, 2.0) == pytest.approx(1 / 117, rel=1e-14)
    assert zero_cell_average(q3sqrt3, 2, 2.0) == pytest.approx(series(2, 1, 2), rel=1e-14)
    assert zero_cell_average(q3sqrt3, 2, MonomialPotential(c=0.5, s=2.0)) == pytest.approx(
        0.5 / 117, rel=1e-14
    )


def test_zero_cell_average_of_zero_potential(q3sqrt3, zero_potential):
    assert zero_cell_average(q3sqrt3, 2, zero_potential) == 0.0


def test_table_potential_average_matches_monomial(q3sqrt3):
    c, s = 1.0, 2.0
    table = TablePotential(
        values={k: c * 3.0 ** (k * s) for k in range(-60, 4)}, w0=0.0
    )
    mono = zero_cell_average(q3sqrt3, 2, MonomialPotential(c=c, s=s))
    assert zero_cell_average(q3sqrt3, 2, table) == pytest.approx(mono, rel=1e-14)


def test_position_diagonal_values(grid_n2, ho_potential):
    diag = position_diagonal(grid_n2, ho_potential)
    assert diag[grid_n2.shells == 2][0] == pytest.approx(40.5)
    kin = position_diagonal(grid_n2, 2.0)
    for k in (-1, 0, 1, 2):
        assert kin[grid_n2.shells == k][0] == pytest.approx(3.0 ** (2 * k))
    assert kin[grid_n2.zero_index] == pytest.approx(1 / 117)
    kin_pow = position_diagonal(grid_n2, 2.0, ZeroCellConvention.POWER_OF_AVERAGE)
    assert kin_pow[grid_n2.zero_index] == pytest.approx(1 / 144)
    kin_sample = position_diagonal(grid_n2, 2.0, ZeroCellConvention.SAMPLE_AT_ZERO)
    assert kin_sample[grid_n2.zero_index] == 0.0


def test_table_potential_warns_when_not_confining():
    with pytest.warns(NonConfiningPotentialWarning):
        TablePotential(values={0: 5.0, 1: 1.0}, w0=0.0)


def test_monomial_zero_coefficient_warns():
    with pytest.warns(NonConfiningPotentialWarning):
        MonomialPotential(c=0.0, s=1.0)


def test_table_potential_must_cover_grid(grid_n2):
    table = TablePotential(values={k: float(k + 3) for k in range(-2, 1)}, w0=0.0)
    with pytest.raises(ValueError):
        position_diagonal(grid_n2, table)


# ---------------------------------------------------------------------------
# Hamiltonian assembly
# ---------------------------------------------------------------------------


def test_free_model_spectrum_is_kinetic_diagonal(grid_n2, zero_potential):
    model = assemble_hamiltonian(grid_n2, alpha=2.0, a=1.0, potential=zero_potential)
    spectrum = np.linalg.eigvalsh(model.matrix)
    assert np.abs(spectrum - np.sort(model.kinetic_diagonal)).max() < 1e-10


def test_diagonal_model_when_kinetic_coefficient_vanishes(grid_n2):
    pot = MonomialPotential(c=1.0, s=1.0)
    model = assemble_hamiltonian(grid_n2, alpha=2.0, a=0.0, potential=pot)
    assert np.array_equal(model.matrix, np.diag(model.potential_diagonal))


def test_assembled_matrix_is_hermitian(canonical_model):
    m = canonical_model.matrix
    scale = max(1.0, np.abs(m).max())
    assert np.abs(m - m.conj().T).max() / scale < 1e-12
    assert canonical_model.presym_defect < 1e-12
    assert isinstance(canonical_model, HamiltonianModel)
    assert (canonical_model.potential_diagonal >= 0).all()


def test_assembly_validates_parameters(grid_n1, ho_potential):
    with pytest.raises(ValueError):
        assemble_hamiltonian(grid_n1, alpha=0.0, a=0.5, potential=ho_potential)
    with pytest.raises(ValueError):
        assemble_hamiltonian(grid_n1, alpha=2.0, a=-1.0, potential=ho_potential)


def test_blocked_assembly_matches_dense(grid_n1, ho_potential, monkeypatch):
    dense = assemble_hamiltonian(grid_n1, 2.0, 0.5, ho_potential).matrix
    monkeypatch.setattr(finite, "FOURIER_DENSE_CAP", 4)
    blocked = assemble_hamiltonian(grid_n1, 2.0, 0.5, ho_potential).matrix
    assert np.abs(dense - blocked).max() < 1e-13


def test_hermiticity_defect_raises(grid_n1, ho_potential, monkeypatch):
    from ultraspec import HermiticityDefect

    def skewed(grid, kin):
        out = np.diag(kin.astype(complex))
        out[0, 1] = 1.0  # no matching conjugate entry
        return out

    monkeypatch.setattr(finite, "_kinetic_matrix", skewed)
    with pytest.raises(HermiticityDefect):
        assemble_hamiltonian(grid_n1, 2.0, 0.5, ho_potential)
