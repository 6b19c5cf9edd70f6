import json
from pathlib import Path

import numpy as np
import pytest

from ultraspec import (
    GridTooLarge,
    MonomialPotential,
    ParseError,
    ResidualTooLarge,
    ValidationError,
    ZeroCellConvention,
    load_config,
    run_verify,
)
from ultraspec.cli import main
import ultraspec.cli

REPO_CONFIG = Path(__file__).resolve().parents[1] / "configs" / "q3sqrt3_ho.cfg"
LAURENT_CONFIG = Path(__file__).resolve().parents[1] / "configs" / "f3_laurent.cfg"

CANONICAL = {
    "field": {"family": "eisenstein", "p": 3, "e": 2},
    "n": 2,
    "alpha": 2.0,
    "kinetic_coeff": 0.5,
    "potential": {"kind": "monomial", "c": 0.5, "s": 2.0},
}


def write_config(tmp_path, data, name="run.cfg"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path


# ---------------------------------------------------------------------------
# load_config
# ---------------------------------------------------------------------------


def test_load_shipped_canonical_config():
    config = load_config(REPO_CONFIG)
    assert config.field_spec.p == 3 and config.field_spec.e == 2
    assert config.n == 2
    assert config.alpha == 2.0 and config.kinetic_coeff == 0.5
    assert config.potential == MonomialPotential(c=0.5, s=2.0)
    assert config.convention is ZeroCellConvention.AVERAGE_OF_POWER
    assert config.tolerances.cluster_tol == 1e-6


def test_missing_potential_is_a_validation_error(tmp_path):
    data = dict(CANONICAL)
    del data["potential"]
    with pytest.raises(ValidationError) as err:
        load_config(write_config(tmp_path, data))
    assert err.value.field == "potential"


def test_grid_cap_checked_at_load(tmp_path):
    data = dict(CANONICAL, n=8)
    with pytest.raises(GridTooLarge):
        load_config(write_config(tmp_path, data))


def test_parse_error_carries_line_info(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text('{\n  "field": }\n')
    with pytest.raises(ParseError) as err:
        load_config(path)
    assert err.value.line == 2


def test_unknown_key_rejected(tmp_path):
    data = dict(CANONICAL, mystery=1)
    with pytest.raises(ValidationError) as err:
        load_config(write_config(tmp_path, data))
    assert err.value.field == "mystery"


def test_tolerances_validated(tmp_path):
    data = dict(CANONICAL, tolerances={"cluster_tol": 2.0})
    with pytest.raises(ValidationError):
        load_config(write_config(tmp_path, data))


def test_load_laurent_field_with_explicit_modulus(tmp_path):
    data = dict(
        CANONICAL,
        field={"family": "laurent", "p": 2, "f": 3, "modulus": [1, 1, 0, 1]},
    )
    config = load_config(write_config(tmp_path, data))
    assert config.field.q == 8
    assert config.field.residue.modulus == (1, 1, 0, 1)


def test_levels_accepted_in_place_of_n(tmp_path):
    data = dict(CANONICAL)
    del data["n"]
    data["levels"] = [2, 1]
    config = load_config(write_config(tmp_path, data))
    assert config.levels == (1, 2)
    assert config.require_levels() == (1, 2)
    assert config.require_level() == 2


# ---------------------------------------------------------------------------
# spectrum command
# ---------------------------------------------------------------------------


def test_spectrum_summary_contains_reference_shell_rows(tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["spectrum", "--config", str(REPO_CONFIG), "--out", str(out)])
    assert code == 0
    lines = capsys.readouterr().out.splitlines()
    rows = {
        tuple(line.split()[:3])
        for line in lines
        if line and line.split()[0][0].isdigit()
    }
    assert ("5.0000", "2", "shell") in rows
    assert ("9.0000", "4", "shell") in rows
    assert ("45.0000", "24", "shell") in rows
    for name in ("grid.csv", "eigenvalues.csv", "ground_state.csv", "eigenvectors.csv"):
        assert (out / name).exists()


def test_spectrum_diagonal_listing_when_kinetic_off(tmp_path, capsys):
    data = dict(CANONICAL, kinetic_coeff=0.0, potential={"kind": "monomial", "c": 1.0, "s": 1.0})
    config = write_config(tmp_path, data)
    assert main(["spectrum", "--config", str(config), "--out", str(tmp_path / "o")]) == 0
    lines = capsys.readouterr().out
    assert "3.0000            18" in lines
    assert "9.0000            54" in lines


def test_spectrum_output_is_deterministic(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["spectrum", "--config", str(REPO_CONFIG), "--out", str(out1)]) == 0
    assert main(["spectrum", "--config", str(REPO_CONFIG), "--out", str(out2)]) == 0
    for name in ("grid.csv", "eigenvalues.csv", "ground_state.csv", "eigenvectors.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_spectrum_json_format(tmp_path):
    out = tmp_path / "json_out"
    code = main(
        ["spectrum", "--config", str(REPO_CONFIG), "--out", str(out), "--format", "json"]
    )
    assert code == 0
    records = json.loads((out / "eigenvalues.json").read_text())
    assert records[0]["rank"] == 0
    assert float(records[0]["eigenvalue"]) == pytest.approx(0.6684, abs=5e-4)


def test_spectrum_ground_state_file_layout(tmp_path):
    out = tmp_path / "gs"
    main(["spectrum", "--config", str(REPO_CONFIG), "--out", str(out)])
    header, first = (out / "ground_state.csv").read_text().splitlines()[:2]
    assert header == "point_index,digits,shell,re,im"
    cols = first.split(",")
    assert cols[0] == "0" and cols[2] == "-inf"
    grid_lines = (out / "grid.csv").read_text().splitlines()
    assert grid_lines[0] == "index,digits,shell,abs_value,mass"
    zero_row = grid_lines[1].split(",")
    assert zero_row[1] == "" and zero_row[3] == "0.0"  # zero element, |0| = 0
    spectrum_header = (out / "eigenvalues.csv").read_text().splitlines()[0]
    assert spectrum_header == "rank,eigenvalue,cluster_id,multiplicity,classification,shell_profile"


def test_matrix_debug_dump(tmp_path, grid_n1):
    from ultraspec import assemble_hamiltonian
    from ultraspec.output import write_matrix_text

    model = assemble_hamiltonian(grid_n1, 2.0, 0.5, MonomialPotential(c=0.5, s=2.0))
    path = write_matrix_text(tmp_path / "h.txt", model.matrix)
    lines = path.read_text().splitlines()
    assert len(lines) == grid_n1.size
    assert lines[0].startswith("(") and lines[0].count("(") == grid_n1.size


def test_convention_override_flag(tmp_path, capsys):
    out = tmp_path / "pow"
    code = main(
        [
            "spectrum",
            "--config",
            str(REPO_CONFIG),
            "--out",
            str(out),
            "--convention",
            "power-of-avg",
        ]
    )
    assert code == 0
    text = capsys.readouterr().out
    assert "5.0000             2  shell" in text


# ---------------------------------------------------------------------------
# verify command
# ---------------------------------------------------------------------------


def test_verify_passes_on_canonical_config(tmp_path, capsys):
    code = main(["verify", "--config", str(REPO_CONFIG), "--out", str(tmp_path)])
    assert code == 0
    assert "FAIL" not in capsys.readouterr().out
    assert (tmp_path / "verify_report.csv").exists()


def test_verify_passes_in_positive_characteristic(tmp_path, capsys):
    code = main(["verify", "--config", str(LAURENT_CONFIG), "--out", str(tmp_path)])
    assert code == 0
    assert "FAIL" not in capsys.readouterr().out


def test_verify_passes_with_nontrivial_residue_field(tmp_path):
    data = dict(CANONICAL, field={"family": "laurent", "p": 2, "f": 2}, n=2)
    outcome = run_verify(load_config(write_config(tmp_path, data)))
    assert outcome.passed, [c.name for c in outcome.checks if not c.passed]


def test_corrupted_kernel_trips_unitarity():
    config = load_config(REPO_CONFIG)

    def flip_one_phase(fmat):
        fmat[3, 5] *= np.exp(2j * np.pi / 9)
        return fmat

    outcome = run_verify(config, kernel_hook=flip_one_phase)
    assert not outcome.passed
    failed = {c.name for c in outcome.checks if not c.passed}
    assert "fourier_unitary" in failed


def test_verify_exit_code_two_on_failure(tmp_path, monkeypatch, capsys):
    from ultraspec.verify import CheckResult, VerifyOutcome

    broken = VerifyOutcome(checks=[CheckResult("fourier_unitary", False, 1.0, 1e-12)])
    monkeypatch.setattr(ultraspec.cli, "run_verify", lambda config: broken)
    code = main(["verify", "--config", str(REPO_CONFIG), "--out", str(tmp_path)])
    assert code == 2
    assert "FAIL" in capsys.readouterr().out


# ---------------------------------------------------------------------------
# converge command
# ---------------------------------------------------------------------------


def test_converge_writes_trajectories(tmp_path, capsys):
    data = dict(CANONICAL)
    del data["n"]
    data["levels"] = [1, 2]
    config = write_config(tmp_path, data)
    out = tmp_path / "conv"
    assert main(["converge", "--config", str(config), "--out", str(out)]) == 0
    text = (out / "trajectories.csv").read_text().splitlines()
    assert text[0] == "trajectory,level,value,multiplicity,drift,alignment"
    first = text[1].split(",")
    assert float(first[2]) == pytest.approx(0.6688, abs=1e-3)  # lambda_0 column
    assert (out / "level_clusters.csv").exists()


def test_converge_single_level(tmp_path):
    config = write_config(tmp_path, CANONICAL)
    out = tmp_path / "single"
    assert main(["converge", "--config", str(config), "--out", str(out)]) == 0
    rows = (out / "trajectories.csv").read_text().splitlines()[1:]
    assert all(row.split(",")[4] == "" for row in rows)  # no drift without matching


# ---------------------------------------------------------------------------
# exit codes
# ---------------------------------------------------------------------------


def test_missing_config_exits_one(tmp_path, capsys):
    assert main(["spectrum", "--config", str(tmp_path / "nope.cfg")]) == 1
    assert "error" in capsys.readouterr().err


def test_config_error_exits_one(tmp_path, capsys):
    config = write_config(tmp_path, dict(CANONICAL, n=8))
    assert main(["spectrum", "--config", str(config)]) == 1


def test_numerical_failure_exits_three(tmp_path, monkeypatch, capsys):
    def explode(*args, **kwargs):
        raise ResidualTooLarge("synthetic")

    monkeypatch.setattr(ultraspec.cli, "eigensolve", explode)
    code = main(["spectrum", "--config", str(REPO_CONFIG), "--out", str(tmp_path)])
    assert code == 3
    assert "numerical failure" in capsys.readouterr().err
