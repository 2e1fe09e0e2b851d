import numpy as np
import pytest

import main


@pytest.fixture(autouse=True)
def isolated_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("PXL_LOGS_DIR", str(tmp_path / "logs"))
    monkeypatch.setenv("PXL_USE_CACHE", "false")
    monkeypatch.chdir(tmp_path)


def test_radial_command_prints_oracle_table(capsys):
    assert main.main(["radial", "--P", "const:2", "--F", "const:-4", "--g", "1", "--samples", "4"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "r,Z,U,U_second"
    assert len(lines) == 6
    r, z, u, second = (float(v) for v in lines[-2].split(","))
    assert r == 1.0 and u == 1.0
    assert z == pytest.approx(2.0)
    assert second == pytest.approx(2.0)
    assert float(lines[-1].split(",")[1]) == pytest.approx(8 * np.pi, abs=1e-8)


def test_solve_command_writes_outputs(tmp_path, capsys):
    solution = tmp_path / "u.txt"
    log_csv = tmp_path / "log.csv"
    code = main.main(["--quad-degree", "12", "solve", "--grid", "5", "--b", "0",
                      "--dump-solution", str(solution), "--log-csv", str(log_csv)])
    assert code == 0
    assert np.loadtxt(solution).shape == (25,)
    assert log_csv.read_text().startswith("iter,residual,J_value")
    assert "converged=True" in capsys.readouterr().out


def test_solve_command_reads_mesh_files(tmp_path):
    from fem.mesh import build_uniform_rect_mesh, save_mesh

    path = tmp_path / "square.mesh"
    save_mesh(build_uniform_rect_mesh((-1.0, 1.0), (-1.0, 1.0), 4), path)
    assert main.main(["solve", "--mesh", str(path), "--b", "0"]) == 0


def test_non_converged_solve_exits_nonzero():
    assert main.main(["solve", "--grid", "6", "--b", "1", "--max-iter", "2"]) == 1


def test_invalid_arguments_exit_with_error_code():
    assert main.main(["solve", "--grid", "5", "--b", "-1"]) == 2


def test_study_command_with_config_file(tmp_path):
    config = tmp_path / "study.cfg"
    config.write_text(f"B_VALUES=0\nGRIDS=3,5,7\nOUT={tmp_path / 'results'}\n", encoding="utf-8")
    assert main.main(["--config", str(config), "study", "--no-timing"]) == 0
    lines = (tmp_path / "results" / "records.csv").read_text().splitlines()
    assert lines[0] == "b,grid_side,dof,error,iters,seconds"
    assert len(lines) == 4
    assert all(line.endswith(",0.0") for line in lines[1:])
    [log_file] = (tmp_path / "logs").glob("pxlaplace_*.log")
    assert "Исследование завершено" in log_file.read_text(encoding="utf-8")


def test_solve_command_reports_log_holder_estimate(tmp_path):
    assert main.main(["--log-holder-threshold", "1e-3", "solve", "--grid", "5", "--b", "1"]) == 0
    [log_file] = (tmp_path / "logs").glob("pxlaplace_*.log")
    assert "log-Holder quotient" in log_file.read_text(encoding="utf-8")
