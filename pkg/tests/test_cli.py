import csv

import pytest

from formation import cli
from formation.config import demo_text
from formation.sim import SimulationError


@pytest.fixture
def demo_file(tmp_path):
    path = tmp_path / "demo.yaml"
    path.write_text(demo_text())
    return path


def _files(root):
    return sorted(p.relative_to(root).as_posix() for p in root.rglob("*") if p.is_file())


def test_validate_echoes_resolved_defaults(tmp_path, capsys):
    path = tmp_path / "min.yaml"
    path.write_text("topology: {followers: 1, leader_links: [1]}\n"
                    "robots:\n  - offset: [1.0, 0.0]\n")
    assert cli.main(["validate", str(path)]) == cli.EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith("valid scenario; resolved configuration:")
    for key in ("dt: 5.0e-05", "horizon: 20.0", "k_a2: 25.0", "c_hat0:", "switching: implicit"):
        assert key in out


def test_demo_validate(capsys):
    assert cli.main(["demo", "validate"]) == cli.EXIT_OK
    captured = capsys.readouterr()
    assert "valid scenario" in captured.out and captured.err == ""


def test_demo_print_config(capsys):
    assert cli.main(["demo", "--print-config"]) == cli.EXIT_OK
    assert capsys.readouterr().out == demo_text()


def test_invalid_config_exits_1(tmp_path, capsys):
    path = tmp_path / "bad.yaml"
    path.write_text(demo_text().replace("k1: 2.0", "k1: -1"))
    out = tmp_path / "out"
    assert cli.main(["run", str(path), "-o", str(out)]) == cli.EXIT_INVALID
    assert "positive design constants" in capsys.readouterr().err
    assert not out.exists()


def test_invalid_override_exits_1(demo_file, capsys):
    assert cli.main(["validate", str(demo_file), "--dt", "0.5"]) == cli.EXIT_INVALID
    assert "dt must lie" in capsys.readouterr().err


def test_missing_file_exits_1(tmp_path, capsys):
    assert cli.main(["validate", str(tmp_path / "nope.yaml")]) == cli.EXIT_INVALID
    assert "cannot read config" in capsys.readouterr().err


def test_runtime_failure_exits_2_without_partial_outputs(demo_file, tmp_path, monkeypatch,
                                                         capsys):
    def broken(*args, **kwargs):
        raise OSError("disk full")

    monkeypatch.setattr("formation.report.run_figures", broken)
    out = tmp_path / "out"
    args = ["run", str(demo_file), "--horizon", "0.1", "--decimation", "20", "-o", str(out)]
    assert cli.main(args) == cli.EXIT_RUNTIME
    assert "disk full" in capsys.readouterr().err
    assert not out.exists()
    assert _files(tmp_path) == ["demo.yaml"]


def test_simulation_error_exits_2(demo_file, tmp_path, monkeypatch, capsys):
    def failing(config):
        raise SimulationError("robot 1: state became non-finite at t=0.5", 1, 0.5)

    monkeypatch.setattr(cli, "run", failing)
    assert cli.main(["run", str(demo_file), "-o", str(tmp_path / "o")]) == cli.EXIT_RUNTIME
    assert "non-finite" in capsys.readouterr().err


def test_run_horizon_override_spans_exactly(demo_file, tmp_path, capsys):
    out = tmp_path / "out"
    assert cli.main(["run", str(demo_file), "--horizon", "1", "-o", str(out)]) == cli.EXIT_OK
    with open(out / "trace.csv", newline="") as fh:
        times = [float(row["t"]) for row in csv.DictReader(fh)]
    assert min(times) == 0.0 and max(times) == 1.0
    assert _files(out) == ["figures/estimator_errors.png", "figures/learning.png",
                           "figures/paths.png", "figures/tracking_errors.png",
                           "figures/velocity_commands.png", "metrics.txt", "trace.csv"]
    assert "robot1.total_velocity_error" in capsys.readouterr().out


def test_run_without_figures(demo_file, tmp_path):
    out = tmp_path / "out"
    args = ["run", str(demo_file), "--horizon", "0.5", "--variant", "backstepping",
            "--no-figures", "-o", str(out)]
    assert cli.main(args) == cli.EXIT_OK
    assert _files(out) == ["metrics.txt", "trace.csv"]
    assert (out / "metrics.txt").read_text().startswith("variant = backstepping\n")


def test_outputs_are_byte_identical(demo_file, tmp_path):
    dirs = [tmp_path / "a", tmp_path / "b"]
    for d in dirs:
        assert cli.main(["compare", str(demo_file), "--horizon", "1", "-o", str(d)]) == 0
    names = _files(dirs[0])
    assert names == _files(dirs[1])
    assert "figures/total_velocity_error.png" in names
    assert "trace_bioinspired_learning.csv" in names
    for name in names:
        assert (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes(), name


def test_demo_compare_reports_table_pattern(tmp_path, capsys):
    out = tmp_path / "out"
    assert cli.main(["demo", "compare", "--no-figures", "-o", str(out)]) == cli.EXIT_OK
    text = capsys.readouterr().out
    assert text.startswith("follower,backstepping,bioinspired,backstepping+learning,"
                           "bioinspired+learning\n")
    assert text.count(": match") == 3 and "MISMATCH" not in text
    with open(out / "comparison.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 4
    for row in rows[1:]:
        back, bio, back_l, bio_l = map(float, row[1:])
        assert bio_l < min(back, bio, back_l) and back > max(bio, back_l, bio_l)
