import pytest

from zigzag_lab import cli
from zigzag_lab.cli import EXIT_IO, EXIT_OK, EXIT_USAGE, main
from zigzag_lab.experiments import EXPERIMENTS


def test_list(capsys):
    assert main(["list"]) == EXIT_OK
    assert capsys.readouterr().out.split() == list(EXPERIMENTS)


def test_run_with_config_and_overrides(tmp_path, capsys):
    cfg = tmp_path / "c.txt"
    cfg.write_text("experiment = table_gaussian_moments\nnu = 1\n")
    out = tmp_path / "out"
    code = main(["run", "--config", str(cfg), "--k", "1,2", f"--output-dir={out}"])
    assert code == EXIT_OK
    assert (out / "manifest.txt").exists()
    assert "config.k = 1,2" in (out / "manifest.txt").read_text()
    assert "wrote" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [
    ["run", "--experiment", "fig9"],
    ["run", "--experiment", "table_ess", "--epsilons", "1"],
    ["run", "--experiment"],
    ["run", "stray"],
])
def test_usage_errors(argv, capsys):
    assert main(argv) == EXIT_USAGE
    assert "zigzag-lab:" in capsys.readouterr().err


def test_io_errors(tmp_path):
    assert main(["run", "--config", str(tmp_path / "missing.txt")]) == EXIT_IO
    blocker = tmp_path / "file"
    blocker.write_text("")
    argv = ["run", "--experiment", "table_gaussian_moments", "--nu", "1", "--k", "1",
            "--output_dir", str(blocker / "sub")]
    assert main(argv) == EXIT_IO


def test_verify_exit_code(monkeypatch):
    from zigzag_lab import acceptance

    class R:
        def __init__(self, ok):
            self.passed = ok

    monkeypatch.setattr(acceptance, "verify_all", lambda profile: [R(True), R(False)])
    assert main(["verify", "--profile", "quick"]) == cli.EXIT_FAIL
    monkeypatch.setattr(acceptance, "verify_all", lambda profile: [R(True)])
    assert main(["verify"]) == EXIT_OK
    with pytest.raises(SystemExit):
        main(["verify", "--profile", "huge"])
