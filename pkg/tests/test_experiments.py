import csv

import numpy as np
import pytest

from zigzag_lab import experiments
from zigzag_lab.experiments import (ConfigError, ExperimentConfig, load_config,
                                    parse_config_text, run_experiment)

ESS_TABLE = (1.5708, 1.5708, 1.1781, 1.32278, 1.22073, 1.33459)


def _rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def test_parse_config_text():
    text = "# comment\nexperiment = fig3_gaussian_tail\n\nnu = 1, 2  # trailing\n"
    assert parse_config_text(text) == {"experiment": "fig3_gaussian_tail", "nu": "1, 2"}
    with pytest.raises(ConfigError):
        parse_config_text("no equals sign")


def test_config_validation(tmp_path):
    cfg = ExperimentConfig.from_mapping({"experiment": "fig3-gaussian-tail", "nu": "1,4",
                                         "replicates": "10"})
    assert cfg.experiment == "fig3_gaussian_tail"
    assert cfg.params["nu"] == [1.0, 4.0] and cfg.replicates == 10
    with pytest.raises(ConfigError):
        ExperimentConfig.from_mapping({"experiment": "fig9"})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_mapping({"experiment": "table_ess", "epsilons": "1"})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_mapping({"experiment": "table_ess", "replicates": "0"})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_mapping({"experiment": "table_ess", "switches": "many"})
    path = tmp_path / "c.txt"
    path.write_text("experiment = table_ess\nswitches = 100\n")
    cfg = load_config(path, {"switches": "200"})
    assert cfg.params["switches"] == 200


def test_threads_env_override(monkeypatch):
    monkeypatch.setenv("ZIGZAG_THREADS", "4")
    assert ExperimentConfig.from_mapping({"experiment": "table_ess"}).threads == 4


def test_table_ess(tmp_path):
    cfg = ExperimentConfig.from_mapping({"experiment": "table_ess", "switches": "200000",
                                         "batches": "1000", "output_dir": str(tmp_path)})
    run_experiment(cfg)
    rows = _rows(tmp_path / "table_ess.csv")
    assert len(rows) == 6
    for row, expected in zip(rows, ESS_TABLE):
        assert abs(float(row["ess_per_switch"]) - expected) < 1e-3
    emp = _rows(tmp_path / "table_ess_empirical.csv")[0]
    np.testing.assert_allclose(float(emp["ess_batch_means"]) / float(emp["switches"]),
                               np.pi / 2, rtol=0.1)


def test_fig4_cauchy_grows(tmp_path):
    cfg = ExperimentConfig.from_mapping({"experiment": "fig4_student_tail", "nu": "1",
                                         "replicates": "2000", "checkpoints": "10,100,1000",
                                         "output_dir": str(tmp_path)})
    run_experiment(cfg)
    vs = [float(r["var_scaled"]) for r in _rows(tmp_path / "fig4_student_tail_nu1.csv")]
    assert vs[0] < vs[1] < vs[2]


def _fig3(tmp_path, threads):
    out = tmp_path / f"t{threads}"
    cfg = ExperimentConfig.from_mapping({"experiment": "fig3_gaussian_tail", "nu": "1,2",
                                         "replicates": "100", "horizon": "100",
                                         "checkpoints": "10,100", "threads": str(threads),
                                         "output_dir": str(out)})
    run_experiment(cfg)
    return out


def test_bytes_independent_of_threads(tmp_path):
    a, b = _fig3(tmp_path, 1), _fig3(tmp_path, 3)
    names = sorted(p.name for p in a.glob("*.csv"))
    assert names == sorted(p.name for p in b.glob("*.csv"))
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes()
    manifest = (a / "manifest.txt").read_text()
    assert "status = ok" in manifest and "master_seed = 20240611" in manifest
    assert "version.numpy" in manifest and "wall_time_s" in manifest


def test_manifest_on_failure(tmp_path, monkeypatch):
    def boom(cfg, out):
        raise RuntimeError("disk on fire")

    monkeypatch.setitem(experiments.EXPERIMENTS, "table_ess", boom)
    cfg = ExperimentConfig.from_mapping({"experiment": "table_ess",
                                         "output_dir": str(tmp_path)})
    with pytest.raises(RuntimeError):
        run_experiment(cfg)
    assert "status = failed: RuntimeError: disk on fire" in \
        (tmp_path / "manifest.txt").read_text()


def test_table_gaussian_moments(tmp_path):
    cfg = ExperimentConfig.from_mapping({"experiment": "table_gaussian_moments",
                                         "output_dir": str(tmp_path)})
    run_experiment(cfg)
    for r in _rows(tmp_path / "table_gaussian_moments_oracle.csv"):
        np.testing.assert_allclose(float(r["sigma2"]), float(r["sigma2_closed_form"]),
                                   rtol=1e-6)
