import json

import pytest

from rydsim.cli import main, run_validation
from rydsim.experiments import make_config, run_experiment


def tiny_fig4_args(out_dir, seed=11):
    return ["run", "fig4", "--n-atoms", "400", "--instances", "1",
            "--trajectories", "10", "--t-end", "20", "--seed", str(seed),
            "--out", str(out_dir)]


class TestRun:
    def test_tiny_gas_run_writes_outputs(self, tmp_path):
        assert main(tiny_fig4_args(tmp_path)) == 0
        out = tmp_path / "fig4"
        assert (out / "on.csv").exists()
        assert (out / "off.csv").exists()
        summary = json.loads((out / "summary.json").read_text())
        assert summary["experiment"] == "fig4"
        assert summary["plateau_on"] > 0
        assert "on_off_ratio" in summary

    def test_deterministic_for_fixed_seed(self, tmp_path):
        main(tiny_fig4_args(tmp_path / "a"))
        main(tiny_fig4_args(tmp_path / "b"))
        for name in ("on.csv", "off.csv", "summary.json"):
            assert (tmp_path / "a" / "fig4" / name).read_text() == \
                (tmp_path / "b" / "fig4" / name).read_text()

    def test_seed_changes_output(self, tmp_path):
        main(tiny_fig4_args(tmp_path / "a", seed=11))
        main(tiny_fig4_args(tmp_path / "b", seed=12))
        assert (tmp_path / "a" / "fig4" / "on.csv").read_text() != \
            (tmp_path / "b" / "fig4" / "on.csv").read_text()

    def test_replay_from_summary(self, tmp_path):
        main(tiny_fig4_args(tmp_path / "a"))
        summary = tmp_path / "a" / "fig4" / "summary.json"
        assert main(["run", str(summary), "--out", str(tmp_path / "b")]) == 0
        assert (tmp_path / "a" / "fig4" / "on.csv").read_text() == \
            (tmp_path / "b" / "fig4" / "on.csv").read_text()

    def test_unknown_experiment_exits_2(self, tmp_path, capsys):
        assert main(["run", "fig99", "--out", str(tmp_path)]) == 2
        assert "error" in capsys.readouterr().err

    def test_engine_failure_exits_1(self, tmp_path, capsys):
        # the sampler needs dephasing; requesting it at gamma=0 is an
        # engine error, not a usage one
        config = make_config("fig3", gamma=0.0, t_end=2.0, engine="kmc")
        config["scan"] = [1.0]
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(config))
        assert main(["run", str(cfg_path), "--out", str(tmp_path)]) == 1
        assert "engine failure" in capsys.readouterr().err


class TestScan:
    def test_scan_writes_csv_only(self, tmp_path):
        # trim the grid through a config file to keep the test fast
        config = make_config("fig3", t_end=6.0)
        config["scan"] = [0.5, 1.0, 2.0]
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(config))
        assert main(["scan", str(cfg_path), "--out", str(tmp_path)]) == 0
        out = tmp_path / "fig3"
        scan = (out / "scan.csv").read_text().splitlines()
        assert scan[0] == "delta_g_over_delta_f,N_o_at_t_w,t_w"
        assert len(scan) == 4
        assert not list(out.glob("dg_ratio_*.csv"))

    def test_scan_rejects_non_scan_experiment(self, tmp_path):
        args = ["scan", "appC", "--t-end", "2", "--out", str(tmp_path)]
        assert main(args) == 2


class TestValidate:
    def test_validation_passes(self, capsys):
        assert run_validation(decay_trajectories=2000)
        out = capsys.readouterr().out
        assert "PASS  rabi" in out
        assert "FAIL" not in out

    def test_bad_dt_reported_as_failure(self, capsys):
        assert not run_validation(dt=0.5, decay_trajectories=200)
        assert "FAIL  rabi" in capsys.readouterr().out


def test_run_experiment_rejects_unknown():
    from rydsim.experiments import ExperimentError
    with pytest.raises(ExperimentError):
        run_experiment({"experiment": "nope"})


def test_config_hash_embedded(tmp_path):
    main(tiny_fig4_args(tmp_path))
    summary = json.loads((tmp_path / "fig4" / "summary.json").read_text())
    from rydsim.timeseries import config_hash
    assert summary["config_hash"] == config_hash(summary["config"])
