import json

import pytest

from seekrl import cli
from seekrl.config import ConfigError, RunConfig


class TestConfig:
    def test_defaults_are_valid(self):
        rc = RunConfig.default()
        assert rc.source["a"] == 399.0
        assert rc.source["b"] == -2.6
        assert rc.source["c"] == 5.1
        assert rc.source["noise_sigma"] == 4.0
        assert rc.train["gamma"] == 0.99
        assert rc.env["forward_speed"] == 0.5
        assert rc.env["yaw_rate_deg"] == 54.0
        assert rc.env["max_steps"] == 300
        assert rc.env["success_radius"] == 1.0
        assert rc.env["laser_max_range"] == 5.0
        rc.episode_template()
        rc.train_config()
        rc.source_params()

    def test_unknown_section_rejected(self):
        with pytest.raises(ConfigError, match="unknown config section"):
            RunConfig.from_mapping({"typo_section": {}})

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="env.typo_key"):
            RunConfig.from_mapping({"env": {"typo_key": 3}})

    def test_invalid_gamma_names_the_key(self):
        with pytest.raises(ConfigError, match="train.gamma"):
            RunConfig.from_mapping({"train": {"gamma": 1.5}})

    def test_type_errors_name_the_key(self):
        with pytest.raises(ConfigError, match="env.max_steps"):
            RunConfig.from_mapping({"env": {"max_steps": "lots"}})
        with pytest.raises(ConfigError, match="env.normalize_lasers"):
            RunConfig.from_mapping({"env": {"normalize_lasers": "yes"}})

    def test_policy_list_validated(self):
        with pytest.raises(ConfigError, match="unknown policy"):
            RunConfig.from_mapping({"eval": {"policies": ["dqn", "slam"]}})

    def test_yaml_file_round_trip(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text(
            "env:\n  dt: 0.2\n  obstacle_count: 2\n"
            "source:\n  noise_sigma: 0.0\n"
            "train:\n  total_steps: 500\n  seed: 9\n"
        )
        rc = RunConfig.from_file(path)
        template = rc.episode_template()
        assert template.dt == 0.2
        assert template.obstacle_count == 2
        assert template.source.noise_sigma == 0.0
        assert rc.train_config().total_steps == 500

    def test_yaml_parse_error(self, tmp_path):
        path = tmp_path / "broken.yaml"
        path.write_text("env: [unclosed\n")
        with pytest.raises(ConfigError):
            RunConfig.from_file(path)


def run_cli(*argv):
    return cli.main(list(argv))


@pytest.fixture(scope="module")
def tiny_config(tmp_path_factory):
    path = tmp_path_factory.mktemp("cfg") / "tiny.yaml"
    path.write_text(
        "train:\n"
        "  total_steps: 800\n"
        "  batch_size: 32\n"
        "  buffer_capacity: 2000\n"
        "  epsilon_decay_steps: 400\n"
        "  snapshot_period_episodes: 50\n"
        "  snapshot_eval_episodes: 2\n"
        "eval:\n"
        "  episodes: 6\n"
        "io:\n"
        "  verbosity: 0\n"
    )
    return str(path)


class TestCli:
    def test_train_writes_blob_and_log(self, tiny_config, tmp_path, capsys):
        out = tmp_path / "run"
        assert run_cli("train", "--config", tiny_config, "--out", str(out)) == 0
        assert (out / "policy.blob").stat().st_size == 2520
        assert (out / "trainlog.csv").read_text().startswith(
            "episode,steps,outcome,return,rolling_success"
        )

    def test_missing_config_file(self, tmp_path):
        assert run_cli("train", "--config", str(tmp_path / "nope.yaml")) == 2

    def test_bad_config_value_is_exit_1(self, tmp_path):
        cfg = tmp_path / "bad.yaml"
        cfg.write_text("train:\n  gamma: 1.5\n")
        assert run_cli("train", "--config", str(cfg)) == 1

    def test_unknown_flag_is_exit_1(self):
        assert run_cli("train", "--bogus-flag") == 1

    def test_compare_needs_two_policies(self, tiny_config):
        assert run_cli("compare", "--config", tiny_config, "--policies", "fsm") == 1

    def test_compare_without_blob(self, tiny_config, tmp_path, capsys):
        out = tmp_path / "cmp"
        code = run_cli(
            "compare", "--config", tiny_config, "--policies", "fsm,random",
            "--out", str(out), "--episodes", "4",
        )
        assert code == 0
        text = (out / "comparison.csv").read_text()
        assert text.splitlines()[0].startswith("policy,n,success_rate")
        captured = capsys.readouterr()
        assert "fsm" in captured.out and "random" in captured.out

    def test_dqn_requires_blob(self, tiny_config):
        assert run_cli("eval", "--config", tiny_config, "--policy", "dqn") == 1

    def test_missing_blob_file_is_exit_2(self, tiny_config, tmp_path):
        assert (
            run_cli(
                "eval", "--config", tiny_config, "--policy", "dqn",
                "--blob", str(tmp_path / "missing.blob"),
            )
            == 2
        )

    def test_corrupt_blob_is_exit_2(self, tiny_config, tmp_path):
        blob_path = tmp_path / "bad.blob"
        blob_path.write_bytes(b"JUNKJUNKJUNKJUNK")
        assert (
            run_cli("parity", "--blob", str(blob_path)) == 2
        )

    def test_export_then_plot(self, tiny_config, tmp_path):
        out = tmp_path / "traj"
        assert (
            run_cli(
                "export", "--config", tiny_config, "--policy", "random",
                "--episodes", "2", "--out", str(out),
            )
            == 0
        )
        traj = out / "episode_00000.csv"
        scene = out / "episode_00000.scene.json"
        assert traj.exists() and scene.exists()
        payload = json.loads(scene.read_text())
        assert set(payload) >= {"width", "height", "obstacles", "source", "start", "success_radius"}
        assert run_cli("plot", str(traj)) == 0
        assert (out / "episode_00000.svg").read_text().startswith("<svg")

    def test_plot_rejects_malformed_log(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("step,x,y\n1,2,3\n")
        assert run_cli("plot", str(bad)) == 2

    def test_plot_reports_malformed_row_number(self, tmp_path, capsys):
        bad = tmp_path / "rows.csv"
        header = ",".join(cli.TRAJECTORY_COLUMNS)
        values = {"step": "1", "action": "0"}
        good_row = ",".join(values.get(c, "0.5") for c in cli.TRAJECTORY_COLUMNS)
        broken_row = good_row.replace("1", "one", 1)
        bad.write_text(f"{header}\n{good_row}\n{broken_row}\n")
        assert run_cli("plot", str(bad)) == 2
        assert "row 3" in capsys.readouterr().err

    def test_plot_empty_log_is_error(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text(",".join(cli.TRAJECTORY_COLUMNS) + "\n")
        assert run_cli("plot", str(empty)) == 2

    def test_parity_on_fresh_blob(self, tiny_config, tmp_path, capsys):
        out = tmp_path / "run"
        assert run_cli("train", "--config", tiny_config, "--out", str(out), "--steps", "0") == 0
        code = run_cli("parity", "--blob", str(out / "policy.blob"), "--cases", "500")
        captured = capsys.readouterr()
        assert code == 0
        assert "parity: PASS" in captured.out
        assert "footprint" in captured.out
