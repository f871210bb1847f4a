"""CLI subcommand, exit code, and output artifact tests."""

import json

import numpy as np
import pytest

from beamtrack.cli import build_parser, main
from beamtrack.ensemble import load_ensemble
from beamtrack.experiment import read_csv
from beamtrack.reservoir import load_reservoir


def tiny_config_dict(**overrides):
    base = dict(
        scenario_id="tiny",
        geometry={"n_tx": 16, "n_rx": 8},
        rf_chains={"n_streams": 2, "n_tx_rf": 2, "n_rx_rf": 2},
        clusters={"n_clusters": 2, "n_rays": 2, "cluster_spread": 0.02},
        erm={"reservoir_size": 40, "washout": 10},
        ensemble={"m1": 2},
        trajectory_len=130,
        n_tracked_steps=5,
        sparsity=4,
        pilot_len=8,
        pilot_mode="random_phase",
        snr_grid_db=[10.0, 20.0],
        trials=2,
        predictors=["erm_xavier", "omp", "perfect_csi"],
    )
    base.update(overrides)
    return base


@pytest.fixture
def tiny_cfg_path(tmp_path):
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps(tiny_config_dict()))
    return str(path)


class TestParser:
    def test_subcommands_present(self):
        parser = build_parser()
        args = parser.parse_args(["sweep", "--trials", "1"])
        assert args.command == "sweep"
        assert args.trials == 1
        for cmd in ("generate", "train", "evaluate", "sweep", "summarize"):
            assert cmd in parser.format_help()

    def test_summarize_takes_positional_path(self):
        args = build_parser().parse_args(["summarize", "out.csv"])
        assert args.results == "out.csv"


class TestSweepCommand:
    def test_sweep_writes_csv_and_summary(self, tiny_cfg_path, tmp_path, capsys):
        out = tmp_path / "results.csv"
        code = main(["sweep", "--config", tiny_cfg_path, "--out", str(out)])
        assert code == 0
        printed = capsys.readouterr().out
        assert "wrote" in printed and "NMSE" in printed
        records = read_csv(out)
        assert {r.predictor for r in records} == {
            "erm_xavier",
            "omp",
            "perfect_csi",
        }

    def test_sweep_is_byte_identical_across_runs(
        self, tiny_cfg_path, tmp_path
    ):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        assert main(["sweep", "--config", tiny_cfg_path, "--out", str(a)]) == 0
        assert main(["sweep", "--config", tiny_cfg_path, "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_seed_override_changes_results(self, tiny_cfg_path, tmp_path):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        main(["sweep", "--config", tiny_cfg_path, "--out", str(a)])
        main(
            ["sweep", "--config", tiny_cfg_path, "--seed", "9", "--out", str(b)]
        )
        assert a.read_bytes() != b.read_bytes()

    def test_trials_override(self, tiny_cfg_path, tmp_path):
        out = tmp_path / "r.csv"
        main(
            [
                "sweep",
                "--config",
                tiny_cfg_path,
                "--trials",
                "1",
                "--out",
                str(out),
            ]
        )
        assert {r.seed for r in read_csv(out)} == {0}

    def test_unwritable_output_is_io_error(self, tiny_cfg_path, tmp_path):
        code = main(
            [
                "sweep",
                "--config",
                tiny_cfg_path,
                "--out",
                str(tmp_path / "nodir" / "r.csv"),
            ]
        )
        assert code == 3


class TestEvaluateCommand:
    def test_single_predictor_only(self, tiny_cfg_path, tmp_path):
        out = tmp_path / "omp.csv"
        code = main(
            [
                "evaluate",
                "--config",
                tiny_cfg_path,
                "--predictor",
                "omp",
                "--out",
                str(out),
            ]
        )
        assert code == 0
        assert {r.predictor for r in read_csv(out)} == {"omp"}

    def test_unknown_predictor_exit_2_lists_names(
        self, tiny_cfg_path, capsys
    ):
        code = main(
            ["evaluate", "--config", tiny_cfg_path, "--predictor", "lstm"]
        )
        assert code == 2
        err = capsys.readouterr().err
        assert "erm_xavier" in err and "perfect_csi" in err

    def test_missing_predictor_flag_exit_2(self, tiny_cfg_path, capsys):
        code = main(["evaluate", "--config", tiny_cfg_path])
        assert code == 2
        assert "--predictor is required" in capsys.readouterr().err


class TestConfigErrors:
    def test_unknown_config_key_exit_2(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(tiny_config_dict(trajectoy_len=10)))
        assert main(["sweep", "--config", str(path)]) == 2
        assert "known keys" in capsys.readouterr().err

    def test_missing_config_file_exit_2(self, tmp_path):
        assert main(["sweep", "--config", str(tmp_path / "nope.json")]) == 2

    def test_invalid_json_exit_2(self, tmp_path, capsys):
        path = tmp_path / "broken.json"
        path.write_text("{oops")
        assert main(["sweep", "--config", str(path)]) == 2
        assert "not valid JSON" in capsys.readouterr().err


class TestSummarizeCommand:
    def test_summarize_round_trip(self, tiny_cfg_path, tmp_path, capsys):
        out = tmp_path / "r.csv"
        main(["sweep", "--config", tiny_cfg_path, "--out", str(out)])
        capsys.readouterr()
        assert main(["summarize", str(out)]) == 0
        assert "NMSE" in capsys.readouterr().out

    def test_missing_results_exit_3(self, tmp_path, capsys):
        code = main(["summarize", str(tmp_path / "gone.csv")])
        assert code == 3
        assert "error" in capsys.readouterr().err

    def test_schema_mismatch_exit_3_names_column(self, tmp_path, capsys):
        path = tmp_path / "bad.csv"
        path.write_text("schema,scenario,predictor\n")
        assert main(["summarize", str(path)]) == 3
        assert "missing column" in capsys.readouterr().err


class TestGenerateCommand:
    def test_archive_contents(self, tiny_cfg_path, tmp_path):
        out = tmp_path / "trials.npz"
        code = main(
            ["generate", "--config", tiny_cfg_path, "--out", str(out)]
        )
        assert code == 0
        with np.load(out) as data:
            meta = json.loads(str(data["meta"]))
            assert meta["schema"] == "beamtrack-trials-v1"
            assert meta["trials"] == 2
            traj = data["trial0_trajectory"]
            chans = data["trial0_channels"]
        assert traj.shape == (130, 8)  # trajectory_len x feature_dim
        assert np.all(traj >= -0.5) and np.all(traj < 0.5)
        assert chans.shape == (5, 8, 16)  # steps x n_rx x n_tx

    def test_trajectory_matches_dataset_windows(self, tiny_cfg_path, tmp_path):
        # windowing the emitted trajectory must reproduce the model inputs
        from beamtrack.channel import wrap_interval
        from beamtrack.config import load_config
        from beamtrack.experiment import derived_rng
        from beamtrack.tracking import prepare_trial

        out = tmp_path / "trials.npz"
        main(["generate", "--config", tiny_cfg_path, "--out", str(out)])
        with np.load(out) as data:
            traj = data["trial0_trajectory"]
        cfg = load_config(tiny_cfg_path)
        trial = prepare_trial(
            cfg,
            derived_rng(cfg.master_seed, "channel", 0),
            derived_rng(cfg.master_seed, "noise", 0),
        )
        n_delay = cfg.n_delay
        window = trial.dataset.inputs[7].reshape(n_delay, -1)
        assert np.allclose(
            wrap_interval(window, -0.5, 0.5), traj[7 : 7 + n_delay]
        )


class TestTrainCommand:
    def test_reservoir_round_trip(self, tiny_cfg_path, tmp_path):
        out = tmp_path / "xavier.npz"
        code = main(
            [
                "train",
                "--config",
                tiny_cfg_path,
                "--predictor",
                "erm_xavier",
                "--out",
                str(out),
            ]
        )
        assert code == 0
        model = load_reservoir(out)
        assert model.w_out is not None

    def test_ensemble_round_trip(self, tiny_cfg_path, tmp_path):
        out = tmp_path / "ens.npz"
        code = main(
            [
                "train",
                "--config",
                tiny_cfg_path,
                "--predictor",
                "ensemble",
                "--out",
                str(out),
            ]
        )
        assert code == 0
        model = load_ensemble(out)
        assert model.n_stages == 2

    def test_fit_free_predictor_rejected(self, tiny_cfg_path, capsys):
        code = main(
            ["train", "--config", tiny_cfg_path, "--predictor", "omp"]
        )
        assert code == 2
        assert "valid names" in capsys.readouterr().err
