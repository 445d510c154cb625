import json

import pytest

from codesign import (
    CampaignConfig,
    CoDesignSpace,
    MlpSpec,
    SynthesisStrategy,
    TrainingParams,
    analytical_energy,
    default_cost_model,
    load_trial_log,
    read_dataset,
    read_weights,
    save_campaign_config,
    synthesize_proxy,
)
from codesign.campaign import ENV_OUT_DIR
from codesign.cli import main


@pytest.fixture(autouse=True)
def isolated_env(monkeypatch):
    monkeypatch.delenv(ENV_OUT_DIR, raising=False)


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def last_json(out):
    return json.loads(out.strip().splitlines()[-1])


@pytest.fixture(scope="module")
def data_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "pulses.bin"
    code = main(["generate", "--out", str(path), "--windows", "40", "--stream-seed", "7"])
    assert code == 0
    return path


@pytest.fixture(scope="module")
def config_path(tmp_path_factory, tiny_dataset_config):
    path = tmp_path_factory.mktemp("config") / "campaign.json"
    config = CampaignConfig(
        dataset=tiny_dataset_config, budget=12, seed=3, training=TrainingParams(epochs=2)
    )
    save_campaign_config(str(path), config)
    return path


# --- generate ----------------------------------------------------------------


def test_generate_writes_dataset(capsys, tmp_path):
    out = tmp_path / "set.bin"
    code, stdout, _ = run_cli(capsys, "generate", "--out", str(out), "--windows", "40")
    assert code == 0
    info = last_json(stdout)
    assert (info["train"], info["val"], info["test"]) == (28, 8, 4)
    dataset = read_dataset(str(out))
    assert dataset.window_length == info["window_length"] == 9
    assert len(dataset.train) == 28


def test_generate_rejects_bad_shaper_order(capsys, tmp_path):
    code, _, err = run_cli(
        capsys, "generate", "--out", str(tmp_path / "x.bin"), "--shaper-order", "9"
    )
    assert code == 2
    assert err.startswith("error:")


def test_generate_rejects_short_stream(capsys, tmp_path):
    code, _, err = run_cli(
        capsys,
        "generate", "--out", str(tmp_path / "x.bin"), "--windows", "40",
        "--stream-length", "100",
    )
    assert code == 2
    assert "error:" in err


# --- train -------------------------------------------------------------------


def test_train_reports_and_writes_weights(capsys, data_path, tmp_path):
    weights_path = tmp_path / "weights.bin"
    code, stdout, _ = run_cli(
        capsys,
        "train", "--data", str(data_path),
        "--widths", "4", "--bits", "4,4", "--io-bits", "6",
        "--epochs", "2", "--seed", "1", "--weights", str(weights_path),
    )
    assert code == 0
    report = last_json(stdout)
    assert report["epochs_run"] == 2
    assert 0 <= report["best_epoch"] <= 2
    assert report["val_mse"] > 0 and report["baseline_mse"] > 0
    meta, weights = read_weights(str(weights_path))
    assert meta["mlp_spec"] == MlpSpec((4,), (4, 4), 6, 9).to_dict()
    assert [(w.shape, b.shape) for w, b in weights] == [((9, 4), (4,)), ((4, 1), (1,))]


def test_train_rejects_mismatched_bits(capsys, data_path):
    code, _, err = run_cli(
        capsys,
        "train", "--data", str(data_path), "--widths", "4", "--bits", "4", "--io-bits", "6",
    )
    assert code == 2
    assert "error:" in err


def test_train_missing_data_file(capsys, tmp_path):
    code, _, err = run_cli(
        capsys,
        "train", "--data", str(tmp_path / "absent.bin"),
        "--widths", "4", "--bits", "4,4", "--io-bits", "6",
    )
    assert code == 2
    assert "error:" in err


def test_train_rejects_non_integer_widths(capsys, data_path):
    with pytest.raises(SystemExit) as exc:
        main(["train", "--data", str(data_path), "--widths", "a,b", "--bits", "4,4", "--io-bits", "6"])
    assert exc.value.code == 2


# --- synth -------------------------------------------------------------------


def test_synth_matches_library(capsys):
    code, stdout, _ = run_cli(
        capsys, "synth", "--widths", "8", "--bits", "4,4", "--io-bits", "4", "--input-width", "9"
    )
    assert code == 0
    spec = MlpSpec((8,), (4, 4), 4, 9)
    expected = synthesize_proxy(spec, SynthesisStrategy.AREA_0, default_cost_model()).to_dict()
    expected["analytical_energy_j"] = analytical_energy(spec, default_cost_model())
    assert last_json(stdout) == json.loads(json.dumps(expected))


def test_synth_strategy_flag(capsys):
    code, stdout, _ = run_cli(
        capsys,
        "synth", "--widths", "8", "--bits", "4,4", "--io-bits", "4", "--strategy", "DELAY_2",
    )
    assert code == 0
    spec = MlpSpec((8,), (4, 4), 4, 9)
    expected = synthesize_proxy(spec, SynthesisStrategy.DELAY_2, default_cost_model())
    assert last_json(stdout)["delay_ps"] == expected.delay_ps


def test_synth_rejects_unknown_strategy(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["synth", "--widths", "8", "--bits", "4,4", "--io-bits", "4", "--strategy", "FAST"])
    assert exc.value.code == 2


# --- optimize ----------------------------------------------------------------


def test_optimize_runs_campaign(capsys, config_path, tmp_path):
    code, stdout, _ = run_cli(
        capsys, "optimize", "--config", str(config_path), "--out-dir", str(tmp_path)
    )
    assert code == 0
    summary = last_json(stdout)
    assert summary["n_completed"] + summary["n_failed"] == 12
    for name in ("trials.jsonl", "front.csv", "convergence.csv", "summary.json"):
        assert (tmp_path / name).exists()
    assert summary == json.loads((tmp_path / "summary.json").read_text())


def test_optimize_flag_overrides(capsys, config_path, tmp_path):
    code, stdout, _ = run_cli(
        capsys,
        "optimize", "--config", str(config_path), "--out-dir", str(tmp_path),
        "--budget", "6", "--seed", "9", "--sampler", "random",
        "--objectives", "val_mse,power",
    )
    assert code == 0
    summary = last_json(stdout)
    assert summary["budget"] == 6
    assert summary["seed"] == 9
    assert summary["sampler"] == "random"
    assert summary["objectives"] == ["val_mse", "power"]


def test_optimize_rejects_bad_objectives(capsys, config_path, tmp_path):
    code, _, err = run_cli(
        capsys,
        "optimize", "--config", str(config_path), "--out-dir", str(tmp_path),
        "--objectives", "val_mse",
    )
    assert code == 2
    assert "error:" in err


def test_optimize_space_file(capsys, config_path, tmp_path):
    space_path = tmp_path / "space.json"
    space_path.write_text(json.dumps(CoDesignSpace(depth_range=(1, 1)).to_dict()))
    code, _, _ = run_cli(
        capsys,
        "optimize", "--config", str(config_path), "--out-dir", str(tmp_path / "out"),
        "--budget", "6", "--space", str(space_path),
    )
    assert code == 0
    records = load_trial_log(str(tmp_path / "out" / "trials.jsonl"))
    assert len(records) == 6
    assert all(rec.design.depth == 1 for rec in records.values())


def test_optimize_rejects_corrupt_space_file(capsys, config_path, tmp_path):
    space_path = tmp_path / "space.json"
    space_path.write_text("{bad")
    code, _, err = run_cli(
        capsys,
        "optimize", "--config", str(config_path), "--out-dir", str(tmp_path),
        "--space", str(space_path),
    )
    assert code == 2
    assert "cannot load space" in err


def test_optimize_missing_config_file(capsys, tmp_path):
    code, _, err = run_cli(
        capsys, "optimize", "--config", str(tmp_path / "absent.json"), "--out-dir", str(tmp_path)
    )
    assert code == 2
    assert "error:" in err


def test_optimize_honors_env_out_dir(capsys, config_path, tmp_path, monkeypatch):
    env_dir = tmp_path / "env_out"
    monkeypatch.setenv(ENV_OUT_DIR, str(env_dir))
    code, _, _ = run_cli(
        capsys, "optimize", "--config", str(config_path), "--budget", "6"
    )
    assert code == 0
    assert (env_dir / "trials.jsonl").exists()


# --- report ------------------------------------------------------------------


def test_report_rebuilds_artifacts_with_figures(capsys, config_path, tmp_path):
    run_dir = tmp_path / "run"
    code, _, _ = run_cli(
        capsys, "optimize", "--config", str(config_path), "--out-dir", str(run_dir)
    )
    assert code == 0
    report_dir = tmp_path / "report"
    code, stdout, _ = run_cli(
        capsys,
        "report", "--log", str(run_dir / "trials.jsonl"),
        "--config", str(config_path), "--out-dir", str(report_dir),
    )
    assert code == 0
    summary = last_json(stdout)
    for name in ("front.csv", "convergence.csv", "summary.json",
                 "convergence.png", "front.png", "strategies.png"):
        assert (report_dir / name).stat().st_size > 0
    front_rows = (report_dir / "front.csv").read_text().splitlines()
    assert len(front_rows) - 1 == summary["front_size"]
    original = json.loads((run_dir / "summary.json").read_text())
    rebuilt = json.loads((report_dir / "summary.json").read_text())
    original.pop("exit_code")
    assert rebuilt == original


def test_report_rejects_empty_log(capsys, config_path, tmp_path):
    log = tmp_path / "trials.jsonl"
    log.write_text("")
    code, _, err = run_cli(
        capsys, "report", "--log", str(log), "--config", str(config_path), "--out-dir", str(tmp_path)
    )
    assert code == 2
    assert "holds no records" in err


def test_report_missing_log(capsys, config_path, tmp_path):
    code, _, err = run_cli(
        capsys,
        "report", "--log", str(tmp_path / "absent.jsonl"),
        "--config", str(config_path), "--out-dir", str(tmp_path),
    )
    assert code == 2
    assert "error:" in err


# --- compare -----------------------------------------------------------------


def test_compare_cli(capsys, config_path, tmp_path):
    code, stdout, _ = run_cli(
        capsys, "compare", "--config", str(config_path), "--budget", "10", "--out-dir", str(tmp_path)
    )
    assert code == 0
    report = last_json(stdout)
    assert set(report["final_hypervolume"]) == {"theory_guided_rescored", "proxy_guided"}
    assert (tmp_path / "compare.json").exists()
    for sub in ("theory", "proxy"):
        assert (tmp_path / sub / "summary.json").exists()


# --- parser ------------------------------------------------------------------


def test_missing_subcommand_exits_2():
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2
