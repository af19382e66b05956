import json

import pytest

from bench_cli import (
    EXIT_CONFIG_ERROR,
    EXIT_OK,
    EXIT_RESOURCE_LIMIT,
    ConfigError,
    ExperimentConfig,
    cmd_build,
    cmd_compare,
    cmd_metrics,
    cmd_noise_sweep,
    cmd_reference,
    config_from_dict,
    design_table,
    improvement_percent,
    load_config,
    main,
    parse_arguments,
    preset_config,
    render,
    to_plot_data,
    validate_config,
)
from adder_library import AdderFamily


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def write_config(path, experiment=None, policy=None, noise=None):
    path.write_text(json.dumps({"experiment": experiment or {}, "policy": policy or {}, "noise": noise or {}}))
    return str(path)


def test_parse_arguments():
    args = parse_arguments(["compare", "--preset", "paper-table5", "--baseline", "tpl13", "--idle", "on"])
    assert args.command == "compare"
    assert args.baseline == "tpl13"
    assert args.idle == "on"
    assert args.format is None


def test_unknown_preset():
    with pytest.raises(ConfigError, match="Unknown preset"):
        preset_config("paper-table9")


def test_load_config_reports_json_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "experiment": ,\n}\n')
    with pytest.raises(ConfigError, match=r"bad\.json:2:\d+"):
        load_config(str(path))


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(str(tmp_path / "missing.json"))


def test_config_field_path_in_errors():
    with pytest.raises(ConfigError, match=r"experiment\.families\[1\]"):
        config_from_dict({"experiment": {"families": ["aqa1", "rca"]}})


def test_config_sections(tmp_path):
    path = write_config(
        tmp_path / "config.json",
        experiment={"families": ["cqa1", "aqa5"], "n": [2, 3], "noise": ["bitflip"], "baseline": "cqa1"},
        policy={"toffoli_policy": "decompose", "idle_mode": True},
        noise={"bitflip": {"two_qubit": 0.02}},
    )
    config = load_config(path)
    assert config.families == [AdderFamily.CQA1, AdderFamily.AQA5]
    assert config.n_values == [2, 3]
    assert config.baselines == [AdderFamily.CQA1]
    model = config.noise_model("bitflip")
    assert model.two_qubit == 0.02
    assert model.idle_mode
    assert model.toffoli_policy.value == "decompose"


@pytest.mark.parametrize(
    "config, field",
    [
        (ExperimentConfig(n_values=[9]), r"experiment\.n\[0\]"),
        (ExperimentConfig(formats=["xlsx"]), r"experiment\.formats\[0\]"),
        (ExperimentConfig(noise=["pink"]), r"experiment\.noise\[0\]"),
        (ExperimentConfig(toffoli_policy="ignore"), "toffoli_policy"),
        (ExperimentConfig(noise=[], noise_params={"thermal": {"t1": 1e-6, "t2": 5e-6}}), r"noise\.thermal"),
    ],
)
def test_validate_config(config, field):
    with pytest.raises(ConfigError, match=field):
        validate_config(config)


def test_metrics_frame():
    frame = cmd_metrics(ExperimentConfig(families=[AdderFamily.AQA1], n_values=[4]))
    row = frame.iloc[0]
    assert list(frame.columns) == ["family", "n", "med", "nmed", "error_rate", "s_max", "N"]
    assert row["nmed"] == pytest.approx(17 / 48)
    assert row["N"] == 256


def test_noise_sweep_preset_covers_every_cell():
    frame = cmd_noise_sweep(preset_config("paper-table3"))
    assert len(frame) == 15
    assert set(frame["noise"]) == {"thermal", "depolarizing", "phase", "amplitude", "bitflip"}


def test_improvement_percent():
    assert improvement_percent(0.8, 0.9) == pytest.approx(12.5)


def test_compare_against_baseline():
    config = ExperimentConfig(
        families=[AdderFamily.CQA1, AdderFamily.AQA5], n_values=[2], noise=["bitflip"], baselines=[AdderFamily.CQA1],
    )
    frame = cmd_compare(config)
    assert list(frame["candidate"]) == ["cqa1", "aqa5"]
    assert frame.iloc[0]["improvement_pct"] == 0
    assert frame.iloc[1]["improvement_pct"] > 0


def test_compare_baseline_must_be_swept():
    config = ExperimentConfig(families=[AdderFamily.AQA5], n_values=[2], noise=["bitflip"])
    with pytest.raises(ConfigError, match="Baseline"):
        cmd_compare(config, "cqa1")
    with pytest.raises(ConfigError, match="No baseline"):
        cmd_compare(config)


def test_build_emits_qasm_and_row():
    qasm, frame = cmd_build("aqa5", 2)
    assert qasm.startswith("OPENQASM 2.0;")
    assert "ccx" in qasm
    row = frame.iloc[0]
    assert row["qubits"] == 5
    assert row["toffoli_count"] == 1
    assert row["deviations"] == ""


def test_build_rejects_unknown_family():
    with pytest.raises(ConfigError):
        cmd_build("rca", 4)


def test_design_table_marks_deviation():
    frame = design_table([AdderFamily.TPL13, AdderFamily.CQA1], [1, 4])
    assert len(frame) == 4
    assert frame.iloc[0]["deviations"] == "cnot_count: 0 expected, 1 built"
    assert frame.iloc[3]["cnot_count"] == 17


def test_render_csv_and_markdown():
    frame = cmd_metrics(ExperimentConfig(families=[AdderFamily.AQA1], n_values=[4]))
    assert render(frame, "csv", "metrics").splitlines()[1] == "aqa1,4,5.3125,0.3542,0.9375,15,256"
    assert "| aqa1" in render(frame, "md", "metrics")


def test_plot_data_blocks():
    frame = cmd_metrics(ExperimentConfig(families=[AdderFamily.AQA1, AdderFamily.AQA3], n_values=[1, 2]))
    text = to_plot_data(frame, "family", "n", ["nmed"])
    blocks = text.strip().split("\n\n\n")
    assert len(blocks) == 2
    assert blocks[0].splitlines()[0] == "# family=aqa1"
    assert blocks[0].splitlines()[2] == "1 0.5000"


def test_plot_not_available_for_build():
    _, frame = cmd_build("aqa2", 2)
    with pytest.raises(ConfigError):
        render(frame, "plot", "build")


def test_main_metrics_to_stdout(workdir, capsys):
    assert main(["metrics", "--preset", "paper-fig4-6", "--format", "csv"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "family,n,med,nmed,error_rate,s_max,N"
    assert len(lines) == 1 + 5 * 8


def test_main_writes_files(workdir):
    assert main(["build", "--preset", "paper-table2", "--out", "results", "--format", "md"]) == EXIT_OK
    table = (workdir / "results" / "build-paper-table2.md").read_text()
    assert table.count("\n") == 2 + 8


def test_main_missing_config(workdir):
    assert main(["noise-sweep", "--config", "missing.json"]) == EXIT_CONFIG_ERROR


def test_main_unknown_family(workdir):
    assert main(["build", "--family", "rca"]) == EXIT_CONFIG_ERROR


def test_main_resource_limit(workdir):
    path = write_config(workdir / "big.json", experiment={"families": ["cqa1"], "n": [6], "noise": ["none"]})
    assert main(["noise-sweep", "--config", path]) == EXIT_RESOURCE_LIMIT


def test_main_calibrate_save(workdir, capsys):
    path = write_config(workdir / "config.json", noise={"thermal": {"t1": 5e-05, "t2": 7e-05, "measure_time": 1e-06}})
    assert main(["calibrate", "--config", path, "--save"]) == EXIT_OK
    assert capsys.readouterr().out.startswith("gate_time=")
    saved = json.loads((workdir / "config.json").read_text())
    assert saved["noise"]["thermal"]["gate_time"] == pytest.approx(1.264e-6, rel=2e-3)
    assert "measure_time" not in saved["noise"]["thermal"]


def test_build_decomposed_design_skips_closed_forms():
    _, native = cmd_build("cqa0", 2)
    _, frame = cmd_build("cqa0", 2, {"toffoli_policy": "decompose"})
    row, base = frame.iloc[0], native.iloc[0]
    assert row["toffoli_count"] == 0
    assert row["cnot_count"] == base["cnot_count"] + 6 * base["toffoli_count"]
    assert row["deviations"] == "not compared: Toffolis decomposed"


def test_build_decompose_without_toffolis_keeps_comparison():
    _, frame = cmd_build("aqa2", 2, {"toffoli_policy": "decompose"})
    assert frame.iloc[0]["deviations"] == ""


def test_reference_frame_for_toffoli_free_designs():
    config = ExperimentConfig(families=[AdderFamily.AQA1, AdderFamily.AQA2], noise=["depolarizing", "bitflip"])
    frame = cmd_reference(config)
    assert list(frame.columns) == ["family", "noise", "published", "native", "decompose", "mode", "fidelity", "delta", "tolerance", "within_tolerance"]
    assert len(frame) == 4
    assert frame["within_tolerance"].all()
    assert (frame["native"] == frame["decompose"]).all()
    assert set(frame["mode"]) == {"native"}


def test_reference_rejects_unpublished_cells():
    with pytest.raises(ConfigError, match="No published fidelity"):
        cmd_reference(ExperimentConfig(families=[AdderFamily.AQA1], noise=["spam"]))


def test_main_reference_improvements(workdir, capsys):
    path = write_config(workdir / "config.json", experiment={"families": ["cqa0", "aqa1"], "noise": ["depolarizing"]})
    assert main(["reference", "--config", path, "--improvements", "--format", "csv"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "baseline,candidate,noise,published_pct,simulated_pct,sign_matches"
    assert lines[1].startswith("cqa0,aqa1,depolarizing,68.9300,")
    assert lines[1].endswith(",True")


def test_main_reference_is_reproducible(workdir):
    path = write_config(workdir / "config.json", experiment={"families": ["aqa3", "aqa4"], "noise": ["thermal", "amplitude"]})
    outputs = []
    for out in ("first", "second"):
        assert main(["reference", "--config", path, "--out", out]) == EXIT_OK
        outputs.append((workdir / out / "reference.csv").read_bytes())
    assert outputs[0] == outputs[1]
