"""Experiment runner: regenerates the design table, error-metric sweeps and noise tables.

Usage:
    python bench_cli.py metrics --preset paper-fig4-6
    python bench_cli.py noise-sweep --preset paper-table3 --out results
    python bench_cli.py compare --preset paper-table5 --format md
    python bench_cli.py build --family aqa5 --n 4
    python bench_cli.py reference --preset paper-table4 --format md
    python bench_cli.py calibrate --config config.json --save
"""
import argparse
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import pandas as pd

from adder_library import (
    APPROXIMATE_FAMILIES,
    AdderFamily,
    AdderSpec,
    build,
    depth_deviations,
    parse_family,
    table2_row,
)
from circuit_core import decompose_toffoli, depth_profile, export_qasm
from classical_metrics import MAX_METRICS_BITS, sweep
from density_simulator import (
    MAX_DENSE_QUBITS,
    FidelityReport,
    ResourceLimitError,
    calibrate_gate_time,
    fidelity_sweep,
)
from noise_channels import (
    BENCHMARK_PRESETS,
    DEFAULT_T1,
    DEFAULT_T2,
    NoiseModel,
    ToffoliPolicy,
    default_noise_model,
    resolve_preset,
)
from reference_tables import PUBLISHED_FIDELITY, improvement_checks, improvement_percent, reference_cells

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG_ERROR = 2
EXIT_RESOURCE_LIMIT = 3

FORMATS = ("csv", "md", "plot")
FORMAT_EXTENSIONS = {"csv": "csv", "md": "md", "plot": "dat"}

METRICS_COLUMNS = ["family", "n", "med", "nmed", "error_rate", "s_max", "N"]
SWEEP_COLUMNS = ["family", "n", "noise", "fidelity", "toffoli_policy", "idle_mode", "apply_to_prep"]
COMPARE_COLUMNS = ["noise", "n", "baseline", "candidate", "baseline_fidelity", "candidate_fidelity", "improvement_pct"]
DESIGN_COLUMNS = ["family", "n", "sum", "carry", "qubits", "cnot_depth", "toffoli_depth", "cnot_count", "toffoli_count", "deviations"]
REFERENCE_COLUMNS = ["family", "noise", "published", "native", "decompose", "mode", "fidelity", "delta", "tolerance", "within_tolerance"]
IMPROVEMENT_COLUMNS = ["baseline", "candidate", "noise", "published_pct", "simulated_pct", "sign_matches"]

# One line per command invocation
run_logger = logging.getLogger('bench_runs')


def setup_run_logger(log_directory: str = 'logs'):
    """Attaches the run-log file handler once."""
    run_logger.setLevel(logging.INFO)
    run_logger.propagate = False
    if run_logger.handlers:
        return
    if not os.path.exists(log_directory):
        os.makedirs(log_directory)
    file_handler = logging.FileHandler(os.path.join(log_directory, 'bench_runs.log'))
    file_handler.setLevel(logging.INFO)
    file_handler.setFormatter(logging.Formatter('%(asctime)s - %(message)s'))
    run_logger.addHandler(file_handler)


def log_run(command: str, preset: Optional[str], rows: int, duration_ms: int, error: Optional[str] = None):
    log_parts = [
        f"Command: {command}",
        f"Preset: {preset or '-'}",
        f"Rows: {rows}",
        f"Duration: {duration_ms}ms",
    ]
    if error:
        log_parts.append(f"Error: {error}")
    run_logger.info(", ".join(log_parts))


class ConfigError(ValueError):
    """Invalid configuration, preset or command-line input."""


@dataclass
class ExperimentConfig:
    families: List[AdderFamily] = field(default_factory=list)
    n_values: List[int] = field(default_factory=lambda: [4])
    noise: List[str] = field(default_factory=lambda: list(BENCHMARK_PRESETS))
    baselines: List[AdderFamily] = field(default_factory=list)
    formats: List[str] = field(default_factory=lambda: ["csv"])
    out_dir: Optional[str] = None
    workers: Optional[int] = None
    toffoli_policy: str = ToffoliPolicy.NATIVE.value
    idle_mode: bool = False
    apply_to_prep: bool = True
    bitflip_joint: bool = False
    noise_params: Dict[str, Dict] = field(default_factory=dict)
    preset: Optional[str] = None

    def noise_model(self, label: str) -> NoiseModel:
        key = resolve_preset(label)
        return default_noise_model(
            key,
            self.noise_params.get(key),
            apply_to_prep=self.apply_to_prep,
            toffoli_policy=self.toffoli_policy,
            idle_mode=self.idle_mode,
            bitflip_joint=self.bitflip_joint,
        )


_COUT_FAMILIES = [AdderFamily.CQA1, AdderFamily.TPL13, AdderFamily.AQA3, AdderFamily.AQA4, AdderFamily.AQA5]

PRESETS: Dict[str, Dict] = {
    "paper-table2": {"families": list(AdderFamily), "n_values": [4], "noise": []},
    "paper-table3": {
        "families": [AdderFamily.CQA0, AdderFamily.AQA1, AdderFamily.AQA2],
        "n_values": [4],
        "noise": list(BENCHMARK_PRESETS),
        "baselines": [AdderFamily.CQA0],
    },
    "paper-table4": {"families": _COUT_FAMILIES, "n_values": [4], "noise": list(BENCHMARK_PRESETS), "baselines": [AdderFamily.CQA1]},
    "paper-table5": {
        "families": _COUT_FAMILIES,
        "n_values": [4],
        "noise": list(BENCHMARK_PRESETS),
        "baselines": [AdderFamily.CQA1, AdderFamily.TPL13],
    },
    "paper-fig4-6": {"families": list(APPROXIMATE_FAMILIES), "n_values": list(range(1, MAX_METRICS_BITS + 1)), "noise": []},
}


def preset_config(name: str) -> ExperimentConfig:
    if name not in PRESETS:
        raise ConfigError(f"Unknown preset '{name}' (expected one of {', '.join(PRESETS)})")
    settings = PRESETS[name]
    return ExperimentConfig(
        families=list(settings["families"]),
        n_values=list(settings["n_values"]),
        noise=list(settings["noise"]),
        baselines=list(settings.get("baselines", [])),
        preset=name,
    )


def _families(values, path: str) -> List[AdderFamily]:
    families = []
    for index, value in enumerate(values):
        try:
            families.append(parse_family(value))
        except ValueError as e:
            raise ConfigError(f"{path}[{index}]: {e}") from e
    return families


def config_from_dict(raw: Dict, source: str = "<config>") -> ExperimentConfig:
    """Builds an ExperimentConfig from the experiment/policy/noise sections of a JSON document."""
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}: top level must be an object")
    experiment = raw.get('experiment', {})
    policy = raw.get('policy', {})
    noise = raw.get('noise', {})

    baselines = experiment.get('baselines', [])
    if experiment.get('baseline'):
        baselines = [experiment['baseline']] + list(baselines)

    noise_params: Dict[str, Dict] = {}
    for label, params in noise.items():
        try:
            noise_params[resolve_preset(label)] = dict(params)
        except (ValueError, TypeError) as e:
            raise ConfigError(f"{source}: noise.{label}: {e}") from e

    return ExperimentConfig(
        families=_families(experiment.get('families', []), f"{source}: experiment.families"),
        n_values=list(experiment.get('n', [4])),
        noise=list(experiment.get('noise', list(BENCHMARK_PRESETS))),
        baselines=_families(baselines, f"{source}: experiment.baselines"),
        formats=list(experiment.get('formats', ["csv"])),
        out_dir=experiment.get('out_dir'),
        workers=experiment.get('workers'),
        toffoli_policy=policy.get('toffoli_policy', ToffoliPolicy.NATIVE.value),
        idle_mode=bool(policy.get('idle_mode', False)),
        apply_to_prep=bool(policy.get('apply_to_prep', True)),
        bitflip_joint=bool(policy.get('bitflip_joint', False)),
        noise_params=noise_params,
    )


def load_config(file_path: str) -> ExperimentConfig:
    """Loads an experiment configuration from a JSON file.

    Raises:
        ConfigError: If the file is missing, is not valid JSON, or holds invalid values.
    """
    try:
        with open(file_path, 'r') as file:
            raw = json.load(file)
    except FileNotFoundError as e:
        raise ConfigError(f"Config file not found: {file_path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{file_path}:{e.lineno}:{e.colno}: {e.msg}") from e
    config = config_from_dict(raw, source=file_path)
    logging.info(f"[Config] Loaded {file_path}: {len(config.families)} families, n={config.n_values}")
    return config


def validate_config(config: ExperimentConfig, source: str = "<config>"):
    for index, n in enumerate(config.n_values):
        if not isinstance(n, int) or isinstance(n, bool) or not 1 <= n <= MAX_METRICS_BITS:
            raise ConfigError(f"{source}: experiment.n[{index}]: {n!r} is not an integer in 1..{MAX_METRICS_BITS}")
    for index, fmt in enumerate(config.formats):
        if fmt not in FORMATS:
            raise ConfigError(f"{source}: experiment.formats[{index}]: '{fmt}' is not one of {', '.join(FORMATS)}")
    if config.toffoli_policy not in [p.value for p in ToffoliPolicy]:
        raise ConfigError(f"{source}: policy.toffoli_policy: '{config.toffoli_policy}' is not native or decompose")
    if config.workers is not None and (not isinstance(config.workers, int) or config.workers < 1):
        raise ConfigError(f"{source}: experiment.workers: {config.workers!r} is not a positive integer")
    for index, label in enumerate(config.noise):
        try:
            config.noise_model(label)
        except ValueError as e:
            raise ConfigError(f"{source}: experiment.noise[{index}]: {e}") from e
    for label in config.noise_params:
        try:
            config.noise_model(label)
        except (ValueError, TypeError) as e:
            raise ConfigError(f"{source}: noise.{label}: {e}") from e


# --- commands -------------------------------------------------------------------

def cmd_metrics(config: ExperimentConfig) -> pd.DataFrame:
    if not config.families:
        raise ConfigError("experiment.families is empty")
    reports = sweep(config.families, config.n_values, workers=config.workers)
    rows = [
        [r.family.value, r.n, float(r.med), float(r.nmed), float(r.error_rate), r.s_max, r.total_inputs]
        for r in reports
    ]
    return pd.DataFrame(rows, columns=METRICS_COLUMNS)


def _check_resource_limits(config: ExperimentConfig):
    for family in config.families:
        for n in config.n_values:
            qubits = table2_row(family, n).qubits
            if qubits > MAX_DENSE_QUBITS:
                raise ResourceLimitError(
                    f"{family.value} at n={n} needs {qubits} qubits; dense simulation is limited to {MAX_DENSE_QUBITS}"
                )


def run_fidelity_cells(config: ExperimentConfig) -> List[FidelityReport]:
    """Fidelity of every (family, n, noise) cell, ordered as the config lists them."""
    if not config.families:
        raise ConfigError("experiment.families is empty")
    if not config.noise:
        raise ConfigError("experiment.noise is empty")
    _check_resource_limits(config)
    cells: List[Tuple[AdderSpec, NoiseModel]] = [
        (AdderSpec(family, n), config.noise_model(label))
        for family in config.families
        for n in config.n_values
        for label in config.noise
    ]
    logging.info(f"[Sweep] Running {len(cells)} cells")
    with ThreadPoolExecutor(max_workers=config.workers) as executor:
        return list(executor.map(lambda cell: fidelity_sweep(cell[0], cell[1], workers=1), cells))


def cmd_noise_sweep(config: ExperimentConfig) -> pd.DataFrame:
    rows = [
        [r.family.value, r.n, r.noise, r.avg_success_probability, r.toffoli_policy, r.idle_mode, r.apply_to_prep]
        for r in run_fidelity_cells(config)
    ]
    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)


def cmd_compare(config: ExperimentConfig, baseline: Optional[str] = None) -> pd.DataFrame:
    """Improvement of every family over each baseline, per noise model and width.

    Raises:
        ConfigError: If no baseline is configured or a baseline is not part of the sweep.
    """
    baselines = [parse_family(baseline)] if baseline else list(config.baselines)
    if not baselines:
        raise ConfigError("No baseline given (use --baseline or experiment.baseline)")
    for family in baselines:
        if family not in config.families:
            raise ConfigError(f"Baseline '{family.value}' is not in experiment.families")

    fidelity = {(r.family, r.n, r.noise): r.avg_success_probability for r in run_fidelity_cells(config)}
    rows = []
    for base in baselines:
        for label in config.noise:
            noise = resolve_preset(label)
            for n in config.n_values:
                base_value = fidelity[(base, n, noise)]
                for family in config.families:
                    value = fidelity[(family, n, noise)]
                    rows.append([noise, n, base.value, family.value, base_value, value, improvement_percent(base_value, value)])
    return pd.DataFrame(rows, columns=COMPARE_COLUMNS)


def _deviation_text(spec: AdderSpec) -> str:
    return "; ".join(
        f"{column}: {expected} expected, {measured} built"
        for column, (expected, measured) in depth_deviations(spec).items()
    )


def design_table(families: List[AdderFamily], n_values: List[int]) -> pd.DataFrame:
    """Closed-form design characteristics with any mismatch against the generated circuits."""
    rows = []
    for n in n_values:
        for family in families:
            row = table2_row(family, n)
            rows.append([
                family.value, n, row.sum_expr, row.carry_expr, row.qubits, row.cnot_depth,
                row.toffoli_depth, row.cnot_count, row.toffoli_count, _deviation_text(AdderSpec(family, n)),
            ])
    return pd.DataFrame(rows, columns=DESIGN_COLUMNS)


def cmd_build(family: str, n: int, options: Optional[Dict] = None) -> Tuple[str, pd.DataFrame]:
    """QASM text of one design plus its measured design-table row.

    Raises:
        ConfigError: If the family or width is invalid.
    """
    options = options or {}
    try:
        spec = AdderSpec(parse_family(family), int(n))
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid design: {e}") from e
    circuit = build(spec)
    deviations = _deviation_text(spec)
    if options.get('toffoli_policy') == ToffoliPolicy.DECOMPOSE.value and depth_profile(circuit).toffoli_count:
        circuit = decompose_toffoli(circuit)
        # The closed forms describe native Toffolis
        deviations = "not compared: Toffolis decomposed"
    profile = depth_profile(circuit)
    row = table2_row(spec.family, spec.n)
    frame = pd.DataFrame([[
        spec.family.value, spec.n, row.sum_expr, row.carry_expr, circuit.num_qubits, profile.cnot_depth,
        profile.toffoli_depth, profile.cnot_count, profile.toffoli_count, deviations,
    ]], columns=DESIGN_COLUMNS)
    logging.info(f"[Build] {summary_line(frame.iloc[0])}")
    return export_qasm(circuit), frame


def summary_line(row) -> str:
    return f"{row['family']} n={row['n']}: qubits {row['qubits']}, cnot {row['cnot_count']}, toffoli {row['toffoli_count']}"


def cmd_reference(config: ExperimentConfig, improvements: bool = False) -> pd.DataFrame:
    """Simulated 4-bit cells in both Toffoli modes next to their published values.

    With ``improvements`` the frame lists every published improvement whose two
    cells were simulated, with the simulated percentage and whether the signs agree.

    Raises:
        ConfigError: If a requested cell has no published value.
    """
    families = config.families or [family for family in AdderFamily if family in PUBLISHED_FIDELITY["thermal"]]
    noise = [resolve_preset(label) for label in config.noise] or list(PUBLISHED_FIDELITY)
    for family in families:
        for label in noise:
            if family not in PUBLISHED_FIDELITY.get(label, {}):
                raise ConfigError(f"No published fidelity for {family.value} under '{label}'")

    def model_for(label: str, policy: ToffoliPolicy) -> NoiseModel:
        return replace(config, toffoli_policy=policy.value).noise_model(label)

    cells = reference_cells(families, noise, model_for, workers=config.workers)
    outside = [cell for cell in cells if not cell.within_tolerance]
    logging.info(f"[Reference] {len(cells) - len(outside)} of {len(cells)} cells within tolerance")
    if improvements:
        rows = [
            [c.baseline.value, c.candidate.value, c.noise, c.published_pct, c.simulated_pct, c.sign_matches]
            for c in improvement_checks(cells)
        ]
        return pd.DataFrame(rows, columns=IMPROVEMENT_COLUMNS)
    rows = [
        [c.family.value, c.noise, c.published, c.native, c.decompose, c.mode.value, c.simulated, c.delta, c.tolerance, c.within_tolerance]
        for c in cells
    ]
    return pd.DataFrame(rows, columns=REFERENCE_COLUMNS)


def cmd_calibrate(config: ExperimentConfig, target: float = 0.951) -> float:
    thermal = config.noise_params.get("thermal", {})
    return calibrate_gate_time(target, float(thermal.get("t1", DEFAULT_T1)), float(thermal.get("t2", DEFAULT_T2)))


# --- rendering ------------------------------------------------------------------

PLOT_LAYOUT = {
    "metrics": ("family", "n", ["nmed", "error_rate"]),
    "noise-sweep": ("noise", "family", ["fidelity"]),
    "compare": ("noise", "candidate", ["improvement_pct"]),
}


def _plot_value(value) -> str:
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)


def to_plot_data(frame: pd.DataFrame, series: str, x: str, ys: List[str]) -> str:
    """gnuplot-style blocks, one per series value, separated by two blank lines."""
    blocks = []
    for value in dict.fromkeys(frame[series]):
        subset = frame[frame[series] == value]
        lines = [f"# {series}={value}", "# " + " ".join([x] + ys)]
        for _, row in subset.iterrows():
            lines.append(" ".join(_plot_value(row[column]) for column in [x] + ys))
        blocks.append("\n".join(lines))
    return "\n\n\n".join(blocks) + "\n"


def render(frame: pd.DataFrame, fmt: str, command: str) -> str:
    if fmt == "csv":
        return frame.to_csv(index=False, float_format="%.4f", lineterminator="\n")
    if fmt == "md":
        return frame.to_markdown(index=False, floatfmt=".4f") + "\n"
    if command not in PLOT_LAYOUT:
        raise ConfigError(f"Plot data is not available for '{command}'")
    series, x, ys = PLOT_LAYOUT[command]
    return to_plot_data(frame, series, x, ys)


def emit(text: str, out_dir: Optional[str], filename: str):
    if out_dir is None:
        sys.stdout.write(text)
        return
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, filename)
    with open(path, 'w') as file:
        file.write(text)
    logging.info(f"Wrote {path}")


def _stem(command: str, config: ExperimentConfig) -> str:
    return f"{command}-{config.preset}" if config.preset else command


def write_frame(frame: pd.DataFrame, command: str, config: ExperimentConfig):
    for fmt in config.formats:
        emit(render(frame, fmt, command), config.out_dir, f"{_stem(command, config)}.{FORMAT_EXTENSIONS[fmt]}")


# --- entry point ----------------------------------------------------------------

def parse_arguments(argv: Optional[List[str]] = None) -> argparse.Namespace:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None, help="Path to the JSON configuration file")
    common.add_argument("--preset", type=str, default=None, help=f"Named experiment ({', '.join(PRESETS)})")
    common.add_argument("--out", type=str, default=None, help="Output directory (default: stdout)")
    common.add_argument("--format", choices=FORMATS, default=None, help="Output format")
    common.add_argument("--toffoli-policy", choices=[p.value for p in ToffoliPolicy], default=None)
    common.add_argument("--idle", choices=["on", "off"], default=None, help="Idle-noise mode")
    common.add_argument("--seed", type=int, default=None, help="Reserved; exact simulation draws no samples")
    common.add_argument("--workers", type=int, default=None, help="Concurrent cells")
    common.add_argument("--debug", action="store_true", help="Enable debug mode")

    parser = argparse.ArgumentParser(description="Noise and error-metric benchmarks for quantum adders")
    subparsers = parser.add_subparsers(dest="command", required=True)
    subparsers.add_parser("metrics", parents=[common], help="Exhaustive NMED / error-rate sweep")
    subparsers.add_parser("noise-sweep", parents=[common], help="Average output probability per noise model")
    compare = subparsers.add_parser("compare", parents=[common], help="Improvement over a baseline adder")
    compare.add_argument("--baseline", type=str, default=None, help="Baseline family, e.g. cqa1")
    build_parser = subparsers.add_parser("build", parents=[common], help="Emit QASM and design characteristics")
    build_parser.add_argument("--family", type=str, default=None)
    build_parser.add_argument("--n", type=int, default=4)
    reference = subparsers.add_parser("reference", parents=[common], help="Simulated 4-bit cells against published values")
    reference.add_argument("--improvements", action="store_true", help="Report improvement signs instead of cells")
    calibrate = subparsers.add_parser("calibrate", parents=[common], help="Solve the thermal gate time")
    calibrate.add_argument("--target", type=float, default=0.951, help="AQA1 (n=4) thermal fidelity to match")
    calibrate.add_argument("--save", action="store_true", help="Write the gate time back into --config")
    return parser.parse_args(argv)


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    config_path = args.config
    if config_path is None and args.preset is None and os.path.exists("config.json"):
        config_path = "config.json"

    if args.preset:
        config = preset_config(args.preset)
        if config_path:
            from_file = load_config(config_path)
            config = replace(
                config,
                noise_params=from_file.noise_params,
                toffoli_policy=from_file.toffoli_policy,
                idle_mode=from_file.idle_mode,
                apply_to_prep=from_file.apply_to_prep,
                bitflip_joint=from_file.bitflip_joint,
                workers=from_file.workers,
            )
    elif config_path:
        config = load_config(config_path)
    else:
        config = ExperimentConfig()

    if args.toffoli_policy:
        config.toffoli_policy = args.toffoli_policy
    if args.idle:
        config.idle_mode = args.idle == "on"
    if args.out:
        config.out_dir = args.out
    if args.format:
        config.formats = [args.format]
    if args.workers:
        config.workers = args.workers
    validate_config(config, config_path or args.preset or "<defaults>")
    return config


def _save_gate_time(config_path: str, gate_time: float):
    with open(config_path, 'r') as file:
        raw = json.load(file)
    thermal = raw.setdefault('noise', {}).setdefault('thermal', {})
    thermal['gate_time'] = gate_time
    # The gate time was solved without a readout window
    thermal.pop('measure_time', None)
    with open(config_path, 'w') as file:
        json.dump(raw, file, indent=2)
        file.write("\n")
    logging.info(f"[Calibrate] Stored gate_time={gate_time:.6e} in {config_path}")


def run_command(args: argparse.Namespace, config: ExperimentConfig) -> int:
    """Executes one subcommand and returns the number of rows produced."""
    if args.seed is not None:
        logging.debug(f"Seed {args.seed} ignored: probabilities are computed exactly")

    if args.command == "metrics":
        frame = cmd_metrics(config)
    elif args.command == "noise-sweep":
        frame = cmd_noise_sweep(config)
    elif args.command == "compare":
        frame = cmd_compare(config, args.baseline)
    elif args.command == "reference":
        frame = cmd_reference(config, args.improvements)
    elif args.command == "build":
        if args.family is None:
            if config.preset is None:
                raise ConfigError("build needs --family or --preset paper-table2")
            frame = design_table(config.families, config.n_values)
        else:
            qasm, frame = cmd_build(args.family, args.n, {"toffoli_policy": config.toffoli_policy})
            emit(qasm, config.out_dir, f"build-{frame.iloc[0]['family']}-{args.n}.qasm")
    else:
        gate_time = cmd_calibrate(config, args.target)
        emit(f"gate_time={gate_time:.6e}\n", None, "")
        if args.save:
            if not args.config:
                raise ConfigError("--save needs --config")
            _save_gate_time(args.config, gate_time)
        return 1

    write_frame(frame, args.command, config)
    return len(frame)


def main(argv: Optional[List[str]] = None) -> int:
    args = parse_arguments(argv)
    logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')
    if args.debug:
        logging.getLogger().setLevel(logging.DEBUG)
        logging.debug("Debug mode enabled")
    setup_run_logger()

    started = time.time()
    rows, error, status = 0, None, EXIT_OK
    try:
        config = resolve_config(args)
        rows = run_command(args, config)
    except ResourceLimitError as e:
        error, status = str(e), EXIT_RESOURCE_LIMIT
        logging.error(f"Resource limit: {e}")
    except ValueError as e:
        # ConfigError and invalid library arguments
        error, status = str(e), EXIT_CONFIG_ERROR
        logging.error(f"[Config] {e}")
    except Exception as e:
        error, status = str(e), EXIT_FAILURE
        logging.error(f"Command '{args.command}' failed: {e}", exc_info=True)
    finally:
        log_run(args.command, args.preset, rows, int((time.time() - started) * 1000), error)
    return status


if __name__ == '__main__':
    sys.exit(main())
