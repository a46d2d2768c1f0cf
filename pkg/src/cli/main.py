import os
import sys
import argparse
import logging
from datetime import datetime
from typing import Any, Dict

import pandas as pd
from dotenv import load_dotenv

from configs.default_config import DEFAULT_CONFIG
from src.core.config import (ExperimentConfig, build_config, default_key_index, default_sections, load_config_file,
                             merge_overrides)
from src.core.errors import ValidationError
from src.core.utils import derive_seed
from src.discovery.edge_list import write_edge_list
from src.harness.evaluation import evaluate_add
from src.harness.presets import METHOD_LABELS, PRESETS, run_preset
from src.harness.report import (ResultRow, read_curves_csv, read_results_csv, report, write_curves_csv,
                                write_curves_svg, write_results_csv)
from src.harness.trainer import ground_truth_dag, train
from src.qnet.network import load_checkpoint, network_layout, save_checkpoint
from src.sources.discovered import DiscoveredSource
from src.streams.csv_io import load_csv_streams, save_csv_streams
from src.streams.generator import ShiftSpec, generate_streams, simulate_in_control
from src.theory.checks import run_verification_suite, write_bound_reports


# Load environment variables from .env file
load_dotenv()

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"


def _config_flags() -> argparse.ArgumentParser:
    """Parent parser with --config, output and logging flags plus one --key flag per DEFAULT_CONFIG entry."""
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", type=str, help="INI config file with [experiment], [net], [monitor], [discovery] and [reward] sections.")
    parent.add_argument("--output_dir", type=str, default=os.getenv("CAUSALDQ_OUTPUT_DIR", "outputs"), help="Directory receiving every file written (defaults to $CAUSALDQ_OUTPUT_DIR or 'outputs').")
    parent.add_argument("--log_level", type=str, default=os.getenv("CAUSALDQ_LOG_LEVEL", "INFO"), help="Logging level (defaults to $CAUSALDQ_LOG_LEVEL or INFO).")
    for section, values in DEFAULT_CONFIG.items():
        group = parent.add_argument_group(f"[{section}] settings")
        for key, default in values.items():
            group.add_argument(f"--{key}", type=str, default=None, help=f"Overrides {section}.{key} (default {default}).")
    return parent


def build_parser() -> argparse.ArgumentParser:
    parent = _config_flags()
    parser = argparse.ArgumentParser(description="Causal DQ: sensor selection for anomaly detection on causally linked data streams.")
    commands = parser.add_subparsers(dest="command", required=True)

    generate = commands.add_parser("generate", parents=[parent], help="Simulate a shifted stream batch and write it as CSV.")
    generate.add_argument("--out", type=str, default="streams.csv", help="File name of the stream CSV inside output_dir.")

    discover = commands.add_parser("discover", parents=[parent], help="Run causal discovery and write the edge list and graph metrics.")
    discover.add_argument("--data", type=str, help="Stream CSV to search; a simulated in-control window is used when omitted.")
    discover.add_argument("--rows", type=int, default=2000, help="Rows of the simulated window (defaults to 2000).")
    discover.add_argument("--first_col", type=int, default=1, help="First CSV column to read, 1-based.")
    discover.add_argument("--last_col", type=int, help="Last CSV column to read, 1-based (defaults to the last column).")

    commands.add_parser("train", parents=[parent], help="Train an agent; writes checkpoint.npz and the reward curve.")

    evaluate = commands.add_parser("eval", parents=[parent], help="Evaluate a checkpoint; writes eval.csv.")
    evaluate.add_argument("--checkpoint", type=str, help="Checkpoint to evaluate (defaults to output_dir/checkpoint.npz).")

    preset = commands.add_parser("preset", parents=[parent], help="Run a named experiment grid.")
    preset.add_argument("name", type=str, help=f"Preset name, one of: {', '.join(sorted(PRESETS))}")

    verify = commands.add_parser("verify", parents=[parent], help="Run the numerical bound checks on random toy MDPs.")
    verify.add_argument("--n_mdps", type=int, default=20, help="Number of random toy MDPs (defaults to 20).")
    verify.add_argument("--contraction_trials", type=int, default=1000, help="Random Q pairs per MDP (defaults to 1000).")
    verify.add_argument("--t_max", type=int, default=200, help="Value iteration sweeps of the error decay check (defaults to 200).")
    verify.add_argument("--trials", type=int, default=200, help="Monte-Carlo trials of the finite-time check (defaults to 200).")

    combine = commands.add_parser("report", parents=[parent], help="Merge result CSVs and redraw reward curves.")
    combine.add_argument("--results", type=str, nargs="+", required=True, help="Result CSV files to merge.")
    combine.add_argument("--curves", type=str, nargs="*", default=[], help="Reward curve CSV files to merge.")
    combine.add_argument("--prefix", type=str, default="report", help="Base name of the merged files.")
    return parser


def _file_sections(args) -> Dict[str, Dict[str, Any]]:
    return load_config_file(args.config) if args.config else {}


def _cli_overrides(args) -> Dict[str, Any]:
    return {key: getattr(args, key) for key in default_key_index() if getattr(args, key) is not None}


def resolve_config(args) -> ExperimentConfig:
    """defaults < config file < command-line flags."""
    sections = default_sections()
    for section, values in _file_sections(args).items():
        sections[section].update(values)
    return build_config(merge_overrides(sections, _cli_overrides(args)))


def _method_label(cfg: ExperimentConfig) -> str:
    return METHOD_LABELS["causal" if cfg.causal else "non_causal"]


def run_generate(args) -> None:
    cfg = resolve_config(args)
    dag = ground_truth_dag(cfg)
    spec = ShiftSpec.first_k(cfg.k, cfg.pattern, cfg.delta_test, cfg.eval_onset, cfg.horizon, cfg.noise_sigma)
    batch = generate_streams(dag, spec, cfg.horizon, derive_seed(cfg.seed, "generate"))
    save_csv_streams(batch, os.path.join(args.output_dir, args.out))
    write_edge_list(os.path.join(args.output_dir, "truth_edges.txt"), dag.graph.to_cpdag(), dag.weights)


def run_discover(args) -> None:
    cfg = resolve_config(args)
    if args.data:
        data = load_csv_streams(args.data, args.first_col, args.last_col).values
        truth = None
    else:
        truth = ground_truth_dag(cfg)
        data = simulate_in_control(truth, args.rows, cfg.noise_sigma, derive_seed(cfg.seed, "discover"))
    disc = cfg.discovery
    source = DiscoveredSource(disc.alpha_sig, disc.max_cond, discovery_scope="all")
    estimate = source.estimate(data, range(data.shape[1]), truth)
    write_edge_list(os.path.join(args.output_dir, "edges.txt"), estimate.cpdag, estimate.cpe.eta)
    if truth is None:
        logging.info("No ground truth for CSV input; graph metrics skipped")
        return
    metrics = estimate.metrics(truth.graph)
    path = os.path.join(args.output_dir, "discovery_metrics.csv")
    pd.DataFrame([{"shd": metrics.shd, "tpr": metrics.tpr, "fdr": metrics.fdr,
                   "true_positives": metrics.true_positives, "false_positives": metrics.false_positives,
                   "false_negatives": metrics.false_negatives}]).to_csv(path, index=False, float_format="%.17g")
    logging.info(f"Discovery: shd={metrics.shd}, tpr={metrics.tpr:.3f}, fdr={metrics.fdr}; wrote {path}")


def run_train(args) -> None:
    cfg = resolve_config(args)
    result = train(cfg)
    save_checkpoint(os.path.join(args.output_dir, "checkpoint.npz"), result.params)
    if len(result.curve):
        curves = {_method_label(cfg): result.curve.values}
        write_curves_csv(curves, os.path.join(args.output_dir, "curve.csv"))
        write_curves_svg(curves, os.path.join(args.output_dir, "curve.svg"))
        logging.info(f"Last-50 mean reward {result.curve.tail_mean():.3f}, plateau at episode "
                     f"{result.curve.plateau_episode()}")


def run_eval(args) -> None:
    cfg = resolve_config(args)
    path = args.checkpoint or os.path.join(args.output_dir, "checkpoint.npz")
    params = load_checkpoint(path)
    expected = network_layout(cfg.p, cfg.net.hidden)
    if params.layout[0] != expected[0] or params.layout[-1] != expected[-1]:
        raise ValidationError(f"Checkpoint layout {params.layout} does not fit p={cfg.p}")
    add = evaluate_add(params, cfg)
    row = ResultRow(method=_method_label(cfg), p=cfg.p, m=cfg.m, delta=cfg.delta_test, sigma=cfg.noise_sigma,
                    mean_add=add.mean_add, stderr=add.stderr, false_alarm_rate=add.false_alarm_rate,
                    seed_count=add.replications)
    write_results_csv([row], os.path.join(args.output_dir, "eval.csv"))


def run_preset_command(args) -> None:
    run_preset(args.name, args.output_dir, _file_sections(args), _cli_overrides(args))


def run_verify(args) -> None:
    cfg = resolve_config(args)
    reports = run_verification_suite(n_mdps=args.n_mdps, seed=cfg.seed, contraction_trials=args.contraction_trials,
                                     t_max=args.t_max, finite_trials=args.trials)
    write_bound_reports(reports, os.path.join(args.output_dir, "verify.csv"))
    failed = [r.name for r in reports if not r.passed]
    if failed:
        raise RuntimeError(f"Bound checks failed: {', '.join(failed)}")
    logging.info(f"All {len(reports)} bound checks passed")


def run_report(args) -> None:
    rows = [row for path in args.results for row in read_results_csv(path)]
    curves: Dict[str, list] = {}
    for path in args.curves:
        curves.update(read_curves_csv(path))
    report(rows, curves, args.output_dir, prefix=args.prefix)


COMMANDS = {
    "generate": run_generate,
    "discover": run_discover,
    "train": run_train,
    "eval": run_eval,
    "preset": run_preset_command,
    "verify": run_verify,
    "report": run_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    # Create the output directory if it does not exist
    try:
        os.makedirs(args.output_dir, exist_ok=True)
    except OSError as e:
        print(f"Cannot create output directory {args.output_dir}: {e}", file=sys.stderr)
        return 1

    # Construct the log file path within the output directory
    log_file_name = os.path.join(args.output_dir, f"causal_dq_{datetime.now().strftime('%Y%m%d_%H%M%S')}.log")
    level = getattr(logging, str(args.log_level).upper(), logging.INFO)
    logging.basicConfig(level=level, format=LOG_FORMAT, force=True,
                        handlers=[
                            logging.FileHandler(log_file_name),
                            logging.StreamHandler()
                        ])

    try:
        COMMANDS[args.command](args)
    except ValidationError as e:
        logging.error(e)
        return 1
    except Exception as e:
        logging.exception(e)
        return 2
    finally:
        for handler in logging.getLogger().handlers:
            handler.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
