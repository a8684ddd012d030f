#!/usr/bin/env python3
"""
Command-line surface

    fit        fit a power or joint law to experiment records
    frontier   Pareto frontier, knee and omega0 of experiment records
    budget     budget-constrained (model, data) allocation from two joint laws
    simulate   one simlab training run

Exit status: 0 on success, 1 on domain/parse errors, 2 on usage errors.
"""

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from analysis.frontier import (PerfPoint, estimate_omega0, extract_non_dominated,
                               inverse_normalize, nondominated_fronts)
from pipeline.files import atomic_write_text, load_config
from pipeline.law_store import LawDocument, load_law, published_document, persist_law
from pipeline.records import append_records, load_records, record_from_run, records_frame
from pipeline.tsv import write_tsv
from scaling.budget import DEFAULT_GRID, CostModel, allocate, budget_sweep
from scaling.errors import InsufficientDataError, SchemaError, ScalingError
from scaling.fitting import FitPoint, fit_joint_law, fit_power_law
from simlab.task import TaskConfig, generate_task
from simlab.trainer import STRATEGIES, TrainConfig, pilot_omega0, train

logger = logging.getLogger(__name__)

ASPECT_COLUMNS = {
    "effectiveness": "ce_effectiveness",
    "ood": "ce_ood",
    "adversarial": "ce_adversarial",
    "robustness": "robustness",
}
PRESET_PREFIX = "preset:"


def _emit_json(payload: Dict[str, Any], output: Optional[str]):
    text = json.dumps(payload, indent=2) + "\n"
    if output:
        atomic_write_text(output, text)
        logger.info("✓ Saved %s", output)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# fit
# ---------------------------------------------------------------------------

def fit_records(records, variable: str, aspect: str, strategy: Optional[str] = None):
    """
    Fit one law to records

    Model-size fits use the records at the largest data size, data-size fits
    the records at the largest model size; repeated sizes are averaged.
    """
    frame = records_frame(records)
    if strategy is not None:
        frame = frame[frame["strategy"] == strategy]
    frame = frame.assign(loss=frame[ASPECT_COLUMNS[aspect]]).dropna(subset=["loss"])
    if frame.empty:
        raise InsufficientDataError(f"no records carry a {aspect} loss")

    if variable == "joint":
        grouped = frame.groupby(["model_size", "data_size"], sort=True)["loss"].mean()
        return fit_joint_law([(f, d, loss) for (f, d), loss in grouped.items()])

    size_column, other = ("model_size", "data_size") if variable == "model" \
        else ("data_size", "model_size")
    sliced = frame[frame[other] == frame[other].max()]
    grouped = sliced.groupby(size_column, sort=True)["loss"].mean()
    return fit_power_law([FitPoint(float(s), float(loss)) for s, loss in grouped.items()])


def cmd_fit(args) -> int:
    records = load_records(args.input)
    report = fit_records(records, args.variable, args.aspect, args.strategy)
    provenance = args.provenance or f"fit of {Path(args.input).name}" + \
        (f" (strategy {args.strategy})" if args.strategy else "")
    document = LawDocument.from_fit(report, args.variable, args.aspect, provenance)
    if args.output:
        persist_law(document, args.output)
        logger.info("✓ Saved %s (R^2=%.5f)", args.output, report.r_squared)
    else:
        sys.stdout.write(document.to_json())
    return 0


# ---------------------------------------------------------------------------
# frontier
# ---------------------------------------------------------------------------

def frontier_report(records) -> Tuple[Dict[str, Any], List[PerfPoint]]:
    points = [PerfPoint(r.robustness, r.ce_effectiveness, r.label) for r in records]
    frontier = extract_non_dominated(points)
    estimate = estimate_omega0(frontier)
    report = {
        "points": len(points),
        "frontier": [
            {"label": p.label, "robustness": p.robustness, "effectiveness": p.effectiveness}
            for p in frontier
        ],
        "knee": {
            "label": estimate.knee.label,
            "robustness": estimate.knee.robustness,
            "effectiveness": estimate.knee.effectiveness,
        },
        "omega0": estimate.omega0,
        "omega0_unclamped": estimate.ratio,
        "fronts": [[points[i].label for i in front] for front in nondominated_fronts(points)],
    }
    return report, points


def cmd_frontier(args) -> int:
    report, points = frontier_report(load_records(args.input))
    if args.emit_normalized:
        write_tsv(args.emit_normalized, ["label", "x", "y"],
                  [(p.label, p.x, p.y) for p in inverse_normalize(points)])
        logger.info("✓ Saved %s", args.emit_normalized)
    _emit_json(report, args.report)
    return 0


# ---------------------------------------------------------------------------
# budget
# ---------------------------------------------------------------------------

def load_law_argument(value: str) -> LawDocument:
    """A law document path, or preset:<key> for a published row"""
    if value.startswith(PRESET_PREFIX):
        return published_document(value[len(PRESET_PREFIX):])
    return load_law(value)


def _joint(document: LawDocument, flag: str):
    if document.kind != "joint":
        raise SchemaError(f"{flag} needs a joint law, got a {document.kind} law")
    return document.to_law()


def cost_model_from_args(args) -> CostModel:
    settings: Dict[str, Any] = {}
    if args.config:
        settings.update(load_config(args.config).get("cost_model", {}))
    for name in ("z_data", "z_train", "z_infer", "data_unit", "model_unit"):
        value = getattr(args, name)
        if value is not None:
            settings[name] = value
    return CostModel.from_config(settings)


def cmd_budget(args) -> int:
    robustness_law = _joint(load_law_argument(args.robustness_law), "--robustness-law")
    effectiveness_law = _joint(load_law_argument(args.effectiveness_law), "--effectiveness-law")
    cm = cost_model_from_args(args)
    allocation = allocate(args.budget, robustness_law, effectiveness_law, cm,
                          args.weight, args.grid)
    if args.sweep:
        sweep = budget_sweep(args.budget, robustness_law, effectiveness_law, cm, args.grid)
        write_tsv(args.sweep, ["model_size", "robustness_ce", "effectiveness_ce", "data_size"],
                  [(p.model_size, p.predicted_robustness, p.predicted_effectiveness, p.data_size)
                   for p in sweep])
        logger.info("✓ Saved %s", args.sweep)
    _emit_json(allocation.to_dict(), args.output)
    return 0


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

TASK_FLAGS = {
    "train_pairs": "train_pairs",
    "encode_dim": "encode_dim",
    "ambient_dim": "ambient_dim",
    "positive_noise": "positive_noise",
    "spectrum_decay": "doc_spectrum_decay",
    "test_queries": "test_queries",
    "eval_negatives": "eval_negatives",
    "seed": "seed",
}
TRAIN_FLAGS = ("strategy", "steps", "epochs", "batch", "negatives", "strategy_mix", "omega0",
               "seed")


def simulate_settings(args) -> Tuple[Dict[str, Any], Dict[str, Any]]:
    """Task and train settings: config file sections, then flags"""
    task: Dict[str, Any] = {}
    training: Dict[str, Any] = {}
    if args.config:
        config = load_config(args.config)
        section = config.get("simulate") or config.get("scenarios", {}).get("strategy_sweep", {})
        task.update(section.get("task", {}))
        training.update(section.get("train", {}))
    for flag, name in TASK_FLAGS.items():
        if getattr(args, flag) is not None:
            task[name] = getattr(args, flag)
    for name in TRAIN_FLAGS:
        if getattr(args, name) is not None:
            training[name] = getattr(args, name)
    if args.steps is not None and args.epochs is None:
        # an explicit step count replaces an epoch budget from the config
        training.pop("epochs", None)
    return task, training


def cmd_simulate(args) -> int:
    task_settings, train_settings = simulate_settings(args)
    task = generate_task(TaskConfig.from_config(task_settings))
    config = TrainConfig.from_config(train_settings)
    if config.strategy == "pareto" and "omega0" not in train_settings:
        estimate = pilot_omega0(task, config)
        config = replace(config, omega0=estimate.omega0,
                         omega_target=config.omega_target or estimate.ratio)
        logger.info("Pilot omega0 %.3f (ratio %.4f)", estimate.omega0, estimate.ratio)
    result = train(task, config)
    if args.append:
        append_records(args.append, [record_from_run(result)])
        logger.info("✓ Appended record to %s", args.append)
    _emit_json(result.to_dict(), args.output)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scaling-cli",
        description="Scaling laws for retrieval robustness and effectiveness")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument('-v', '--verbose', action='store_true', help='Debug logging')
    verbosity.add_argument('-q', '--quiet', action='store_true', help='Warnings only')
    sub = parser.add_subparsers(dest='command', required=True)

    fit = sub.add_parser('fit', help='Fit a scaling law to experiment records')
    fit.add_argument('--input', required=True, help='Experiment-record CSV')
    fit.add_argument('--variable', required=True, choices=['model', 'data', 'joint'])
    fit.add_argument('--aspect', required=True, choices=sorted(ASPECT_COLUMNS))
    fit.add_argument('--strategy', help='Only use records of this strategy')
    fit.add_argument('--provenance', help='Provenance text stored with the law')
    fit.add_argument('--output', help='Law document path (stdout if omitted)')
    fit.set_defaults(handler=cmd_fit)

    frontier = sub.add_parser('frontier', help='Pareto frontier of experiment records')
    frontier.add_argument('--input', required=True, help='Experiment-record CSV')
    frontier.add_argument('--emit-normalized', help='TSV of inverse-normalized points')
    frontier.add_argument('--report', help='Report JSON path (stdout if omitted)')
    frontier.set_defaults(handler=cmd_frontier)

    budget = sub.add_parser('budget', help='Allocate a dollar budget')
    budget.add_argument('--robustness-law', required=True,
                        help='Joint law document, or preset:<key>')
    budget.add_argument('--effectiveness-law', required=True,
                        help='Joint law document, or preset:<key>')
    budget.add_argument('--budget', required=True, type=float, help='Dollars')
    budget.add_argument('--weight', type=float, default=0.5, help='Robustness weight')
    budget.add_argument('--grid', type=int, default=DEFAULT_GRID, help='Model-size grid points')
    budget.add_argument('--sweep', help='TSV of predicted losses along model size')
    budget.add_argument('--config', help='JSON config with a cost_model section')
    budget.add_argument('--z-data', dest='z_data', type=float)
    budget.add_argument('--z-train', dest='z_train', type=float)
    budget.add_argument('--z-infer', dest='z_infer', type=float)
    budget.add_argument('--data-unit', dest='data_unit', type=float)
    budget.add_argument('--model-unit', dest='model_unit', type=float)
    budget.add_argument('--output', help='Allocation JSON path (stdout if omitted)')
    budget.set_defaults(handler=cmd_budget)

    simulate = sub.add_parser('simulate', help='Run one simlab training run')
    simulate.add_argument('--strategy', choices=STRATEGIES)
    simulate.add_argument('--train-pairs', dest='train_pairs', type=int)
    simulate.add_argument('--encode-dim', dest='encode_dim', type=int)
    simulate.add_argument('--ambient-dim', dest='ambient_dim', type=int)
    simulate.add_argument('--seed', type=int, required=True)
    simulate.add_argument('--steps', type=int)
    simulate.add_argument('--epochs', type=float, help='Passes over the training pairs')
    simulate.add_argument('--batch', type=int)
    simulate.add_argument('--negatives', type=int)
    simulate.add_argument('--strategy-mix', dest='strategy_mix', type=float)
    simulate.add_argument('--omega0', type=float, help='Skip the pilot and use this omega0')
    simulate.add_argument('--positive-noise', dest='positive_noise', type=float)
    simulate.add_argument('--spectrum-decay', dest='spectrum_decay', type=float)
    simulate.add_argument('--test-queries', dest='test_queries', type=int)
    simulate.add_argument('--eval-negatives', dest='eval_negatives', type=int)
    simulate.add_argument('--config', help='JSON config with task/train sections')
    simulate.add_argument('--append', help='Experiment-record CSV to append to')
    simulate.add_argument('--output', help='RunResult JSON path (stdout if omitted)')
    simulate.set_defaults(handler=cmd_simulate)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format='%(message)s', stream=sys.stderr, force=True)

    try:
        return args.handler(args)
    except (ScalingError, OSError, json.JSONDecodeError) as e:
        logger.error("✗ %s", e)
        return 1


if __name__ == '__main__':
    sys.exit(main())
