"""Command-line front end: batch risk assessments over JSON inputs.

Exit codes: 0 success, 1 usage error, 2 model/scenario semantic error,
3 tree explosion.  All diagnostics go to standard error; reports are
deterministic JSON (byte-identical for identical inputs and seeds).
"""

from __future__ import annotations

import argparse
import os
import sys
from fractions import Fraction

from . import montecarlo
from .adversarial import minimax_risk
from .errors import ExplosionLimitError, RiskEngineError
from .model import Scenario, behavior_of, load_model, load_scenario
from .powergrid import ADVERSARIAL, STOCHASTIC, compile_grid, load_grid
from .rational import parse_duration
from .risk import additive_criticality, aggregate_risk
from .tree import build_tree, dump_tree

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_SEMANTIC = 2
EXIT_EXPLOSION = 3


class _Parser(argparse.ArgumentParser):
    # usage problems exit 1, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="riskdevs", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_inputs(p, scenario_help):
        p.add_argument("--model", metavar="PATH", help="tabular model JSON file")
        p.add_argument("--grid", metavar="PATH", help="power grid JSON file")
        p.add_argument("--scenario", metavar="PATH", help=scenario_help)
        p.add_argument("--horizon", metavar="RATIONAL", help="override the scenario horizon")

    assess = sub.add_parser("assess", help="compute a risk report")
    add_inputs(assess, "event schedule JSON file (optional for grids)")
    assess.add_argument(
        "--mode", choices=("exact", "minimax", "montecarlo"), default="exact"
    )
    assess.add_argument("--samples", type=int, help="sample count (montecarlo)")
    assess.add_argument("--seed", type=int, help="64-bit RNG seed (montecarlo)")
    assess.add_argument("--output", metavar="PATH", help="report destination (default stdout)")
    assess.add_argument("--top-k", type=int, default=20, help="top contributors to keep")
    assess.add_argument("--tree-dump", metavar="PATH", help="also write the evolution tree")
    assess.add_argument("--explosion-limit", type=int, default=None)
    assess.add_argument("--zero-delay-limit", type=int, default=None)
    assess.add_argument(
        "--threads",
        type=int,
        default=None,
        help="worker cap (default: RISKDEVS_THREADS or 1)",
    )
    assess.add_argument(
        "--attack-mode",
        choices=(STOCHASTIC, ADVERSARIAL),
        default=None,
        help="grid attack handling (default: adversarial for minimax, else stochastic)",
    )

    validate = sub.add_parser("validate", help="check inputs without running")
    add_inputs(validate, "event schedule JSON file")

    dump = sub.add_parser("dump-tree", help="print the evolution tree")
    add_inputs(dump, "event schedule JSON file (optional for grids)")
    dump.add_argument("--output", metavar="PATH", help="dump destination (default stdout)")
    dump.add_argument("--explosion-limit", type=int, default=None)
    dump.add_argument("--zero-delay-limit", type=int, default=None)
    dump.add_argument(
        "--attack-mode", choices=(STOCHASTIC, ADVERSARIAL), default=STOCHASTIC
    )
    return parser


def _read_file(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return handle.read()
    except OSError as exc:
        raise RiskEngineError(f"cannot read {path}: {exc.strerror}") from None


def _check_scenario_events(model, scenario) -> list:
    known = set(model.events)
    problems = []
    for i, occ in enumerate(scenario.occasions):
        for j, (events, _) in enumerate(occ.alternatives):
            unknown = set(events) - known
            if unknown:
                problems.append(
                    f"occasions[{i}].alternatives[{j}]: events {sorted(unknown)} "
                    "not declared by the model"
                )
    return problems


def _load_inputs(args, parser):
    """Returns (behavior, scenario, criticality) from CLI arguments."""
    if bool(args.model) == bool(args.grid):
        parser.error("exactly one of --model or --grid is required")

    horizon = None
    if args.horizon is not None:
        horizon = parse_duration(args.horizon, path="--horizon")
        if horizon == float("inf"):
            parser.error("--horizon must be finite")

    if args.model:
        model = load_model(_read_file(args.model))
        if not args.scenario:
            parser.error("--scenario is required with --model")
        scenario = load_scenario(_read_file(args.scenario))
        problems = _check_scenario_events(model, scenario)
        if problems:
            raise RiskEngineError("; ".join(f"{args.scenario}: {p}" for p in problems))
        behavior = behavior_of(model)
        criticality = additive_criticality(behavior)
        if horizon is not None:
            scenario = scenario.with_horizon(horizon)
        return behavior, scenario, criticality

    spec = load_grid(_read_file(args.grid))
    mode = getattr(args, "mode", None)
    attack_mode = args.attack_mode
    if attack_mode is None:
        attack_mode = ADVERSARIAL if mode == "minimax" else STOCHASTIC
    behavior, scenario_for, criticality = compile_grid(spec, attack_mode=attack_mode)
    if args.scenario:
        scenario = load_scenario(_read_file(args.scenario))
        if horizon is not None:
            scenario = scenario.with_horizon(horizon)
    else:
        if horizon is None:
            parser.error("grids need --scenario or --horizon")
        scenario = scenario_for(horizon)
    return behavior, scenario, criticality


def _tree_limits(args) -> dict:
    limits = {}
    if getattr(args, "explosion_limit", None) is not None:
        limits["node_limit"] = args.explosion_limit
    if getattr(args, "zero_delay_limit", None) is not None:
        limits["zero_delay_limit"] = args.zero_delay_limit
    return limits


def _write(text: str, path) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def _grid_metadata(report, behavior):
    """Attach the routing-policy note and pruning diagnostics to a report."""
    from dataclasses import replace

    from .powergrid import GridBehavior

    if not isinstance(behavior, GridBehavior):
        return report
    extra = (
        ("flow_solver", "greedy-shortest-path, load-ratio then lexicographic ties"),
        ("attack_mode", behavior.attack_mode),
        ("pruned_mass_max", str(behavior.pruned_mass_max)),
    )
    return replace(report, metadata=report.metadata + extra)


def _cmd_assess(args, parser) -> int:
    behavior, scenario, criticality = _load_inputs(args, parser)

    if args.mode == "montecarlo":
        if args.samples is None or args.seed is None:
            parser.error("--samples and --seed are required with --mode montecarlo")
        if args.tree_dump:
            parser.error("--tree-dump is not available with --mode montecarlo")
        threads = args.threads
        if threads is None:
            threads = int(os.environ.get("RISKDEVS_THREADS", "1"))
        config = montecarlo.SamplerConfig(
            sample_count=args.samples, seed=args.seed, workers=max(1, threads)
        )
        report = montecarlo.estimate_risk(
            behavior, behavior.initial_state, scenario, criticality, config
        )
    else:
        language = build_tree(behavior, behavior.initial_state, scenario, **_tree_limits(args))
        if args.tree_dump:
            _write(dump_tree(language), args.tree_dump)
        if args.mode == "exact":
            report = aggregate_risk(language, criticality, top_k=args.top_k)
        else:
            report = minimax_risk(language, criticality).to_report(language, criticality)

    _write(_grid_metadata(report, behavior).to_json(), args.output)
    return EXIT_OK


def _cmd_validate(args, parser) -> int:
    diagnostics = []

    def check(label, path, loader):
        if not path:
            return None
        try:
            return loader(_read_file(path))
        except RiskEngineError as exc:
            diagnostics.append(f"{label} {path}: [{exc.code}] {exc}")
            return None

    if args.model and args.grid:
        parser.error("give either --model or --grid, not both")
    if not (args.model or args.grid or args.scenario):
        parser.error("nothing to validate")
    model = check("model", args.model, load_model)
    grid = check("grid", args.grid, load_grid)
    scenario = check("scenario", args.scenario, load_scenario)
    if model is not None and scenario is not None:
        diagnostics.extend(
            f"scenario {args.scenario}: [SEMANTIC_ERROR] {p}"
            for p in _check_scenario_events(model, scenario)
        )
    del grid
    if diagnostics:
        for line in diagnostics:
            sys.stderr.write(line + "\n")
        return EXIT_SEMANTIC
    return EXIT_OK


def _cmd_dump_tree(args, parser) -> int:
    args.mode = None
    behavior, scenario, _ = _load_inputs(args, parser)
    language = build_tree(behavior, behavior.initial_state, scenario, **_tree_limits(args))
    _write(dump_tree(language), args.output)
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "assess":
            return _cmd_assess(args, parser)
        if args.command == "validate":
            return _cmd_validate(args, parser)
        return _cmd_dump_tree(args, parser)
    except ExplosionLimitError as exc:
        sys.stderr.write(f"riskdevs: error: [{exc.code}] {exc}\n")
        return EXIT_EXPLOSION
    except RiskEngineError as exc:
        sys.stderr.write(f"riskdevs: error: [{exc.code}] {exc}\n")
        return EXIT_SEMANTIC


if __name__ == "__main__":
    sys.exit(main())
