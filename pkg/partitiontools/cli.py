"""
Command line entry point: ``partitiontools {landscape,partition,diagnose,oracle} --config FILE``.

Exit codes: 0 ok, 2 format error or unreadable/unwritable file, 3 precondition error, 4 budget exceeded,
5 invariant breach or solver non-convergence.
"""
import argparse
import logging
import sys
from typing import Callable, Dict, List, Optional, Tuple

from .diagnostics import full_report
from .energy import total_energy
from .exceptions import FormatError, InvariantError, PartitionToolsError
from .file_storage import ArtifactWriter
from .grid import ScalarField, constant_field
from .landscape import build_weight, solve_landscape
from .load import RunConfig, load_config
from .optimizer import minimize
from .oracle import brute_force_min, gap_report
from .parser import (format_breakdown, format_field, format_key_values, format_labels, format_mask, format_pgm,
                     format_report, format_trace, read_field, read_labels)

logger = logging.getLogger(__name__)


def _configure_logging(verbose: bool):
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO,
                        format="%(asctime)s %(name)s %(levelname)s: %(message)s", stream=sys.stderr)


def _landscape(config: RunConfig):
    grid = config.grid
    potential = read_field(config.potential, grid=grid) if config.potential else constant_field(grid, 0.0)
    return solve_landscape(grid, potential, tol=config.solver_tol, max_iter=config.solver_max_iter,
                           return_info=True)


def _weight(config: RunConfig) -> Tuple[ScalarField, Optional[ScalarField]]:
    """Interface weight a, and the landscape function w when the weight is built from it"""
    if config.weight_source == "field":
        return build_weight(read_field(config.weight_field, grid=config.grid), config.weight_spec), None
    w, _ = _landscape(config)
    return build_weight(w, config.weight_spec), w


def cmd_landscape(config: RunConfig, args: argparse.Namespace) -> List[str]:
    w, info = _landscape(config)
    a = build_weight(w, config.weight_spec)
    print(f"residual={info.residual:.6e} iterations={info.iterations}")
    with ArtifactWriter(config.out) as writer:
        writer.write_text("w.field", format_field(w))
        writer.write_text("weight.field", format_field(a))
        if not config.grid.mask.all():
            writer.write_text("mask.txt", format_mask(config.grid))
        writer.write_text("landscape.txt", format_key_values({
            "iterations": info.iterations,
            "residual": info.residual,
            "w_max": float(w.domain_values().max()),
        }))
    return writer.published


def cmd_partition(config: RunConfig, args: argparse.Namespace) -> List[str]:
    a, w = _weight(config)
    spec = config.energy_spec(w)
    p, trace = minimize(config.grid, config.n_labels, a, spec, config.optimizer)
    if config.optimizer.temperature is None and not trace.is_non_increasing():
        raise InvariantError("Energy trace increased without annealing")
    breakdown = total_energy(p, a, spec)
    print(f"J={breakdown.total:.17g} F={breakdown.interface_term:.17g} G={breakdown.bulk_term:.17g}")
    with ArtifactWriter(config.out) as writer:
        writer.write_text("labels.txt", format_labels(p))
        writer.write_text("trace.csv", format_trace(trace))
        writer.write_text("energy.txt", format_breakdown(breakdown))
        if config.export_pgm:
            writer.write_text("labels.pgm", format_pgm(p))
    return writer.published


def cmd_diagnose(config: RunConfig, args: argparse.Namespace) -> List[str]:
    p = read_labels(args.labels, config.grid)
    a, w = _weight(config)
    report = full_report(p, a, config.energy_spec(w), config.weight_spec, config.diagnostics)
    with ArtifactWriter(config.out) as writer:
        writer.write_text("report.txt", format_report(report))
    return writer.published


def cmd_oracle(config: RunConfig, args: argparse.Namespace) -> List[str]:
    a, w = _weight(config)
    spec = config.energy_spec(w)
    result = brute_force_min(config.grid, config.n_labels, a, spec, config.budget, config.processes)
    summary = {"j_min": result.j_min, "count": result.count, "assignments": result.assignments}
    labels_path = args.labels or config.verify
    if labels_path is not None:
        gap = gap_report(read_labels(labels_path, config.grid), a, spec, result)
        summary.update({"j_p": gap.j_p, "gap": gap.gap, "optimal": gap.optimal})
    print(f"J_min={result.j_min:.17g} count={result.count}")
    with ArtifactWriter(config.out) as writer:
        writer.write_text("oracle_labels.txt", format_labels(result.minimizer))
        writer.write_text("oracle.txt", format_key_values(summary))
    return writer.published


COMMANDS: Dict[str, Callable[[RunConfig, argparse.Namespace], List[str]]] = {
    "landscape": cmd_landscape,
    "partition": cmd_partition,
    "diagnose": cmd_diagnose,
    "oracle": cmd_oracle,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="partitiontools", description="Weighted-perimeter optimal partitions")
    commands = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        command = commands.add_parser(name)
        command.add_argument("--config", required=True, help="key = value config file")
        command.add_argument("--seed", type=int, default=None, help="overrides run.seed")
        command.add_argument("--out", default=None, help="output directory, overrides run.out")
        command.add_argument("--verbose", action="store_true", help="debug logging")
        if name in ("diagnose", "oracle"):
            command.add_argument("--labels", required=name == "diagnose", default=None, help="label raster file")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)
    try:
        config = load_config(args.config, overrides={"run.seed": args.seed, "run.out": args.out})
        COMMANDS[args.command](config, args)
    except PartitionToolsError as e:
        logger.error(f"{args.command} failed: {e}")
        return e.exit_code
    except OSError as e:
        logger.error(f"{args.command} failed: {e}", exc_info=True)
        return FormatError.exit_code
    return 0
