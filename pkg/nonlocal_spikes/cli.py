"""Command-line entry point: nspike <config.json> [--mode M] [--out DIR] [--mu X] [--full-newton]."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

from . import MODES
from .components.errors import ConfigError, NonlocalSpikesError
from .config_validator import load_config, validate_config
from .reporting import ReportWriter
from .spike_solver import SpikeSolver

_LOGGER = logging.getLogger(__name__)

OUTPUT_ENV = "NSPIKE_OUTPUT_DIR"
DEFAULT_OUTPUT = "nspike_out"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nspike",
        description="Compute small-amplitude spikes of nonlocal equations U + K*U = N(U; mu).",
    )
    parser.add_argument("config", help="JSON (or YAML) run configuration")
    parser.add_argument("--mode", choices=MODES, help="override the configured mode")
    parser.add_argument("--out", help=f"output directory (overrides ${OUTPUT_ENV})")
    parser.add_argument("--mu", type=float, help="override the configured mu")
    parser.add_argument(
        "--full-newton", action="store_true", help="refresh the Jacobian every outer iteration"
    )
    parser.add_argument(
        "--dump-multipliers", action="store_true", help="write per-node multiplier diagnostics"
    )
    parser.add_argument("--verbose", "-v", action="store_true", help="debug logging")
    return parser


def output_dir(args_out: Optional[str], config: dict[str, Any]) -> Path:
    return Path(args_out or os.environ.get(OUTPUT_ENV) or config.get("output_dir") or DEFAULT_OUTPUT)


def run(config: dict[str, Any], out_dir: str | Path, base_dir: Optional[str | Path] = None) -> int:
    """Run the configured mode, writing artifacts to out_dir; returns the exit status."""
    writer = ReportWriter(out_dir)
    mode = config.get("mode", "solve")
    summary: dict[str, Any] = {"mode": mode, "config": config}
    status = 0
    solver: Optional[SpikeSolver] = None
    try:
        solver = SpikeSolver(config, base_dir)
        checker = solver.check_hypotheses()
        writer.write_hypotheses(checker.report())
        if solver.bifurcation is None:
            failure = checker.first_failure
            _LOGGER.error(f"Hypotheses failed: {failure}")
            summary["error"] = failure.to_dict() if failure is not None else None
            status = failure.exit_status if failure is not None else 2
        elif mode == "hypotheses-only":
            summary["bifurcation"] = solver.bifurcation.to_dict()
        else:
            summary["results"] = _run_mode(solver, mode, config, writer)
    except NonlocalSpikesError as err:
        _LOGGER.error(str(err))
        summary["error"] = err.to_dict()
        status = err.exit_status
    except Exception as err:
        _LOGGER.exception(f"Unexpected failure in mode {mode}")
        summary["error"] = {"code": "unexpected_error", "message": str(err), "details": {"type": type(err).__name__}}
        status = NonlocalSpikesError.exit_status
    finally:
        if solver is not None:
            summary["problem"] = solver.describe()
        writer.write_diagnostics()
        writer.write_plots()
        writer.write_summary(status, summary)
    return status


def _run_mode(solver: SpikeSolver, mode: str, config: dict[str, Any], writer: ReportWriter) -> dict[str, Any]:
    writer.write_ground_state(solver.ground_state)
    if mode == "sweep":
        result = solver.sweep(config["mu_list"], tails=True)
        for entry in result.entries:
            writer.add_solution(entry.solution)
            if entry.tail is not None:
                writer.add_tail(entry.tail, entry.mu)
        writer.write_sweep(result)
        return {"largest_converged_mu": result.largest_converged(), "fitted_slopes": result.fitted_slopes,
                "failures": result.failures}

    if mode == "periodic":
        report = solver.periodic(solver.mu, config["L0_list"])
        writer.write_periodic(report)
        return report.to_dict()

    solution = solver.solve(solver.mu)
    writer.add_solution(solution)
    if config.get("dump_multipliers"):
        multipliers = solver.cache.get(solution.eps, solution.grid_z)
        writer.register([multipliers.dump_csv(writer.out_dir / "multipliers.csv")])
    results: dict[str, Any] = {"solution": solution.to_dict()}
    if mode == "tail":
        tail = solver.tail(solution)
        writer.add_tail(tail, solution.mu)
        results["tail"] = tail.to_dict()
    return results


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        config = load_config(args.config)
        if args.mode:
            config["mode"] = args.mode
        if args.mu is not None:
            config["mu"] = args.mu
        if args.full_newton:
            config["full_newton"] = True
        if args.dump_multipliers:
            config["dump_multipliers"] = True
        errors = validate_config(config)
        if errors:
            raise ConfigError("; ".join(errors), {"errors": errors})
    except ConfigError as err:
        _LOGGER.error(err.message)
        return err.exit_status

    out = output_dir(args.out, config)
    status = run(config, out, Path(args.config).parent)
    _LOGGER.info(f"Finished with exit status {status}; artifacts in {out}")
    return status


if __name__ == "__main__":
    sys.exit(main())
