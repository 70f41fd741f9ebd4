#!/usr/bin/env python3
"""
Gauge-family command line.

    python -m src.cli.main convert --scenario scenarios/linear_gaussian.json
    python -m src.cli.main evolve --scenario scenarios/dg_pedestal.json --out results/dg
    python -m src.cli.main validate-paper --samples 20 --seed 7 --out results/

Exit codes: 0 success, 2 validation error, 3 numerical failure.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Optional

import numpy as np
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from src.gauge.config import settings
from src.gauge.equation_model import ab_from_numu, numu_from_ab
from src.gauge.errors import FamilyError, GaugeFamilyError, InstabilityError
from src.gauge.export import dumps, save_st_field, write_json, write_trajectory
from src.gauge.gauge_group import apply_to_st, is_subgroup
from src.gauge.gauge_transform import (
    sample_points,
    slot_discrepancies,
    transform_ab,
    transform_numu_subgroup,
    validate_against_paper,
)
from src.gauge.invariants import gauge_invariants
from src.gauge.scenario import Scenario, build_equation, build_gauge, build_initial, load_scenario
from src.gauge.solver import covariance_experiment, evolve, summarize

logger = logging.getLogger(__name__)
console = Console()


# ============================================================================
# Commands
# ============================================================================


def cmd_convert(scenario: Scenario) -> dict:
    nm, ab = build_equation(scenario.equation)
    return {
        "form": scenario.equation.form,
        "numu": nm.model_dump(mode="json"),
        "ab": ab.model_dump(mode="json"),
    }


def _times(scenario: Scenario) -> np.ndarray:
    return np.linspace(scenario.run.t0, scenario.run.t1, settings.subgroup_samples)


def cmd_transform(scenario: Scenario, seed: int) -> dict:
    nm, ab = build_equation(scenario.equation)
    g = build_gauge(scenario, required=True)
    engine = transform_ab(ab, g, _times(scenario))
    initial = apply_to_st(g, build_initial(scenario), scenario.run.t0)

    result: dict[str, Any] = {
        "gauge": g.to_json(),
        "subgroup": is_subgroup(g, (scenario.run.t0, scenario.run.t1), seed),
        "engine": {"ab": engine.model_dump(mode="json"), "numu": numu_from_ab(engine).model_dump(mode="json")},
        "initial": {"k_S": initial.slope, "min_rho": float(np.min(initial.rho))},
        "closed_form": None,
        "difference": None,
    }
    if result["subgroup"]:
        try:
            closed = transform_numu_subgroup(nm, g)
        except FamilyError as exc:
            logger.warning(f"No closed-form law for this equation: {exc}")
        else:
            points = sample_points(np.random.default_rng(seed), 50, dim=engine.dim)
            result["closed_form"] = closed.model_dump(mode="json")
            result["difference"] = slot_discrepancies(ab_from_numu(closed), engine, points)
    return result


def cmd_invariants(scenario: Scenario, fd_beta: bool = False) -> dict:
    nm, ab = build_equation(scenario.equation)
    return gauge_invariants(ab, nm, scenario.t_eval, finite_difference=fd_beta).to_json()


def cmd_evolve(scenario: Scenario, out: Optional[Path] = None) -> dict:
    nm, ab = build_equation(scenario.equation)
    f0 = build_initial(scenario)
    run = scenario.run
    try:
        traj = evolve(ab, f0, run.t0, run.t1, run.dt, run.snapshots)
    except InstabilityError as exc:
        if out is not None and exc.trajectory is not None:
            save_st_field(exc.trajectory.final, out / "last_finite.csv")
            write_trajectory(nm, exc.trajectory, out / scenario.outputs.trajectory)
        raise

    summary = summarize(nm, traj, scenario.initial.background)
    summary["scenario"] = scenario.name
    if out is not None:
        write_trajectory(nm, traj, out / scenario.outputs.trajectory)
        if scenario.outputs.final_field:
            save_st_field(traj.final, out / scenario.outputs.final_field)
    return summary


def cmd_covariance(scenario: Scenario) -> dict:
    _, ab = build_equation(scenario.equation)
    g = build_gauge(scenario, required=True)
    run = scenario.run
    report = covariance_experiment(ab, g, build_initial(scenario), run.t0, run.t1, run.dt)
    return {"gauge": g.to_json(), **report.summary()}


def cmd_validate_paper(samples: Optional[int], seed: int) -> dict:
    return validate_against_paper(samples, seed).model_dump(mode="json")


# ============================================================================
# Rendering
# ============================================================================


def _number(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def render(command: str, result: dict) -> None:
    if command == "validate-paper":
        table = Table(title="Printed laws vs substitution engine", show_header=True, header_style="bold magenta")
        table.add_column("Check", style="cyan")
        table.add_column("Result")
        table.add_row("subgroup sector", ", ".join(result["subgroup"]["disagreeing_slots"]) or "[green]agrees[/green]")
        table.add_row("homogeneous sector", ", ".join(result["homogeneous"]["disagreeing_slots"]) or "[green]agrees[/green]")
        table.add_row("printed matrix entries", ", ".join(result["disagreeing_entries"]) or "[green]agree[/green]")
        for name, status in sorted(result["invariant_checks"].items()):
            colour = "green" if status == "pass" else "red"
            table.add_row(f"{name} preserved", f"[{colour}]{status}[/{colour}]")
        for name, value in sorted(result["printed_field_elements"].items()):
            table.add_row(name, _number(value))
        console.print(table)
    elif command in ("invariants", "evolve", "covariance"):
        table = Table(show_header=False, box=None)
        table.add_column("Key", style="cyan")
        table.add_column("Value")
        for key, value in sorted(result.items()):
            if not isinstance(value, dict):
                table.add_row(key, _number(value))
        console.print(Panel(table, title=f"[bold cyan]{command}[/bold cyan]", border_style="cyan"))
    else:
        console.print_json(dumps(result))


# ============================================================================
# Entry point
# ============================================================================


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Nonlinear gauge transformations of the Doebner-Goldin family")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, default=None, help="Directory for result files (default: print only)")
    common.add_argument("--quiet", "-q", action="store_true", help="Do not print results")

    scenario = argparse.ArgumentParser(add_help=False, parents=[common])
    scenario.add_argument("--scenario", type=Path, required=True, help="Scenario JSON file")

    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("convert", parents=[scenario], help="Print both parameterizations")
    transform = commands.add_parser("transform", parents=[scenario], help="Transform the equation by the scenario gauge")
    transform.add_argument("--seed", type=int, required=True, help="Seed for the sample points of the closed-form check")
    invariants = commands.add_parser("invariants", parents=[scenario], help="Gauge-invariant parameters")
    invariants.add_argument("--fd-beta", action="store_true", help="Finite-difference rates for beta")
    commands.add_parser("evolve", parents=[scenario], help="Integrate and write trajectory and summary")
    commands.add_parser("covariance", parents=[scenario], help="Commuting-diagram experiment")
    validate = commands.add_parser("validate-paper", parents=[common], help="Check printed laws against the engine")
    validate.add_argument("--samples", type=int, default=None, help=f"Samples (default: {settings.validation_samples})")
    validate.add_argument("--seed", type=int, required=True, help="Seed for the random samples")
    return parser


def run(args: argparse.Namespace) -> dict:
    if args.command == "validate-paper":
        return cmd_validate_paper(args.samples, args.seed)
    scenario = load_scenario(args.scenario)
    if args.command == "convert":
        return cmd_convert(scenario)
    if args.command == "transform":
        return cmd_transform(scenario, args.seed)
    if args.command == "invariants":
        return cmd_invariants(scenario, args.fd_beta)
    if args.command == "evolve":
        return cmd_evolve(scenario, args.out)
    return cmd_covariance(scenario)


def _output_name(args: argparse.Namespace) -> str:
    if args.command == "evolve":
        return load_scenario(args.scenario).outputs.summary
    return f"{args.command}.json"


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, settings.log_level.upper(), logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )
    try:
        result = run(args)
    except GaugeFamilyError as exc:
        console.print(f"[bold red]error[/bold red] {exc}")
        logger.debug("Command failed", exc_info=True)
        return exc.exit_code

    if args.out is not None:
        write_json(result, args.out / _output_name(args))
    if not args.quiet:
        render(args.command, result)
    return 0


if __name__ == "__main__":
    sys.exit(main())
