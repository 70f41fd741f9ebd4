#!/usr/bin/env python3
"""
Doebner-Goldin parameter sweep
Invariants and short-run conservation residuals over a (D, D') grid
"""

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Dict, List

import numpy as np
from rich.console import Console
from rich.table import Table

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from src.gauge.equation_model import Grid, PhysicalParams, STField, ab_from_numu, doebner_goldin_numu  # noqa: E402
from src.gauge.errors import GaugeFamilyError  # noqa: E402
from src.gauge.invariants import gauge_invariants  # noqa: E402
from src.gauge.solver import continuity_residual, evolve  # noqa: E402

console = Console()

# Configuration
GRID_POINTS = 128
DOMAIN_LENGTH = 40.0
RUN_TIME = 0.1
TIME_STEP = 1e-3
NONLINEARITY = (0.0, 0.0, 0.0, 0.0, 1.0)  # c1..c5 multiplying D'


def sweep_point(D: float, Dprime: float) -> Dict[str, Any]:
    """Invariants at t=0 plus a short pedestal run"""
    params = PhysicalParams(D=D, Dprime=Dprime, cvals=NONLINEARITY)
    nm = doebner_goldin_numu(params)
    ab = ab_from_numu(nm)
    row: Dict[str, Any] = {"D": D, "Dprime": Dprime}
    try:
        inv = gauge_invariants(ab, nm, 0.0)
        row.update(tau2=inv.tau[1], tau3=inv.tau[2], I2=inv.I2, quantum=inv.quantum_class)

        grid = Grid(DOMAIN_LENGTH, GRID_POINTS)
        f0 = STField.from_expressions(grid, "0", "ln(1 + 0.5*exp(-x^2/4))")
        traj = evolve(ab, f0, 0.0, RUN_TIME, TIME_STEP, snapshots=11)
        norms = [grid.integrate(f.rho) for f in traj.fields]
        row["norm_drift"] = max(abs(n - norms[0]) for n in norms) / norms[0]
        row["continuity"] = continuity_residual(nm, traj).continuity
    except GaugeFamilyError as e:
        row["error"] = str(e)
    return row


def run_sweep(diffusions: List[float], nonlinear: List[float], workers: int) -> List[Dict[str, Any]]:
    points = [(D, Dp) for D in diffusions for Dp in nonlinear]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda p: sweep_point(*p), points))


def print_table(rows: List[Dict[str, Any]]) -> None:
    table = Table(title="Doebner-Goldin sweep", show_header=True, header_style="bold magenta")
    for column in ("D", "D'", "tau2", "tau3", "I2", "quantum", "norm drift", "continuity"):
        table.add_column(column, justify="right")

    for row in rows:
        if "error" in row:
            table.add_row(f"{row['D']:g}", f"{row['Dprime']:g}", f"[red]{row['error']}[/red]", *[""] * 5)
            continue
        quantum = "[green]yes[/green]" if row["quantum"] else "[yellow]no[/yellow]"
        table.add_row(
            f"{row['D']:g}",
            f"{row['Dprime']:g}",
            f"{row['tau2']:.4f}",
            f"{row['tau3']:.4f}",
            f"{row['I2']:.4f}",
            quantum,
            f"{row['norm_drift']:.2e}",
            f"{row['continuity']:.2e}",
        )
    console.print(table)


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description="Doebner-Goldin parameter sweep")
    parser.add_argument("--d-max", type=float, default=0.2, help="Largest diffusion coefficient D (default: 0.2)")
    parser.add_argument("--dprime-max", type=float, default=0.1, help="Largest D' (default: 0.1)")
    parser.add_argument("--steps", "-n", type=int, default=3, help="Grid points per axis (default: 3)")
    parser.add_argument("--workers", "-w", type=int, default=4, help="Concurrent runs (default: 4)")
    args = parser.parse_args()

    rows = run_sweep(
        list(np.linspace(0.0, args.d_max, args.steps)),
        list(np.linspace(0.0, args.dprime_max, args.steps)),
        args.workers,
    )
    print_table(rows)
