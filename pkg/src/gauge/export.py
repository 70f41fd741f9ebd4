"""
Result files: JSON summaries, trajectory CSV and single-field grid files.

JSON is written with sorted keys and a trailing newline so repeated runs give
byte-identical files.
"""

import json
import logging
from pathlib import Path
from typing import Any

import numpy as np

from .equation_model import Grid, NuMuCoefficients, STField
from .errors import GridError
from .solver import Trajectory, observables

logger = logging.getLogger(__name__)

TRAJECTORY_COLUMNS = ("t", "x", "S", "T", "rho", "Jgi")


def _plain(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def dumps(data: Any) -> str:
    return json.dumps(data, sort_keys=True, indent=2, default=_plain) + "\n"


def write_json(data: Any, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(data))
    logger.info(f"Wrote {path}")
    return path


def write_trajectory(nm: NuMuCoefficients, traj: Trajectory, path: str | Path) -> Path:
    """One row per (snapshot, grid point); S is the full phase including the winding."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    x = traj.grid.x
    blocks = []
    for t, f in traj:
        obs = observables(nm, f, t, acceleration=False)
        blocks.append(np.column_stack([np.full_like(x, t), x, f.S_full, f.T, obs.rho, obs.Jgi]))
    np.savetxt(path, np.vstack(blocks), delimiter=",", fmt="%.12e", header=",".join(TRAJECTORY_COLUMNS), comments="")
    logger.info(f"Wrote {len(traj)} snapshots to {path}")
    return path


def read_trajectory(path: str | Path) -> dict[str, np.ndarray]:
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {name: table[:, i] for i, name in enumerate(TRAJECTORY_COLUMNS)}


# ============================================================================
# Grid files
# ============================================================================


def _header_path(path: Path) -> Path:
    return path.with_suffix(".json")


def save_st_field(f: STField, path: str | Path) -> Path:
    """CSV columns x, S (periodic remainder), T plus a JSON header with L, N, k_S, x0."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    grid = f.grid
    np.savetxt(path, np.column_stack([grid.x, f.S, f.T]), delimiter=",", fmt="%.17e", header="x,S,T", comments="")
    write_json({"L": grid.length, "N": grid.points, "k_S": f.slope, "x0": grid.origin}, _header_path(path))
    return path


def load_st_field(path: str | Path) -> STField:
    path = Path(path)
    header = json.loads(_header_path(path).read_text())
    grid = Grid(header["L"], header["N"], header["x0"])
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if table.shape != (grid.points, 3):
        raise GridError(f"{path} has shape {table.shape}, header promises {grid.points} rows of x,S,T")
    return STField(grid, table[:, 1], table[:, 2], header["k_S"])
