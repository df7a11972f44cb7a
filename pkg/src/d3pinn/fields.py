"""Space-time grid fields: the stage-2 output and reference solutions share
this container so metrics and file formats are common."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import storage


@dataclass
class SolutionField:
    """Values u(x_i, t_j) on a rectangular grid.

    values has shape (len(x_grid), len(t_grid)); t_grid starts at 0.
    """

    x_grid: np.ndarray
    t_grid: np.ndarray
    values: np.ndarray
    step_size: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x_grid = np.asarray(self.x_grid, dtype=np.float64)
        self.t_grid = np.asarray(self.t_grid, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.x_grid.size, self.t_grid.size):
            raise ValueError(
                f"values shape {self.values.shape} != (len(x_grid), len(t_grid)) = "
                f"({self.x_grid.size}, {self.t_grid.size})"
            )
        if np.any(np.diff(self.x_grid) <= 0) or np.any(np.diff(self.t_grid) <= 0):
            raise ValueError("grids must be strictly increasing")
        if self.t_grid[0] != 0.0:
            raise ValueError("t_grid must start at 0")

    def same_grid(self, other: "SolutionField") -> bool:
        return (
            self.x_grid.size == other.x_grid.size
            and self.t_grid.size == other.t_grid.size
            and np.array_equal(self.x_grid, other.x_grid)
            and np.array_equal(self.t_grid, other.t_grid)
        )


def save_field(path, fld: SolutionField) -> None:
    storage.save_bundle(
        path,
        "solution-grid",
        {"step_size": fld.step_size, "meta": fld.meta},
        {"x_grid": fld.x_grid, "t_grid": fld.t_grid, "values": fld.values},
    )


def load_field(path) -> SolutionField:
    meta, arrays = storage.load_bundle(path, "solution-grid")
    return SolutionField(
        arrays["x_grid"], arrays["t_grid"], arrays["values"],
        step_size=meta["step_size"], meta=meta["meta"],
    )


def export_field_text(path, fld: SolutionField) -> None:
    """Delimited text rows (x, t, value), t-major for easy slicing."""
    with open(path, "w") as fh:
        fh.write("x\tt\tvalue\n")
        for j, t in enumerate(fld.t_grid):
            for i, x in enumerate(fld.x_grid):
                fh.write(f"{x!r}\t{t!r}\t{fld.values[i, j]!r}\n")
