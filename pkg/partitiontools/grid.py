"""
Rectangular grid geometry, scalar fields, partitions and the discrete interface
combinatorics shared by every other module.

Cells are addressed as (row, col) with row 0 being the top row, exactly as the
files store them. Cell (r, c) has centre ((c + 1/2) h, (r + 1/2) h). Two cells
are adjacent when they share a face (4-neighbourhood).
"""
import logging
from dataclasses import dataclass
from typing import FrozenSet, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy import ndimage

from .exceptions import PreconditionError

logger = logging.getLogger(__name__)

Cell = Tuple[int, int]

# 4-neighbourhood, excludes diagonals
_CROSS = ndimage.generate_binary_structure(2, 1)
_FACE_COLUMNS = ["row_a", "col_a", "row_b", "col_b", "axis", "x", "y", "label_a", "label_b"]


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform square-cell grid with a binary domain mask (True = cell in the domain)"""
    nx: int
    ny: int
    h: float
    mask: Optional[np.ndarray] = None

    def __post_init__(self):
        if int(self.nx) < 1 or int(self.ny) < 1:
            raise PreconditionError(f"Grid needs nx >= 1 and ny >= 1, got {self.nx}x{self.ny}")
        if not np.isfinite(self.h) or self.h <= 0:
            raise PreconditionError(f"Grid spacing must be positive, got {self.h}")
        if self.mask is None:
            mask = np.ones((self.ny, self.nx), dtype=bool)
        else:
            mask = np.array(self.mask, dtype=bool)
        if mask.shape != (self.ny, self.nx):
            raise PreconditionError(f"Mask shape {mask.shape} does not match grid {(self.ny, self.nx)}")
        if not mask.any():
            raise PreconditionError("Mask has no cell inside the domain")
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "ny", int(self.ny))
        object.__setattr__(self, "h", float(self.h))
        object.__setattr__(self, "mask", _readonly(mask))

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def cell_area(self) -> float:
        return self.h * self.h

    @property
    def n_cells(self) -> int:
        return int(self.mask.sum())

    @property
    def area(self) -> float:
        return self.n_cells * self.cell_area

    @property
    def width(self) -> float:
        return self.nx * self.h

    @property
    def height(self) -> float:
        return self.ny * self.h

    def cell_centers(self) -> Tuple[np.ndarray, np.ndarray]:
        """Returns (x, y) arrays of shape (ny, nx) with the cell centre coordinates"""
        xs = (np.arange(self.nx) + 0.5) * self.h
        ys = (np.arange(self.ny) + 0.5) * self.h
        return np.meshgrid(xs, ys)

    def cell_center(self, cell: Cell) -> Tuple[float, float]:
        row, col = cell
        return ((col + 0.5) * self.h, (row + 0.5) * self.h)

    def same_as(self, other: "Grid") -> bool:
        return (self is other) or (
            self.nx == other.nx and self.ny == other.ny and self.h == other.h
            and np.array_equal(self.mask, other.mask))


@dataclass(frozen=True, eq=False)
class ScalarField:
    """
    Real values on the in-domain cells of a grid. Values outside the mask are stored as 0.

    A weight field carries the ``delta`` it was built with and satisfies delta <= value
    on every in-domain cell; ``clamped`` marks cells where the weight clamp was active.
    """
    grid: Grid
    values: np.ndarray
    delta: Optional[float] = None
    clamped: Optional[np.ndarray] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise PreconditionError(f"Field shape {values.shape} does not match grid {self.grid.shape}")
        values[~self.grid.mask] = 0.0
        if not np.isfinite(values).all():
            raise PreconditionError("Field values must be finite on the domain")
        if self.delta is not None and (values[self.grid.mask] < self.delta).any():
            raise PreconditionError(f"Weight field drops below its delta {self.delta}")
        object.__setattr__(self, "values", _readonly(values))
        if self.clamped is not None:
            object.__setattr__(self, "clamped", _readonly(np.array(self.clamped, dtype=bool)))

    @property
    def is_weight(self) -> bool:
        return self.delta is not None

    def domain_values(self) -> np.ndarray:
        return self.values[self.grid.mask]


def constant_field(grid: Grid, value: float, delta: Optional[float] = None) -> ScalarField:
    return ScalarField(grid, np.full(grid.shape, float(value)), delta=delta)


@dataclass(frozen=True, eq=False)
class Partition:
    """One label in 1..n_labels per in-domain cell; 0 marks cells outside the domain. Empty phases are legal."""
    grid: Grid
    n_labels: int
    labels: np.ndarray

    def __post_init__(self):
        if int(self.n_labels) < 1:
            raise PreconditionError(f"A partition needs at least one label, got {self.n_labels}")
        labels = np.array(self.labels, dtype=np.int64)
        if labels.shape != self.grid.shape:
            raise PreconditionError(f"Label shape {labels.shape} does not match grid {self.grid.shape}")
        labels[~self.grid.mask] = 0
        inside = labels[self.grid.mask]
        if inside.min() < 1 or inside.max() > self.n_labels:
            raise PreconditionError(f"Labels must lie in 1..{self.n_labels}")
        object.__setattr__(self, "n_labels", int(self.n_labels))
        object.__setattr__(self, "labels", _readonly(labels))

    def with_labels(self, labels: np.ndarray) -> "Partition":
        return Partition(self.grid, self.n_labels, labels)

    def label_of(self, cell: Cell) -> int:
        return int(self.labels[cell])

    def same_as(self, other: "Partition") -> bool:
        return (self.grid.same_as(other.grid) and self.n_labels == other.n_labels
                and np.array_equal(self.labels, other.labels))


def uniform_partition(grid: Grid, n_labels: int, label: int = 1) -> Partition:
    return Partition(grid, n_labels, np.full(grid.shape, label))


@dataclass(frozen=True)
class InterfaceFace:
    cell_a: Cell
    cell_b: Cell
    midpoint: Tuple[float, float]
    length: float


def face_table(p: Partition) -> pd.DataFrame:
    """Interface faces of a partition as a table.

    One row per pair of 4-adjacent in-domain cells with different labels, in row-major
    order of ``cell_a`` and then by axis (0: right neighbour, 1: neighbour below).

    Args:
        p (Partition): partition to scan

    Returns:
        pd.DataFrame: columns row_a, col_a, row_b, col_b, axis, x, y, label_a, label_b
    """
    labels, mask, h = p.labels, p.grid.mask, p.grid.h

    horizontal = (labels[:, :-1] != labels[:, 1:]) & mask[:, :-1] & mask[:, 1:]
    rows_h, cols_h = np.nonzero(horizontal)
    vertical = (labels[:-1, :] != labels[1:, :]) & mask[:-1, :] & mask[1:, :]
    rows_v, cols_v = np.nonzero(vertical)

    row_a = np.concatenate([rows_h, rows_v])
    col_a = np.concatenate([cols_h, cols_v])
    axis = np.concatenate([np.zeros(len(rows_h), dtype=np.int64), np.ones(len(rows_v), dtype=np.int64)])
    row_b = row_a + axis
    col_b = col_a + (1 - axis)

    order = np.lexsort((axis, row_a * p.grid.nx + col_a))
    row_a, col_a, row_b, col_b, axis = (arr[order] for arr in (row_a, col_a, row_b, col_b, axis))

    return pd.DataFrame({
        "row_a": row_a,
        "col_a": col_a,
        "row_b": row_b,
        "col_b": col_b,
        "axis": axis,
        "x": (col_a + 0.5 + 0.5 * (1 - axis)) * h,
        "y": (row_a + 0.5 + 0.5 * axis) * h,
        "label_a": labels[row_a, col_a],
        "label_b": labels[row_b, col_b],
    }, columns=_FACE_COLUMNS)


def extract_interface(p: Partition) -> List[InterfaceFace]:
    """All faces separating two in-domain cells with different labels, row-major then by axis"""
    table = face_table(p)
    h = p.grid.h
    return [
        InterfaceFace((int(ra), int(ca)), (int(rb), int(cb)), (float(x), float(y)), h)
        for ra, ca, rb, cb, x, y in zip(table.row_a, table.col_a, table.row_b, table.col_b, table.x, table.y)
    ]


def phase_volumes(p: Partition) -> np.ndarray:
    counts = np.bincount(p.labels[p.grid.mask], minlength=p.n_labels + 1)[1:]
    return counts * p.grid.cell_area


def symmetric_difference_distance(p: Partition, q: Partition) -> float:
    """L1 distance sum_i |W_i sym-diff W'_i|; every relabelled cell leaves one phase and enters another"""
    if not p.grid.same_as(q.grid):
        raise PreconditionError("Partitions live on different grids")
    if p.n_labels != q.n_labels:
        raise PreconditionError(f"Partitions have {p.n_labels} and {q.n_labels} labels")
    differing = int(np.count_nonzero(p.labels[p.grid.mask] != q.labels[q.grid.mask]))
    return 2.0 * p.grid.cell_area * differing


def component_map(p: Partition, label: int) -> Tuple[np.ndarray, int]:
    """4-connected components of one phase, numbered 1..count in raster order of their first cell"""
    return ndimage.label(p.labels == label, structure=_CROSS)


def connected_components(p: Partition, label: int) -> List[FrozenSet[Cell]]:
    if not 1 <= label <= p.n_labels:
        raise PreconditionError(f"Label {label} outside 1..{p.n_labels}")
    components, count = component_map(p, label)
    result = []
    for index in range(1, count + 1):
        rows, cols = np.nonzero(components == index)
        result.append(frozenset(zip(rows.tolist(), cols.tolist())))
    return result


def ball_mask(grid: Grid, center: Tuple[float, float], radius: float) -> np.ndarray:
    """In-domain cells whose centre lies in the closed ball B(center, radius)"""
    xs, ys = grid.cell_centers()
    inside = (xs - center[0]) ** 2 + (ys - center[1]) ** 2 <= radius * radius * (1 + 1e-12)
    return inside & grid.mask
