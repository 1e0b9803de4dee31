import numpy as np
import pytest

from partitiontools.grid import Grid, Partition, ScalarField, constant_field


def unit_square(n: int, mask=None) -> Grid:
    return Grid(n, n, 1.0 / n, mask)


def bisection(grid: Grid, split: int = None) -> Partition:
    """Label 1 left of column ``split`` (default: the middle), label 2 right of it"""
    split = grid.nx // 2 if split is None else split
    labels = np.where(np.arange(grid.nx) < split, 1, 2)
    return Partition(grid, 2, np.broadcast_to(labels, grid.shape))


def tripod(grid: Grid) -> Partition:
    """Three sectors meeting at the centre with branches pointing at 90, 210 and 330 degrees"""
    xs, ys = grid.cell_centers()
    cx, cy = grid.width / 2, grid.height / 2
    angles = np.degrees(np.arctan2(ys - cy, xs - cx)) % 360.0
    labels = np.ones(grid.shape, dtype=np.int64)
    labels[(angles >= 90) & (angles < 210)] = 2
    labels[(angles >= 210) & (angles < 330)] = 3
    return Partition(grid, 3, labels)


def disc_mask(n: int, radius: float = 0.45) -> np.ndarray:
    centres = (np.arange(n) + 0.5) / n
    xs, ys = np.meshgrid(centres, centres)
    return (xs - 0.5) ** 2 + (ys - 0.5) ** 2 <= radius ** 2


@pytest.fixture
def grid_2x2():
    return Grid(2, 2, 1.0)


@pytest.fixture
def grid_8x8():
    return Grid(8, 8, 1.0)


@pytest.fixture
def ones_2x2(grid_2x2):
    return constant_field(grid_2x2, 1.0, delta=0.1)


@pytest.fixture
def ones_8x8(grid_8x8):
    return constant_field(grid_8x8, 1.0, delta=0.1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def island_4x4():
    """Label 1 everywhere except a single cell of label 2 at (1, 1)"""
    grid = Grid(4, 4, 1.0)
    labels = np.ones(grid.shape, dtype=np.int64)
    labels[1, 1] = 2
    return Partition(grid, 2, labels)


def random_partition(grid: Grid, n_labels: int, rng: np.random.Generator) -> Partition:
    return Partition(grid, n_labels, rng.integers(1, n_labels + 1, size=grid.shape))


def random_weight(grid: Grid, rng: np.random.Generator, low: float = 0.1, high: float = 1.0):
    return ScalarField(grid, rng.uniform(low, high, size=grid.shape), delta=low)
