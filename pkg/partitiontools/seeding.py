"""
Initial partitions for the optimizer.
"""
import logging
from typing import Callable, Dict, Optional

import numpy as np
import pandas as pd
from scipy.spatial import cKDTree
from skimage.segmentation import watershed

from .exceptions import PreconditionError
from .grid import Grid, Partition, ScalarField

logger = logging.getLogger(__name__)


def _voronoi_labels(grid: Grid, n_labels: int, field: Optional[ScalarField], rng: np.random.Generator) -> np.ndarray:
    if n_labels > grid.n_cells:
        raise PreconditionError(f"Cannot place {n_labels} seeds on {grid.n_cells} cells")
    xs, ys = grid.cell_centers()
    inside = np.flatnonzero(grid.mask.ravel())
    seeds = rng.choice(inside, size=n_labels, replace=False)
    seed_points = np.column_stack([xs.ravel()[seeds], ys.ravel()[seeds]])
    _, nearest = cKDTree(seed_points).query(np.column_stack([xs.ravel(), ys.ravel()]))
    return nearest.reshape(grid.shape) + 1


def _stripe_labels(grid: Grid, n_labels: int, field: Optional[ScalarField], rng: np.random.Generator) -> np.ndarray:
    columns = np.arange(grid.nx)
    stripes = columns * n_labels // grid.nx + 1
    return np.broadcast_to(stripes, grid.shape).copy()


def _random_labels(grid: Grid, n_labels: int, field: Optional[ScalarField], rng: np.random.Generator) -> np.ndarray:
    return rng.integers(1, n_labels + 1, size=grid.shape)


def _sector_labels(grid: Grid, n_labels: int, field: Optional[ScalarField], rng: np.random.Generator) -> np.ndarray:
    xs, ys = grid.cell_centers()
    cx, cy = xs[grid.mask].mean(), ys[grid.mask].mean()
    angles = np.mod(np.arctan2(ys - cy, xs - cx), 2 * np.pi)
    sectors = np.floor(angles / (2 * np.pi / n_labels)).astype(np.int64) + 1
    return np.clip(sectors, 1, n_labels)


def _saddle_table(basins: np.ndarray, image: np.ndarray, mask: np.ndarray) -> pd.DataFrame:
    """Lowest pass between every pair of adjacent basins: min over shared faces of the higher side"""
    frames = []
    for left, right, inside in (
        (np.s_[:, :-1], np.s_[:, 1:], mask[:, :-1] & mask[:, 1:]),
        (np.s_[:-1, :], np.s_[1:, :], mask[:-1, :] & mask[1:, :]),
    ):
        a, b = basins[left], basins[right]
        touching = inside & (a != b)
        frames.append(pd.DataFrame({
            "first": np.minimum(a, b)[touching],
            "second": np.maximum(a, b)[touching],
            "saddle": np.maximum(image[left], image[right])[touching],
        }))
    pairs = pd.concat(frames, ignore_index=True)
    return pairs.groupby(["first", "second"], as_index=False)["saddle"].min()


def _merge_lowest_saddles(basins: np.ndarray, image: np.ndarray, mask: np.ndarray, n_labels: int) -> np.ndarray:
    basins = basins.copy()
    count = len(np.unique(basins[mask]))
    while count > n_labels:
        saddles = _saddle_table(basins, image, mask)
        if saddles.empty:
            # disconnected domain pieces: fold the last basin into the first
            ids = np.unique(basins[mask])
            logger.warning(f"No adjacent basins left with {count} regions; merging basin {ids[-1]} into {ids[0]}")
            basins[basins == ids[-1]] = ids[0]
        else:
            lowest = saddles.sort_values(["saddle", "first", "second"], kind="mergesort").iloc[0]
            basins[basins == int(lowest["second"])] = int(lowest["first"])
        count -= 1
    return basins


def _first_appearance_order(regions: np.ndarray, mask: np.ndarray) -> np.ndarray:
    flat = regions.ravel()
    inside = mask.ravel()
    ids, first = np.unique(flat[inside], return_index=True)
    order = ids[np.argsort(first)]
    relabel = {int(old): new for new, old in enumerate(order, start=1)}
    labels = np.zeros_like(flat)
    labels[inside] = [relabel[int(v)] for v in flat[inside]]
    return labels.reshape(regions.shape)


def _watershed_labels(grid: Grid, n_labels: int, field: Optional[ScalarField], rng: np.random.Generator) -> np.ndarray:
    """Basins of -w under flooding from its regional minima, merged to at most n_labels by lowest saddle"""
    if field is None:
        raise PreconditionError("watershed_minus_w needs the landscape function (or a weight built from it)")
    image = -field.values
    basins = watershed(image, connectivity=1, mask=grid.mask)
    logger.info(f"Watershed found {len(np.unique(basins[grid.mask]))} basins, merging to at most {n_labels}")
    merged = _merge_lowest_saddles(basins, image, grid.mask, n_labels)
    return _first_appearance_order(merged, grid.mask)


INITIALIZERS: Dict[str, Callable] = {
    "voronoi_seeds": _voronoi_labels,
    "random": _random_labels,
    "stripes": _stripe_labels,
    "watershed_minus_w": _watershed_labels,
    "sectors": _sector_labels,
}


def seed_partition(grid: Grid, n_labels: int, field: Optional[ScalarField], init: str,
                   rng: np.random.Generator) -> Partition:
    """Builds an initial partition with the named initializer.

    Args:
        grid (Grid): grid with domain mask
        n_labels (int): number of labels N
        field (ScalarField, optional): w or a, needed by watershed_minus_w only
        init (str): initializer name, one of INITIALIZERS
        rng (np.random.Generator): random source for voronoi_seeds and random

    Returns:
        Partition: initial partition
    """
    if n_labels < 1:
        raise PreconditionError(f"Need at least one label, got {n_labels}")
    if init not in INITIALIZERS:
        raise PreconditionError(f"Unknown initializer {init}, expected one of {tuple(INITIALIZERS)}")
    if n_labels == 1:
        return Partition(grid, 1, np.ones(grid.shape, dtype=np.int64))
    labels = INITIALIZERS[init](grid, n_labels, field, rng)
    return Partition(grid, n_labels, labels)
