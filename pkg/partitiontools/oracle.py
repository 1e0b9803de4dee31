"""
Exact minimisation of J by exhaustive enumeration on tiny grids.

Assignments are enumerated in lexicographic order of the in-domain cells (row-major,
labels 1..N). The trailing cells are enumerated as one vectorised block per prefix of
leading cells; prefixes can be spread over worker processes.
"""
import itertools
import logging
import multiprocessing
from dataclasses import dataclass
from functools import partial
from typing import List, Optional, Tuple

import numpy as np

from .energy import SpecLike, _BulkTerm, _edge_pairs, _label_weights, as_energy_spec, cell_masses, total_energy
from .exceptions import BudgetExceededError, PreconditionError
from .grid import Grid, Partition, ScalarField

logger = logging.getLogger(__name__)

_BLOCK_ROWS = 2 ** 16
_RELATIVE_TOL = 1e-9


@dataclass(frozen=True)
class OracleBudget:
    max_assignments: int = 10 ** 8

    def __post_init__(self):
        if int(self.max_assignments) < 1:
            raise PreconditionError(f"Oracle budget must be positive, got {self.max_assignments}")


@dataclass(frozen=True)
class OracleResult:
    minimizer: Partition
    j_min: float
    count: int
    assignments: int


@dataclass(frozen=True)
class GapReport:
    j_p: float
    j_min: float
    gap: float
    optimal: bool
    count: int


@dataclass(frozen=True)
class _Problem:
    """Everything a worker needs, as plain arrays"""
    n_labels: int
    n_cells: int
    edge_u: np.ndarray
    edge_v: np.ndarray
    prices: np.ndarray
    label_weights: np.ndarray
    cell_mass: np.ndarray
    bulk: _BulkTerm
    suffix: np.ndarray


def _tolerance(value: float) -> float:
    return _RELATIVE_TOL * max(1.0, abs(value))


def _digits(count: int, width: int, n_labels: int) -> np.ndarray:
    """Rows 0..count-1 written in base n_labels with ``width`` digits, most significant first, shifted to 1..N"""
    index = np.arange(count, dtype=np.int64)[:, None]
    powers = n_labels ** np.arange(width - 1, -1, -1, dtype=np.int64)
    return (index // powers) % n_labels + 1


def _build_problem(grid: Grid, n_labels: int, a: ScalarField, spec: SpecLike, suffix_width: int) -> _Problem:
    spec = as_energy_spec(spec)
    index = np.full(grid.shape, -1, dtype=np.int64)
    index[grid.mask] = np.arange(grid.n_cells)
    us, vs, prices = [], [], []
    for rows_u, cols_u, rows_v, cols_v, factor in _edge_pairs(grid, spec.stencil):
        us.append(index[rows_u, cols_u])
        vs.append(index[rows_v, cols_v])
        prices.append(0.5 * (a.values[rows_u, cols_u] + a.values[rows_v, cols_v]) * grid.h * factor)
    return _Problem(
        n_labels=n_labels,
        n_cells=grid.n_cells,
        edge_u=np.concatenate(us),
        edge_v=np.concatenate(vs),
        prices=np.concatenate(prices),
        label_weights=_label_weights(spec, n_labels),
        cell_mass=cell_masses(grid, spec.bulk)[grid.mask],
        bulk=_BulkTerm(spec.bulk, grid, n_labels),
        suffix=_digits(n_labels ** suffix_width, suffix_width, n_labels),
    )


def _block_energies(problem: _Problem, labels: np.ndarray) -> np.ndarray:
    label_u = labels[:, problem.edge_u]
    label_v = labels[:, problem.edge_v]
    weights = problem.label_weights
    cost = (label_u != label_v) * problem.prices * (weights[label_u] + weights[label_v])
    F = cost.sum(axis=1)
    one_hot = (labels[:, :, None] == np.arange(1, problem.n_labels + 1)).astype(float)
    masses = np.einsum("bcn,c->bn", one_hot, problem.cell_mass)
    return F + problem.bulk.values(masses)


def _scan_prefixes(problem: _Problem, prefixes: List[Tuple[int, ...]]) -> Tuple[float, int, Optional[np.ndarray]]:
    """Best (value, count, first minimizer) over the blocks of the given prefixes, in order"""
    best_value, best_count, best_labels = np.inf, 0, None
    block_rows = len(problem.suffix)
    for prefix in prefixes:
        labels = np.empty((block_rows, problem.n_cells), dtype=np.int64)
        labels[:, :len(prefix)] = prefix
        labels[:, len(prefix):] = problem.suffix
        energies = _block_energies(problem, labels)
        block_min = float(energies.min())
        near = energies <= block_min + _tolerance(block_min)
        if best_labels is None or block_min < best_value - _tolerance(best_value):
            best_value, best_count = block_min, int(near.sum())
            best_labels = labels[int(np.argmax(near))].copy()
        elif block_min <= best_value + _tolerance(best_value):
            best_value = min(best_value, block_min)
            best_count += int(near.sum())
    return best_value, best_count, best_labels


def _reduce(results: List[Tuple[float, int, Optional[np.ndarray]]]) -> Tuple[float, int, np.ndarray]:
    best_value, best_count, best_labels = np.inf, 0, None
    for value, count, labels in results:
        if labels is None:
            continue
        if best_labels is None or value < best_value - _tolerance(best_value):
            best_value, best_count, best_labels = value, count, labels
        elif value <= best_value + _tolerance(best_value):
            best_value = min(best_value, value)
            best_count += count
    return best_value, best_count, best_labels


def _chunks(items: list, n_chunks: int) -> List[list]:
    size = max(1, -(-len(items) // n_chunks))
    return [items[i:i + size] for i in range(0, len(items), size)]


def brute_force_min(grid: Grid, n_labels: int, a: ScalarField, spec: SpecLike,
                    budget: Optional[OracleBudget] = None, processes: int = 1) -> OracleResult:
    """Exact minimiser of J over all N^(cell count) label assignments.

    Args:
        grid (Grid): grid with domain mask
        n_labels (int): number of labels N
        a (ScalarField): interface weight
        spec (EnergySpec | BulkTermSpec): energy model
        budget (OracleBudget, optional): assignment cap. Defaults to 10**8 assignments.
        processes (int, optional): worker processes for the prefix ranges. Defaults to 1.

    Raises:
        BudgetExceededError: N^(cell count) exceeds the budget

    Returns:
        OracleResult: lexicographically smallest minimiser, J_min and the raw number of minimisers
    """
    budget = budget or OracleBudget()
    if n_labels < 1:
        raise PreconditionError(f"Need at least one label, got {n_labels}")
    if not a.grid.same_as(grid):
        raise PreconditionError("Weight field lives on a different grid")
    assignments = n_labels ** grid.n_cells
    if assignments > budget.max_assignments:
        raise BudgetExceededError(assignments, budget.max_assignments)

    suffix_width = grid.n_cells
    while n_labels ** suffix_width > _BLOCK_ROWS:
        suffix_width -= 1
    problem = _build_problem(grid, n_labels, a, spec, suffix_width)
    prefixes = list(itertools.product(range(1, n_labels + 1), repeat=grid.n_cells - suffix_width))
    logger.info(f"Enumerating {assignments} assignments in {len(prefixes)} blocks")

    if processes > 1 and len(prefixes) > 1:
        with multiprocessing.Pool(min(processes, len(prefixes))) as pool:
            results = pool.map(partial(_scan_prefixes, problem), _chunks(prefixes, processes))
    else:
        results = [_scan_prefixes(problem, prefixes)]
    _, count, best = _reduce(results)

    labels = np.zeros(grid.shape, dtype=np.int64)
    labels[grid.mask] = best
    minimizer = Partition(grid, n_labels, labels)
    j_min = total_energy(minimizer, a, spec).total
    logger.info(f"Oracle minimum J={j_min:.12g} attained by {count} assignments")
    return OracleResult(minimizer=minimizer, j_min=j_min, count=count, assignments=assignments)


def gap_report(p: Partition, a: ScalarField, spec: SpecLike, result: OracleResult) -> GapReport:
    if not p.grid.same_as(result.minimizer.grid) or p.n_labels != result.minimizer.n_labels:
        raise PreconditionError("The partition does not belong to the enumerated problem")
    j_p = total_energy(p, a, spec).total
    gap = j_p - result.j_min
    return GapReport(j_p=j_p, j_min=result.j_min, gap=gap, optimal=gap <= _tolerance(result.j_min), count=result.count)


def verify_against(p: Partition, a: ScalarField, spec: SpecLike, budget: Optional[OracleBudget] = None,
                   processes: int = 1) -> GapReport:
    """Gap J(p) - J_min between a partition and the exact optimum of its problem"""
    result = brute_force_min(p.grid, p.n_labels, a, spec, budget, processes)
    return gap_report(p, a, spec, result)
