"""
Local-move minimisation of J: single-cell flips (iterated conditional modes in
checkerboard order) and ball pour moves that relabel W_i inside a ball into
other phases, with optional simulated annealing.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Mapping, Optional, Tuple

import numpy as np
import pandas as pd

from .energy import IncrementalEnergy, SpecLike, total_energy
from .exceptions import PreconditionError
from .grid import Cell, Grid, Partition, ScalarField, ball_mask, component_map
from .seeding import INITIALIZERS, seed_partition

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ["sweep", "F", "G", "J", "flips", "pours", "temperature"]
_DEFAULT_RADII = (1.0, 3.0)  # in units of h
_DEFAULT_CLEAN_CELLS = 4
_MAX_CLEAN_STEPS = 100000


@dataclass(frozen=True)
class PourMove:
    """Relabel every cell of B(center, radius) whose label is in ``sources`` to ``target_map[label]``"""
    center: Cell
    radius: float
    sources: FrozenSet[int]
    target_map: Mapping[int, int]

    def __post_init__(self):
        sources = frozenset(int(s) for s in self.sources)
        if not sources:
            raise PreconditionError("A pour move needs at least one source label")
        targets = {int(k): int(v) for k, v in dict(self.target_map).items()}
        if set(targets) != set(sources):
            raise PreconditionError("The target map must cover exactly the source labels")
        if sources & set(targets.values()):
            raise PreconditionError("Pour targets must lie outside the source set")
        if self.radius <= 0:
            raise PreconditionError(f"Pour radius must be positive, got {self.radius}")
        object.__setattr__(self, "sources", sources)
        object.__setattr__(self, "target_map", targets)


@dataclass(frozen=True)
class OptimizerConfig:
    """
    Schedule of ``minimize``. Radii are lengths; ``radius_range=None`` means (h, 3h).
    ``temperature=(T0, decay)`` enables annealing with T_k = T0 * decay**(k - 1).
    """
    init: str = "stripes"
    seed: int = 0
    max_sweeps: int = 200
    pour_moves_per_sweep: int = 20
    radius_range: Optional[Tuple[float, float]] = None
    temperature: Optional[Tuple[float, float]] = None
    restarts: int = 1
    restart_init: str = "voronoi_seeds"
    clean_min_volume: Optional[float] = None

    def __post_init__(self):
        for name in (self.init, self.restart_init):
            if name not in INITIALIZERS:
                raise PreconditionError(f"Unknown initializer {name}, expected one of {tuple(INITIALIZERS)}")
        if self.max_sweeps < 1 or self.restarts < 1 or self.pour_moves_per_sweep < 0:
            raise PreconditionError("max_sweeps and restarts must be >= 1, pour_moves_per_sweep >= 0")
        if self.radius_range is not None:
            r_min, r_max = self.radius_range
            if not 0 < r_min <= r_max:
                raise PreconditionError(f"Invalid radius range {self.radius_range}")
        if self.temperature is not None:
            t0, decay = self.temperature
            if t0 <= 0 or not 0 < decay < 1:
                raise PreconditionError(f"Annealing needs T0 > 0 and decay in (0, 1), got {self.temperature}")

    def radii(self, grid: Grid) -> Tuple[float, float]:
        if self.radius_range is None:
            return (_DEFAULT_RADII[0] * grid.h, _DEFAULT_RADII[1] * grid.h)
        if self.radius_range[0] < grid.h * (1 - 1e-12):
            raise PreconditionError(f"Smallest pour radius {self.radius_range[0]} is below the cell size {grid.h}")
        return self.radius_range


@dataclass(frozen=True)
class TraceRecord:
    sweep: int
    F: float
    G: float
    J: float
    flips: int
    pours: int
    temperature: float


@dataclass
class EnergyTrace:
    records: List[TraceRecord] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([vars(r) for r in self.records], columns=TRACE_COLUMNS)

    def is_non_increasing(self) -> bool:
        totals = [r.J for r in self.records]
        return all(later <= earlier for earlier, later in zip(totals, totals[1:]))


def initialize(grid: Grid, n_labels: int, a_or_w: Optional[ScalarField], config: OptimizerConfig) -> Partition:
    return seed_partition(grid, n_labels, a_or_w, config.init, np.random.default_rng(config.seed))


def _pour_relabelling(labels: np.ndarray, grid: Grid, move: PourMove) -> Dict[int, int]:
    ball = ball_mask(grid, grid.cell_center(move.center), move.radius)
    moves = {}
    for source in sorted(move.sources):
        for u in np.flatnonzero((ball & (labels == source)).ravel()).tolist():
            moves[u] = move.target_map[source]
    return moves


def _check_move(p: Partition, move: PourMove):
    if max(move.sources | set(move.target_map.values())) > p.n_labels or min(move.sources) < 1:
        raise PreconditionError(f"Pour move labels outside 1..{p.n_labels}")
    if len(move.sources) >= p.n_labels:
        raise PreconditionError("Pour sources must be a proper subset of the labels")
    if move.radius < p.grid.h * (1 - 1e-12):
        raise PreconditionError(f"Pour radius {move.radius} is below the cell size {p.grid.h}")


def apply_pour(p: Partition, m: PourMove) -> Partition:
    """Pours W_i inside the ball into W_l(i) for every source i; cells outside the ball are unchanged"""
    _check_move(p, m)
    labels = p.labels.copy()
    flat = labels.ravel()
    for u, new in _pour_relabelling(p.labels, p.grid, m).items():
        flat[u] = new
    return p.with_labels(labels)


def _interface_cells(labels: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Flat indices (cell_a, cell_b) of every 4-neighbour interface face"""
    ny, nx = labels.shape
    flat = np.arange(ny * nx).reshape(ny, nx)
    horizontal = (labels[:, :-1] != labels[:, 1:]) & mask[:, :-1] & mask[:, 1:]
    vertical = (labels[:-1, :] != labels[1:, :]) & mask[:-1, :] & mask[1:, :]
    first = np.concatenate([flat[:, :-1][horizontal], flat[:-1, :][vertical]])
    second = np.concatenate([flat[:, 1:][horizontal], flat[1:, :][vertical]])
    return np.column_stack([first, second])


def _pour_candidates(model: IncrementalEnergy, ball_cells: List[int]) -> List[Tuple[FrozenSet[int], Dict[int, int]]]:
    """(sources, target map) pairs: everything into the majority phase, then each minority phase into
    the phase it shares the most interface weight with inside the ball"""
    labels = model.labels
    counts: Dict[int, int] = {}
    for u in ball_cells:
        counts[labels[u]] = counts.get(labels[u], 0) + 1
    majority = min(counts, key=lambda label: (-counts[label], label))
    others = frozenset(range(1, model.n_labels + 1)) - {majority}
    candidates = [(others, {label: majority for label in others})]

    in_ball = set(ball_cells)
    for label in sorted(counts):
        if label == majority:
            continue
        contact: Dict[int, float] = {}
        for u in ball_cells:
            if labels[u] != label:
                continue
            for v, price in model.neighbours[u]:
                if v in in_ball and labels[v] != label:
                    contact[labels[v]] = contact.get(labels[v], 0.0) + price
        if contact:
            target = min(contact, key=lambda other: (-contact[other], other))
            candidates.append((frozenset([label]), {label: target}))
    return candidates


def _propose(model: IncrementalEnergy, rng: np.random.Generator,
             radius_range: Tuple[float, float]) -> Optional[Tuple[PourMove, Dict[int, int], float]]:
    grid = model.grid
    labels = np.array(model.labels).reshape(grid.shape)
    faces = _interface_cells(labels, grid.mask)
    if len(faces) == 0:
        return None
    face = faces[rng.integers(len(faces))]
    center_flat = int(face[rng.integers(2)])
    center = divmod(center_flat, grid.nx)
    radius = float(rng.uniform(radius_range[0], radius_range[1]))
    ball_cells = np.flatnonzero(ball_mask(grid, grid.cell_center(center), radius).ravel()).tolist()

    best = None
    for sources, target_map in _pour_candidates(model, ball_cells):
        moves = {u: target_map[model.labels[u]] for u in ball_cells if model.labels[u] in sources}
        delta = model.delta(moves)
        if best is None or delta < best[2]:
            best = (PourMove(center, radius, sources, target_map), moves, delta)
    return best


def propose_pour(p: Partition, a: ScalarField, spec: SpecLike, rng: np.random.Generator,
                 radius_range: Optional[Tuple[float, float]] = None) -> Tuple[PourMove, float]:
    """Samples a ball centred on the interface and returns the candidate pour with the lowest exact delta J.

    Args:
        p (Partition): current partition, at least two nonempty phases
        a (ScalarField): interface weight
        spec (EnergySpec | BulkTermSpec): energy model
        rng (np.random.Generator): random source for the centre and radius
        radius_range (Tuple[float, float], optional): radius bounds. Defaults to (h, 3h).

    Returns:
        Tuple[PourMove, float]: best candidate and its delta J (may be >= 0)
    """
    model = IncrementalEnergy(p, a, spec)
    if model.nonempty_phases() < 2:
        raise PreconditionError("propose_pour needs at least two nonempty phases")
    radii = OptimizerConfig(radius_range=radius_range).radii(p.grid)
    proposal = _propose(model, rng, radii)
    if proposal is None:
        raise PreconditionError("The partition has no interface face to centre a pour on")
    move, _, delta = proposal
    return move, delta


def _checkerboard_order(grid: Grid) -> List[int]:
    rows, cols = np.nonzero(grid.mask)
    flat = rows * grid.nx + cols
    parity = (rows + cols) % 2
    return flat[parity == 0].tolist() + flat[parity == 1].tolist()


def _icm_pass(model: IncrementalEnergy, order: List[int], rng: Optional[np.random.Generator] = None,
              temperature: Optional[float] = None) -> int:
    flips = 0
    n_labels = model.n_labels
    tolerance = model.tolerance
    for u in order:
        current = model.labels[u]
        best_label, best_delta = current, math.inf
        for label in range(1, n_labels + 1):
            if label == current:
                continue
            delta = model.flip_delta(u, label)
            if delta < best_delta:
                best_label, best_delta = label, delta
        if best_label == current:
            continue
        accept = best_delta < -tolerance
        if not accept and temperature:
            accept = rng.random() < math.exp(-max(best_delta, 0.0) / temperature)
        if accept:
            model.apply({u: best_label})
            flips += 1
    return flips


def icm_sweep(p: Partition, a: ScalarField, spec: SpecLike) -> Tuple[Partition, bool]:
    """One greedy pass over all cells in checkerboard order; J never increases"""
    model = IncrementalEnergy(p, a, spec)
    flips = _icm_pass(model, _checkerboard_order(p.grid))
    return model.to_partition(), flips > 0


def _run(p0: Partition, a: ScalarField, spec: SpecLike, config: OptimizerConfig,
         rng: np.random.Generator) -> Tuple[Partition, EnergyTrace, float]:
    model = IncrementalEnergy(p0, a, spec)
    order = _checkerboard_order(p0.grid)
    radii = config.radii(p0.grid)
    trace = EnergyTrace()
    best_partition, best_total = p0, total_energy(p0, a, spec).total

    for sweep in range(1, config.max_sweeps + 1):
        temperature = None
        if config.temperature is not None:
            t0, decay = config.temperature
            temperature = t0 * decay ** (sweep - 1)

        flips = _icm_pass(model, order, rng, temperature)
        pours = 0
        for _ in range(config.pour_moves_per_sweep):
            if model.nonempty_phases() < 2:
                break
            proposal = _propose(model, rng, radii)
            if proposal is None:
                break
            _, moves, delta = proposal
            accept = delta < -model.tolerance
            if not accept and temperature:
                accept = rng.random() < math.exp(-max(delta, 0.0) / temperature)
            if accept:
                model.apply(moves)
                pours += 1

        current = model.to_partition()
        breakdown = total_energy(current, a, spec)
        trace.records.append(TraceRecord(sweep, breakdown.interface_term, breakdown.bulk_term, breakdown.total,
                                         flips, pours, temperature or 0.0))
        logger.debug(f"sweep {sweep}: J={breakdown.total:.6g} flips={flips} pours={pours}")
        if breakdown.total <= best_total:
            best_partition, best_total = current, breakdown.total
        if flips == 0 and pours == 0:
            break
    return best_partition, trace, best_total


def minimize(grid: Grid, n_labels: int, a: ScalarField, spec: SpecLike,
             config: OptimizerConfig) -> Tuple[Partition, EnergyTrace]:
    """Minimises J by alternating checkerboard sweeps and pour batches.

    Restart 0 starts from ``initialize``; further restarts start from ``config.restart_init``
    with child seeds of ``config.seed``. The partition with the lowest J wins and its trace is
    returned. The run is deterministic for a fixed config.

    Args:
        grid (Grid): grid with domain mask
        n_labels (int): number of labels N
        a (ScalarField): interface weight on the grid
        spec (EnergySpec | BulkTermSpec): energy model
        config (OptimizerConfig): schedule

    Returns:
        Tuple[Partition, EnergyTrace]: best partition found and its energy trace
    """
    children = np.random.SeedSequence(config.seed).spawn(config.restarts)
    winner = None
    for restart in range(config.restarts):
        if restart == 0:
            rng = np.random.default_rng(config.seed)
            p0 = seed_partition(grid, n_labels, a, config.init, rng)
        else:
            rng = np.random.default_rng(children[restart])
            p0 = seed_partition(grid, n_labels, a, config.restart_init, rng)
        partition, trace, total = _run(p0, a, spec, config, rng)
        logger.info(f"Restart {restart}: J={total:.10g} after {len(trace.records)} sweeps")
        if winner is None or total < winner[2]:
            winner = (partition, trace, total)

    partition, trace, total = winner
    if config.clean_min_volume is not None:
        cleaned = clean(partition, a, spec, config.clean_min_volume)
        changed = int(np.count_nonzero(cleaned.labels != partition.labels))
        if changed:
            breakdown = total_energy(cleaned, a, spec)
            last = trace.records[-1].sweep
            trace.records.append(TraceRecord(last + 1, breakdown.interface_term, breakdown.bulk_term,
                                             breakdown.total, changed, 0, 0.0))
            partition = cleaned
    return partition, trace


def _shared_weights(model: IncrementalEnergy, cells: List[int], label: int) -> Dict[int, float]:
    contact: Dict[int, float] = {}
    for u in cells:
        for v, price in model.neighbours[u]:
            other = model.labels[v]
            if other != label:
                contact[other] = contact.get(other, 0.0) + price
    return contact


def _absorb_one(model: IncrementalEnergy, threshold: float) -> bool:
    current = model.to_partition()
    for label in range(1, model.n_labels + 1):
        components, count = component_map(current, label)
        for index in range(1, count + 1):
            cells = np.flatnonzero((components == index).ravel()).tolist()
            if len(cells) * model.grid.cell_area >= threshold:
                continue
            contact = _shared_weights(model, cells, label)
            if not contact:
                continue
            target = min(contact, key=lambda other: (-contact[other], other))
            moves = {u: target for u in cells}
            if model.delta(moves) <= 0.0:
                model.apply(moves)
                return True
    return False


def clean(p: Partition, a: ScalarField, spec: SpecLike, min_component_volume: Optional[float] = None) -> Partition:
    """
    Absorbs connected components smaller than ``min_component_volume`` into the neighbouring phase
    they share the most interface weight with, whenever that does not increase J, until no such
    component is left. Defaults to a threshold of four cells.
    """
    threshold = min_component_volume if min_component_volume is not None else _DEFAULT_CLEAN_CELLS * p.grid.cell_area
    model = IncrementalEnergy(p, a, spec)
    steps = 0
    while steps < _MAX_CLEAN_STEPS and _absorb_one(model, threshold):
        steps += 1
    logger.info(f"Cleaning absorbed {steps} components")
    return model.to_partition()
