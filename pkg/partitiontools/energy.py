"""
Energy J = F + G of a partition.

F is the a-weighted interface length counted from both sides: every interface
face contributes a_f * h to each of the two phases it separates, so the sum of
the per-phase perimeters is F. G is a bulk term on phase volumes (or q-weighted
volumes).
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .exceptions import PreconditionError
from .grid import Cell, Grid, Partition, ScalarField, symmetric_difference_distance

logger = logging.getLogger(__name__)

BULK_KINDS = ("volume_quadratic", "volume_generic_h", "weighted_volume")

# (row shift, col shift, length factor) per edge family; each family is used in both directions
STENCILS = {
    "axis": ((0, 1, 1.0), (1, 0, 1.0)),
    "crofton8": (
        (0, 1, math.pi / 8),
        (1, 0, math.pi / 8),
        (1, 1, math.pi / (8 * math.sqrt(2))),
        (1, -1, math.pi / (8 * math.sqrt(2))),
    ),
}

# moves are taken only below this delta
ACCEPT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class BulkTermSpec:
    """Parameters of the bulk term G.

    kind:
        volume_quadratic  G = lam * sum_i (|W_i| - t_i)^2
        volume_generic_h  G = sum_i h(|W_i|), h sampled in ``h_table`` and linearly interpolated
        weighted_volume   G = lam * sum_i (m_i - t_i)^2, or lam * sum_i h(m_i) with an h_table,
                          where m_i is the integral of ``q_weight`` over W_i
    ``alpha``/``c_alpha`` are the declared Hölder exponent and constant of G for the
    symmetric-difference distance.
    """
    kind: str = "volume_quadratic"
    lam: float = 0.0
    target_volumes: Optional[Sequence[float]] = None
    alpha: float = 1.0
    c_alpha: Optional[float] = None
    h_table: Optional[Tuple[Sequence[float], Sequence[float]]] = None
    q_weight: Optional[ScalarField] = None

    def __post_init__(self):
        if self.kind not in BULK_KINDS:
            raise PreconditionError(f"Unknown bulk kind {self.kind}, expected one of {BULK_KINDS}")
        if self.lam < 0:
            raise PreconditionError(f"Coupling lambda must be >= 0, got {self.lam}")
        # n = 2: alpha must exceed (n - 1) / n
        if not 0.5 < self.alpha <= 1:
            raise PreconditionError(f"Hölder exponent alpha must lie in (1/2, 1], got {self.alpha}")
        if self.c_alpha is not None and self.c_alpha < 0:
            raise PreconditionError(f"Hölder constant must be >= 0, got {self.c_alpha}")
        if self.target_volumes is not None:
            targets = tuple(float(t) for t in self.target_volumes)
            if any(t < 0 for t in targets):
                raise PreconditionError("Target volumes must be >= 0")
            object.__setattr__(self, "target_volumes", targets)
        if self.kind == "volume_generic_h" and self.h_table is None:
            raise PreconditionError("Bulk kind volume_generic_h needs an h_table")
        if self.kind == "weighted_volume" and self.q_weight is None:
            raise PreconditionError("Bulk kind weighted_volume needs a q_weight field")
        if self.h_table is not None:
            xs, ys = (np.asarray(col, dtype=float) for col in self.h_table)
            if xs.ndim != 1 or xs.shape != ys.shape or len(xs) < 2:
                raise PreconditionError("h_table needs two equally long columns with at least two samples")
            if (np.diff(xs) <= 0).any():
                raise PreconditionError("h_table abscissae must be strictly increasing")
            object.__setattr__(self, "h_table", (xs, ys))


@dataclass(frozen=True, eq=False)
class EnergySpec:
    """Bulk term plus the interface options: per-label price multipliers and the edge stencil"""
    bulk: BulkTermSpec = field(default_factory=BulkTermSpec)
    label_weights: Optional[Sequence[float]] = None
    stencil: str = "axis"

    def __post_init__(self):
        if self.stencil not in STENCILS:
            raise PreconditionError(f"Unknown stencil {self.stencil}, expected one of {tuple(STENCILS)}")
        if self.label_weights is not None:
            weights = tuple(float(c) for c in self.label_weights)
            if any(c <= 0 for c in weights):
                raise PreconditionError("Label weights must be positive")
            object.__setattr__(self, "label_weights", weights)


SpecLike = Union[EnergySpec, BulkTermSpec]


def as_energy_spec(spec: SpecLike) -> EnergySpec:
    return spec if isinstance(spec, EnergySpec) else EnergySpec(bulk=spec)


@dataclass(frozen=True)
class EnergyBreakdown:
    interface_term: float
    bulk_term: float
    total: float
    per_phase_perimeter: Tuple[float, ...]
    interface_length_unweighted: float

    @property
    def interface_term_once(self) -> float:
        """Weighted length of the total interface counted once"""
        return self.interface_term / 2.0


def _label_weights(spec: EnergySpec, n_labels: int) -> np.ndarray:
    weights = np.ones(n_labels + 1)
    if spec.label_weights is not None:
        if len(spec.label_weights) != n_labels:
            raise PreconditionError(f"Got {len(spec.label_weights)} label weights for {n_labels} labels")
        weights[1:] = spec.label_weights
    return weights


def resolved_targets(bulk: BulkTermSpec, grid: Grid, n_labels: int) -> np.ndarray:
    """Targets of the bulk term, defaulting to an equal share of the total (weighted) volume"""
    if bulk.target_volumes is not None:
        if len(bulk.target_volumes) != n_labels:
            raise PreconditionError(f"Got {len(bulk.target_volumes)} target volumes for {n_labels} labels")
        return np.asarray(bulk.target_volumes, dtype=float)
    total = float(cell_masses(grid, bulk)[grid.mask].sum())
    return np.full(n_labels, total / n_labels)


def cell_masses(grid: Grid, bulk: BulkTermSpec) -> np.ndarray:
    if bulk.kind == "weighted_volume":
        if not bulk.q_weight.grid.same_as(grid):
            raise PreconditionError("q_weight lives on a different grid")
        return bulk.q_weight.values * grid.cell_area
    masses = np.full(grid.shape, grid.cell_area)
    masses[~grid.mask] = 0.0
    return masses


class _BulkTerm:
    """Per-phase summands of G for a fixed spec, grid and label count"""

    def __init__(self, bulk: BulkTermSpec, grid: Grid, n_labels: int):
        self.bulk = bulk
        self.targets = resolved_targets(bulk, grid, n_labels).tolist()
        self.total_mass = float(cell_masses(grid, bulk)[grid.mask].sum())
        if bulk.h_table is not None:
            xs, ys = bulk.h_table
            if xs[0] > 0 or xs[-1] < self.total_mass:
                raise PreconditionError(
                    f"h_table covers [{xs[0]}, {xs[-1]}] but volumes range over [0, {self.total_mass}]")
            self.xs, self.ys = xs, ys

    def term(self, label: int, mass: float) -> float:
        bulk = self.bulk
        if bulk.kind == "volume_generic_h":
            return float(np.interp(mass, self.xs, self.ys))
        if bulk.kind == "weighted_volume" and bulk.h_table is not None:
            return bulk.lam * float(np.interp(mass, self.xs, self.ys))
        excess = mass - self.targets[label - 1]
        return bulk.lam * excess * excess

    def value(self, masses: Sequence[float]) -> float:
        return math.fsum(self.term(label, mass) for label, mass in enumerate(masses, start=1))

    def values(self, masses: np.ndarray) -> np.ndarray:
        """Row-wise G for an array of phase masses with one column per label"""
        bulk = self.bulk
        if bulk.h_table is not None:
            terms = np.interp(masses, self.xs, self.ys)
            scale = 1.0 if bulk.kind == "volume_generic_h" else bulk.lam
            return scale * terms.sum(axis=1)
        excess = masses - np.asarray(self.targets)
        return bulk.lam * (excess * excess).sum(axis=1)


def phase_masses(p: Partition, bulk: BulkTermSpec) -> np.ndarray:
    masses = cell_masses(p.grid, bulk)
    return np.bincount(p.labels[p.grid.mask], weights=masses[p.grid.mask], minlength=p.n_labels + 1)[1:]


def _edge_pairs(grid: Grid, stencil: str):
    """Yields (rows_u, cols_u, rows_v, cols_v, factor) for every in-domain edge of each stencil family"""
    mask = grid.mask
    for dr, dc, factor in STENCILS[stencil]:
        rows, cols = np.nonzero(mask)
        rows_v, cols_v = rows + dr, cols + dc
        valid = (rows_v >= 0) & (rows_v < grid.ny) & (cols_v >= 0) & (cols_v < grid.nx)
        rows, cols, rows_v, cols_v = rows[valid], cols[valid], rows_v[valid], cols_v[valid]
        inside = mask[rows_v, cols_v]
        yield rows[inside], cols[inside], rows_v[inside], cols_v[inside], factor


def _check_weight(p: Partition, a: ScalarField):
    if not a.grid.same_as(p.grid):
        raise PreconditionError("Weight field lives on a different grid than the partition")


def interface_energy(p: Partition, a: ScalarField, spec: Optional[SpecLike] = None) -> Tuple[float, np.ndarray]:
    """Weighted interface term F and the per-phase perimeters.

    Args:
        p (Partition): partition
        a (ScalarField): interface weight on p's grid
        spec (EnergySpec, optional): label weights and stencil. Defaults to the plain face model.

    Returns:
        Tuple[float, np.ndarray]: (F, per-phase perimeters), with F the exactly rounded sum of the latter
    """
    _check_weight(p, a)
    spec = as_energy_spec(spec if spec is not None else BulkTermSpec())
    F, per_phase, _ = _interface_terms(p, a, spec)
    return F, per_phase


def _interface_terms(p: Partition, a: ScalarField, spec: EnergySpec) -> Tuple[float, np.ndarray, float]:
    weights = _label_weights(spec, p.n_labels)
    labels, values, h = p.labels, a.values, p.grid.h
    phase_ids, contributions = [], []
    length = 0.0
    for rows_u, cols_u, rows_v, cols_v, factor in _edge_pairs(p.grid, spec.stencil):
        label_u = labels[rows_u, cols_u]
        label_v = labels[rows_v, cols_v]
        cut = label_u != label_v
        label_u, label_v = label_u[cut], label_v[cut]
        price = 0.5 * (values[rows_u[cut], cols_u[cut]] + values[rows_v[cut], cols_v[cut]]) * h * factor
        phase_ids += [label_u, label_v]
        contributions += [price * weights[label_u], price * weights[label_v]]
        length += h * factor * int(cut.sum())
    if phase_ids:
        per_phase = np.bincount(np.concatenate(phase_ids), weights=np.concatenate(contributions),
                                minlength=p.n_labels + 1)[1:]
    else:
        per_phase = np.zeros(p.n_labels)
    return math.fsum(per_phase), per_phase, length


def bulk_energy(p: Partition, spec: SpecLike) -> float:
    """Bulk term G of the partition (see BulkTermSpec for the kinds)"""
    bulk = as_energy_spec(spec).bulk
    return _BulkTerm(bulk, p.grid, p.n_labels).value(phase_masses(p, bulk).tolist())


def total_energy(p: Partition, a: ScalarField, spec: SpecLike) -> EnergyBreakdown:
    _check_weight(p, a)
    spec = as_energy_spec(spec)
    F, per_phase, length = _interface_terms(p, a, spec)
    G = bulk_energy(p, spec)
    return EnergyBreakdown(
        interface_term=F,
        bulk_term=G,
        total=F + G,
        per_phase_perimeter=tuple(float(v) for v in per_phase),
        interface_length_unweighted=length,
    )


class IncrementalEnergy:
    """
    Mutable working copy of a partition that evaluates exact energy changes of relabelling moves.

    Cells are addressed by their flat row-major index. Neighbour prices (two-cell mean of a,
    times h and the stencil factor) are computed once.
    """

    def __init__(self, p: Partition, a: ScalarField, spec: SpecLike):
        _check_weight(p, a)
        self.spec = as_energy_spec(spec)
        self.grid = p.grid
        self.n_labels = p.n_labels
        self.labels: List[int] = p.labels.ravel().tolist()
        self.weights: List[float] = _label_weights(self.spec, p.n_labels).tolist()
        self.bulk = _BulkTerm(self.spec.bulk, p.grid, p.n_labels)

        nx = p.grid.nx
        self.neighbours: List[List[Tuple[int, float]]] = [[] for _ in range(p.grid.nx * p.grid.ny)]
        values, h = a.values, p.grid.h
        for rows_u, cols_u, rows_v, cols_v, factor in _edge_pairs(p.grid, self.spec.stencil):
            prices = 0.5 * (values[rows_u, cols_u] + values[rows_v, cols_v]) * h * factor
            flat_u = (rows_u * nx + cols_u).tolist()
            flat_v = (rows_v * nx + cols_v).tolist()
            for u, v, price in zip(flat_u, flat_v, prices.tolist()):
                self.neighbours[u].append((v, price))
                self.neighbours[v].append((u, price))

        masses = cell_masses(p.grid, self.spec.bulk)
        self.mass: List[float] = masses.ravel().tolist()
        self._uniform = self.spec.bulk.kind != "weighted_volume"
        self._cell_area = p.grid.cell_area
        counts = np.bincount(p.labels[p.grid.mask], minlength=p.n_labels + 1)
        self.counts: List[int] = counts.tolist()
        self.masses: List[float] = [0.0] + phase_masses(p, self.spec.bulk).tolist()
        # acceptance threshold relative to the size of J
        self.tolerance = ACCEPT_TOL * max(1.0, abs(total_energy(p, a, self.spec).total))

    def _pair_cost(self, x: int, y: int, price: float) -> float:
        if x == y:
            return 0.0
        return price * (self.weights[x] + self.weights[y])

    def _phase_mass(self, label: int, count_change: int = 0, mass_change: float = 0.0) -> float:
        # unweighted volumes stay exact multiples of the cell area
        if self._uniform:
            return (self.counts[label] + count_change) * self._cell_area
        return self.masses[label] + mass_change

    def _bulk_delta(self, count_changes: Dict[int, int], mass_changes: Dict[int, float]) -> float:
        delta = 0.0
        for label in sorted(count_changes):
            if count_changes[label] == 0 and mass_changes[label] == 0.0:
                continue
            before = self.bulk.term(label, self._phase_mass(label))
            after = self.bulk.term(label, self._phase_mass(label, count_changes[label], mass_changes[label]))
            delta += after - before
        return delta

    def flip_delta(self, u: int, new_label: int) -> float:
        """Exact change of J when cell u alone takes new_label"""
        old = self.labels[u]
        if old == new_label:
            return 0.0
        labels, weights = self.labels, self.weights
        dF = 0.0
        for v, price in self.neighbours[u]:
            lv = labels[v]
            if lv != new_label:
                dF += price * (weights[new_label] + weights[lv])
            if lv != old:
                dF -= price * (weights[old] + weights[lv])
        m = self.mass[u]
        return dF + self._bulk_delta({old: -1, new_label: 1}, {old: -m, new_label: m})

    def delta(self, moves: Dict[int, int]) -> float:
        """Exact change of J when every cell u in moves takes label moves[u]"""
        labels = self.labels
        dF = 0.0
        count_changes: Dict[int, int] = {}
        mass_changes: Dict[int, float] = {}
        for u, new in moves.items():
            old = labels[u]
            if old == new:
                continue
            for v, price in self.neighbours[u]:
                if v in moves:
                    if v < u and labels[v] != moves[v]:
                        continue
                    new_v = moves[v]
                else:
                    new_v = labels[v]
                dF += self._pair_cost(new, new_v, price) - self._pair_cost(old, labels[v], price)
            m = self.mass[u]
            count_changes[old] = count_changes.get(old, 0) - 1
            count_changes[new] = count_changes.get(new, 0) + 1
            mass_changes[old] = mass_changes.get(old, 0.0) - m
            mass_changes[new] = mass_changes.get(new, 0.0) + m
        return dF + self._bulk_delta(count_changes, mass_changes)

    def apply(self, moves: Dict[int, int]):
        for u, new in moves.items():
            old = self.labels[u]
            if old == new:
                continue
            self.labels[u] = new
            self.counts[old] -= 1
            self.counts[new] += 1
            self.masses[old] -= self.mass[u]
            self.masses[new] += self.mass[u]

    def nonempty_phases(self) -> int:
        return sum(1 for count in self.counts[1:] if count > 0)

    def to_partition(self) -> Partition:
        return Partition(self.grid, self.n_labels, np.array(self.labels).reshape(self.grid.shape))


def _flat_cells(grid: Grid, cells: Iterable[Cell]) -> List[int]:
    flat = []
    for row, col in cells:
        if not (0 <= row < grid.ny and 0 <= col < grid.nx) or not grid.mask[row, col]:
            raise PreconditionError(f"Cell {(row, col)} is not inside the domain")
        flat.append(row * grid.nx + col)
    return flat


def energy_delta(p: Partition, cells: Iterable[Cell], new_label: int, a: ScalarField, spec: SpecLike) -> float:
    """J(p') - J(p) where p' relabels exactly ``cells`` to ``new_label``"""
    if not 1 <= new_label <= p.n_labels:
        raise PreconditionError(f"Label {new_label} outside 1..{p.n_labels}")
    flat = _flat_cells(p.grid, cells)
    if not flat:
        raise PreconditionError("energy_delta needs at least one cell")
    model = IncrementalEnergy(p, a, spec)
    return model.delta({u: new_label for u in flat})


@dataclass(frozen=True)
class HolderReport:
    alpha: float
    c_alpha: float
    n_pairs: int
    violations: List[int]
    tightest_constant: float


def default_holder_constant(bulk: BulkTermSpec, grid: Grid, n_labels: int) -> float:
    """A constant C with |G(W) - G(W')| <= C dist(W, W') for the shipped bulk kinds (alpha = 1).

    volume_quadratic: |v^2 - v'^2| <= 2 M |v - v'| with M bounding volumes and targets.
    The q-weighted and tabulated kinds scale by max q and by the largest slope of h.
    """
    term = _BulkTerm(bulk, grid, n_labels)
    bound = max([term.total_mass] + list(term.targets))
    q_max = float(bulk.q_weight.domain_values().max()) if bulk.kind == "weighted_volume" else 1.0
    if bulk.h_table is not None:
        xs, ys = bulk.h_table
        slope = float(np.max(np.abs(np.diff(ys) / np.diff(xs))))
        scale = 1.0 if bulk.kind == "volume_generic_h" else bulk.lam
        return scale * slope * q_max
    return 2.0 * bulk.lam * bound * q_max


def verify_holder_bound(samples: Sequence[Tuple[Partition, Partition]], spec: SpecLike) -> HolderReport:
    """Checks |G(p) - G(q)| <= C_alpha dist(p, q)^alpha on every pair.

    Uses the declared alpha and C_alpha of the bulk spec; C_alpha defaults to
    ``default_holder_constant`` when not declared.

    Args:
        samples (Sequence[Tuple[Partition, Partition]]): pairs of partitions on one grid
        spec (EnergySpec | BulkTermSpec): energy model

    Returns:
        HolderReport: indices of violating pairs and the smallest constant that covers every pair
    """
    bulk = as_energy_spec(spec).bulk
    if not samples:
        return HolderReport(bulk.alpha, bulk.c_alpha or 0.0, 0, [], 0.0)
    first = samples[0][0]
    c_alpha = bulk.c_alpha if bulk.c_alpha is not None else default_holder_constant(bulk, first.grid, first.n_labels)
    term = _BulkTerm(bulk, first.grid, first.n_labels)

    violations, tightest = [], 0.0
    for index, (p, q) in enumerate(samples):
        distance = symmetric_difference_distance(p, q)
        gap = abs(term.value(phase_masses(p, bulk).tolist()) - term.value(phase_masses(q, bulk).tolist()))
        if distance == 0:
            if gap > 0:
                violations.append(index)
            continue
        scaled = distance ** bulk.alpha
        tightest = max(tightest, gap / scaled)
        if gap > c_alpha * scaled * (1 + 1e-12) + 1e-12:
            violations.append(index)
    if violations:
        logger.info(f"Hölder bound violated on {len(violations)} of {len(samples)} pairs")
    return HolderReport(bulk.alpha, c_alpha, len(samples), violations, tightest)
