"""
Regularity diagnostics of a computed partition: Ahlfors ratios, Condition B inscribed
balls, relative isoperimetry, triple junction angles and the gauge exponent.

Interface points are face midpoints and balls are Euclidean. Every scan only uses
samples x in the interior region (the grid shrunk by a margin) with
2h <= r <= min(1, dist(x, boundary of the region)). Empirical constants are reported,
never asserted.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.ndimage import distance_transform_edt
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .energy import SpecLike, _edge_pairs, as_energy_spec, total_energy
from .exceptions import EmptyInterfaceError, PartitionToolsError, PreconditionError
from .grid import Grid, Partition, ScalarField, face_table, phase_volumes
from .landscape import WeightSpec

logger = logging.getLogger(__name__)

LENGTH_MEASURES = ("faces", "crofton")
AHLFORS_COLUMNS = ["x", "y", "r", "length", "ratio"]
PER_PHASE_COLUMNS = ["phase", "n_labels", "x", "y", "r", "length", "ratio"]
CONDITION_B_COLUMNS = ["x", "y", "r", "n_phases", "phase_1", "radius_1", "phase_2", "radius_2",
                       "ratio_1", "ratio_2", "c1", "single_phase"]
ISOPERIMETRY_COLUMNS = ["x", "y", "r", "phase", "volume", "perimeter", "weighted_perimeter", "ratio", "per_zero"]
JUNCTION_COLUMNS = ["x", "y", "labels", "n_branches", "angles", "angle_sum"]

_DEFAULT_SCALES = (2, 4, 8, 16)  # in units of h
_DEFAULT_CONDITION_B_RADIUS = 8  # in units of h
_DEFAULT_JUNCTION_RADIUS = 6  # in units of h
_MERGE_RADIUS = 2  # in units of h
_MAX_RADIUS = 1.0
_EPS = 1e-12

SamplePoints = Union[str, np.ndarray, Sequence[Tuple[float, float]]]


@dataclass(frozen=True)
class DiagnosticsConfig:
    """Sampling and toggles of ``full_report``. Lengths are absolute; None picks the defaults in units of h."""
    ahlfors: bool = True
    condition_b: bool = True
    isoperimetry: bool = True
    junctions: bool = True
    margin: Optional[float] = None
    scales: Optional[Sequence[float]] = None
    condition_b_radius: Optional[float] = None
    max_samples: int = 2000
    v0: Optional[float] = None
    junction_radius: Optional[float] = None
    length: str = "faces"

    def __post_init__(self):
        if self.max_samples < 1:
            raise PreconditionError(f"max_samples must be >= 1, got {self.max_samples}")
        if self.length not in LENGTH_MEASURES:
            raise PreconditionError(f"Unknown length measure {self.length}, expected one of {LENGTH_MEASURES}")
        for name in ("margin", "condition_b_radius", "v0", "junction_radius"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise PreconditionError(f"{name} must be >= 0, got {value}")


@dataclass(frozen=True)
class InteriorRegion:
    """The grid rectangle shrunk by ``margin``, further restricted to points at least ``margin`` inside the mask"""
    grid: Grid
    margin: float

    def distance_to_boundary(self, points: np.ndarray) -> np.ndarray:
        grid, m = self.grid, self.margin
        x, y = points[:, 0], points[:, 1]
        distance = np.minimum.reduce([x - m, grid.width - m - x, y - m, grid.height - m - y])
        if not grid.mask.all():
            inside = distance_transform_edt(np.pad(grid.mask, 1))[1:-1, 1:-1] * grid.h - 0.5 * grid.h
            cols = np.clip(np.floor(x / grid.h).astype(int), 0, grid.nx - 1)
            rows = np.clip(np.floor(y / grid.h).astype(int), 0, grid.ny - 1)
            distance = np.minimum(distance, inside[rows, cols] - m)
        return distance


def interior_region(grid: Grid, margin: Optional[float] = None) -> InteriorRegion:
    if margin is None:
        margin = max(4 * grid.h, 0.05 * min(grid.width, grid.height))
    return InteriorRegion(grid, float(margin))


@dataclass
class RegularityReport:
    ahlfors: pd.DataFrame
    per_phase_ahlfors: pd.DataFrame
    condition_b: pd.DataFrame
    isoperimetry: pd.DataFrame
    junctions: pd.DataFrame
    nontrivial_phases: int
    gauge: Optional[float]
    summary: Dict[str, object] = field(default_factory=dict)
    errors: Dict[str, str] = field(default_factory=dict)

    @property
    def ahlfors_min(self) -> float:
        return float(self.ahlfors.ratio.min()) if not self.ahlfors.empty else math.nan

    @property
    def ahlfors_max(self) -> float:
        return float(self.ahlfors.ratio.max()) if not self.ahlfors.empty else math.nan


def _measure_points(p: Partition, length: str) -> pd.DataFrame:
    """Points carrying interface length: face midpoints (weight h) or 8-neighbour Crofton edge midpoints"""
    if length not in LENGTH_MEASURES:
        raise PreconditionError(f"Unknown length measure {length}, expected one of {LENGTH_MEASURES}")
    h = p.grid.h
    if length == "faces":
        table = face_table(p)
        return pd.DataFrame({"x": table.x, "y": table.y, "weight": h,
                             "label_a": table.label_a, "label_b": table.label_b})
    frames = []
    labels = p.labels
    for rows_u, cols_u, rows_v, cols_v, factor in _edge_pairs(p.grid, "crofton8"):
        label_u, label_v = labels[rows_u, cols_u], labels[rows_v, cols_v]
        cut = label_u != label_v
        frames.append(pd.DataFrame({
            "x": ((cols_u[cut] + cols_v[cut]) / 2 + 0.5) * h,
            "y": ((rows_u[cut] + rows_v[cut]) / 2 + 0.5) * h,
            "weight": h * factor,
            "label_a": label_u[cut],
            "label_b": label_v[cut],
        }))
    return pd.concat(frames, ignore_index=True)


def _subsample(points: np.ndarray, max_samples: int) -> np.ndarray:
    if len(points) <= max_samples:
        return points
    return points[np.unique(np.linspace(0, len(points) - 1, max_samples).round().astype(int))]


def _sample_points(p: Partition, sample_points: SamplePoints, max_samples: int) -> np.ndarray:
    if isinstance(sample_points, str):
        if sample_points != "all":
            raise PreconditionError(f"sample_points must be 'all' or an array of points, got {sample_points}")
        table = face_table(p)
        if table.empty:
            raise EmptyInterfaceError("The partition has no interface faces to sample")
        return _subsample(table[["x", "y"]].to_numpy(dtype=float), max_samples)
    return np.asarray(sample_points, dtype=float).reshape(-1, 2)


def _resolve_scales(grid: Grid, scales: Optional[Iterable[float]]) -> List[float]:
    if scales is None:
        return [k * grid.h for k in _DEFAULT_SCALES]
    return [float(r) for r in scales]


def _admissible(distance: np.ndarray, r: float, h: float) -> np.ndarray:
    if r < 2 * h * (1 - _EPS) or r > _MAX_RADIUS:
        return np.zeros(len(distance), dtype=bool)
    return distance >= r * (1 - _EPS)


def _length_ratios(measure: pd.DataFrame, points: np.ndarray, scales: List[float],
                   region: InteriorRegion, columns: List[str]) -> pd.DataFrame:
    if measure.empty or len(points) == 0:
        return pd.DataFrame(columns=columns)
    tree = cKDTree(measure[["x", "y"]].to_numpy(dtype=float))
    weights = measure.weight.to_numpy(dtype=float)
    distance = region.distance_to_boundary(points)
    frames = []
    for r in scales:
        keep = _admissible(distance, r, region.grid.h)
        if not keep.any():
            logger.debug(f"No admissible sample point at r={r:.4g}")
            continue
        hits = tree.query_ball_point(points[keep], r * (1 + _EPS))
        lengths = np.array([weights[index].sum() for index in hits])
        frames.append(pd.DataFrame({"x": points[keep, 0], "y": points[keep, 1], "r": r,
                                    "length": lengths, "ratio": lengths / r}))
    if not frames:
        return pd.DataFrame(columns=columns)
    return pd.concat(frames, ignore_index=True)


def ahlfors_scan(p: Partition, sample_points: SamplePoints = "all", scales: Optional[Sequence[float]] = None,
                 config: Optional[DiagnosticsConfig] = None, length: Optional[str] = None) -> pd.DataFrame:
    """Interface length inside B(x, r) divided by r for every admissible sample point and scale.

    Args:
        p (Partition): partition to measure
        sample_points (str | array, optional): "all" interface midpoints or explicit (x, y) points. Defaults to "all".
        scales (Sequence[float], optional): radii. Defaults to 2h, 4h, 8h and 16h.
        config (DiagnosticsConfig, optional): margin and sample cap
        length (str, optional): "faces" counts face lengths, "crofton" uses 8-neighbour Crofton edge weights,
            which are close to isotropic. Defaults to the config's measure.

    Raises:
        EmptyInterfaceError: the partition has no interface

    Returns:
        pd.DataFrame: columns x, y, r, length, ratio
    """
    config = config or DiagnosticsConfig()
    measure = _measure_points(p, length or config.length)
    if measure.empty:
        raise EmptyInterfaceError("Ahlfors scan needs a nonempty interface")
    points = _sample_points(p, sample_points, config.max_samples)
    region = interior_region(p.grid, config.margin)
    return _length_ratios(measure, points, _resolve_scales(p.grid, scales), region, AHLFORS_COLUMNS)


def per_phase_ahlfors_scan(p: Partition, scales: Optional[Sequence[float]] = None,
                           config: Optional[DiagnosticsConfig] = None) -> pd.DataFrame:
    """Ahlfors ratios of each phase boundary, sampled on that boundary"""
    config = config or DiagnosticsConfig()
    measure = _measure_points(p, config.length)
    if measure.empty:
        raise EmptyInterfaceError("Per-phase Ahlfors scan needs a nonempty interface")
    table = face_table(p)
    region = interior_region(p.grid, config.margin)
    frames = []
    for phase in range(1, p.n_labels + 1):
        on_boundary = (measure.label_a == phase) | (measure.label_b == phase)
        sampled = table[(table.label_a == phase) | (table.label_b == phase)]
        if not on_boundary.any() or sampled.empty:
            continue
        points = _subsample(sampled[["x", "y"]].to_numpy(dtype=float), config.max_samples)
        ratios = _length_ratios(measure[on_boundary], points, _resolve_scales(p.grid, scales), region,
                                AHLFORS_COLUMNS)
        if not ratios.empty:
            frames.append(ratios.assign(phase=phase, n_labels=p.n_labels)[PER_PHASE_COLUMNS])
    if not frames:
        return pd.DataFrame(columns=PER_PHASE_COLUMNS)
    return pd.concat(frames, ignore_index=True)


def _window(grid: Grid, x: float, y: float, r: float) -> Tuple[slice, slice, np.ndarray]:
    """Cell window around B((x, y), r) with a one-cell rim, and the in-ball in-domain cells of it"""
    h = grid.h
    col_lo, col_hi = max(0, int(math.floor((x - r) / h)) - 1), min(grid.nx, int(math.ceil((x + r) / h)) + 1)
    row_lo, row_hi = max(0, int(math.floor((y - r) / h)) - 1), min(grid.ny, int(math.ceil((y + r) / h)) + 1)
    rows, cols = slice(row_lo, row_hi), slice(col_lo, col_hi)
    xs = (np.arange(col_lo, col_hi) + 0.5) * h
    ys = (np.arange(row_lo, row_hi) + 0.5) * h
    inside = (xs[None, :] - x) ** 2 + (ys[:, None] - y) ** 2 <= r * r * (1 + _EPS)
    return rows, cols, inside & grid.mask[rows, cols]


def _inscribed_radius(region: np.ndarray, h: float, r: float) -> float:
    depth = distance_transform_edt(np.pad(region, 1)).max()
    return float(min(r, max(0.0, depth * h - 0.5 * h)))


def condition_b_scan(p: Partition, sample_points: SamplePoints = "all", r: Optional[float] = None,
                     config: Optional[DiagnosticsConfig] = None) -> pd.DataFrame:
    """
    Largest inscribed ball of each phase inside B(x, r), from a distance transform of
    the phase restricted to the ball. Reports the two largest radii in distinct phases,
    normalised by r, and the empirical C1 = r / second radius. Balls holding a single
    phase are flagged, not dropped.
    """
    config = config or DiagnosticsConfig()
    grid = p.grid
    if r is None:
        r = config.condition_b_radius or _DEFAULT_CONDITION_B_RADIUS * grid.h
    points = _sample_points(p, sample_points, config.max_samples)
    distance = interior_region(grid, config.margin).distance_to_boundary(points)
    keep = (distance >= r * (1 - _EPS)) & (r <= _MAX_RADIUS)

    records = []
    for x, y in points[keep]:
        rows, cols, inside = _window(grid, x, y, r)
        labels = p.labels[rows, cols]
        radii = {int(label): _inscribed_radius(inside & (labels == label), grid.h, r)
                 for label in np.unique(labels[inside])}
        ranked = sorted(radii, key=lambda label: (-radii[label], label))
        first = ranked[0]
        second = ranked[1] if len(ranked) > 1 else 0
        radius_2 = radii[second] if second else 0.0
        records.append({
            "x": x, "y": y, "r": r, "n_phases": len(ranked),
            "phase_1": first, "radius_1": radii[first],
            "phase_2": second, "radius_2": radius_2,
            "ratio_1": radii[first] / r, "ratio_2": radius_2 / r,
            "c1": r / radius_2 if radius_2 > 0 else math.nan,
            "single_phase": len(ranked) < 2,
        })
    single = sum(record["single_phase"] for record in records)
    if single:
        logger.info(f"{single} of {len(records)} Condition B balls hold a single phase")
    return pd.DataFrame(records, columns=CONDITION_B_COLUMNS)


def _relative_faces(inner: np.ndarray, outer: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Horizontal and vertical faces between a cell of ``inner`` and a cell of ``outer``"""
    horizontal = (inner[:, :-1] & outer[:, 1:]) | (outer[:, :-1] & inner[:, 1:])
    vertical = (inner[:-1, :] & outer[1:, :]) | (outer[:-1, :] & inner[1:, :])
    return horizontal, vertical


def isoperimetry_scan(p: Partition, a: ScalarField, balls: Optional[Iterable[Tuple[float, float, float]]] = None,
                      v0: Optional[float] = None, config: Optional[DiagnosticsConfig] = None) -> pd.DataFrame:
    """|Z| / Per(Z; W_i)^2 for Z = W_i inside a ball, with Per the length of faces between Z and the rest of W_i.

    Args:
        p (Partition): partition
        a (ScalarField): interface weight, used for the weighted relative perimeter column
        balls (Iterable[Tuple[float, float, float]], optional): (x, y, r) balls. Defaults to every admissible
            interface sample and scale whose ball closure lies in the interior region.
        v0 (float, optional): only pieces with |Z| <= v0 are kept. Defaults to 0.1 |Omega|.
        config (DiagnosticsConfig, optional): margin, scales and sample cap

    Returns:
        pd.DataFrame: one row per (ball, phase) with Z nonempty; per_zero flags Per = 0 with |Z| > 0
    """
    config = config or DiagnosticsConfig()
    grid = p.grid
    if v0 is None:
        v0 = config.v0 if config.v0 is not None else 0.1 * grid.area
    if balls is None:
        balls = []
        if not face_table(p).empty:
            points = _sample_points(p, "all", config.max_samples)
            distance = interior_region(grid, config.margin).distance_to_boundary(points)
            for r in _resolve_scales(grid, config.scales):
                keep = _admissible(distance, r, grid.h) & (distance > r)
                balls += [(x, y, r) for x, y in points[keep]]

    records = []
    h = grid.h
    for x, y, r in balls:
        rows, cols, inside = _window(grid, x, y, r)
        labels = p.labels[rows, cols]
        values = a.values[rows, cols]
        for phase in np.unique(labels[inside]):
            phase_cells = labels == phase
            piece = inside & phase_cells
            volume = int(piece.sum()) * grid.cell_area
            if volume > v0:
                continue
            horizontal, vertical = _relative_faces(piece, phase_cells & ~piece)
            perimeter = h * int(horizontal.sum() + vertical.sum())
            weighted = h * float(
                (0.5 * (values[:, :-1] + values[:, 1:]))[horizontal].sum()
                + (0.5 * (values[:-1, :] + values[1:, :]))[vertical].sum())
            records.append({
                "x": x, "y": y, "r": r, "phase": int(phase), "volume": volume,
                "perimeter": perimeter, "weighted_perimeter": weighted,
                "ratio": volume / perimeter ** 2 if perimeter > 0 else math.nan,
                "per_zero": perimeter == 0,
            })
    return pd.DataFrame(records, columns=ISOPERIMETRY_COLUMNS)


def _junction_vertices(p: Partition) -> Tuple[np.ndarray, List[frozenset]]:
    labels = p.labels
    corners = np.stack([labels[:-1, :-1], labels[:-1, 1:], labels[1:, :-1], labels[1:, 1:]])
    inside = (corners > 0).all(axis=0)
    ordered = np.sort(corners, axis=0)
    distinct = 1 + (np.diff(ordered, axis=0) != 0).sum(axis=0)
    rows, cols = np.nonzero(inside & (distinct >= 3))
    vertices = np.column_stack([(cols + 1) * p.grid.h, (rows + 1) * p.grid.h]).astype(float)
    label_sets = [frozenset(int(v) for v in corners[:, r, c]) for r, c in zip(rows, cols)]
    return vertices, label_sets


def _branch_angle(points: np.ndarray, center: np.ndarray) -> Optional[float]:
    """Direction in degrees of the least-squares line through ``center``, pointing towards the points"""
    offsets = points - center
    if len(offsets) < 2:
        return None
    _, vectors = np.linalg.eigh(offsets.T @ offsets)
    direction = vectors[:, -1]
    if offsets.mean(axis=0) @ direction < 0:
        direction = -direction
    return math.degrees(math.atan2(direction[1], direction[0])) % 360.0


def junction_scan(p: Partition, radius: Optional[float] = None) -> pd.DataFrame:
    """Triple junctions and the angles between their branches.

    A grid vertex whose four cells carry three distinct labels is a candidate; candidates
    within 2h are merged. Each phase-pair interface near the junction gives one branch
    direction, fitted to its face midpoints within ``radius`` (default 6h). The angles are
    the gaps between consecutive branch directions and sum to 360.
    """
    grid = p.grid
    radius = radius or _DEFAULT_JUNCTION_RADIUS * grid.h
    vertices, label_sets = _junction_vertices(p)
    if len(vertices) == 0:
        return pd.DataFrame(columns=JUNCTION_COLUMNS)

    pairs = np.array(sorted(cKDTree(vertices).query_pairs(_MERGE_RADIUS * grid.h * (1 + _EPS))), dtype=int)
    pairs = pairs.reshape(-1, 2)
    adjacency = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(len(vertices),) * 2)
    n_junctions, membership = connected_components(adjacency, directed=False)

    faces = face_table(p)
    face_points = faces[["x", "y"]].to_numpy(dtype=float)
    face_tree = cKDTree(face_points)
    low = np.minimum(faces.label_a, faces.label_b).to_numpy()
    high = np.maximum(faces.label_a, faces.label_b).to_numpy()

    records = []
    for junction in range(n_junctions):
        members = np.flatnonzero(membership == junction)
        center = vertices[members].mean(axis=0)
        labels = sorted(frozenset().union(*(label_sets[m] for m in members)))
        nearby = np.array(face_tree.query_ball_point(center, radius), dtype=int)
        angles = []
        for i, first in enumerate(labels):
            for second in labels[i + 1:]:
                branch = nearby[(low[nearby] == first) & (high[nearby] == second)]
                angle = _branch_angle(face_points[branch], center)
                if angle is not None:
                    angles.append(angle)
        angles.sort()
        gaps = tuple(later - earlier for earlier, later in zip(angles, angles[1:]))
        if angles:
            gaps += (360.0 - (angles[-1] - angles[0]),)
        records.append({
            "x": float(center[0]), "y": float(center[1]), "labels": tuple(labels),
            "n_branches": len(angles), "angles": gaps, "angle_sum": float(sum(gaps)),
        })
    logger.info(f"Found {len(records)} junctions from {len(vertices)} candidate vertices")
    return pd.DataFrame(records, columns=JUNCTION_COLUMNS)


def gauge_exponent(alpha: float, beta: float, n: int = 2) -> float:
    """gamma = min(beta, alpha n - n + 1)"""
    return min(beta, alpha * n - n + 1)


def holder_constant_scan(a: ScalarField, beta: float, region: Optional[InteriorRegion] = None) -> float:
    """
    Empirical sup |a(x) - a(y)| / |x - y|^beta over in-region cell pairs at axis and
    diagonal offsets of 1, 2, 4, ... cells.
    """
    if not 0 < beta <= 1:
        raise PreconditionError(f"Hölder exponent beta must lie in (0, 1], got {beta}")
    grid = a.grid
    region = region or interior_region(grid)
    xs, ys = grid.cell_centers()
    centers = np.column_stack([xs.ravel(), ys.ravel()])
    usable = (region.distance_to_boundary(centers) >= 0).reshape(grid.shape) & grid.mask
    values = a.values
    best = 0.0
    step = 1
    while step < max(grid.nx, grid.ny):
        for dr, dc in ((0, step), (step, 0), (step, step), (step, -step)):
            r0, r1 = max(0, -dr), grid.ny - max(0, dr)
            c0, c1 = max(0, -dc), grid.nx - max(0, dc)
            if r1 <= r0 or c1 <= c0:
                continue
            both = usable[r0:r1, c0:c1] & usable[r0 + dr:r1 + dr, c0 + dc:c1 + dc]
            if not both.any():
                continue
            gap = np.abs(values[r0:r1, c0:c1] - values[r0 + dr:r1 + dr, c0 + dc:c1 + dc])[both]
            best = max(best, float(gap.max()) / (grid.h * math.hypot(dr, dc)) ** beta)
        step *= 2
    return best


def _run_section(name: str, errors: Dict[str, str], empty: List[str], scan, *args, **kwargs) -> pd.DataFrame:
    try:
        return scan(*args, **kwargs)
    except PartitionToolsError as e:
        logger.info(f"Diagnostics section {name} skipped: {e}")
        errors[name] = str(e)
        return pd.DataFrame(columns=empty)


def full_report(p: Partition, a: ScalarField, spec: SpecLike, weight_spec: Optional[WeightSpec] = None,
                config: Optional[DiagnosticsConfig] = None) -> RegularityReport:
    """Runs every enabled scan with default sampling and assembles the report.

    Errors of a single section are collected in ``errors`` and leave that section empty.

    Args:
        p (Partition): partition to diagnose
        a (ScalarField): interface weight
        spec (EnergySpec | BulkTermSpec): energy model, gives the declared alpha
        weight_spec (WeightSpec, optional): gives the declared beta. Defaults to None (no gauge).
        config (DiagnosticsConfig, optional): sampling and toggles

    Returns:
        RegularityReport: all sections plus a summary of the empirical constants
    """
    config = config or DiagnosticsConfig()
    grid = p.grid
    errors: Dict[str, str] = {}
    empty_sections = {"ahlfors": AHLFORS_COLUMNS, "per_phase_ahlfors": PER_PHASE_COLUMNS,
                      "condition_b": CONDITION_B_COLUMNS, "isoperimetry": ISOPERIMETRY_COLUMNS,
                      "junctions": JUNCTION_COLUMNS}
    sections = {name: pd.DataFrame(columns=columns) for name, columns in empty_sections.items()}

    if config.ahlfors:
        sections["ahlfors"] = _run_section("ahlfors", errors, AHLFORS_COLUMNS, ahlfors_scan, p,
                                           scales=config.scales, config=config)
        sections["per_phase_ahlfors"] = _run_section("per_phase_ahlfors", errors, PER_PHASE_COLUMNS,
                                                     per_phase_ahlfors_scan, p, scales=config.scales, config=config)
    if config.condition_b:
        sections["condition_b"] = _run_section("condition_b", errors, CONDITION_B_COLUMNS, condition_b_scan, p,
                                               config=config)
    if config.isoperimetry:
        sections["isoperimetry"] = _run_section("isoperimetry", errors, ISOPERIMETRY_COLUMNS, isoperimetry_scan,
                                                p, a, config=config)
    if config.junctions:
        sections["junctions"] = _run_section("junctions", errors, JUNCTION_COLUMNS, junction_scan, p,
                                             radius=config.junction_radius)

    alpha = as_energy_spec(spec).bulk.alpha
    beta = weight_spec.beta if weight_spec is not None else None
    gauge = gauge_exponent(alpha, beta) if beta is not None else None
    nontrivial = int(np.count_nonzero(phase_volumes(p) > 0))
    breakdown = total_energy(p, a, spec)
    region = interior_region(grid, config.margin)

    condition_b = sections["condition_b"]
    two_phase = condition_b[~condition_b.single_phase.astype(bool)] if not condition_b.empty else condition_b
    isoperimetry = sections["isoperimetry"]
    summary = {
        "n_labels": p.n_labels,
        "nontrivial_phases": nontrivial,
        "alpha": alpha,
        "beta": beta if beta is not None else math.nan,
        "gauge": gauge if gauge is not None else math.nan,
        "margin": region.margin,
        "interface_term": breakdown.interface_term,
        "interface_term_once": breakdown.interface_term_once,
        "interface_length": breakdown.interface_length_unweighted,
        "bulk_term": breakdown.bulk_term,
        "total": breakdown.total,
        "ahlfors_samples": len(sections["ahlfors"]),
        "ahlfors_min": float(sections["ahlfors"].ratio.min()) if not sections["ahlfors"].empty else math.nan,
        "ahlfors_max": float(sections["ahlfors"].ratio.max()) if not sections["ahlfors"].empty else math.nan,
        "condition_b_samples": len(condition_b),
        "condition_b_single_phase": int(condition_b.single_phase.sum()) if not condition_b.empty else 0,
        "condition_b_min_ratio": float(two_phase.ratio_2.min()) if not two_phase.empty else math.nan,
        "c1_max": float(two_phase.c1.max()) if not two_phase.empty else math.nan,
        "isoperimetry_max": float(isoperimetry.ratio.max()) if isoperimetry.ratio.notna().any() else math.nan,
        "isoperimetry_per_zero": int(isoperimetry.per_zero.sum()) if not isoperimetry.empty else 0,
        "junction_count": len(sections["junctions"]),
        "clamped_fraction": float(a.clamped[grid.mask].mean()) if a.clamped is not None else 0.0,
        "holder_constant_a": holder_constant_scan(a, beta, region) if beta is not None else math.nan,
    }
    return RegularityReport(
        ahlfors=sections["ahlfors"],
        per_phase_ahlfors=sections["per_phase_ahlfors"],
        condition_b=condition_b,
        isoperimetry=isoperimetry,
        junctions=sections["junctions"],
        nontrivial_phases=nontrivial,
        gauge=gauge,
        summary=summary,
        errors=errors,
    )
