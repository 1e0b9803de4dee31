"""
Landscape (torsion) function and interface weights built from it.

The landscape function w solves -Laplace(w) + V w = 1 in the domain with w = 0
outside. The discrete operator is the 5-point Laplacian; the Dirichlet value is
imposed on the boundary faces through an antisymmetric ghost value, which keeps
the matrix symmetric positive definite whenever V >= 0.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import cg

from .exceptions import ConvergenceError, PreconditionError
from .grid import Grid, InterfaceFace, ScalarField

logger = logging.getLogger(__name__)

WEIGHT_SOURCES = ("field", "landscape")
_DEFAULT_TOL = 1e-8
_MAX_RESTARTS = 5


@dataclass(frozen=True)
class WeightSpec:
    """How to turn a field into an interface weight a(x).

    ``source="landscape"`` gives a = clamp(delta + w, delta, cap); ``source="field"``
    gives a = clamp(field, delta, cap). ``beta`` and ``c_beta`` are the declared
    Hölder exponent and constant of a, used only for reporting the gauge exponent.
    """
    delta: float
    cap: float = 1.0
    source: str = "landscape"
    beta: Optional[float] = None
    c_beta: Optional[float] = None

    def __post_init__(self):
        if not 0 < self.delta <= self.cap:
            raise PreconditionError(f"Weight spec needs 0 < delta <= cap, got delta={self.delta}, cap={self.cap}")
        if self.source not in WEIGHT_SOURCES:
            raise PreconditionError(f"Unknown weight source {self.source}, expected one of {WEIGHT_SOURCES}")
        if self.beta is not None and not 0 < self.beta <= 1:
            raise PreconditionError(f"Hölder exponent beta must lie in (0, 1], got {self.beta}")
        if self.c_beta is not None and self.c_beta < 0:
            raise PreconditionError(f"Hölder constant C_beta must be >= 0, got {self.c_beta}")


@dataclass(frozen=True)
class SolveInfo:
    iterations: int
    residual: float


def _active_axes(grid: Grid) -> Tuple[bool, bool]:
    # a one-row (or one-column) grid is treated as the 1D problem
    if grid.ny == 1 and grid.nx > 1:
        return True, False
    if grid.nx == 1 and grid.ny > 1:
        return False, True
    return True, True


def landscape_operator(grid: Grid, V: ScalarField) -> sparse.csr_matrix:
    """Assembles the discrete operator -Laplace_h + V on the in-domain cells.

    Unknowns are numbered in row-major order of the in-domain cells.

    Args:
        grid (Grid): grid with domain mask
        V (ScalarField): potential, V >= 0 on the domain

    Returns:
        sparse.csr_matrix: symmetric matrix of size n_cells x n_cells
    """
    mask = grid.mask
    index = np.full(grid.shape, -1, dtype=np.int64)
    index[mask] = np.arange(grid.n_cells)
    inv_h2 = 1.0 / (grid.h * grid.h)

    diagonal = V.values[mask].astype(float).copy()
    rows, cols = [], []
    use_x, use_y = _active_axes(grid)
    shifts = []
    if use_x:
        shifts += [(0, 1), (0, -1)]
    if use_y:
        shifts += [(1, 0), (-1, 0)]

    padded = np.pad(index, 1, constant_values=-1)
    for dr, dc in shifts:
        neighbour = padded[1 + dr:1 + dr + grid.ny, 1 + dc:1 + dc + grid.nx][mask]
        inside = neighbour >= 0
        # ghost value -w_c puts w = 0 on the face
        diagonal += np.where(inside, inv_h2, 2.0 * inv_h2)
        rows.append(index[mask][inside])
        cols.append(neighbour[inside])

    rows = np.concatenate(rows) if rows else np.empty(0, dtype=np.int64)
    cols = np.concatenate(cols) if cols else np.empty(0, dtype=np.int64)
    off_diagonal = sparse.coo_matrix(
        (np.full(len(rows), -inv_h2), (rows, cols)), shape=(grid.n_cells, grid.n_cells))
    return (sparse.diags(diagonal) + off_diagonal).tocsr()


def solve_landscape(grid: Grid, V: ScalarField, tol: float = _DEFAULT_TOL, max_iter: Optional[int] = None,
                    return_info: bool = False) -> Union[ScalarField, Tuple[ScalarField, SolveInfo]]:
    """Solves -Laplace(w) + V w = 1 with zero Dirichlet data by conjugate gradients.

    Args:
        grid (Grid): grid with domain mask
        V (ScalarField): potential, must be >= 0 on the domain
        tol (float, optional): relative residual target in the Euclidean norm. Defaults to 1e-8.
        max_iter (int, optional): iteration cap. Defaults to 10 * nx * ny.
        return_info (bool, optional): also return iteration count and final residual. Defaults to False.

    Raises:
        PreconditionError: negative potential, non-positive tol or grid mismatch
        ConvergenceError: tolerance not reached within max_iter iterations

    Returns:
        ScalarField: the landscape function w (and SolveInfo when return_info is set)
    """
    if not V.grid.same_as(grid):
        raise PreconditionError("Potential lives on a different grid")
    if tol <= 0:
        raise PreconditionError(f"Tolerance must be positive, got {tol}")
    if (V.domain_values() < 0).any():
        raise PreconditionError("Potential V has negative entries")
    if max_iter is None:
        max_iter = 10 * grid.nx * grid.ny

    A = landscape_operator(grid, V)
    b = np.ones(grid.n_cells)
    b_norm = np.linalg.norm(b)

    iterations = 0

    def _count(_):
        nonlocal iterations
        iterations += 1

    x = np.zeros(grid.n_cells)
    residual = 1.0
    # cg stops on its recursively updated residual; restart until the true residual agrees
    for _ in range(_MAX_RESTARTS):
        remaining = max_iter - iterations
        if remaining <= 0:
            break
        x, info = cg(A, b, x0=x, rtol=tol, maxiter=remaining, callback=_count)
        residual = float(np.linalg.norm(b - A @ x) / b_norm)
        logger.debug(f"cg pass finished: info={info}, iterations={iterations}, residual={residual:.3e}")
        if residual <= tol:
            break

    if residual > tol:
        msg = f"Landscape solve did not converge: residual {residual:.3e} after {iterations} iterations"
        logger.error(msg)
        raise ConvergenceError(msg, iterations=iterations, residual=residual)

    logger.info(f"Landscape solved on {grid.nx}x{grid.ny} grid in {iterations} iterations, residual {residual:.3e}")
    values = np.zeros(grid.shape)
    values[grid.mask] = x
    w = ScalarField(grid, values)
    if return_info:
        return w, SolveInfo(iterations=iterations, residual=residual)
    return w


def _clip_to_range(values: np.ndarray, valid_range: dict) -> np.ndarray:
    return np.clip(values, valid_range["min"], valid_range["max"])


def build_weight(w_or_field: ScalarField, spec: WeightSpec) -> ScalarField:
    """
    Builds the interface weight a from a landscape function or a direct field.
    Clamps rather than rejects; the cells where the clamp was active are kept on the result.

    :param w_or_field: landscape function w (source "landscape") or the weight itself (source "field")
    :type w_or_field: ScalarField
    :param spec: weight parameters
    :type spec: WeightSpec
    :return: weight field tagged with spec.delta
    :rtype: ScalarField
    """
    grid = w_or_field.grid
    raw = w_or_field.values + spec.delta if spec.source == "landscape" else w_or_field.values.copy()
    valid_range = {"min": spec.delta, "max": spec.cap}
    clamped = ((raw < valid_range["min"]) | (raw > valid_range["max"])) & grid.mask
    if clamped.any():
        logger.info(f"Weight clamp active on {int(clamped.sum())} of {grid.n_cells} cells")
    return ScalarField(grid, _clip_to_range(raw, valid_range), delta=spec.delta, clamped=clamped)


def face_weight(a: ScalarField, f: InterfaceFace) -> float:
    """Two-cell mean of a, the quadrature rule for the integral of a over one face"""
    return 0.5 * (float(a.values[f.cell_a]) + float(a.values[f.cell_b]))
