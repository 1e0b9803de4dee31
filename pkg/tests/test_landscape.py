import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from partitiontools.exceptions import ConvergenceError, PreconditionError
from partitiontools.grid import Grid, InterfaceFace, ScalarField, constant_field
from partitiontools.landscape import WeightSpec, build_weight, face_weight, landscape_operator, solve_landscape

from conftest import unit_square


def _interval_error(n: int) -> float:
    grid = Grid(n, 1, 1.0 / n)
    w = solve_landscape(grid, constant_field(grid, 0.0), tol=1e-12)
    x = (np.arange(n) + 0.5) / n
    return float(np.abs(w.values[0] - x * (1 - x) / 2).max())


def test_interval_solution_converges_at_second_order():
    errors = [_interval_error(n) for n in (32, 64, 128)]
    assert errors[0] / errors[1] == pytest.approx(4.0, rel=0.1)
    assert errors[1] / errors[2] == pytest.approx(4.0, rel=0.1)
    assert errors[2] == pytest.approx((1 / 128) ** 2 / 8, rel=1e-3)


def test_unit_square_centre_value():
    grid = unit_square(128)
    w = solve_landscape(grid, constant_field(grid, 0.0))
    assert w.values.max() == pytest.approx(0.0737, abs=0.003)
    # symmetric about both axes
    assert np.allclose(w.values, w.values[::-1, :], atol=1e-7)
    assert np.allclose(w.values, w.values.T, atol=1e-7)


def test_solution_vanishes_outside_the_mask_and_is_positive_inside():
    mask = np.ones((16, 16), dtype=bool)
    mask[:8, 8:] = False
    grid = Grid(16, 16, 1 / 16, mask)
    w = solve_landscape(grid, constant_field(grid, 0.0))
    assert (w.values[~mask] == 0).all()
    assert (w.values[mask] > 0).all()


def test_potential_lowers_the_solution():
    grid = unit_square(16)
    free = solve_landscape(grid, constant_field(grid, 0.0))
    damped = solve_landscape(grid, constant_field(grid, 50.0))
    assert (damped.values <= free.values + 1e-9).all()
    assert damped.values.max() < free.values.max()


def test_operator_is_symmetric():
    grid = unit_square(6)
    A = landscape_operator(grid, ScalarField(grid, np.random.default_rng(0).uniform(0, 2, grid.shape)))
    assert abs(A - A.T).max() == 0


def test_negative_potential_is_rejected():
    grid = unit_square(4)
    V = constant_field(grid, 0.0).values.copy()
    V[1, 1] = -1.0
    with pytest.raises(PreconditionError):
        solve_landscape(grid, ScalarField(grid, V))


def test_potential_on_another_grid_is_rejected():
    with pytest.raises(PreconditionError):
        solve_landscape(unit_square(4), constant_field(unit_square(8), 0.0))


def test_iteration_cap_raises_convergence_error():
    grid = unit_square(16)
    with pytest.raises(ConvergenceError) as info:
        solve_landscape(grid, constant_field(grid, 0.0), max_iter=1)
    assert info.value.iterations >= 1
    assert info.value.residual > 1e-8
    assert info.value.exit_code == 5


def test_solve_info_reports_residual():
    grid = unit_square(16)
    _, info = solve_landscape(grid, constant_field(grid, 0.0), tol=1e-10, return_info=True)
    assert info.residual <= 1e-10
    assert info.iterations > 0


def test_landscape_weight_is_shifted_and_clamped():
    grid = Grid(3, 1, 1.0)
    w = ScalarField(grid, [[0.0, 0.5, 2.0]])
    a = build_weight(w, WeightSpec(delta=0.1, cap=1.0))
    assert a.values[0].tolist() == pytest.approx([0.1, 0.6, 1.0])
    assert a.clamped[0].tolist() == [False, False, True]
    assert a.delta == 0.1


def test_field_weight_is_clamped_to_delta_and_cap():
    grid = Grid(3, 1, 1.0)
    field = ScalarField(grid, [[0.05, 0.5, 3.0]])
    a = build_weight(field, WeightSpec(delta=0.1, cap=1.0, source="field"))
    assert a.values[0].tolist() == pytest.approx([0.1, 0.5, 1.0])
    assert a.clamped[0].tolist() == [True, False, True]
    assert (a.domain_values() >= a.delta).all()


@pytest.mark.parametrize("kwargs", [
    {"delta": 0.0},
    {"delta": 2.0, "cap": 1.0},
    {"delta": 0.1, "source": "potential"},
    {"delta": 0.1, "beta": 0.0},
    {"delta": 0.1, "beta": 1.5},
    {"delta": 0.1, "c_beta": -1.0},
])
def test_weight_spec_validation(kwargs):
    with pytest.raises(PreconditionError):
        WeightSpec(**kwargs)


def test_face_weight_is_two_cell_mean():
    grid = Grid(2, 1, 0.5)
    a = ScalarField(grid, [[1.0, 3.0]], delta=0.5)
    face = InterfaceFace((0, 0), (0, 1), (0.5, 0.25), 0.5)
    assert face_weight(a, face) == 2.0


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.0, 100.0))
def test_larger_potential_gives_a_smaller_solution(seed, scale):
    rng = np.random.default_rng(seed)
    grid = unit_square(12)
    low = rng.uniform(0.0, scale, size=grid.shape)
    high = low + rng.uniform(0.0, scale, size=grid.shape)
    w_low = solve_landscape(grid, ScalarField(grid, low), tol=1e-12)
    w_high = solve_landscape(grid, ScalarField(grid, high), tol=1e-12)
    assert (w_high.values >= -1e-10).all()
    assert (w_high.values <= w_low.values + 1e-10).all()


@pytest.mark.parametrize("K", [1.0, 50.0, 1e4])
def test_constant_potential_bounds_the_solution(K):
    grid = unit_square(12)
    w = solve_landscape(grid, constant_field(grid, K), tol=1e-12)
    assert w.domain_values().min() > 0
    assert w.domain_values().max() <= (1 / K) * (1 + 1e-6)
