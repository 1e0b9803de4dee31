import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from partitiontools.energy import interface_energy
from partitiontools.exceptions import PreconditionError
from partitiontools.grid import (Grid, Partition, ScalarField, ball_mask, connected_components, constant_field,
                                 extract_interface, face_table, phase_volumes, symmetric_difference_distance,
                                 uniform_partition)

from conftest import bisection, random_partition


@pytest.mark.parametrize("nx, ny, h", [(0, 4, 1.0), (4, 0, 1.0), (4, 4, 0.0), (4, 4, -1.0), (4, 4, float("nan"))])
def test_grid_rejects_bad_geometry(nx, ny, h):
    with pytest.raises(PreconditionError):
        Grid(nx, ny, h)


def test_grid_rejects_empty_or_misshaped_mask():
    with pytest.raises(PreconditionError):
        Grid(3, 3, 1.0, np.zeros((3, 3), dtype=bool))
    with pytest.raises(PreconditionError):
        Grid(3, 3, 1.0, np.ones((2, 3), dtype=bool))


def test_grid_area_counts_only_masked_cells():
    mask = np.ones((4, 4), dtype=bool)
    mask[0, 0] = False
    grid = Grid(4, 4, 0.5, mask)
    assert grid.n_cells == 15
    assert grid.area == pytest.approx(15 * 0.25)


def test_partition_rejects_out_of_range_labels(grid_2x2):
    with pytest.raises(PreconditionError):
        Partition(grid_2x2, 2, [[1, 3], [1, 2]])
    with pytest.raises(PreconditionError):
        Partition(grid_2x2, 2, [[0, 1], [1, 2]])


def test_partition_zeroes_cells_outside_the_mask():
    mask = np.array([[True, False], [True, True]])
    p = Partition(Grid(2, 2, 1.0, mask), 2, [[1, 2], [2, 1]])
    assert p.labels[0, 1] == 0
    assert extract_interface(p) == extract_interface(Partition(p.grid, 2, [[1, 1], [2, 1]]))


def test_field_values_outside_mask_are_zero():
    mask = np.array([[True, False], [True, True]])
    field = ScalarField(Grid(2, 2, 1.0, mask), np.full((2, 2), 3.0))
    assert field.values[0, 1] == 0.0
    assert list(field.domain_values()) == [3.0, 3.0, 3.0]


def test_weight_field_below_delta_is_rejected(grid_2x2):
    with pytest.raises(PreconditionError):
        ScalarField(grid_2x2, np.full((2, 2), 0.05), delta=0.1)


def test_vertical_split_has_two_faces_in_row_major_order(grid_2x2):
    p = Partition(grid_2x2, 2, [[1, 2], [1, 2]])
    faces = extract_interface(p)
    assert [(f.cell_a, f.cell_b) for f in faces] == [((0, 0), (0, 1)), ((1, 0), (1, 1))]
    assert faces[0].midpoint == (1.0, 0.5)
    assert all(f.length == 1.0 for f in faces)


def test_face_order_is_row_major_then_axis(grid_2x2):
    table = face_table(Partition(grid_2x2, 2, [[1, 2], [2, 1]]))
    rows = list(zip(table.row_a, table.col_a, table.axis))
    assert rows == [(0, 0, 0), (0, 0, 1), (0, 1, 1), (1, 0, 0)]
    assert set(zip(table.label_a, table.label_b)) == {(1, 2), (2, 1)}


def test_uniform_partition_has_no_interface(grid_8x8):
    assert extract_interface(uniform_partition(grid_8x8, 3)) == []
    assert face_table(uniform_partition(grid_8x8, 3)).empty


def test_phase_volumes_keep_empty_phases():
    grid = Grid(2, 2, 0.5)
    volumes = phase_volumes(uniform_partition(grid, 3))
    assert list(volumes) == [1.0, 0.0, 0.0]


def test_symmetric_difference_counts_each_relabelled_cell_twice(grid_8x8):
    p = bisection(grid_8x8)
    labels = p.labels.copy()
    labels[0, 0] = 2
    assert symmetric_difference_distance(p, p.with_labels(labels)) == 2.0
    assert symmetric_difference_distance(p, p) == 0.0


def test_symmetric_difference_needs_the_same_grid(grid_8x8):
    with pytest.raises(PreconditionError):
        symmetric_difference_distance(bisection(grid_8x8), bisection(Grid(8, 8, 0.5)))


def test_connected_components_separates_islands():
    grid = Grid(5, 5, 1.0)
    labels = np.ones(grid.shape, dtype=np.int64)
    labels[0, 0] = 2
    labels[3, 3] = labels[3, 4] = 2
    components = connected_components(Partition(grid, 2, labels), 2)
    assert sorted(len(c) for c in components) == [1, 2]
    assert frozenset({(3, 3), (3, 4)}) in components


def test_diagonal_cells_are_not_connected():
    grid = Grid(2, 2, 1.0)
    components = connected_components(Partition(grid, 2, [[2, 1], [1, 2]]), 2)
    assert len(components) == 2


def test_ball_of_one_cell_radius_is_a_cross():
    grid = Grid(5, 5, 1.0)
    ball = ball_mask(grid, grid.cell_center((2, 2)), 1.0)
    assert ball.sum() == 5
    assert ball[1, 2] and ball[2, 1] and ball[3, 2] and ball[2, 3]


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 6), st.integers(2, 6), st.integers(0, 2 ** 32 - 1))
def test_faces_separate_different_labels(nx, ny, seed):
    """Every face joins 4-adjacent cells of different labels, and only such pairs are faces"""
    rng = np.random.default_rng(seed)
    grid = Grid(nx, ny, 1.0)
    p = Partition(grid, 3, rng.integers(1, 4, size=grid.shape))
    faces = extract_interface(p)
    for f in faces:
        (ra, ca), (rb, cb) = f.cell_a, f.cell_b
        assert abs(ra - rb) + abs(ca - cb) == 1
        assert p.labels[ra, ca] != p.labels[rb, cb]
    expected = (np.count_nonzero(p.labels[:, :-1] != p.labels[:, 1:])
                + np.count_nonzero(p.labels[:-1, :] != p.labels[1:, :]))
    assert len(faces) == expected


def test_constant_field_tags_delta(grid_2x2):
    a = constant_field(grid_2x2, 1.0, delta=0.5)
    assert a.is_weight and a.delta == 0.5
    assert not constant_field(grid_2x2, 1.0).is_weight


def _checkerboard(grid: Grid) -> Partition:
    rows, cols = np.indices(grid.shape)
    return Partition(grid, 2, np.where((rows + cols) % 2 == 0, 1, 2))


def test_three_by_three_checkerboard_faces_and_energy():
    p = _checkerboard(Grid(3, 3, 1.0))
    assert len(extract_interface(p)) == 12
    F, per_phase = interface_energy(p, constant_field(p.grid, 1.0, delta=1.0))
    assert F == 24.0
    assert list(per_phase) == [12.0, 12.0]


def test_three_by_three_checkerboard_volumes():
    assert list(phase_volumes(_checkerboard(Grid(3, 3, 0.5)))) == [1.25, 1.0]


def test_complement_of_a_bisection_is_at_distance_twice_the_area():
    p = bisection(Grid(4, 4, 1.0))
    assert symmetric_difference_distance(p, p.with_labels(3 - p.labels)) == 32.0


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2 ** 32 - 1))
def test_symmetric_difference_is_a_metric(n_labels, seed):
    rng = np.random.default_rng(seed)
    grid = Grid(5, 4, 0.25)
    p, q, r = (random_partition(grid, n_labels, rng) for _ in range(3))
    d = symmetric_difference_distance
    assert d(p, p) == 0.0
    assert d(p, q) == d(q, p)
    assert d(p, q) >= 0.0
    assert (d(p, q) == 0.0) == p.same_as(q)
    assert d(p, r) <= d(p, q) + d(q, r)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 4), st.integers(0, 2 ** 32 - 1))
def test_interface_does_not_depend_on_label_names(n_labels, seed):
    rng = np.random.default_rng(seed)
    grid = Grid(6, 5, 1.0)
    p = random_partition(grid, n_labels, rng)
    permutation = np.concatenate([[0], 1 + rng.permutation(n_labels)])
    relabelled = p.with_labels(permutation[p.labels])
    assert extract_interface(relabelled) == extract_interface(p)
