import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from partitiontools.energy import BulkTermSpec, EnergySpec, total_energy
from partitiontools.exceptions import BudgetExceededError, PreconditionError
from partitiontools.grid import Grid, Partition, constant_field
from partitiontools.oracle import OracleBudget, brute_force_min, gap_report, verify_against

from conftest import random_weight


def test_single_cell_two_labels():
    grid = Grid(1, 1, 1.0)
    result = brute_force_min(grid, 2, constant_field(grid, 1.0, delta=0.1), BulkTermSpec())
    assert result.j_min == 0.0
    assert result.count == 2
    assert result.assignments == 2
    assert result.minimizer.labels.tolist() == [[1]]


def test_two_by_two_balanced_split(grid_2x2, ones_2x2):
    result = brute_force_min(grid_2x2, 2, ones_2x2, BulkTermSpec(lam=10.0, target_volumes=(2, 2)))
    assert result.j_min == 4.0
    assert result.count == 4
    assert result.minimizer.labels.tolist() == [[1, 1], [2, 2]]


def test_no_bulk_term_gives_the_two_uniform_partitions():
    grid = Grid(4, 4, 1.0)
    result = brute_force_min(grid, 2, constant_field(grid, 1.0, delta=0.1), BulkTermSpec())
    assert result.j_min == 0.0
    assert result.count == 2
    assert (result.minimizer.labels == 1).all()


def test_single_label_has_one_assignment():
    grid = Grid(3, 2, 1.0)
    result = brute_force_min(grid, 1, constant_field(grid, 1.0), BulkTermSpec(lam=1.0))
    assert result.count == 1 and result.assignments == 1


def test_budget_is_enforced():
    grid = Grid(4, 4, 1.0)
    with pytest.raises(BudgetExceededError) as info:
        brute_force_min(grid, 2, constant_field(grid, 1.0), BulkTermSpec(), OracleBudget(10))
    assert info.value.assignments == 2 ** 16
    assert info.value.exit_code == 4


def test_budget_must_be_positive():
    with pytest.raises(PreconditionError):
        OracleBudget(0)


def test_masked_cells_are_not_enumerated():
    mask = np.array([[True, True], [True, False]])
    grid = Grid(2, 2, 1.0, mask)
    result = brute_force_min(grid, 2, constant_field(grid, 1.0), BulkTermSpec())
    assert result.assignments == 8
    assert result.minimizer.labels[1, 1] == 0


def test_gap_report(grid_2x2, ones_2x2):
    spec = BulkTermSpec(lam=10.0, target_volumes=(2, 2))
    result = brute_force_min(grid_2x2, 2, ones_2x2, spec)
    assert gap_report(result.minimizer, ones_2x2, spec, result).optimal
    worst = max(
        (Partition(grid_2x2, 2, np.array(labels).reshape(2, 2)) for labels in itertools.product((1, 2), repeat=4)),
        key=lambda p: total_energy(p, ones_2x2, spec).total)
    gap = verify_against(worst, ones_2x2, spec)
    assert not gap.optimal
    assert gap.gap == total_energy(worst, ones_2x2, spec).total - 4.0
    assert gap.count == 4


def test_gap_report_rejects_other_problems(grid_2x2, ones_2x2):
    result = brute_force_min(grid_2x2, 2, ones_2x2, BulkTermSpec())
    with pytest.raises(PreconditionError):
        gap_report(Partition(grid_2x2, 3, [[1, 2], [3, 1]]), ones_2x2, BulkTermSpec(), result)


def test_minimizer_energy_matches_full_recomputation():
    rng = np.random.default_rng(8)
    grid = Grid(3, 3, 0.5)
    a = random_weight(grid, rng)
    spec = EnergySpec(BulkTermSpec(lam=2.0), label_weights=(1.0, 2.0, 0.5), stencil="crofton8")
    result = brute_force_min(grid, 3, a, spec)
    assert result.j_min == total_energy(result.minimizer, a, spec).total
    for labels in itertools.islice(itertools.product((1, 2, 3), repeat=9), 0, 3 ** 9, 97):
        p = Partition(grid, 3, np.array(labels).reshape(3, 3))
        assert total_energy(p, a, spec).total >= result.j_min - 1e-9


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_oracle_is_a_lower_bound(seed):
    """No assignment beats the enumerated minimum, and swapping two equal-target labels keeps minimisers"""
    rng = np.random.default_rng(seed)
    grid = Grid(3, 3, 1.0)
    a = random_weight(grid, rng)
    spec = BulkTermSpec(lam=0.2)
    result = brute_force_min(grid, 2, a, spec)
    p = Partition(grid, 2, rng.integers(1, 3, size=grid.shape))
    assert result.j_min <= total_energy(p, a, spec).total + 1e-12
    assert result.count % 2 == 0


def test_worker_processes_give_the_same_answer():
    rng = np.random.default_rng(4)
    grid = Grid(3, 3, 1.0)
    a = random_weight(grid, rng)
    spec = BulkTermSpec(lam=0.1)
    serial = brute_force_min(grid, 4, a, spec)
    parallel = brute_force_min(grid, 4, a, spec, processes=2)
    assert parallel.minimizer.same_as(serial.minimizer)
    assert parallel.j_min == serial.j_min
    assert parallel.count == serial.count
