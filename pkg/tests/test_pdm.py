import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polydiv.division import check_proper, init_division
from polydiv.geometry import Box, Location, contains
from polydiv.numerics import Rng
from polydiv.objectives import FillDistance, Objective, ZeroObjective, rb_objective
from polydiv.pdm import PdmConfig, RunAborted, pdm_run, select_max
from polydiv.rbm import ThermalBlockModel


def test_select_max():
    div = init_division(Box.cube(2), [0.5, 0.5])
    div.cells = {1: None, 2: None, 3: None}
    assert select_max(div, {1: 0.5, 2: 0.9, 3: 0.9}) == 2
    assert select_max(div, {1: 0.3, 2: 0.3, 3: 0.3}) == 1
    div.cells = {7: None}
    assert select_max(div, {7: 0.0}) == 7
    div.cells = {}
    with pytest.raises(ValueError):
        select_max(div, {})


def test_config_validation():
    with pytest.raises(ValueError):
        PdmConfig(tol=0.0)
    with pytest.raises(ValueError):
        PdmConfig(tol=1e-3, max_iters=0)


def test_zero_objective_stops_immediately():
    r = pdm_run(ZeroObjective(), Box.cube(3), PdmConfig(tol=1e-8))
    assert r.status == "converged"
    assert len(r.configuration) == 1 and len(r.records) == 1
    assert r.records[0].err == 0.0


def test_fill_first_selection_tie_break():
    r = pdm_run(FillDistance(Box.cube(2)), Box.cube(2), PdmConfig(tol=1e-12, max_iters=1))
    rec = r.records[0]
    assert rec.selected_cell == 0
    assert rec.err == pytest.approx(1 / 9)
    assert np.allclose(r.configuration.points[1], [1 / 6, 1 / 2])
    assert r.status == "max_iters"


def test_initial_point():
    r = pdm_run(FillDistance(Box.cube(2)), Box.cube(2), PdmConfig(tol=1e-3, max_iters=3, initial_point=(0.2, 0.3)))
    assert r.configuration.points[0].tolist() == [0.2, 0.3]


def test_initial_point_on_boundary():
    with pytest.raises(ValueError):
        pdm_run(FillDistance(Box.cube(2)), Box.cube(2), PdmConfig(tol=1e-3, initial_point=(0.0, 0.3)))


def test_stop_before_append():
    box = Box.cube(2)
    r = pdm_run(FillDistance(box), box, PdmConfig(tol=0.02, max_iters=500))
    assert r.status == "converged"
    assert r.records[-1].err <= 0.02
    assert all(rec.err > 0.02 for rec in r.records[:-1])
    assert len(r.configuration) == len(r.records)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_selected_points_interior_and_new(d):
    box = Box.cube(d)
    r = pdm_run(FillDistance(box), box, PdmConfig(tol=1e-9, max_iters=40))
    pts = r.configuration.as_array()
    assert np.all((pts > 0) & (pts < 1))
    assert len({p.tobytes() for p in pts}) == len(pts)
    assert check_proper(r.division, Rng(0), 5000).ok()
    for cid, cell in r.division.cells.items():
        assert contains(cell, r.division.barycenters[cid]) == Location.INTERIOR


@given(st.integers(2, 6), st.integers(1, 25))
def test_linear_counter_bounds(d, j):
    box = Box.cube(d)
    r = pdm_run(FillDistance(box), box, PdmConfig(tol=1e-12, max_iters=j))
    for k, rec in enumerate(r.records, start=1):
        assert rec.distinct_points_evaluated <= 1 + 2 * d + (k - 1) * 2 * d
    assert len(r.division) <= 2 * d + j * (2 * d - 1)
    evals = [rec.total_evaluations for rec in r.records]
    distinct = [rec.distinct_points_evaluated for rec in r.records]
    assert evals == sorted(evals) and distinct == sorted(distinct)


def test_lazy_mode_counts_fewer_evaluations():
    box = Box.cube(3)
    full = pdm_run(FillDistance(box), box, PdmConfig(tol=1e-9, max_iters=30))
    lazy = pdm_run(FillDistance(box), box, PdmConfig(tol=1e-9, max_iters=30, reevaluate_all=False))
    assert lazy.records[-1].total_evaluations < full.records[-1].total_evaluations
    assert lazy.records[-1].distinct_points_evaluated == lazy.records[-1].total_evaluations + 1


def test_on_step_callback():
    seen = []
    box = Box.cube(2)
    pdm_run(FillDistance(box), box, PdmConfig(tol=1e-9, max_iters=3), on_step=lambda s, div, g: seen.append((s, len(div), len(g))))
    assert seen == [(0, 4, 1), (1, 6, 2), (2, 8, 3), (3, 10, 4)]


class Exploding(Objective):
    def __init__(self):
        super().__init__()
        self.calls = 0

    def fresh(self):
        return Exploding()

    def _values(self, pts):
        self.calls += 1
        if self.calls == 3:
            raise RuntimeError("solver blew up")
        return np.sum(pts**2, axis=1)

    def _append(self, p):
        pass


def test_abort_keeps_partial_trace():
    with pytest.raises(RunAborted) as info:
        pdm_run(Exploding(), Box.cube(2), PdmConfig(tol=1e-9, max_iters=10))
    partial = info.value.partial
    assert partial.status == "aborted"
    assert len(partial.records) == 2


def test_thermal_replay_bit_exact():
    box = Box.cube(4, 1.0, 10.0)
    runs = [pdm_run(rb_objective(ThermalBlockModel(2, 17)), box, PdmConfig(tol=1e-6, max_iters=40, seed=3)) for _ in range(2)]
    a, b = runs
    assert [r.err for r in a.records] == [r.err for r in b.records]
    assert [r.selected_cell for r in a.records] == [r.selected_cell for r in b.records]
    assert a.configuration.as_array().tobytes() == b.configuration.as_array().tobytes()
