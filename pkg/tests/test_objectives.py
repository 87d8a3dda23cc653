import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polydiv.eim import GAUSSIAN_BOX, eim_residual, gaussian_family
from polydiv.geometry import Box
from polydiv.numerics import Rng, uniform_sample
from polydiv.objectives import (
    Configuration,
    FillDistance,
    ZeroObjective,
    eim_objective,
    fill_distance_J,
    rb_objective,
    rebuild,
)
from polydiv.rbm import ThermalBlockModel

THERMAL_BOX = Box.cube(4, 1.0, 10.0)


@pytest.fixture(scope="module")
def thermal():
    return ThermalBlockModel(2, 17)


@pytest.fixture(scope="module")
def family():
    return gaussian_family(21)


class TestConfiguration:
    def test_order_and_membership(self):
        g = Configuration(Box.cube(2))
        g.append([0.1, 0.2])
        g.append([0.3, 0.4])
        assert len(g) == 2 and [0.1, 0.2] in g and [0.2, 0.1] not in g
        assert g.as_array().tolist() == [[0.1, 0.2], [0.3, 0.4]]

    def test_duplicate(self):
        g = Configuration(Box.cube(2))
        g.append([0.1, 0.2])
        with pytest.raises(ValueError):
            g.append(np.array([0.1, 0.2]))

    def test_outside(self):
        with pytest.raises(ValueError):
            Configuration(Box.cube(2)).append([1.5, 0.0])

    def test_points_are_frozen(self):
        g = Configuration()
        p = np.array([1.0, 2.0])
        g.append(p)
        p[0] = 5.0
        assert g.points[0].tolist() == [1.0, 2.0]
        with pytest.raises(ValueError):
            g.points[0][0] = 3.0


class TestFillDistance:
    def test_values(self):
        assert fill_distance_J([1, 1], [[0, 0]]) == 2
        assert fill_distance_J([0.3, 0.7], [[0.3, 0.7], [0, 0]]) == 0
        assert fill_distance_J([0.5, 1], [[0, 0], [1, 0]]) == 1.25

    def test_empty(self):
        box = Box.cube(2)
        assert fill_distance_J([0.0, 0.0], [], box) == pytest.approx(0.5 + 2.0)
        with pytest.raises(ValueError):
            fill_distance_J([0.0, 0.0], [])

    def test_objective_agrees(self):
        box = Box.cube(3)
        obj = FillDistance(box)
        pts = uniform_sample(Rng(0), 40, box)
        assert np.allclose(obj.evaluate_many(pts), [fill_distance_J(q, [], box) for q in pts])
        gamma = []
        for p in pts[:5]:
            obj.notify_appended(p)
            gamma.append(p)
        assert np.allclose(obj.evaluate_many(pts[5:]), [fill_distance_J(q, gamma) for q in pts[5:]])
        assert obj.evaluate(pts[2]) == 0.0


class TestCounters:
    def test_counting(self):
        obj = ZeroObjective()
        obj.evaluate_many([[0.1, 0.2], [0.3, 0.4]])
        obj.evaluate([0.1, 0.2])
        assert obj.evaluations == 3 and obj.distinct_points == 2
        obj.notify_appended([0.9, 0.9])
        assert obj.distinct_points == 3 and obj.evaluations == 3

    def test_duplicate_append(self):
        obj = ZeroObjective()
        obj.notify_appended([0.5])
        with pytest.raises(ValueError):
            obj.notify_appended([0.5])


class TestRB:
    def test_empty_is_squared_norm(self, thermal):
        obj = rb_objective(thermal)
        q = np.array([2.0, 3.0, 4.0, 5.0])
        u = thermal(q)
        assert obj.evaluate(q) == pytest.approx(thermal.weight * u @ u, rel=1e-14)

    def test_self_projection(self, thermal):
        obj = rb_objective(thermal)
        for p in uniform_sample(Rng(1), 3, THERMAL_BOX):
            obj.notify_appended(p)
            assert obj.evaluate(p) <= 1e-10

    def test_monotone_and_rebuild(self, thermal):
        rng = Rng(2)
        gamma = uniform_sample(rng.split("gamma"), 4, THERMAL_BOX)
        probes = uniform_sample(rng.split("probes"), 100, THERMAL_BOX)
        obj = rb_objective(thermal)
        prev = obj.evaluate_many(probes)
        for p in gamma:
            obj.notify_appended(p)
            cur = obj.evaluate_many(probes)
            assert np.all(cur <= prev + 1e-12)
            prev = cur
        again = rebuild(obj, gamma)
        assert np.allclose(again.evaluate_many(probes), prev, atol=1e-10)


class TestEIM:
    def test_empty_is_sup_norm(self, family):
        q = np.array([0.1, 0.2, 1.5, 2.5, 0.3])
        assert eim_objective(family).evaluate(q) == pytest.approx(np.max(np.abs(family(q))))

    def test_interpolates_members(self, family):
        obj = eim_objective(family)
        pts = uniform_sample(Rng(3), 6, Box(*GAUSSIAN_BOX))
        for p in pts:
            obj.notify_appended(p)
        assert np.all(obj.evaluate_many(pts) <= 1e-10)

    @given(st.integers(0, 2**16))
    def test_rebuild_equivalence(self, seed):
        fam = gaussian_family(11)
        box = Box(*GAUSSIAN_BOX)
        pts = uniform_sample(Rng(seed), 5, box)
        probes = uniform_sample(Rng(seed).split("probe"), 100, box)
        obj = eim_objective(fam)
        for p in pts:
            obj.notify_appended(p)
        assert np.allclose(rebuild(obj, pts).evaluate_many(probes), obj.evaluate_many(probes), atol=1e-10)

    def test_residual_zero_at_magic_points(self, family):
        obj = eim_objective(family)
        for p in uniform_sample(Rng(4), 5, Box(*GAUSSIAN_BOX)):
            obj.notify_appended(p)
        q = np.array([0.0, 0.0, 2.0, 2.0, 0.0])
        r = eim_residual(obj.basis, family(q))
        assert np.max(np.abs(r[list(obj.basis.I)])) <= 1e-12


def test_fresh_resets_counters():
    obj = FillDistance(Box.cube(2))
    obj.notify_appended([0.5, 0.5])
    obj.evaluate([0.1, 0.1])
    f = obj.fresh()
    assert f.evaluations == 0 and f.distinct_points == 0 and len(f.points) == 0
