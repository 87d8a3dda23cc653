import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polydiv.eim import (
    GAUSSIAN_BOX,
    EimBasis,
    eim_apply,
    eim_extend,
    eim_residual,
    gaussian_family,
    gaussian_source,
    square_grid,
)
from polydiv.geometry import Box
from polydiv.numerics import Rng, uniform_sample


def build(snapshots, n):
    basis = EimBasis.empty(n)
    for s in snapshots:
        basis = eim_extend(basis, s)
    return basis


def test_first_step():
    s = np.array([0.5, -2.0, 1.0])
    b = eim_extend(EimBasis.empty(3), s)
    assert b.I == (1,)
    assert np.allclose(b.Q, [s / -2.0])
    assert b.B.tolist() == [[1.0]]


def test_dependent_rejected():
    rng = np.random.default_rng(0)
    b = build(rng.standard_normal((3, 10)), 10)
    combo = 2 * b.Q[0] - 0.5 * b.Q[2]
    assert eim_extend(b, combo) is b


def test_zero_snapshot_rejected():
    b = EimBasis.empty(4)
    assert eim_extend(b, np.zeros(4)) is b


def test_length_mismatch():
    with pytest.raises(ValueError):
        eim_extend(EimBasis.empty(4), np.ones(5))


def test_tie_break_smallest_index():
    assert eim_extend(EimBasis.empty(4), np.array([1.0, -3.0, 3.0, 0.0])).I == (1,)


def test_apply_empty():
    assert np.array_equal(eim_apply(EimBasis.empty(5), np.zeros(0)), np.zeros(5))


def test_apply_one():
    b = eim_extend(EimBasis.empty(3), np.array([1.0, 2.0, 4.0]))
    assert np.allclose(eim_apply(b, [3.0]), 3.0 * b.Q[0])


@given(st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_interpolation_and_structure(k, seed):
    rng = np.random.default_rng(seed)
    n = 30
    snaps = rng.standard_normal((k, n))
    b = build(snaps, n)
    assert b.size == k
    assert np.allclose(np.diag(b.B), 1.0)
    assert np.all(np.triu(b.B, 1) == 0)
    assert np.max(np.abs(b.B)) <= 1 + 1e-12
    for m in range(k):
        assert abs(b.Q[m, b.I[m]] - 1) < 1e-15
        assert np.max(np.abs(b.Q[m])) <= 1 + 1e-12
    vals = rng.standard_normal(k)
    out = eim_apply(b, vals)
    assert np.allclose(out[list(b.I)], vals, atol=1e-12)
    for s in snaps:
        assert np.max(np.abs(eim_residual(b, s))) <= 1e-10 * np.max(np.abs(s))


def test_batched_apply_matches_rows():
    rng = np.random.default_rng(3)
    b = build(rng.standard_normal((4, 12)), 12)
    V = rng.standard_normal((5, 4))
    assert np.allclose(eim_apply(b, V), [eim_apply(b, v) for v in V])


def test_json_roundtrip():
    b = build(np.random.default_rng(1).standard_normal((3, 8)), 8)
    back = EimBasis.from_json(b.to_json())
    assert back.I == b.I and np.array_equal(back.Q, b.Q) and np.array_equal(back.B, b.B)
    empty = EimBasis.from_json(EimBasis.empty(8).to_json())
    assert empty.size == 0 and empty.n == 8


class TestGaussianSource:
    def test_standard_peak(self):
        assert gaussian_source([0.0, 0.0], (0, 0, 1, 1, 0)) == pytest.approx(1 / (2 * math.pi), rel=1e-15)
        assert gaussian_source([0.0, 0.0], (0, 0, 1, 1, 0)) == pytest.approx(0.1591549, abs=1e-7)

    def test_point_reflection(self):
        p = (0.3, -0.2, 1.4, 2.2, 0.6)
        x = np.array([0.9, 0.5])
        xr = 2 * np.array(p[:2]) - x
        assert gaussian_source(x, p) == pytest.approx(gaussian_source(xr, p), rel=1e-14)

    def test_integral(self):
        p = (0.2, -0.1, 1.3, 2.1, 0.55)
        t = np.linspace(-30, 30, 1201)
        X, Y = np.meshgrid(t, t, indexing="ij")
        g = gaussian_source(np.stack([X, Y], axis=-1), p)
        h = t[1] - t[0]
        assert abs(g.sum() * h * h - 1) < 1e-3

    @pytest.mark.parametrize("rho", [1.0, -1.0, 1.5])
    def test_rho_rejected(self, rho):
        with pytest.raises(ValueError):
            gaussian_source([0, 0], (0, 0, 1, 1, rho))


def test_square_grid_order():
    g = square_grid(3)
    assert g.shape == (9, 2)
    assert g[:3].tolist() == [[-1, -1], [-1, 0], [-1, 1]]


def test_gaussian_exactness_30_snapshots():
    fam = gaussian_family(41)
    pts = uniform_sample(Rng(0).split("eim-train"), 30, Box(*GAUSSIAN_BOX))
    snaps = np.array([fam(p) for p in pts])
    b = build(snaps, fam.n)
    for s in snaps:
        assert np.max(np.abs(eim_residual(b, s))) <= 1e-10
    assert np.all(np.abs(eim_residual(b, snaps)[:, list(b.I)]) <= 1e-12)
