"""Empirical interpolation: magic points, interpolation basis, Gaussian source."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import solve_triangular

REJECT_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class EimBasis:
    """Interpolation basis ``Q`` (rows), magic indices ``I`` and ``B[k, m] = Q[m, I[k]]``.

    ``B`` is unit lower triangular by construction because each new basis
    vector vanishes at all earlier magic points.
    """

    Q: np.ndarray
    I: tuple
    B: np.ndarray

    @classmethod
    def empty(cls, n: int) -> "EimBasis":
        return cls(np.zeros((0, n)), (), np.zeros((0, 0)))

    @property
    def size(self) -> int:
        return len(self.I)

    @property
    def n(self) -> int:
        return self.Q.shape[1]

    def coefficients(self, values_at_I) -> np.ndarray:
        if self.size == 0:
            return np.zeros(0)
        return solve_triangular(self.B, np.asarray(values_at_I, dtype=float), lower=True, unit_diagonal=True)

    def to_json(self) -> dict:
        return {"n": self.n, "Q": self.Q.tolist(), "I": list(self.I), "B": self.B.tolist()}

    @classmethod
    def from_json(cls, obj) -> "EimBasis":
        k = len(obj["I"])
        Q = np.array(obj["Q"], dtype=float).reshape(k, int(obj["n"]))
        B = np.array(obj["B"], dtype=float).reshape(k, k)
        return cls(Q, tuple(int(i) for i in obj["I"]), B)


def eim_apply(basis: EimBasis, values_at_I) -> np.ndarray:
    """Interpolant taking ``values_at_I`` at the magic points."""
    values_at_I = np.asarray(values_at_I, dtype=float)
    if values_at_I.shape[-1] != basis.size:
        raise ValueError(f"expected {basis.size} values, got {values_at_I.shape[-1]}")
    if basis.size == 0:
        return np.zeros(values_at_I.shape[:-1] + (basis.n,))
    return basis.coefficients(values_at_I.T).T @ basis.Q


def eim_residual(basis: EimBasis, snapshot) -> np.ndarray:
    s = np.asarray(snapshot, dtype=float)
    return s - eim_apply(basis, s[..., list(basis.I)])


def eim_extend(basis: EimBasis, snapshot) -> EimBasis:
    """Add one snapshot to the basis.

    Snapshots already reproduced to ``1e-12`` relative sup-norm are
    rejected: the same basis object comes back unchanged.
    """
    s = np.asarray(snapshot, dtype=float)
    if s.shape != (basis.n,):
        raise ValueError(f"snapshot length {s.shape} does not match basis length {basis.n}")
    r = eim_residual(basis, s)
    i_star = int(np.argmax(np.abs(r)))  # first maximum on ties
    scale = float(np.max(np.abs(s))) if s.size else 0.0
    if abs(r[i_star]) <= REJECT_RTOL * scale or scale == 0.0:
        return basis
    q = r / r[i_star]
    Q = np.vstack([basis.Q, q])
    I = basis.I + (i_star,)
    k = basis.size
    B = np.zeros((k + 1, k + 1))
    B[:k, :k] = basis.B
    B[k, :] = Q[:, i_star]
    B[k, k] = 1.0
    return EimBasis(Q, I, B)


def gaussian_source(x, p) -> np.ndarray:
    """Correlated Gaussian heat source ``g(x, p)``, ``p = (mu1, mu2, s1, s2, rho)``.

    ``x`` may have any leading shape with a trailing axis of length 2.
    """
    mu1, mu2, s1, s2, rho = (float(v) for v in p)
    if abs(rho) >= 1:
        raise ValueError(f"correlation must satisfy |rho| < 1, got {rho}")
    x = np.asarray(x, dtype=float)
    z1 = (x[..., 0] - mu1) / s1
    z2 = (x[..., 1] - mu2) / s2
    norm = 1.0 / (2 * math.pi * s1 * s2 * math.sqrt(1 - rho * rho))
    return norm * np.exp(-(z1 * z1 - 2 * rho * z1 * z2 + z2 * z2) / (2 * (1 - rho * rho)))


GAUSSIAN_BOX = ((-1.0, -1.0, 1.0, 1.0, -0.8), (1.0, 1.0, 3.0, 3.0, 0.8))


@dataclass(frozen=True, eq=False)
class ParamFunctionFamily:
    """A map ``p -> s(p)`` sampled on a fixed spatial grid of ``N`` points."""

    grid: np.ndarray
    evaluator: Callable

    @property
    def n(self) -> int:
        return len(self.grid)

    def __call__(self, p) -> np.ndarray:
        return np.asarray(self.evaluator(self.grid, p), dtype=float)


def square_grid(n: int, lo: float = -1.0, hi: float = 1.0) -> np.ndarray:
    """``n x n`` nodes of a uniform grid, x index slowest, shape ``(n*n, 2)``."""
    t = np.linspace(lo, hi, n)
    X, Y = np.meshgrid(t, t, indexing="ij")
    return np.column_stack([X.ravel(), Y.ravel()])


def gaussian_family(n: int = 41) -> ParamFunctionFamily:
    return ParamFunctionFamily(square_grid(n), gaussian_source)
