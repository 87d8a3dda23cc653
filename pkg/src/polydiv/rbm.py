"""Snapshot providers and reduced-basis projections.

Two desk-scale finite-difference models supply snapshots: a 2 x m
thermal block with piecewise constant conductivity and a Poisson problem
with a correlated Gaussian source.  Snapshot vectors hold interior node
values with the x index varying slowest; norms are Euclidean scaled by
the grid cell area ``h**2``.
"""

from __future__ import annotations

import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .eim import EimBasis, gaussian_source, square_grid
from .numerics import cg_solve

CG_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class ReducedBasis:
    """Rows of ``vectors`` are orthonormal in the ``weight``-scaled inner product."""

    vectors: np.ndarray
    weight: float = 1.0

    @classmethod
    def empty(cls, n: int, weight: float = 1.0) -> "ReducedBasis":
        return cls(np.zeros((0, n)), weight)

    @property
    def size(self) -> int:
        return self.vectors.shape[0]

    def gram(self) -> np.ndarray:
        return self.weight * self.vectors @ self.vectors.T


def rb_extend(basis: ReducedBasis, u, rtol: float = 1e-10) -> ReducedBasis:
    """Gram-Schmidt step with re-orthogonalization; drops dependent snapshots."""
    u = np.asarray(u, dtype=float)
    if u.shape != (basis.vectors.shape[1],):
        raise ValueError(f"snapshot length {u.shape} does not match basis")
    w = basis.weight
    unorm = np.sqrt(w * (u @ u))
    r = u.copy()
    for _ in range(2):
        if basis.size:
            r -= basis.vectors.T @ (w * (basis.vectors @ r))
    rnorm = np.sqrt(w * (r @ r))
    if unorm == 0.0 or rnorm < rtol * unorm:
        return basis
    return ReducedBasis(np.vstack([basis.vectors, r / rnorm]), w)


def projection_error_sq(basis: ReducedBasis, u) -> np.ndarray | float:
    """``|u|^2 - sum_k <u, xi_k>^2`` clamped at zero; accepts a stack of rows."""
    u = np.asarray(u, dtype=float)
    w = basis.weight
    total = w * np.einsum("...i,...i->...", u, u)
    if basis.size:
        coeff = w * (u @ basis.vectors.T)
        total = total - np.sum(coeff * coeff, axis=-1)
    out = np.maximum(total, 0.0)
    return float(out) if out.ndim == 0 else out


class SnapshotProvider:
    """Deterministic map ``p -> u(p)`` with an exact-key cache.

    Subclasses implement :meth:`solve`.  ``threads`` only affects how
    uncached snapshots are computed, never their values.
    """

    weight: float = 1.0
    n_dofs: int

    def __init__(self, threads: int = 1):
        self.threads = max(1, int(threads))
        self.n_solves = 0
        self._cache: dict[bytes, np.ndarray] = {}

    def solve(self, p) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, p) -> np.ndarray:
        p = np.ascontiguousarray(p, dtype=float)
        key = p.tobytes()
        hit = self._cache.get(key)
        if hit is None:
            hit = self.solve(p)
            hit.setflags(write=False)
            self._cache[key] = hit
            self.n_solves += 1
        return hit

    def snapshots(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.threads > 1:
            missing = [p for p in pts if np.ascontiguousarray(p).tobytes() not in self._cache]
            if len(missing) > 1:
                with ThreadPoolExecutor(self.threads) as pool:
                    solved = list(pool.map(self.solve, missing))
                for p, u in zip(missing, solved):
                    key = np.ascontiguousarray(p).tobytes()
                    if key not in self._cache:
                        u.setflags(write=False)
                        self._cache[key] = u
                        self.n_solves += 1
        return np.array([self(p) for p in pts])


def _interior_index(n: int) -> np.ndarray:
    idx = -np.ones((n, n), dtype=np.int64)
    idx[1:-1, 1:-1] = np.arange((n - 2) ** 2).reshape(n - 2, n - 2)
    return idx


def _edges(n: int):
    """Grid edges as ``(node_a, node_b, cell_1, cell_2)`` index arrays.

    Nodes are ``(i, j)`` flattened over the full ``n x n`` grid; cells are
    the ``(n-1) x (n-1)`` squares, flattened likewise.  Each edge with an
    interior endpoint has exactly two adjacent cells.
    """
    I, J = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    node = I * n + J
    cell = lambda i, j: i * (n - 1) + j  # noqa: E731
    # x-edges (i,j)-(i+1,j), 1 <= j <= n-2, between cells (i,j-1) and (i,j)
    xi, xj = I[:-1, 1:-1].ravel(), J[:-1, 1:-1].ravel()
    # y-edges (i,j)-(i,j+1), 1 <= i <= n-2, between cells (i-1,j) and (i,j)
    yi, yj = I[1:-1, :-1].ravel(), J[1:-1, :-1].ravel()
    a = np.concatenate([node[xi, xj], node[yi, yj]])
    b = np.concatenate([node[xi + 1, xj], node[yi, yj + 1]])
    c1 = np.concatenate([cell(xi, xj - 1), cell(yi - 1, yj)])
    c2 = np.concatenate([cell(xi, xj), cell(yi, yj)])
    return a, b, c1, c2


def assemble(n: int, cell_kappa: np.ndarray) -> sp.csr_matrix:
    """5-point diffusion matrix on interior nodes, Dirichlet zero boundary.

    The conductance of an edge is the mean of the conductivities of the two
    cells it borders, i.e. ``kappa`` integrated over the dual face.
    """
    kc = np.asarray(cell_kappa, dtype=float).ravel()
    a, b, c1, c2 = _edges(n)
    f = 0.5 * (kc[c1] + kc[c2])
    inner = _interior_index(n).ravel()
    ia, ib = inner[a], inner[b]
    N = (n - 2) ** 2
    rows, cols, vals = [], [], []
    for x, y in ((ia, ib), (ib, ia)):
        m = x >= 0
        rows.append(x[m]); cols.append(x[m]); vals.append(f[m])
        m2 = m & (y >= 0)
        rows.append(x[m2]); cols.append(y[m2]); vals.append(-f[m2])
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N)
    )


def _full_grid(n: int, u) -> np.ndarray:
    U = np.zeros((n, n))
    U[1:-1, 1:-1] = np.asarray(u).reshape(n - 2, n - 2)
    return U


class ThermalBlockModel(SnapshotProvider):
    """``-div(kappa grad u) = 1`` on the unit square, ``u = 0`` on the boundary.

    The square is split into 2 rows and ``m`` columns of equal blocks;
    parameter ``k`` (0-based) is the conductivity of the block in column
    ``k // 2`` and row ``k % 2``, rows counted from ``y = 0``.  Cells of the
    grid take the conductivity of the block containing their center.
    """

    def __init__(self, m: int, n: int = 33, threads: int = 1):
        super().__init__(threads)
        if m < 1 or n < 3:
            raise ValueError("need m >= 1 blocks and n >= 3 grid nodes")
        self.m, self.n = m, n
        self.dim = 2 * m
        self.h = 1.0 / (n - 1)
        self.weight = self.h**2
        self.n_dofs = (n - 2) ** 2
        centers = (np.arange(n - 1) + 0.5) * self.h
        col = np.minimum((centers * m).astype(int), m - 1)
        row = np.minimum((centers * 2).astype(int), 1)
        self.block_of_cell = col[:, None] * 2 + row[None, :]
        self.parts = [assemble(n, (self.block_of_cell == k).astype(float)) for k in range(self.dim)]
        self.rhs = np.full(self.n_dofs, self.weight)

    def matrix(self, p) -> sp.csr_matrix:
        p = self._check(p)
        A = p[0] * self.parts[0]
        for pk, Ak in zip(p[1:], self.parts[1:]):
            A = A + pk * Ak
        return A.tocsr()

    def _check(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if p.shape != (self.dim,):
            raise ValueError(f"expected {self.dim} conductivities, got shape {p.shape}")
        if np.any(p <= 0):
            raise ValueError("conductivities must be positive")
        return p

    def solve(self, p) -> np.ndarray:
        A = self.matrix(p)
        return cg_solve(A.dot, self.rhs, CG_TOL, max_iter=20 * self.n_dofs)

    def cell_kappa(self, p) -> np.ndarray:
        return self._check(p)[self.block_of_cell]

    def energy(self, p, u) -> float:
        """``<kappa grad u, grad u>_h`` summed edge by edge."""
        U = _full_grid(self.n, u).ravel()
        a, b, c1, c2 = _edges(self.n)
        kc = self.cell_kappa(p).ravel()
        return float(np.sum(0.5 * (kc[c1] + kc[c2]) * (U[a] - U[b]) ** 2))

    def load(self, u) -> float:
        """``<1, u>_h``."""
        return float(self.weight * np.sum(u))

    def grid(self, u) -> np.ndarray:
        return _full_grid(self.n, u)


def thermal_block_solve(p, n: int = 33) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.size % 2:
        raise ValueError("the thermal block needs an even number of parameters")
    return _thermal_model(p.size // 2, n).solve(p)


@lru_cache(maxsize=16)
def _thermal_model(m: int, n: int) -> ThermalBlockModel:
    return ThermalBlockModel(m, n)


class GaussianPoissonModel(SnapshotProvider):
    """``-Laplace u = g(., p)`` on ``(-1, 1)^2`` with ``u = 0`` on the boundary."""

    dim = 5

    def __init__(self, n: int = 41, threads: int = 1, zero_source: bool = False):
        super().__init__(threads)
        self.n = n
        self.h = 2.0 / (n - 1)
        self.weight = self.h**2
        self.n_dofs = (n - 2) ** 2
        self.A = assemble(n, np.ones((n - 1, n - 1)))
        full = square_grid(n)
        self.interior = _interior_index(n).ravel() >= 0
        self.nodes = full[self.interior]
        self.zero_source = zero_source

    def solve_rhs(self, source_values) -> np.ndarray:
        b = self.weight * np.asarray(source_values, dtype=float)
        return cg_solve(self.A.dot, b, CG_TOL, max_iter=20 * self.n_dofs)

    def solve(self, p) -> np.ndarray:
        g = np.zeros(self.n_dofs) if self.zero_source else gaussian_source(self.nodes, p)
        return self.solve_rhs(g)

    def grid(self, u) -> np.ndarray:
        return _full_grid(self.n, u)


class EimGaussianPoissonModel(GaussianPoissonModel):
    """Gaussian-source Poisson snapshots through an EIM affine expansion.

    Each interpolation basis function is solved once; a snapshot is then
    the combination with coefficients from the source values at the magic
    points.  ``basis`` must live on the full ``n x n`` node grid.
    """

    def __init__(self, basis: EimBasis, n: int = 41, threads: int = 1):
        super().__init__(n, threads)
        if basis.n != n * n:
            raise ValueError(f"EIM basis has {basis.n} grid values, expected {n * n}")
        self.basis = basis
        self.magic_nodes = square_grid(n)[list(basis.I)]
        self.modes = np.array([self.solve_rhs(q[self.interior]) for q in basis.Q]).reshape(
            basis.size, self.n_dofs
        )

    def solve(self, p) -> np.ndarray:
        c = self.basis.coefficients(gaussian_source(self.magic_nodes, p))
        return c @ self.modes


def export_snapshots(path, snapshots) -> None:
    """Little-endian float64 rows preceded by an unsigned 64-bit length ``N``."""
    arr = np.atleast_2d(np.asarray(snapshots, dtype="<f8"))
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", arr.shape[1]))
        fh.write(np.ascontiguousarray(arr).tobytes())


def import_snapshots(path) -> np.ndarray:
    with open(path, "rb") as fh:
        (n,) = struct.unpack("<Q", fh.read(8))
        data = np.frombuffer(fh.read(), dtype="<f8")
    return data.reshape(-1, n).astype(float)
