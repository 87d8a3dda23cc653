"""Dense linear algebra helpers, seeded randomness and sampling."""

from __future__ import annotations

import math
import zlib
from typing import Callable, Sequence

import numpy as np
from scipy import linalg


class DegenerateError(ValueError):
    """Raised when a point set does not span the expected affine dimension."""


class ConvergenceError(RuntimeError):
    """Raised when an iterative solver fails to reach its tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class Rng:
    """Seeded PCG64 stream that can be split into independent labelled streams.

    Splitting hashes the label into the seed sequence spawn key, so the
    stream a module receives does not depend on how many draws other
    modules made before it.
    """

    def __init__(self, seed: int, _key: tuple[int, ...] = ()):
        if not 0 <= int(seed) < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = int(seed)
        self.key = tuple(_key)
        self._gen = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=self.key))
        )

    def split(self, label: str) -> "Rng":
        return Rng(self.seed, self.key + (zlib.crc32(label.encode("utf-8")),))

    def random(self, size=None):
        return self._gen.random(size)

    def uniform(self, low, high, size=None):
        return self._gen.uniform(low, high, size)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size)

    def __repr__(self):
        return f"Rng(seed={self.seed}, key={self.key})"


def orthonormalize(vectors: Sequence[np.ndarray], drop_tol: float) -> list[np.ndarray]:
    """Gram-Schmidt with one re-orthogonalization pass.

    Vectors whose residual after projection has norm below ``drop_tol``
    are dropped, so the output spans the same space with no near-zero
    members.
    """
    if drop_tol <= 0:
        raise ValueError("drop_tol must be positive")
    basis: list[np.ndarray] = []
    length = None
    for v in vectors:
        v = np.asarray(v, dtype=float)
        if length is None:
            length = v.shape
        elif v.shape != length:
            raise ValueError(f"dimension mismatch: {v.shape} vs {length}")
        r = v.copy()
        for _ in range(2):
            for q in basis:
                r -= (q @ r) * q
        nrm = float(np.linalg.norm(r))
        if nrm < drop_tol:
            continue
        basis.append(r / nrm)
    return basis


def hyperplane_through(points) -> tuple[np.ndarray, float]:
    """Unit normal ``c`` and offset ``c0`` with ``c @ p == c0`` for every point.

    The points must have an affine hull of dimension exactly ``d - 1``.
    More than ``d`` points are accepted as long as they are coplanar.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    k, d = pts.shape
    if k < d:
        raise DegenerateError(f"need at least {d} points in R^{d}, got {k}")
    diffs = (pts[1:] - pts[0]).T  # d x (k-1)
    q, r, _ = linalg.qr(diffs, pivoting=True, mode="full")
    diag = np.abs(np.diag(r))
    scale = diag[0] if diag.size else 0.0
    rank = int(np.count_nonzero(diag > 1e-10 * scale)) if scale > 0 else 0
    if rank != d - 1:
        raise DegenerateError(f"affine dimension {rank}, expected {d - 1}")
    c = q[:, d - 1]
    c = c / np.linalg.norm(c)
    c0 = float(c @ pts.mean(axis=0))
    return c, c0


def simplex_volume(vertices) -> float:
    v = np.asarray(vertices, dtype=float)
    d = v.shape[1]
    if v.shape[0] != d + 1:
        raise ValueError(f"a {d}-simplex needs {d + 1} vertices, got {v.shape[0]}")
    return abs(float(np.linalg.det(v[1:] - v[0]))) / math.factorial(d)


def cg_solve(
    apply_A: Callable[[np.ndarray], np.ndarray],
    b,
    tol: float = 1e-10,
    max_iter: int = 10000,
    x0=None,
) -> np.ndarray:
    """Conjugate gradients for a symmetric positive definite operator.

    Stops once ``|A x - b| <= tol * |b|``. Raises :class:`ConvergenceError`
    carrying the achieved relative residual otherwise.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    b = np.asarray(b, dtype=float)
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros_like(b)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    r = b - apply_A(x)
    p = r.copy()
    rs = float(r @ r)
    target = (tol * bnorm) ** 2
    for _ in range(max_iter):
        if rs <= target:
            return x
        Ap = apply_A(p)
        alpha = rs / float(p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        rs_new = float(r @ r)
        p = r + (rs_new / rs) * p
        rs = rs_new
    # recompute the true residual before giving up
    res = float(np.linalg.norm(b - apply_A(x))) / bnorm
    if res <= tol:
        return x
    raise ConvergenceError(
        f"CG did not converge in {max_iter} iterations (relative residual {res:.3e})", res
    )


def lhs_sample(rng: Rng, n: int, box) -> np.ndarray:
    """Plain Latin hypercube sample of ``n`` points mapped into ``box``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    lower = np.asarray(box.lower, dtype=float)
    upper = np.asarray(box.upper, dtype=float)
    d = lower.size
    u = np.empty((n, d))
    for axis in range(d):
        perm = rng.permutation(n)
        jitter = rng.random(n)
        col = (perm + jitter) / n
        # keep rounding from pushing a point into the next stratum
        u[:, axis] = np.minimum(col, np.nextafter((perm + 1) / n, 0.0))
    return lower + u * (upper - lower)


def uniform_sample(rng: Rng, n: int, box) -> np.ndarray:
    lower = np.asarray(box.lower, dtype=float)
    upper = np.asarray(box.upper, dtype=float)
    return lower + rng.random((n, lower.size)) * (upper - lower)
