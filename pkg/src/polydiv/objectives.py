"""Configurations and the error indicators driving the greedy loops.

An objective evaluates ``J(q, gamma)`` for the configuration it has been
told about through :meth:`Objective.notify_appended`.  ``J`` is never
negative and vanishes (up to round-off) on members of ``gamma``.
"""

from __future__ import annotations

import numpy as np

from .eim import EimBasis, ParamFunctionFamily, eim_extend, eim_residual
from .geometry import Box
from .rbm import ReducedBasis, SnapshotProvider, projection_error_sq, rb_extend


def _key(p) -> bytes:
    return np.ascontiguousarray(p, dtype=float).tobytes()


class Configuration:
    """Ordered set of distinct parameter points inside ``box``."""

    def __init__(self, box: Box | None = None):
        self.box = box
        self.points: list[np.ndarray] = []
        self._keys: set[bytes] = set()

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __contains__(self, p) -> bool:
        return _key(p) in self._keys

    def append(self, p) -> None:
        p = np.array(p, dtype=float)
        if p in self:
            raise ValueError(f"point {p.tolist()} is already in the configuration")
        if self.box is not None and (np.any(p < self.box.lo) or np.any(p > self.box.hi)):
            raise ValueError(f"point {p.tolist()} lies outside the parameter box")
        p.setflags(write=False)
        self.points.append(p)
        self._keys.add(_key(p))

    def as_array(self) -> np.ndarray:
        if not self.points:
            return np.zeros((0, self.box.dim if self.box else 0))
        return np.array(self.points)


class Objective:
    """Base class; subclasses provide ``_values`` and ``_append``."""

    def __init__(self):
        self.evaluations = 0
        self._seen: set[bytes] = set()
        self._gamma: set[bytes] = set()
        self.gamma_size = 0

    @property
    def distinct_points(self) -> int:
        return len(self._seen)

    def evaluate(self, q) -> float:
        return float(self.evaluate_many(np.atleast_2d(q))[0])

    def evaluate_many(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        self.evaluations += len(pts)
        self._seen.update(_key(p) for p in pts)
        return np.asarray(self._values(pts), dtype=float)

    def notify_appended(self, p) -> None:
        p = np.asarray(p, dtype=float)
        k = _key(p)
        if k in self._gamma:
            raise ValueError(f"point {p.tolist()} was already appended")
        self._gamma.add(k)
        self._seen.add(k)
        self.gamma_size += 1
        self._append(p)

    def fresh(self) -> "Objective":
        """Same objective with an empty configuration and zeroed counters."""
        raise NotImplementedError

    def _values(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _append(self, p: np.ndarray) -> None:
        raise NotImplementedError


class ZeroObjective(Objective):
    def fresh(self):
        return ZeroObjective()

    def _values(self, pts):
        return np.zeros(len(pts))

    def _append(self, p):
        pass


def fill_distance_J(q, gamma, box: Box | None = None) -> float:
    """Squared distance to the nearest configuration point.

    With an empty configuration the value is the squared distance to the
    box center plus the squared box diameter, so greedy starts from the
    point nearest the center and every later value is smaller.
    """
    q = np.asarray(q, dtype=float)
    pts = np.asarray(list(gamma), dtype=float)
    if pts.size == 0:
        if box is None:
            raise ValueError("an empty configuration needs the box")
        return float(np.sum((q - box.center) ** 2) + box.diameter**2)
    return float(np.min(np.sum((pts - q) ** 2, axis=1)))


class FillDistance(Objective):
    """Greedy maximization of this objective is farthest-point sampling."""

    def __init__(self, box: Box):
        super().__init__()
        self.box = box
        self.points = np.zeros((0, box.dim))

    def fresh(self):
        return FillDistance(self.box)

    def _values(self, pts):
        if len(self.points) == 0:
            return np.sum((pts - self.box.center) ** 2, axis=1) + self.box.diameter**2
        out = np.empty(len(pts))
        # chunked to bound memory for large cell counts
        for s in range(0, len(pts), 2048):
            block = pts[s : s + 2048]
            d2 = np.sum((block[:, None, :] - self.points[None, :, :]) ** 2, axis=2)
            out[s : s + 2048] = d2.min(axis=1)
        return out

    def _append(self, p):
        self.points = np.vstack([self.points, p])


class RBObjective(Objective):
    """Squared projection error of ``u(q)`` onto the span of configuration snapshots."""

    def __init__(self, provider: SnapshotProvider):
        super().__init__()
        self.provider = provider
        self.basis = ReducedBasis.empty(provider.n_dofs, provider.weight)

    def fresh(self):
        return RBObjective(self.provider)

    def _values(self, pts):
        return projection_error_sq(self.basis, self.provider.snapshots(pts))

    def _append(self, p):
        self.basis = rb_extend(self.basis, self.provider(p))


class EIMObjective(Objective):
    """Sup-norm empirical interpolation residual of ``s(q)``."""

    def __init__(self, family: ParamFunctionFamily):
        super().__init__()
        self.family = family
        self.basis = EimBasis.empty(family.n)

    def fresh(self):
        return EIMObjective(self.family)

    def _values(self, pts):
        S = np.array([self.family(p) for p in pts])
        return np.max(np.abs(eim_residual(self.basis, S)), axis=1)

    def _append(self, p):
        self.basis = eim_extend(self.basis, self.family(p))


def rb_objective(provider: SnapshotProvider) -> RBObjective:
    return RBObjective(provider)


def eim_objective(family: ParamFunctionFamily) -> EIMObjective:
    return EIMObjective(family)


def rebuild(objective: Objective, points) -> Objective:
    """A fresh copy of ``objective`` synchronized to ``points`` from scratch."""
    obj = objective.fresh()
    for p in points:
        obj.notify_appended(p)
    return obj
