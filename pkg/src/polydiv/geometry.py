"""Cells of a polytope division of an axis-aligned box.

Every cell the refinement can produce is either a simplex or a
box-boundary polytope ``Conv({x_1..x_n} ∪ F)`` where ``F`` is a face of
the root box obtained by pinning ``n`` coordinates.  Facets of both kinds
are known in closed form, so nothing here needs a general convex hull.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Union

import numpy as np

from .numerics import DegenerateError, hyperplane_through, simplex_volume

LOWER, UPPER = 0, 1
_BOUND_NAMES = {LOWER: "lower", UPPER: "upper"}
_BOUND_CODES = {"lower": LOWER, "upper": UPPER}


class Location(enum.IntEnum):
    INTERIOR = 0
    BOUNDARY = 1
    OUTSIDE = 2


@dataclass(frozen=True)
class Box:
    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        if len(lo) != len(hi) or not lo:
            raise ValueError("lower and upper must be non-empty and equally long")
        if any(not l < u for l, u in zip(lo, hi)):
            raise ValueError(f"invalid box bounds {lo} / {hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def cube(cls, d: int, low: float = 0.0, high: float = 1.0) -> "Box":
        return cls((low,) * d, (high,) * d)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def lo(self) -> np.ndarray:
        return np.array(self.lower)

    @property
    def hi(self) -> np.ndarray:
        return np.array(self.upper)

    @property
    def center(self) -> np.ndarray:
        return (self.lo + self.hi) / 2

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.hi - self.lo))

    @property
    def volume(self) -> float:
        return float(np.prod(self.hi - self.lo))

    def bound(self, axis: int, which: int) -> float:
        return self.lower[axis] if which == LOWER else self.upper[axis]

    def contains_strictly(self, p) -> bool:
        p = np.asarray(p, dtype=float)
        return bool(np.all(p > self.lo) and np.all(p < self.hi))

    def to_json(self) -> dict:
        return {"lower": list(self.lower), "upper": list(self.upper)}

    @classmethod
    def from_json(cls, obj) -> "Box":
        return cls(tuple(obj["lower"]), tuple(obj["upper"]))


@dataclass(frozen=True)
class BoxFace:
    """Face of ``box`` with the coordinates in ``fixed`` pinned to a bound.

    ``fixed`` is a sorted tuple of ``(axis, LOWER|UPPER)`` pairs; its
    length is the depth ``n`` and the face has dimension ``d - n``.
    """

    box: Box
    fixed: tuple = ()

    def __post_init__(self):
        fixed = tuple(sorted((int(a), int(b)) for a, b in self.fixed))
        axes = [a for a, _ in fixed]
        if len(set(axes)) != len(axes) or any(not 0 <= a < self.box.dim for a in axes):
            raise ValueError(f"invalid fixed axes {fixed}")
        object.__setattr__(self, "fixed", fixed)

    @property
    def depth(self) -> int:
        return len(self.fixed)

    @property
    def dim(self) -> int:
        return self.box.dim - self.depth

    @property
    def free_axes(self) -> list[int]:
        pinned = {a for a, _ in self.fixed}
        return [a for a in range(self.box.dim) if a not in pinned]

    @cached_property
    def vertices(self) -> np.ndarray:
        return face_vertices(self)

    @property
    def volume(self) -> float:
        """Measure within the face's own affine hull."""
        return float(np.prod([self.box.upper[a] - self.box.lower[a] for a in self.free_axes]))

    def fixed_json(self) -> dict:
        return {str(a): _BOUND_NAMES[b] for a, b in self.fixed}


def box_facets(box: Box) -> list[BoxFace]:
    return [BoxFace(box, ((axis, which),)) for axis in range(box.dim) for which in (LOWER, UPPER)]


def face_subfacets(face: BoxFace) -> list[BoxFace]:
    if face.depth >= face.box.dim:
        raise ValueError("a vertex of the box has no facets")
    return [
        BoxFace(face.box, face.fixed + ((axis, which),))
        for axis in face.free_axes
        for which in (LOWER, UPPER)
    ]


def face_vertices(face: BoxFace) -> np.ndarray:
    """Corners of ``face`` in lexicographic order, shape ``(2**(d-n), d)``."""
    box = face.box
    base = np.empty(box.dim)
    for axis, which in face.fixed:
        base[axis] = box.bound(axis, which)
    free = face.free_axes
    out = np.empty((2 ** len(free), box.dim))
    for k, choice in enumerate(itertools.product((LOWER, UPPER), repeat=len(free))):
        out[k] = base
        for axis, which in zip(free, choice):
            out[k, axis] = box.bound(axis, which)
    return out


def _frozen_points(points) -> np.ndarray:
    arr = np.array(points, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Simplex:
    vertices: np.ndarray

    def __post_init__(self):
        v = _frozen_points(self.vertices)
        if v.ndim != 2 or v.shape[0] != v.shape[1] + 1:
            raise ValueError(f"simplex needs d+1 vertices in R^d, got shape {v.shape}")
        object.__setattr__(self, "vertices", v)

    kind = "simplex"

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @cached_property
    def facets(self) -> list["FacetRef"]:
        return cell_facets(self)

    @cached_property
    def halfspaces(self) -> tuple[np.ndarray, np.ndarray]:
        return _halfspaces(self)


@dataclass(frozen=True, eq=False)
class BoundaryPolytope:
    """``Conv(apexes ∪ base)``; apexes are kept oldest first."""

    apexes: np.ndarray
    base: BoxFace

    def __post_init__(self):
        a = _frozen_points(self.apexes)
        n, d = a.shape
        if d != self.base.box.dim:
            raise ValueError("apex dimension does not match the box")
        if n != self.base.depth or not 1 <= n <= d - 1:
            raise ValueError(f"apex count {n} must equal base depth {self.base.depth} and lie in [1, d-1]")
        object.__setattr__(self, "apexes", a)

    kind = "boundary"

    @property
    def dim(self) -> int:
        return self.apexes.shape[1]

    @cached_property
    def vertices(self) -> np.ndarray:
        return _frozen_points(np.vstack([self.apexes, self.base.vertices]))

    @cached_property
    def facets(self) -> list["FacetRef"]:
        return cell_facets(self)

    @cached_property
    def halfspaces(self) -> tuple[np.ndarray, np.ndarray]:
        return _halfspaces(self)


Cell = Union[Simplex, BoundaryPolytope]


@dataclass(frozen=True, eq=False)
class FacetRef:
    """One facet of a cell.

    ``kind`` is ``"drop_vertex"`` (simplex, ``index`` = dropped vertex),
    ``"drop_apex"`` (``index`` = dropped apex), ``"base"`` (the base face
    itself, when the only apex is dropped) or ``"sub_face"`` (``face`` = the
    sub-face ``G`` of the base).  ``vertex_ids`` index into the cell's
    vertex list.
    """

    kind: str
    vertex_ids: tuple
    vertices: np.ndarray = field(repr=False)
    index: int | None = None
    face: BoxFace | None = None


def make_cell(apexes, face: BoxFace) -> Cell:
    """``Conv(apexes ∪ face)``, stored as a simplex when it has ``d + 1`` vertices."""
    apexes = np.atleast_2d(np.asarray(apexes, dtype=float))
    d = face.box.dim
    if apexes.shape[0] + 2 ** face.dim == d + 1:
        return Simplex(np.vstack([apexes, face.vertices]))
    return BoundaryPolytope(apexes, face)


def cell_facets(cell: Cell) -> list[FacetRef]:
    verts = cell.vertices
    if isinstance(cell, Simplex):
        out = []
        for j in range(len(verts)):
            ids = tuple(k for k in range(len(verts)) if k != j)
            out.append(FacetRef("drop_vertex", ids, verts[list(ids)], index=j))
        return out

    n = cell.apexes.shape[0]
    corners = cell.base.vertices
    corner_ids = tuple(range(n, n + len(corners)))
    out = []
    for i in range(n):
        ids = tuple(k for k in range(n) if k != i) + corner_ids
        kind = "base" if n == 1 else "drop_apex"
        face = cell.base if n == 1 else None
        out.append(FacetRef(kind, ids, verts[list(ids)], index=i, face=face))
    box = cell.base.box
    for g in face_subfacets(cell.base):
        axis, which = _new_pin(cell.base, g)
        on_g = np.flatnonzero(corners[:, axis] == box.bound(axis, which))
        ids = tuple(range(n)) + tuple(int(n + k) for k in on_g)
        out.append(FacetRef("sub_face", ids, verts[list(ids)], face=g))
    return out


def _new_pin(parent: BoxFace, child: BoxFace) -> tuple[int, int]:
    (pin,) = set(child.fixed) - set(parent.fixed)
    return pin


def barycenter(cell: Cell) -> np.ndarray:
    return cell.vertices.mean(axis=0)


def cell_volume(cell: Cell, box: Box | None = None) -> float:
    """Volume of ``cell``; raises :class:`DegenerateError` for flat cells.

    Box-boundary polytopes are measured as nested pyramids: start from the
    base face volume and, per apex, multiply by its distance to the affine
    hull built so far divided by the new dimension.
    """
    if isinstance(cell, Simplex):
        vol = simplex_volume(cell.vertices)
        ref_box = box
    else:
        face = cell.base
        ref_box = box or face.box
        origin = face.vertices[0]
        dirs = [np.eye(cell.dim)[a] for a in face.free_axes]
        vol = face.volume
        m = face.dim
        for x in cell.apexes:
            r = x - origin
            for _ in range(2):
                for q in dirs:
                    r = r - (q @ r) * q
            dist = float(np.linalg.norm(r))
            m += 1
            vol *= dist / m
            if dist > 0:
                dirs.append(r / dist)
    ref = ref_box.volume if ref_box is not None else float(np.prod(np.ptp(cell.vertices, axis=0)))
    if vol <= 1e-14 * ref:
        raise DegenerateError(f"degenerate cell (volume {vol:.3e})")
    return vol


def _halfspaces(cell: Cell) -> tuple[np.ndarray, np.ndarray]:
    """Outward unit normals ``A`` and offsets ``b`` with ``A @ x <= b`` inside."""
    center = barycenter(cell)
    facets = cell_facets(cell)
    A = np.empty((len(facets), cell.dim))
    b = np.empty(len(facets))
    for k, f in enumerate(facets):
        c, c0 = hyperplane_through(f.vertices)
        if c @ center > c0:
            c, c0 = -c, -c0
        A[k], b[k] = c, c0
    return A, b


def _default_tol(cell: Cell) -> float:
    return 1e-9 * float(np.linalg.norm(np.ptp(cell.vertices, axis=0)))


def classify(cell: Cell, points, tol: float | None = None) -> np.ndarray:
    """Vectorized :func:`contains`; returns an array of :class:`Location` codes."""
    if tol is None:
        tol = _default_tol(cell)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    A, b = cell.halfspaces
    s = pts @ A.T - b
    out = np.full(len(pts), Location.BOUNDARY, dtype=np.int8)
    out[np.all(s < -tol, axis=1)] = Location.INTERIOR
    out[np.any(s > tol, axis=1)] = Location.OUTSIDE
    return out


def contains(cell: Cell, point, tol: float | None = None) -> Location:
    return Location(int(classify(cell, point, tol)[0]))


def link_box(p, box: Box) -> list[Cell]:
    """Facet-link an interior point to every facet of the box."""
    p = np.asarray(p, dtype=float)
    if not box.contains_strictly(p):
        raise ValueError(f"point {p} is not strictly inside the box")
    return [make_cell(p[None, :], f) for f in box_facets(box)]


def facet_link(p, cell: Cell) -> list[Cell]:
    """Replace ``cell`` by the pyramids ``Conv(p ∪ G)`` over its facets ``G``.

    Children follow the order of :func:`cell_facets`.
    """
    p = np.asarray(p, dtype=float)
    if contains(cell, p) != Location.INTERIOR:
        raise ValueError("facet linking needs a point strictly inside the cell")
    if isinstance(cell, Simplex):
        v = cell.vertices
        return [Simplex(np.vstack([np.delete(v, j, axis=0), p])) for j in range(len(v))]
    apexes = cell.apexes
    children: list[Cell] = []
    for i in range(len(apexes)):
        children.append(make_cell(np.vstack([np.delete(apexes, i, axis=0), p]), cell.base))
    for g in face_subfacets(cell.base):
        children.append(make_cell(np.vstack([apexes, p]), g))
    return children


def cell_to_json(cell: Cell) -> dict:
    if isinstance(cell, Simplex):
        return {"kind": "simplex", "vertices": cell.vertices.tolist(), "apexes": [], "fixed": {}}
    return {
        "kind": "boundary",
        "vertices": cell.vertices.tolist(),
        "apexes": cell.apexes.tolist(),
        "fixed": cell.base.fixed_json(),
    }


def cell_from_json(obj: dict, box: Box) -> Cell:
    if obj["kind"] == "simplex":
        return Simplex(np.array(obj["vertices"], dtype=float))
    if obj["kind"] == "boundary":
        fixed = tuple((int(a), _BOUND_CODES[b]) for a, b in obj["fixed"].items())
        return BoundaryPolytope(np.array(obj["apexes"], dtype=float), BoxFace(box, fixed))
    raise ValueError(f"unknown cell kind {obj['kind']!r}")
