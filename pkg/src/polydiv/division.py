"""A proper polytope division of the root box and its refinement."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import geometry as geo
from .geometry import Box, Cell, Location
from .numerics import Rng

SCHEMA = "polydiv.division/1"


@dataclass
class DivisionReport:
    volume_sum_rel_err: float
    mc_points: int
    uncovered: int
    multiply_covered_interior: int

    def ok(self, vol_tol: float = 1e-8) -> bool:
        return (
            self.uncovered == 0
            and self.multiply_covered_interior == 0
            and self.volume_sum_rel_err <= vol_tol
        )


class Division:
    """Cells keyed by never-reused integer ids, with cached barycenters.

    ``values`` holds the last objective value seen per cell and may be
    stale; the driver decides when to refresh it.  ``history`` records
    ``(parent_id, child_ids)`` for every refinement.
    """

    def __init__(self, root: Box):
        self.root = root
        self.cells: dict[int, Cell] = {}
        self.barycenters: dict[int, np.ndarray] = {}
        self.values: dict[int, float] = {}
        self.history: list[tuple[int, list[int]]] = []
        self.next_id = 0

    def __len__(self):
        return len(self.cells)

    def _add(self, cell: Cell) -> int:
        cid = self.next_id
        self.next_id += 1
        self.cells[cid] = cell
        self.barycenters[cid] = geo.barycenter(cell)
        return cid

    def refine(self, cell_id: int) -> list[int]:
        """Replace a cell by the facet links of its barycenter; returns child ids."""
        if cell_id not in self.cells:
            raise KeyError(f"unknown cell id {cell_id}")
        cell = self.cells[cell_id]
        children = geo.facet_link(self.barycenters[cell_id], cell)
        del self.cells[cell_id]
        del self.barycenters[cell_id]
        self.values.pop(cell_id, None)
        ids = [self._add(c) for c in children]
        self.history.append((cell_id, ids))
        return ids

    def total_volume(self) -> float:
        return float(sum(geo.cell_volume(c, self.root) for c in self.cells.values()))

    def to_json(self, gamma=None) -> dict:
        out = {
            "schema": SCHEMA,
            "root": self.root.to_json(),
            "next_id": self.next_id,
            "cells": [{"id": cid, **geo.cell_to_json(c)} for cid, c in self.cells.items()],
            "history": [[p, ids] for p, ids in self.history],
        }
        if gamma is not None:
            out["gamma"] = [list(map(float, g)) for g in gamma]
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "Division":
        root = Box.from_json(obj["root"])
        div = cls(root)
        for rec in obj["cells"]:
            cid = int(rec["id"])
            cell = geo.cell_from_json(rec, root)
            div.cells[cid] = cell
            div.barycenters[cid] = geo.barycenter(cell)
        div.next_id = int(obj.get("next_id", max(div.cells, default=-1) + 1))
        div.history = [(int(p), [int(i) for i in ids]) for p, ids in obj.get("history", [])]
        return div

    def save(self, path, gamma=None) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(gamma), fh)

    @classmethod
    def load(cls, path) -> "Division":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def init_division(box: Box, p) -> Division:
    div = Division(box)
    for cell in geo.link_box(p, box):
        div._add(cell)
    return div


def check_proper(div: Division, rng: Rng, n_samples: int, tol: float | None = None) -> DivisionReport:
    """Volume-sum and Monte-Carlo coverage checks of the division invariants."""
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    if tol is None:
        tol = 1e-9 * div.root.diameter
    box_vol = div.root.volume
    rel = abs(div.total_volume() - box_vol) / box_vol
    lo, hi = div.root.lo, div.root.hi
    uncovered = 0
    multi = 0
    chunk = 20000
    for start in range(0, n_samples, chunk):
        m = min(chunk, n_samples - start)
        pts = lo + rng.random((m, lo.size)) * (hi - lo)
        covered = np.zeros(m, dtype=bool)
        interior = np.zeros(m, dtype=np.int32)
        for cell in div.cells.values():
            loc = geo.classify(cell, pts, tol)
            covered |= loc != Location.OUTSIDE
            interior += loc == Location.INTERIOR
        uncovered += int(np.count_nonzero(~covered))
        multi += int(np.count_nonzero(interior >= 2))
    return DivisionReport(rel, n_samples, uncovered, multi)


def random_refinement(div: Division, rng: Rng, steps: int) -> Division:
    """Refine ``steps`` cells picked uniformly at random (ids in sorted order)."""
    for _ in range(steps):
        ids = sorted(div.cells)
        div.refine(ids[int(rng.integers(len(ids)))])
    return div
