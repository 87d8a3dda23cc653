"""Polytope Division Method driver."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, fields
from typing import Callable

import numpy as np

from .division import Division, init_division
from .geometry import Box
from .objectives import Configuration, Objective

logger = logging.getLogger(__name__)

TRACE_COLUMNS = (
    "step",
    "selected_cell",
    "err",
    "n_cells",
    "distinct_points",
    "total_evals",
    "wall_ms",
)


@dataclass
class StepRecord:
    step: int
    selected_cell: int
    err: float
    n_cells: int
    distinct_points_evaluated: int
    total_evaluations: int
    wall_ms: float

    def row(self) -> list:
        return [getattr(self, f.name) for f in fields(self)]


@dataclass
class PdmConfig:
    tol: float
    max_iters: int = 1000
    initial_point: tuple | None = None
    seed: int = 0
    reevaluate_all: bool = True

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


@dataclass
class RunResult:
    configuration: Configuration
    records: list[StepRecord]
    status: str
    division: Division | None = None
    samples: np.ndarray | None = None
    extra: dict = field(default_factory=dict)


class RunAborted(RuntimeError):
    """Objective evaluation failed; ``partial`` holds the trace so far."""

    def __init__(self, message: str, partial: RunResult):
        super().__init__(message)
        self.partial = partial


def select_max(div: Division, values: dict[int, float]) -> int:
    """Cell id maximizing ``values``; the smallest id wins ties."""
    if not div.cells:
        raise ValueError("empty division")
    best_id, best = None, -np.inf
    for cid in sorted(div.cells):
        v = values[cid]
        if v > best:
            best_id, best = cid, v
    return best_id


def pdm_run(
    objective: Objective,
    box: Box,
    cfg: PdmConfig,
    on_step: Callable[[int, Division, Configuration], None] | None = None,
) -> RunResult:
    """Greedy configuration growth over an adaptively refined division.

    Each step evaluates the objective at the cell barycenters, picks the
    maximizing cell and stops if its value is within ``cfg.tol``;
    otherwise the barycenter joins the configuration and the cell is
    facet-linked to it.  ``status`` is ``"converged"`` or ``"max_iters"``.
    """
    p = box.center if cfg.initial_point is None else np.asarray(cfg.initial_point, dtype=float)
    gamma = Configuration(box)
    gamma.append(p)
    objective.notify_appended(p)
    div = init_division(box, p)
    records: list[StepRecord] = []
    result = RunResult(gamma, records, "max_iters", division=div)
    pending = sorted(div.cells)
    if on_step is not None:
        on_step(0, div, gamma)

    for step in range(1, cfg.max_iters + 1):
        t0 = time.perf_counter()
        ids = sorted(div.cells) if cfg.reevaluate_all else pending
        try:
            vals = objective.evaluate_many(np.array([div.barycenters[i] for i in ids]))
        except Exception as exc:
            result.status = "aborted"
            raise RunAborted(f"objective failed at step {step}: {exc}", result) from exc
        div.values.update(zip(ids, (float(v) for v in vals)))
        chosen = select_max(div, div.values)
        err = div.values[chosen]
        n_cells = len(div)
        converged = err <= cfg.tol
        if not converged:
            b = div.barycenters[chosen]
            gamma.append(b)
            objective.notify_appended(b)
            pending = div.refine(chosen)
        records.append(
            StepRecord(
                step,
                chosen,
                err,
                n_cells,
                objective.distinct_points,
                objective.evaluations,
                (time.perf_counter() - t0) * 1e3,
            )
        )
        logger.debug("pdm step %d: cell %d err %.3e cells %d", step, chosen, err, n_cells)
        if converged:
            result.status = "converged"
            break
        if on_step is not None:
            on_step(step, div, gamma)
    return result
