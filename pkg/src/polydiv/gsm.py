"""Greedy Sampling Method over a fixed random or Latin hypercube sample set."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .geometry import Box
from .numerics import Rng, lhs_sample, uniform_sample
from .objectives import Configuration, Objective
from .pdm import RunAborted, RunResult, StepRecord

SAMPLERS = ("random", "lhs")


@dataclass
class GsmConfig:
    sampler: str
    sample_size: int
    tol: float
    max_iters: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.sampler not in SAMPLERS:
            raise ValueError(f"sampler must be one of {SAMPLERS}")
        if self.sample_size < 1:
            raise ValueError("sample_size must be at least 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


def draw_samples(box: Box, cfg: GsmConfig) -> np.ndarray:
    rng = Rng(cfg.seed).split(f"gsm-{cfg.sampler}")
    if cfg.sampler == "lhs":
        return lhs_sample(rng, cfg.sample_size, box)
    return uniform_sample(rng, cfg.sample_size, box)


def gsm_run(
    objective: Objective,
    box: Box,
    cfg: GsmConfig,
    initial=(),
    samples: np.ndarray | None = None,
) -> RunResult:
    """Pick the sample maximizing the objective, once per step, from a set drawn once.

    ``initial`` points are appended before the first step; ``samples``
    overrides the drawn set.  ``status`` is ``"converged"``, ``"exhausted"``
    or ``"max_iters"``; ``selected_cell`` in the records is the sample index.
    """
    S = draw_samples(box, cfg) if samples is None else np.atleast_2d(np.asarray(samples, dtype=float))
    gamma = Configuration(box)
    for p in initial:
        gamma.append(p)
        objective.notify_appended(p)
    available = np.array([s not in gamma for s in S])
    records: list[StepRecord] = []
    result = RunResult(gamma, records, "max_iters", samples=S)

    for step in range(1, cfg.max_iters + 1):
        if not available.any():
            result.status = "exhausted"
            break
        t0 = time.perf_counter()
        idx = np.flatnonzero(available)
        try:
            vals = objective.evaluate_many(S[idx])
        except Exception as exc:
            result.status = "aborted"
            raise RunAborted(f"objective failed at step {step}: {exc}", result) from exc
        k = int(np.argmax(vals))
        chosen, err = int(idx[k]), float(vals[k])
        converged = err <= cfg.tol
        if not converged:
            gamma.append(S[chosen])
            objective.notify_appended(S[chosen])
            available[chosen] = False
        records.append(
            StepRecord(
                step,
                chosen,
                err,
                len(idx),
                objective.distinct_points,
                objective.evaluations,
                (time.perf_counter() - t0) * 1e3,
            )
        )
        if converged:
            result.status = "converged"
            break
    return result
