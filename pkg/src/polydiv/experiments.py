"""Experiment setups shared by the CLI and the acceptance tests."""

from __future__ import annotations

import json
import logging

import numpy as np

from .eim import GAUSSIAN_BOX, EimBasis, gaussian_family
from .geometry import Box
from .gsm import GsmConfig, gsm_run
from .numerics import Rng, uniform_sample
from .objectives import EIMObjective, FillDistance, Objective, RBObjective
from .pdm import PdmConfig, RunResult, pdm_run
from .rbm import EimGaussianPoissonModel, GaussianPoissonModel, ThermalBlockModel

logger = logging.getLogger(__name__)

OBJECTIVE_IDS = ("fill", "rb-thermal", "rb-gaussian", "eim-gaussian")


def default_box(obj_cfg: dict) -> Box:
    oid = obj_cfg["id"]
    if oid == "fill":
        return Box.cube(int(obj_cfg.get("dim", 2)))
    if oid == "rb-thermal":
        return Box.cube(int(obj_cfg["dim"]), 1.0, 10.0)
    return Box(*GAUSSIAN_BOX)


def build_objective(obj_cfg: dict, box: Box | None = None, threads: int = 1) -> tuple[Objective, Box]:
    """Objective and parameter box for an objective config such as ``{"id": "rb-thermal", "dim": 4}``."""
    oid = obj_cfg["id"]
    box = box or default_box(obj_cfg)
    if oid == "fill":
        return FillDistance(box), box
    if oid == "rb-thermal":
        d = box.dim
        if d % 2:
            raise ValueError("rb-thermal needs an even dimension (2 rows x m columns)")
        return RBObjective(ThermalBlockModel(d // 2, int(obj_cfg.get("grid", 33)), threads)), box
    if oid == "rb-gaussian":
        n = int(obj_cfg.get("grid", 41))
        if obj_cfg.get("eim_basis"):
            basis = obj_cfg["eim_basis"]
            if isinstance(basis, str):
                with open(basis) as fh:
                    basis = json.load(fh)
            provider = EimGaussianPoissonModel(EimBasis.from_json(basis), n, threads)
        else:
            provider = GaussianPoissonModel(n, threads)
        return RBObjective(provider), box
    if oid == "eim-gaussian":
        return EIMObjective(gaussian_family(int(obj_cfg.get("grid", 41)))), box
    raise ValueError(f"unknown objective id {oid!r}")


def sample_size_for(value, dim: int) -> int:
    """Integer sample sizes pass through; ``"2^d"`` means ``2**dim``."""
    if isinstance(value, str):
        if value.replace(" ", "") != "2^d":
            raise ValueError(f"unsupported sample size expression {value!r}")
        return 2**dim
    return int(value)


def run_method(method: str, objective: Objective, box: Box, opts: dict, on_step=None) -> RunResult:
    tol = float(opts["tol"])
    max_iters = int(opts.get("max_iters", 1000))
    seed = int(opts.get("seed", 0))
    if method == "pdm":
        cfg = PdmConfig(
            tol=tol,
            max_iters=max_iters,
            initial_point=opts.get("initial_point"),
            seed=seed,
            reevaluate_all=bool(opts.get("reevaluate_all", True)),
        )
        return pdm_run(objective, box, cfg, on_step=on_step)
    if method == "gsm":
        cfg = GsmConfig(
            sampler=opts.get("sampler", "random"),
            sample_size=sample_size_for(opts.get("sample_size", "2^d"), box.dim),
            tol=tol,
            max_iters=max_iters,
            seed=seed,
        )
        return gsm_run(objective, box, cfg)
    raise ValueError(f"unknown method {method!r}")


def method_label(method: str, opts: dict) -> str:
    return "pdm" if method == "pdm" else f"gsm-{opts.get('sampler', 'random')}"


def basis_size(objective: Objective, result: RunResult) -> int:
    basis = getattr(objective, "basis", None)
    return basis.size if basis is not None else len(result.configuration)


def verification_points(box: Box, n: int, seed: int) -> np.ndarray:
    return uniform_sample(Rng(seed).split("verification"), n, box)


def verification_curve(objective: Objective, gamma, points) -> list[tuple[int, float]]:
    """Max objective value over ``points`` after each prefix of ``gamma``.

    Uses a fresh copy of ``objective`` so the run's counters stay intact.
    The first entry is the empty configuration.
    """
    probe = objective.fresh()
    curve = [(0, float(np.max(probe.evaluate_many(points))))]
    for k, p in enumerate(gamma, start=1):
        probe.notify_appended(p)
        curve.append((k, float(np.max(probe.evaluate_many(points)))))
    return curve


def compare(cfg: dict, threads: int = 1) -> tuple[list[dict], dict]:
    """Run every method for every dimension; returns summary rows and verification curves.

    A failing run is recorded in its row's ``error`` field and the sweep
    continues.
    """
    rows: list[dict] = []
    curves: dict[str, list] = {}
    n_verify = int(cfg.get("verify", 0) or 0)
    for dim in cfg["dims"]:
        obj_cfg = dict(cfg["objective"], dim=dim)
        for mopts in cfg["methods"]:
            method = mopts["method"]
            opts = {"tol": cfg["tol"], "max_iters": cfg.get("max_iters", 1000), "seed": cfg.get("seed", 0)}
            opts.update({k: v for k, v in mopts.items() if k != "method"})
            label = method_label(method, opts)
            row = {"dim": dim, "method": label}
            try:
                objective, box = build_objective(obj_cfg, threads=threads)
                result = run_method(method, objective, box, opts)
                last = result.records[-1]
                row.update(
                    distinct_points=last.distinct_points_evaluated,
                    total_evals=last.total_evaluations,
                    final_n_basis=basis_size(objective, result),
                    status=result.status,
                    error="",
                )
                if n_verify:
                    pts = verification_points(box, n_verify, int(cfg.get("seed", 0)))
                    curves[f"d={dim} {label}"] = verification_curve(objective, result.configuration, pts)
            except Exception as exc:  # recorded per row, sweep continues
                logger.exception("compare row d=%s %s failed", dim, label)
                row.update(distinct_points="", total_evals="", final_n_basis="", status="failed", error=str(exc))
            rows.append(row)
    return rows, curves


def two_phase_gaussian(
    grid: int = 41,
    eim_tol: float = 1e-3,
    rb_tol: float = 1e-6,
    max_iters: int = 500,
    seed: int = 0,
    n_verify: int = 200,
    gsm_eim_sample_size: int | None = None,
    gsm_rb_sample_size: int | None = None,
) -> dict:
    """EIM of the Gaussian source followed by a reduced basis, with PDM and GSM-Random.

    Without explicit sizes GSM gets as many EIM samples as PDM had
    barycenters at the end of its EIM run, and as many RB samples as PDM
    had barycenters at the end of its RB run.
    """
    box = Box(*GAUSSIAN_BOX)
    out: dict = {}
    family = gaussian_family(grid)

    eim_pdm = EIMObjective(family)
    r = pdm_run(eim_pdm, box, PdmConfig(tol=eim_tol, max_iters=max_iters, seed=seed))
    out["pdm-eim"] = {"result": r, "basis": eim_pdm.basis}
    s_eim = gsm_eim_sample_size or len(r.division)

    eim_gsm = EIMObjective(family)
    r = gsm_run(eim_gsm, box, GsmConfig("random", s_eim, eim_tol, max_iters, seed))
    out["gsm-eim"] = {"result": r, "basis": eim_gsm.basis}

    verify = verification_points(box, n_verify, seed)
    rb_pdm = RBObjective(EimGaussianPoissonModel(eim_pdm.basis, grid))
    r = pdm_run(rb_pdm, box, PdmConfig(tol=rb_tol, max_iters=max_iters, seed=seed))
    out["pdm-rb"] = {"result": r, "basis": rb_pdm.basis}
    s_rb = gsm_rb_sample_size or len(r.division)

    rb_gsm = RBObjective(EimGaussianPoissonModel(eim_gsm.basis, grid))
    r = gsm_run(rb_gsm, box, GsmConfig("random", s_rb, rb_tol, max_iters, seed))
    out["gsm-rb"] = {"result": r, "basis": rb_gsm.basis}

    for name, obj in (("pdm-rb", rb_pdm), ("gsm-rb", rb_gsm)):
        out[name]["verification"] = verification_curve(obj, out[name]["result"].configuration, verify)
    return out
