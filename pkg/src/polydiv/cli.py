"""Command line entry point: ``polydiv run|compare|check-division|snapshot-svg``.

Exit codes: 0 success, 1 invariant or convergence failure, 2 bad input.
``POLYDIV_OUT_DIR`` and ``POLYDIV_THREADS`` override the output directory
and thread count when the matching flags are absent.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import plotting
from .division import Division, check_proper
from .experiments import (
    basis_size,
    build_objective,
    compare,
    method_label,
    run_method,
    sample_size_for,
    verification_curve,
    verification_points,
)
from .geometry import Box
from .numerics import ConvergenceError, DegenerateError, Rng
from .oracle import MAX_POINTS, brute_force_facets
from .pdm import TRACE_COLUMNS, RunAborted

logger = logging.getLogger("polydiv")

TRACE_SCHEMA = "polydiv.trace/1"
SUMMARY_SCHEMA = "polydiv.summary/1"
COMPARE_SCHEMA = "polydiv.compare-rows/1"
VERIFY_SCHEMA = "polydiv.verification/1"
COMPARE_COLUMNS = ("dim", "method", "distinct_points", "total_evals", "final_n_basis", "status", "error")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    pass


def _schema(name: str) -> dict:
    with resources.files("polydiv").joinpath(f"schemas/{name}.schema.json").open() as fh:
        return json.load(fh)


def locate_line(text: str, path) -> int | None:
    """1-based line of the JSON value at ``path`` (keys and list indices)."""
    dec = json.JSONDecoder()

    def skip(i):
        while i < len(text) and text[i] in " \t\r\n":
            i += 1
        return i

    pos = skip(0)
    for part in path:
        if pos >= len(text):
            return None
        if text[pos] == "{":
            i = skip(pos + 1)
            found = None
            while i < len(text) and text[i] != "}":
                key, i = dec.raw_decode(text, i)
                i = skip(skip(i) + 1)  # past ':'
                if key == part:
                    found = i
                    break
                _, i = dec.raw_decode(text, i)
                i = skip(i)
                if text[i] == ",":
                    i = skip(i + 1)
            if found is None:
                break
            pos = found
        elif text[pos] == "[" and isinstance(part, int):
            i = skip(pos + 1)
            for _ in range(part):
                _, i = dec.raw_decode(text, i)
                i = skip(skip(i) + 1)
            pos = i
        else:
            break
    return text.count("\n", 0, pos) + 1


def load_config(path, schema_name: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from exc
    validator = jsonschema.Draft202012Validator(_schema(schema_name))
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        line = locate_line(text, list(err.absolute_path))
        raise ConfigError(f"{path}:{line}: {where}: {err.message}")
    try:
        _semantic_checks(cfg, schema_name)
    except ConfigError as exc:
        key_path, msg = exc.args
        raise ConfigError(f"{path}:{locate_line(text, key_path)}: {'/'.join(map(str, key_path))}: {msg}") from None
    return cfg


def _semantic_checks(cfg: dict, schema_name: str) -> None:
    obj = cfg["objective"]
    if schema_name == "compare":
        if obj["id"] == "rb-thermal":
            for k, d in enumerate(cfg["dims"]):
                if d % 2:
                    raise ConfigError(["dims", k], "rb-thermal needs even dimensions")
        elif obj["id"] != "fill":
            raise ConfigError(["objective", "id"], "dimension sweeps need a dimension-generic objective")
        return
    box = cfg.get("box")
    if box is not None:
        if len(box["lower"]) != len(box["upper"]):
            raise ConfigError(["box", "upper"], "lower and upper differ in length")
        if any(not lo < hi for lo, hi in zip(box["lower"], box["upper"])):
            raise ConfigError(["box"], "every lower bound must be below its upper bound")
        if "dim" in obj and obj["dim"] != len(box["lower"]):
            raise ConfigError(["objective", "dim"], "does not match the box dimension")
    dim = len(box["lower"]) if box else obj.get("dim")
    if obj["id"] == "rb-thermal":
        if dim is None:
            raise ConfigError(["objective"], "rb-thermal needs 'dim' or a box")
        if dim % 2:
            raise ConfigError(["objective", "dim"], "rb-thermal needs an even dimension")
    if obj["id"] in ("rb-gaussian", "eim-gaussian") and dim not in (None, 5):
        raise ConfigError(["objective"], "the Gaussian source problem has 5 parameters")
    init = cfg.get("pdm", {}).get("initial_point")
    if init is not None and dim is not None and len(init) != dim:
        raise ConfigError(["pdm", "initial_point"], "length does not match the dimension")


def _resolve_run(cfg: dict, args) -> dict:
    cfg = json.loads(json.dumps(cfg))
    cfg.setdefault("schema", "polydiv.run/1")
    cfg.setdefault("max_iters", 1000)
    cfg.setdefault("seed", 0)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if cfg["method"] == "pdm":
        cfg.setdefault("pdm", {}).setdefault("reevaluate_all", True)
    else:
        g = cfg.setdefault("gsm", {})
        g.setdefault("sampler", "random")
        g.setdefault("sample_size", "2^d")
    out = cfg.setdefault("output", {})
    out.setdefault("trace", "trace.csv")
    out.setdefault("summary", "summary.json")
    out.setdefault("division", "division.json")
    out.setdefault("snapshots", False)
    out.setdefault("figures", True)
    out.setdefault("timing", True)
    return cfg


def _out_dir(args, cfg: dict) -> Path:
    d = args.out_dir or os.environ.get("POLYDIV_OUT_DIR") or cfg.get("output", {}).get("dir") or "results"
    path = Path(d)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    return max(1, int(os.environ.get("POLYDIV_THREADS", "1")))


def _header_lines(schema: str, cfg: dict) -> list[str]:
    return [
        f"# schema={schema}",
        f"# seed={cfg.get('seed', 0)}",
        "# config=" + json.dumps(cfg, sort_keys=True, separators=(",", ":")),
    ]


def write_csv(path, schema: str, cfg: dict, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        for line in _header_lines(schema, cfg):
            fh.write(line + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in r])


def write_trace(path, records, cfg: dict, timing: bool = True) -> None:
    rows = []
    for r in records:
        row = r.row()
        row[-1] = round(r.wall_ms, 3) if timing else 0.0
        rows.append(row)
    write_csv(path, TRACE_SCHEMA, cfg, TRACE_COLUMNS, rows)


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(line for line in fh if not line.startswith("#")))


def cmd_run(args) -> int:
    cfg = _resolve_run(load_config(args.config, "run"), args)
    out = _out_dir(args, cfg)
    threads = _threads(args)
    box = Box(tuple(cfg["box"]["lower"]), tuple(cfg["box"]["upper"])) if "box" in cfg else None
    objective, box = build_objective(cfg["objective"], box, threads)
    method = cfg["method"]
    opts = {"tol": cfg["tol"], "max_iters": cfg["max_iters"], "seed": cfg["seed"]}
    opts.update(cfg.get(method, {}))

    on_step = None
    if method == "pdm" and cfg["output"]["snapshots"] and box.dim == 2:
        snap_dir = out / "snapshots"
        snap_dir.mkdir(exist_ok=True)

        def on_step(step, div, gamma):
            plotting.division_svg(div, snap_dir / f"step_{step:04d}.svg", gamma.points)

    try:
        result = run_method(method, objective, box, opts, on_step=on_step)
    except RunAborted as exc:
        logger.error("%s", exc)
        write_trace(out / cfg["output"]["trace"], exc.partial.records, cfg, cfg["output"]["timing"])
        return EXIT_FAIL

    write_trace(out / cfg["output"]["trace"], result.records, cfg, cfg["output"]["timing"])
    last = result.records[-1] if result.records else None
    summary = {
        "schema": SUMMARY_SCHEMA,
        "method": method_label(method, opts),
        "objective": cfg["objective"]["id"],
        "status": result.status,
        "steps": len(result.records),
        "gamma_size": len(result.configuration),
        "n_basis": basis_size(objective, result),
        "distinct_points": last.distinct_points_evaluated if last else 0,
        "total_evals": last.total_evaluations if last else 0,
        "final_err": last.err if last else None,
        "seed": cfg["seed"],
        "gamma": [p.tolist() for p in result.configuration],
        "config": cfg,
    }
    if method == "gsm":
        summary["sampler"] = opts["sampler"]
        summary["sample_size"] = sample_size_for(opts["sample_size"], box.dim)
    if result.division is not None:
        summary["n_cells"] = len(result.division)
        result.division.save(out / cfg["output"]["division"], gamma=result.configuration.points)
    basis = getattr(objective, "basis", None)
    if cfg["objective"]["id"] == "eim-gaussian":
        with open(out / "eim_basis.json", "w") as fh:
            json.dump(basis.to_json(), fh)
        summary["eim_basis"] = "eim_basis.json"
    with open(out / cfg["output"]["summary"], "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")

    if cfg["output"]["figures"] and result.records:
        plotting.trace_figure(result.records, out / "trace.png", summary["method"])
        if result.division is not None and box.dim == 2:
            plotting.division_svg(result.division, out / "division.svg", result.configuration.points)
    if args.verify:
        pts = verification_points(box, args.verify, cfg["seed"])
        curve = verification_curve(objective, result.configuration, pts)
        rows = [[summary["method"], k, e] for k, e in curve]
        write_csv(out / "verification.csv", VERIFY_SCHEMA, cfg, ("method", "n_basis", "max_err"), rows)
        if cfg["output"]["figures"]:
            plotting.verification_figure({summary["method"]: curve}, out / "verification.png")
    print(json.dumps({k: summary[k] for k in ("status", "steps", "gamma_size", "distinct_points", "total_evals")}))
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = load_config(args.config, "compare")
    cfg.setdefault("schema", "polydiv.compare/1")
    cfg.setdefault("seed", 0)
    cfg.setdefault("max_iters", 1000)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.verify is not None:
        cfg["verify"] = args.verify
    out = _out_dir(args, cfg)
    rows, curves = compare(cfg, threads=_threads(args))
    write_csv(out / "compare.csv", COMPARE_SCHEMA, cfg, COMPARE_COLUMNS, [[r[c] for c in COMPARE_COLUMNS] for r in rows])
    figures = cfg.get("output", {}).get("figures", True)
    if figures:
        plotting.samples_vs_dimension(rows, out / "samples_vs_dimension.png")
    if curves:
        vrows = [[label, k, e] for label in sorted(curves) for k, e in curves[label]]
        write_csv(out / "verification.csv", VERIFY_SCHEMA, cfg, ("run", "n_basis", "max_err"), vrows)
        if figures:
            plotting.verification_figure(curves, out / "verification.png")
    for r in rows:
        print(f"d={r['dim']:<3} {r['method']:<11} distinct={r['distinct_points']} evals={r['total_evals']} basis={r['final_n_basis']} {r['status']}")
    return EXIT_FAIL if any(r["status"] == "failed" for r in rows) else EXIT_OK


def _load_division(path) -> Division:
    try:
        return Division.load(path)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"{path}: cannot read division: {exc}") from exc


def cmd_check_division(args) -> int:
    div = _load_division(args.division)
    try:
        report = check_proper(div, Rng(args.seed).split("check-division"), args.samples)
    except DegenerateError as exc:
        print(json.dumps({"error": str(exc)}))
        return EXIT_FAIL
    out = dict(report.__dict__)
    ok = report.ok()
    if args.oracle:
        mismatched = []
        for cid in sorted(div.cells):
            cell = div.cells[cid]
            if len(cell.vertices) > MAX_POINTS or cell.dim > 5:
                continue
            mine = {frozenset(f.vertex_ids) for f in cell.facets}
            if mine != {frozenset(s) for s in brute_force_facets(cell.vertices)}:
                mismatched.append(cid)
        out["oracle_mismatches"] = mismatched
        ok = ok and not mismatched
    out["ok"] = ok
    print(json.dumps(out))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_snapshot_svg(args) -> int:
    div = _load_division(args.division)
    if div.root.dim != 2:
        raise ConfigError(f"{args.division}: snapshot-svg needs a 2-dimensional division, got {div.root.dim}")
    with open(args.division) as fh:
        gamma = json.load(fh).get("gamma")
    plotting.division_svg(div, args.out, np.asarray(gamma) if gamma else None)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polydiv", description="Polytope division and greedy sampling experiments.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, verify=True):
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--out-dir", help="output directory (overrides config and POLYDIV_OUT_DIR)")
        p.add_argument("--threads", type=int, help="threads for snapshot computation")
        p.add_argument("--seed", type=int, help="override the config seed")
        if verify:
            p.add_argument("--verify", type=int, metavar="N", help="max error over N fresh verification samples")

    p = sub.add_parser("run", help="run one PDM or GSM experiment")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="PDM vs GSM over a dimension sweep")
    common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("check-division", help="verify a saved division is proper")
    p.add_argument("division", help="division JSON written by 'run'")
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--oracle", action="store_true", help="also compare facets with the brute-force oracle")
    p.set_defaults(func=cmd_check_division)

    p = sub.add_parser("snapshot-svg", help="draw a 2-d division as SVG")
    p.add_argument("division")
    p.add_argument("out")
    p.set_defaults(func=cmd_snapshot_svg)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
