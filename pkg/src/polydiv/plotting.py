"""Figures written next to the CSV/JSON outputs.

SVG output is byte-stable for identical input: the hash salt is fixed
and the date stamp is dropped.
"""

from __future__ import annotations

from collections import defaultdict

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.collections import PolyCollection  # noqa: E402

STABLE_RC = {
    "svg.hashsalt": "polydiv",
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
}
_METADATA = {"svg": {"Date": None}, "png": {"Software": None}}
MARKERS = {"pdm": "o", "gsm-random": "s", "gsm-lhs": "^"}


def _save(fig, path) -> None:
    fmt = str(path).rsplit(".", 1)[-1].lower()
    fig.savefig(path, metadata=_METADATA.get(fmt))
    plt.close(fig)


def _polygon(vertices: np.ndarray) -> np.ndarray:
    """Order the corners of a convex planar polygon counter-clockwise."""
    c = vertices.mean(axis=0)
    ang = np.arctan2(vertices[:, 1] - c[1], vertices[:, 0] - c[0])
    return vertices[np.argsort(ang, kind="stable")]


def division_svg(div, path, gamma=None) -> None:
    """Cell edges, barycenters and configuration points of a planar division."""
    if div.root.dim != 2:
        raise ValueError(f"only planar divisions can be drawn, got dimension {div.root.dim}")
    with plt.rc_context(STABLE_RC):
        fig, ax = plt.subplots(figsize=(4, 4))
        ids = sorted(div.cells)
        polys = [_polygon(div.cells[i].vertices) for i in ids]
        ax.add_collection(PolyCollection(polys, facecolors="none", edgecolors="0.2", linewidths=0.6))
        bary = np.array([div.barycenters[i] for i in ids])
        ax.plot(bary[:, 0], bary[:, 1], ".", color="tab:blue", ms=3, label="barycenters")
        if gamma is not None and len(gamma):
            g = np.asarray(gamma, dtype=float)
            ax.plot(g[:, 0], g[:, 1], "o", color="tab:red", ms=4, label="configuration")
        lo, hi = div.root.lo, div.root.hi
        ax.set_xlim(lo[0], hi[0])
        ax.set_ylim(lo[1], hi[1])
        ax.set_aspect("equal")
        ax.grid(False)
        ax.set_title(f"{len(ids)} cells")
        _save(fig, path)


def trace_figure(records, path, label="") -> None:
    """Selected error indicator per greedy step."""
    with plt.rc_context(STABLE_RC):
        fig, ax = plt.subplots(figsize=(5, 3.2))
        steps = [r.step for r in records]
        errs = [max(r.err, 1e-300) for r in records]
        ax.semilogy(steps, errs, "-o", ms=3, label=label or None)
        ax.set_xlabel("step")
        ax.set_ylabel("max error indicator")
        if label:
            ax.legend()
        fig.tight_layout()
        _save(fig, path)


def samples_vs_dimension(rows, path) -> None:
    """Distinct evaluated points per method against parameter dimension."""
    series = defaultdict(list)
    for r in rows:
        if r.get("distinct_points") not in (None, ""):
            series[r["method"]].append((int(r["dim"]), int(r["distinct_points"])))
    with plt.rc_context(STABLE_RC):
        fig, ax = plt.subplots(figsize=(5, 3.2))
        for method in sorted(series):
            pts = sorted(series[method])
            ax.semilogy([p[0] for p in pts], [p[1] for p in pts], "-", marker=MARKERS.get(method, "x"), label=method)
        ax.set_xlabel("dimension")
        ax.set_ylabel("evaluated samples")
        ax.legend()
        fig.tight_layout()
        _save(fig, path)


def verification_figure(curves, path) -> None:
    """Max verification error against basis size; ``curves`` maps label to ``[(k, err)]``."""
    with plt.rc_context(STABLE_RC):
        fig, ax = plt.subplots(figsize=(5, 3.2))
        for label in sorted(curves):
            ks, errs = zip(*curves[label]) if curves[label] else ((), ())
            ax.semilogy(ks, [max(e, 1e-300) for e in errs], "-", label=label)
        ax.set_xlabel("basis size")
        ax.set_ylabel("max verification error")
        ax.legend()
        fig.tight_layout()
        _save(fig, path)
