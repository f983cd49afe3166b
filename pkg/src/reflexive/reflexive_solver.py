"""Push-field descent for reflexive points, a brute-force grid scan, and the
extremal-length matching certificate."""
from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import ReflexiveError
from .height_field import (
    ext_value,
    directional_derivative,
    format_number,
    grid_axes,
    height,
    height_gradient_fd,
    mismatches,
    scan_csv,
    scan_rows,
)

MIN_STEP = 1e-14


@dataclass(frozen=True)
class SolveOptions:
    eps_reflexive: float = 1e-12
    max_iters: int = 10000
    armijo_c: float = 1e-4
    backtrack: float = 0.5
    initial_step: float = 1.0
    mode: str = "push_descent"

    def __post_init__(self):
        if not (self.eps_reflexive > 0 and self.max_iters > 0 and self.armijo_c > 0 and self.initial_step > 0):
            raise ValueError("solve options must be positive")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack factor must lie in (0, 1)")
        if self.mode not in ("push_descent", "gradient_descent"):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass
class SolveResult:
    u_star: np.ndarray
    H_star: float
    iterations: int
    trace: list
    status: str

    def to_dict(self):
        return {
            "u_star": [float(x) for x in self.u_star],
            "H_star": float(self.H_star),
            "iterations": self.iterations,
            "status": self.status,
        }

    def trace_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        k = len(self.u_star)
        writer.writerow(["iter"] + [f"param_{i + 1}" for i in range(k)] + ["H", "curve"])
        for it, (u, H, curve) in enumerate(self.trace):
            writer.writerow([it] + [format_number(x) for x in u] + [format_number(H), curve or ""])
        return buf.getvalue()


@dataclass
class ReflexiveCertificate:
    u_star: np.ndarray
    mismatch: dict
    ext_residual: dict
    tolerance: float
    verdict: str

    def to_dict(self):
        return {
            "u_star": [float(x) for x in self.u_star],
            "mismatch": {g: float(v) for g, v in self.mismatch.items()},
            "ext_residual": {g: float(v) for g, v in self.ext_residual.items()},
            "tolerance": self.tolerance,
            "verdict": self.verdict,
        }


def _descent_direction(f, push, u, mode):
    if mode == "gradient_descent":
        g = height_gradient_fd(f, u)
        return -g, -float(np.dot(g, g)), None
    m = mismatches(f, u)
    # stable argmax: ties resolve to the earliest curve
    k = int(np.argmax(np.abs(m)))
    curve = f.curves.curves[k]
    V = push(curve, u)
    slope = float(directional_derivative(lambda x: height(f, x), f, u, V))
    if slope > 0:
        V, slope = -V, -slope
    return V, slope, curve


def push_descent(f, push, u0, opts=None):
    """Greedy descent of H along the push field of the largest mismatch.

    Each iteration backtracks from ``initial_step`` until the Armijo
    condition holds, halving steps that would leave the domain. The push
    direction is oriented by the sign of dH along it.
    """
    opts = opts or SolveOptions()
    u = np.asarray(u0, dtype=float).reshape(-1)
    if not f.in_domain(u):
        raise ReflexiveError("out_of_domain", f"start point {u.tolist()} is outside the domain")
    H = height(f, u)
    trace = [(u.copy(), H, None)]
    status = "max_iters"
    for it in range(opts.max_iters + 1):
        if H < opts.eps_reflexive:
            status = "reflexive"
            break
        if it == opts.max_iters:
            break
        V, slope, curve = _descent_direction(f, push, u, opts.mode)
        if not slope < 0 or not np.any(V):
            status = "stalled"
            break
        s = opts.initial_step
        accepted = None
        while s >= MIN_STEP:
            cand = u + s * V
            if f.in_domain(cand):
                Hc = height(f, cand)
                if Hc < H and Hc <= H + opts.armijo_c * s * slope:
                    accepted = (cand, Hc)
                    break
            s *= opts.backtrack
        if accepted is None:
            status = "stalled"
            break
        u, H = accepted
        trace.append((u.copy(), H, curve))
    return SolveResult(u, H, len(trace) - 1, trace, status)


@dataclass
class ScanResult:
    rows: list
    argmin: np.ndarray
    H_min: float
    param_names: tuple
    csv: str = field(repr=False)

    def argmin_dict(self):
        return {"argmin": [float(x) for x in self.argmin], "H_min": float(self.H_min),
                "rows": len(self.rows), "params": list(self.param_names)}


def grid_scan(f, box, resolution):
    """Evaluate mismatches and H on a tensor grid (last parameter fastest)."""
    if len(box) != f.dim or len(resolution) != f.dim:
        raise ValueError("box and resolution must have one entry per parameter")
    axes = grid_axes(box, resolution)
    rows = scan_rows(f, (np.array(p) for p in itertools.product(*axes)))
    if not rows:
        raise ReflexiveError("empty_grid_after_guard", "no grid point lies in the domain")
    k = int(np.argmin([H for _, _, H in rows]))
    return ScanResult(rows, rows[k][0], rows[k][2], f.param_names, scan_csv(f, rows))


def certify_reflexive(f, u, tol=1e-9):
    """Per-curve mismatch and Ext_I - Ext_II residuals; certified iff max |m| <= tol."""
    u = np.asarray(u, dtype=float).reshape(-1)
    if not f.in_domain(u):
        raise ReflexiveError("out_of_domain", f"{u.tolist()} is outside the domain")
    m = mismatches(f, u)
    mis, res = {}, {}
    for k, g in enumerate(f.curves.curves):
        mis[g] = abs(float(m[k]))
        res[g] = abs(ext_value(f.ext_I, u, g) - ext_value(f.ext_II, u, f.curves.partner(g)))
    verdict = "certified" if (max(mis.values(), default=0.0) <= tol) else "not_certified"
    return ReflexiveCertificate(u, mis, res, tol, verdict)
