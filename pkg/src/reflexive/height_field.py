"""Mismatch functions, the height H and their finite-difference derivatives."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import ReflexiveError

DEFAULT_REL_STEP = 1e-5
PROVENANCES = ("closed_form_dumbbell", "closed_form_stacked", "table", "external")


@dataclass(frozen=True)
class AdmissibleCurveSet:
    curves: tuple
    pairing: dict

    def __post_init__(self):
        curves = tuple(self.curves)
        object.__setattr__(self, "curves", curves)
        if len(set(curves)) != len(curves):
            raise ValueError("curve names must be unique")
        if set(self.pairing) != set(curves):
            raise ValueError("pairing must be defined on every curve")
        for g in curves:
            partner = self.pairing[g]
            if partner not in self.pairing or self.pairing[partner] != g:
                raise ValueError(f"pairing is not an involution at {g!r}")

    @classmethod
    def identity(cls, curves):
        return cls(tuple(curves), {g: g for g in curves})

    def partner(self, g):
        return self.pairing[g]


@dataclass(frozen=True)
class ExtremalLengthAssignment:
    side: str
    eval: Callable
    provenance: str = "external"

    def __post_init__(self):
        if self.side not in ("I", "II"):
            raise ValueError("side must be 'I' or 'II'")
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")

    def __call__(self, u, curve):
        return self.eval(u, curve)


def table_assignment(side, axes, tables):
    """Piecewise-linear assignment from gridded values.

    ``tables`` maps curve -> array shaped by ``axes``. Not differentiable
    at grid lines, which the audits treat as inconclusive smoothness.
    """
    interp = {g: RegularGridInterpolator(axes, np.asarray(v, dtype=float), method="linear",
                                         bounds_error=True) for g, v in tables.items()}

    def evaluate(u, curve):
        return float(interp[curve](np.atleast_2d(np.asarray(u, dtype=float)))[0])

    return ExtremalLengthAssignment(side, evaluate, "table")


@dataclass(frozen=True, eq=False)
class HeightField:
    """Two extremal-length assignments over a parameter domain.

    ``bounds`` lists the open box (lo, hi) per coordinate, ``None`` meaning
    unbounded; ``guard`` may cut the box further. ``sample_box`` is the
    compact region audits and scans draw from by default.
    """
    param_names: tuple
    curves: AdmissibleCurveSet
    ext_I: ExtremalLengthAssignment
    ext_II: ExtremalLengthAssignment
    guard: Callable
    bounds: tuple = ()
    sample_box: tuple = ()
    rays: tuple = ()
    name: str = "field"
    meta: dict = field(default_factory=dict)

    @property
    def dim(self):
        return len(self.param_names)

    def in_domain(self, u):
        u = np.asarray(u, dtype=float)
        if u.shape != (self.dim,) or not np.all(np.isfinite(u)):
            return False
        return bool(self.guard(u))

    def swapped(self):
        """Field with the two sides exchanged (pairing kept)."""
        return HeightField(self.param_names, self.curves,
                           ExtremalLengthAssignment("I", self.ext_II.eval, self.ext_II.provenance),
                           ExtremalLengthAssignment("II", self.ext_I.eval, self.ext_I.provenance),
                           self.guard, self.bounds, self.sample_box, self.rays, self.name + "_swapped",
                           dict(self.meta))


def _as_point(f, u):
    u = np.asarray(u, dtype=float).reshape(-1)
    if not f.in_domain(u):
        raise ReflexiveError("out_of_domain", f"{u.tolist()} is outside the domain of {f.name}")
    return u


def ext_value(assignment, u, curve):
    val = float(assignment(u, curve))
    if not (math.isfinite(val) and val > 0):
        raise ReflexiveError("nonpositive_extremal_length",
                             f"Ext_{assignment.side}({u.tolist()}; {curve}) = {val}")
    return val


def _mismatch(f, u, curve):
    return math.log(ext_value(f.ext_I, u, curve)) - math.log(ext_value(f.ext_II, u, f.curves.partner(curve)))


def mismatch(f, u, curve):
    """log Ext_I(u; curve) - log Ext_II(u; partner(curve))."""
    return _mismatch(f, _as_point(f, u), curve)


def mismatches(f, u):
    u = _as_point(f, u)
    return np.array([_mismatch(f, u, g) for g in f.curves.curves])


def height(f, u):
    m = mismatches(f, u)
    return float(np.dot(m, m))


def log_ext(f, u, side):
    u = _as_point(f, u)
    assignment = f.ext_I if side == "I" else f.ext_II
    return np.array([np.log(ext_value(assignment, u, g)) for g in f.curves.curves])


def default_steps(u, step=None):
    rel = DEFAULT_REL_STEP if step is None else step
    if not rel > 0:
        raise ValueError("step must be positive")
    return rel * np.maximum(1.0, np.abs(np.asarray(u, dtype=float)))


def _fd_column(fun, f, u, direction, h):
    """Derivative of ``fun`` at u along ``direction`` with spacing h.

    Central when both neighbours are in-domain, otherwise second-order
    one-sided; ``stencil_out_of_domain`` if neither fits.
    """
    up, um = u + h * direction, u - h * direction
    if f.in_domain(up) and f.in_domain(um):
        return (fun(up) - fun(um)) / (2 * h)
    for sgn in (1.0, -1.0):
        p1, p2 = u + sgn * h * direction, u + 2 * sgn * h * direction
        if f.in_domain(p1) and f.in_domain(p2):
            return sgn * (-3 * fun(u) + 4 * fun(p1) - fun(p2)) / (2 * h)
    raise ReflexiveError("stencil_out_of_domain", f"no finite-difference stencil fits at {u.tolist()}")


def fd_jacobian(fun, f, u, step=None):
    u = _as_point(f, u)
    hs = default_steps(u, step)
    cols = []
    for i in range(f.dim):
        e = np.zeros(f.dim)
        e[i] = 1.0
        cols.append(np.atleast_1d(_fd_column(fun, f, u, e, hs[i])))
    if not cols:
        return np.zeros((np.atleast_1d(fun(u)).size, 0))
    return np.column_stack(cols)


def height_gradient_fd(f, u, step=None):
    return fd_jacobian(lambda x: height(f, x), f, u, step)[0]


def log_ext_jacobian(f, u, side, step=None):
    """Jacobian (curves x params) of u -> (log Ext_side(u; gamma))_gamma."""
    return fd_jacobian(lambda x: log_ext(f, x, side), f, u, step)


def directional_derivative(fun, f, u, v, step=None):
    """d/dt fun(u + t v) at t = 0 by finite differences."""
    u = _as_point(f, u)
    v = np.asarray(v, dtype=float)
    norm = float(np.max(np.abs(v))) if v.size else 0.0
    if norm == 0.0:
        val = fun(u)
        return np.zeros_like(val, dtype=float) if np.ndim(val) else 0.0
    rel = DEFAULT_REL_STEP if step is None else step
    h = rel * max(1.0, float(np.max(np.abs(u)))) / norm
    return _fd_column(fun, f, u, v, h)


def grid_axes(box, resolution):
    axes = []
    for (lo, hi), n in zip(box, resolution):
        n = int(n)
        if n < 1:
            raise ValueError("resolution must be >= 1 per axis")
        axes.append(np.array([lo]) if n == 1 else np.linspace(lo, hi, n))
    return axes


def scan_rows(f, points):
    """(point, mismatches, H) rows for in-domain points, skipping the rest."""
    rows = []
    for u in points:
        if not f.in_domain(u):
            continue
        m = mismatches(f, u)
        rows.append((np.asarray(u, dtype=float), m, float(np.dot(m, m))))
    return rows


def format_number(x):
    return format(float(x), ".17g")


def scan_csv(f, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"param_{i + 1}" for i in range(f.dim)]
                    + [f"m_{g}" for g in f.curves.curves] + ["H"])
    for u, m, H in rows:
        writer.writerow([format_number(x) for x in u] + [format_number(x) for x in m] + [format_number(H)])
    return buf.getvalue()
