"""Closed-form extremal lengths for the two model families and a
resistor-network oracle for flat cylinders."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import isfinite

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ReflexiveError


def _positive(name, x):
    if not (isfinite(float(x)) and x > 0):
        raise ValueError(f"{name} must be finite and positive, got {x}")


@dataclass(frozen=True)
class EuclideanCylinder:
    w: float
    h: float

    def __post_init__(self):
        _positive("w", self.w)
        _positive("h", self.h)


@dataclass(frozen=True)
class SlitDumbbellSurface:
    """Two unit-width rectangular tori (heights b, c) glued along a vertical slit."""
    b: float
    c: float
    ell: float

    def __post_init__(self):
        if not (0 < self.ell < min(self.b, self.c)):
            raise ValueError(f"need 0 < ell < min(b, c), got b={self.b}, c={self.c}, ell={self.ell}")


@dataclass(frozen=True)
class StackedCylinderSurface:
    w: float
    h1: float
    h2: float
    h3: float
    t1: float = 0.0
    t2: float = 0.0
    sliced: bool = False

    def __post_init__(self):
        _positive("w", self.w)
        for name in ("h1", "h2", "h3"):
            _positive(name, getattr(self, name))
        for name in ("t1", "t2"):
            t = getattr(self, name)
            if not 0 <= t < self.w:
                raise ValueError(f"{name} must lie in [0, w), got {t}")
        if self.sliced:
            if abs(self.w - 1) > 1e-12 or abs(self.h1 + self.h2 + self.h3 - 1) > 1e-12:
                raise ValueError("sliced surfaces need w = 1 and h1 + h2 + h3 = 1")

    @classmethod
    def on_slice(cls, h1, h2, t1=0.0, t2=0.0):
        return cls(1.0, h1, h2, 1.0 - h1 - h2, t1, t2, sliced=True)


def cylinder_extremal_length(cyl):
    """Extremal length of the core curve: circumference over height."""
    return cyl.w / cyl.h


def dumbbell_core_extremal_lengths(s):
    """Extremal lengths of the four core curves on the slit dumbbell.

    The horizontal curves see the cylinder above the slit (height b - ell);
    the vertical ones the full torus side. Fractions in, Fractions out.
    """
    b, c, ell = s.b, s.c, s.ell
    if b - ell <= 0 or c - ell <= 0:
        raise ReflexiveError("degenerate_slit", "slit reaches the top of a torus")
    one = Fraction(1) if isinstance(b, Fraction) else 1.0
    return {"alpha1": one / (b - ell), "beta1": b, "alpha2": one / (c - ell), "beta2": c}


def stacked_core_extremal_length(s):
    # twists only re-glue boundaries by translation; they never enter the modulus
    return s.w / (s.h1 + s.h2 + s.h3)


def discrete_extremal_length_oracle(cyl, n=32):
    """Estimate Ext(core) = w/h from the conductance of a cylinder grid.

    The cylinder is meshed with ``n`` periodic columns and ``m`` rows of
    rectangular cells; each resistor carries the conductance of its cell
    strip (cross-section / length). The top and bottom rows are collapsed
    into two terminals held at potentials 1 and 0, and the core-curve
    extremal length equals the effective conductance between them.
    """
    if n < 4:
        raise ValueError("grid density n must be >= 4")
    m = max(4, int(round(n * cyl.h / cyl.w)))
    dx = cyl.w / n
    dy = cyl.h / m
    g_vert = dx / dy
    g_horiz = dy / dx

    # unknown potentials on interior rows 1..m-1; rows 0 and m are terminals
    rows_inner = m - 1
    N = n * rows_inner

    def node(i, j):
        return (i - 1) * n + (j % n)

    data, ri, ci = [], [], []
    rhs = np.zeros(N)
    for i in range(1, m):
        for j in range(n):
            k = node(i, j)
            diag = 0.0
            for dj in (-1, 1):
                ri.append(k)
                ci.append(node(i, j + dj))
                data.append(-g_horiz)
                diag += g_horiz
            for di in (-1, 1):
                ii = i + di
                diag += g_vert
                if ii == m:
                    rhs[k] += g_vert * 1.0
                elif ii == 0:
                    pass
                else:
                    ri.append(k)
                    ci.append(node(ii, j))
                    data.append(-g_vert)
            ri.append(k)
            ci.append(k)
            data.append(diag)
    L = sp.csr_matrix((data, (ri, ci)), shape=(N, N))
    try:
        phi = spla.spsolve(L.tocsc(), rhs)
    except RuntimeError as exc:
        raise ReflexiveError("singular_system", str(exc)) from exc
    if not np.all(np.isfinite(phi)):
        raise ReflexiveError("singular_system", "non-finite potentials")
    # current leaving the top terminal into row m-1
    top_row = phi[(m - 2) * n:(m - 1) * n]
    current = float(np.sum(g_vert * (1.0 - top_row)))
    return current
