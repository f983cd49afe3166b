"""Configuration data, the real constraint space V_C and its scale-fixed slice.

Homology of a punctured surface is free, so the lattice Gamma is carried
only through a fixed basis of rank ``2*genus + max(punctures - 1, 0)``.
Integer checks (generation, kernel) are exact via sympy; everything on the
real side uses floating point with a relative rank tolerance.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import gcd

import numpy as np
from scipy.optimize import linprog
from sympy import Matrix
from sympy.matrices.normalforms import invariant_factors

from .errors import ReflexiveError

RANK_TOL = 1e-9
POS_TOL = 1e-12


def homology_rank(genus, punctures):
    return 2 * genus + max(punctures - 1, 0)


@dataclass(frozen=True, eq=False)
class ConfigurationDatum:
    genus: int
    punctures: int
    edges: tuple
    iota: dict
    relations: tuple
    tau: dict
    sigma: dict
    extra_linear_constraints: tuple = ()
    e0: str | None = None

    @property
    def rank(self):
        return homology_rank(self.genus, self.punctures)

    @property
    def n_edges(self):
        return len(self.edges)

    def index(self, edge):
        try:
            return self.edges.index(edge)
        except ValueError:
            raise ReflexiveError("malformed", f"unknown edge {edge!r}") from None

    def iota_matrix(self):
        """Integer matrix of iota_*: Z^E -> Gamma, shape (rank, |E|)."""
        if not self.edges:
            return np.zeros((self.rank, 0), dtype=np.int64)
        return np.array([self.iota[e] for e in self.edges], dtype=np.int64).reshape(len(self.edges), self.rank).T

    def relation_matrix(self):
        return np.array(self.relations, dtype=np.int64).reshape(len(self.relations), self.n_edges)

    def extra_matrix(self):
        return np.array(self.extra_linear_constraints, dtype=float).reshape(
            len(self.extra_linear_constraints), self.n_edges)

    def horizontal_edges(self):
        return [e for e in self.edges if self.tau[e] == "h"]

    def default_e0(self):
        if self.e0 is not None:
            return self.e0
        horizontal = self.horizontal_edges()
        return horizontal[0] if horizontal else None

    @classmethod
    def from_dict(cls, data, complete_kernel=False):
        try:
            edges = tuple(str(e) for e in data["edges"])
            datum = cls(
                genus=int(data["genus"]),
                punctures=int(data["punctures"]),
                edges=edges,
                iota={str(k): tuple(int(x) for x in v) for k, v in data["iota"].items()},
                relations=tuple(tuple(int(x) for x in r) for r in data.get("relations", [])),
                tau={str(k): str(v) for k, v in data["tau"].items()},
                sigma={str(k): str(v) for k, v in data["sigma"].items()},
                extra_linear_constraints=tuple(
                    tuple(float(x) for x in r) for r in data.get("extra_linear_constraints", [])),
                e0=data.get("e0"),
            )
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise ReflexiveError("malformed", f"unreadable configuration datum: {exc}") from exc
        check_structure(datum)
        if complete_kernel:
            datum = complete_relations(datum)
        return datum

    @classmethod
    def from_json(cls, path, complete_kernel=False):
        with open(path, encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ReflexiveError("malformed", f"invalid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ReflexiveError("malformed", "top-level JSON value must be an object")
        return cls.from_dict(data, complete_kernel=complete_kernel)

    def to_dict(self):
        out = {
            "genus": self.genus,
            "punctures": self.punctures,
            "edges": list(self.edges),
            "iota": {e: list(self.iota[e]) for e in self.edges},
            "relations": [list(r) for r in self.relations],
            "tau": {e: self.tau[e] for e in self.edges},
            "sigma": {e: self.sigma[e] for e in self.edges},
        }
        if self.extra_linear_constraints:
            out["extra_linear_constraints"] = [list(r) for r in self.extra_linear_constraints]
        if self.e0 is not None:
            out["e0"] = self.e0
        return out


def check_structure(d):
    """Raise ``malformed`` when the datum cannot even be read consistently."""
    if d.genus < 0 or d.punctures < 0:
        raise ReflexiveError("malformed", "genus and punctures must be non-negative")
    if len(set(d.edges)) != len(d.edges):
        raise ReflexiveError("malformed", "edge labels must be unique")
    edges = set(d.edges)
    for name, mapping in (("iota", d.iota), ("tau", d.tau), ("sigma", d.sigma)):
        if set(mapping) != edges:
            raise ReflexiveError("malformed", f"{name} keys do not match edges")
    for e, vec in d.iota.items():
        if len(vec) != d.rank:
            raise ReflexiveError("malformed", f"iota({e}) has length {len(vec)}, expected rank {d.rank}")
    for k, r in enumerate(d.relations):
        if len(r) != d.n_edges:
            raise ReflexiveError("malformed", f"relation {k} has length {len(r)}, expected {d.n_edges}")
    for k, r in enumerate(d.extra_linear_constraints):
        if len(r) != d.n_edges:
            raise ReflexiveError("malformed", f"extra constraint {k} has length {len(r)}")
    for e, t in d.tau.items():
        if t not in ("h", "v"):
            raise ReflexiveError("malformed", f"tau({e}) must be 'h' or 'v', got {t!r}")
    for e, s in d.sigma.items():
        if s not in edges:
            raise ReflexiveError("malformed", f"sigma({e}) = {s!r} is not an edge")
    if d.e0 is not None and d.e0 not in edges:
        raise ReflexiveError("malformed", f"e0 = {d.e0!r} is not an edge")


def integer_kernel_basis(mat):
    """Primitive integer vectors spanning the rational kernel of ``mat``."""
    m = Matrix(mat.tolist()) if mat.size else Matrix.zeros(*mat.shape)
    out = []
    for v in m.nullspace():
        denom = 1
        for x in v:
            denom = denom * x.q // gcd(denom, x.q)
        ints = [int(x * denom) for x in v]
        g = 0
        for x in ints:
            g = gcd(g, x)
        out.append(tuple(x // g for x in ints))
    return out


def complete_relations(d):
    """Return a copy of ``d`` whose relations are augmented to span ker(iota_*)."""
    rel = list(d.relations)
    current = _int_rank(d.relation_matrix()) if rel else 0
    target = d.n_edges - _int_rank(d.iota_matrix())
    for v in integer_kernel_basis(d.iota_matrix()):
        if current >= target:
            break
        trial = np.array(rel + [v], dtype=np.int64)
        r = _int_rank(trial)
        if r > current:
            rel.append(v)
            current = r
    return ConfigurationDatum(d.genus, d.punctures, d.edges, d.iota, tuple(rel), d.tau, d.sigma,
                              d.extra_linear_constraints, d.e0)


def _int_rank(mat):
    if mat.size == 0:
        return 0
    return Matrix(mat.tolist()).rank()


@dataclass(frozen=True)
class Check:
    name: str
    ok: bool
    message: str = ""


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple

    @property
    def ok(self):
        return all(c.ok for c in self.checks)

    @property
    def failed(self):
        return [c.name for c in self.checks if not c.ok]

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self):
        return {"ok": self.ok,
                "checks": [{"name": c.name, "ok": c.ok, "message": c.message} for c in self.checks]}


def validate_datum(d):
    """Check every datum invariant; failures are reported, never raised.

    Only structurally unreadable data raises (``malformed``).
    """
    check_structure(d)
    checks = []

    image = [d.sigma[e] for e in d.edges]
    dup = sorted({e for e in image if image.count(e) > 1})
    checks.append(Check("sigma_bijection", not dup,
                        "" if not dup else f"edges hit more than once by sigma: {dup}"))

    bad = [e for e in d.edges if d.tau[d.sigma[e]] != d.tau[e]]
    checks.append(Check("tau_sigma_compat", not bad,
                        "" if not bad else "tau(sigma(e)) != tau(e) for " + ", ".join(
                            f"{e} ({d.tau[e]} -> {d.sigma[e]}: {d.tau[d.sigma[e]]})" for e in bad)))

    M = d.iota_matrix()
    if d.rank == 0:
        checks.append(Check("iota_generates", True, "trivial lattice"))
    else:
        rank = _int_rank(M)
        if rank < d.rank:
            checks.append(Check("iota_generates", False,
                                f"iota matrix has rank {rank} < rank(Gamma) = {d.rank}"))
        else:
            factors = [int(f) for f in invariant_factors(Matrix(M.tolist())) if f != 0]
            nontrivial = [f for f in factors if abs(f) != 1]
            checks.append(Check("iota_generates", not nontrivial,
                                "" if not nontrivial else f"invariant factors {factors}: image has finite index > 1"))

    R = d.relation_matrix()
    if len(d.relations):
        residual = M @ R.T
        bad_rel = [k for k in range(R.shape[0]) if np.any(residual[:, k] != 0)]
    else:
        bad_rel = []
    checks.append(Check("relations_in_kernel", not bad_rel,
                        "" if not bad_rel else f"relations not in ker(iota_*): {bad_rel}"))

    kernel_dim = d.n_edges - _int_rank(M)
    rel_rank = _int_rank(R) if len(d.relations) else 0
    spans = rel_rank == kernel_dim
    checks.append(Check("relations_span_kernel", spans,
                        "" if spans else f"relations have rank {rel_rank}, ker(iota_*) has rank {kernel_dim}"))
    return ValidationReport(tuple(checks))


def _require_valid(d):
    report = validate_datum(d)
    if not report.ok:
        raise ReflexiveError("invalid_datum", "failed checks: " + ", ".join(report.failed))


def real_constraint_matrix(d):
    """Real linear system on edge coordinates x_e cutting out V_C.

    z_e = x_e for horizontal edges and i*x_e for vertical ones, so each
    complex relation splits into a horizontal row and a vertical row.
    """
    horizontal = np.array([d.tau[e] == "h" for e in d.edges])
    rows = []
    for r in d.relation_matrix().astype(float):
        for mask in (horizontal, ~horizontal):
            row = np.where(mask, r, 0.0)
            if np.any(row != 0):
                rows.append(row)
    rows.extend(d.extra_matrix())
    if not rows:
        return np.zeros((0, d.n_edges))
    return np.array(rows, dtype=float)


def _rref(A, tol):
    A = np.array(A, dtype=float)
    rows, cols = A.shape
    pivots = []
    r = 0
    scale = np.max(np.abs(A)) if A.size else 0.0
    thresh = tol * max(scale, 1.0)
    for c in range(cols):
        if r >= rows:
            break
        p = r + int(np.argmax(np.abs(A[r:, c])))
        if abs(A[p, c]) <= thresh:
            A[r:, c] = 0.0
            continue
        A[[r, p]] = A[[p, r]]
        A[r] /= A[r, c]
        for i in range(rows):
            if i != r and A[i, c] != 0.0:
                A[i] -= A[i, c] * A[r]
        pivots.append(c)
        r += 1
    return A, pivots


def _numeric_rank(A):
    if A.size == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > RANK_TOL * s[0]))


@dataclass(frozen=True, eq=False)
class VCSpace:
    datum: ConfigurationDatum
    basis: np.ndarray
    dim: int
    constraints: np.ndarray = field(repr=False)

    def complex_view(self, x):
        """Real edge coordinates -> complex periods (i*x on vertical edges)."""
        x = np.asarray(x, dtype=float)
        vertical = np.array([self.datum.tau[e] == "v" for e in self.datum.edges])
        return np.where(vertical, 1j * x, x + 0j)

    def residuals(self, x):
        z = self.complex_view(x)
        out = [np.sum(np.array(r) * z) for r in self.datum.relations]
        extra = self.datum.extra_matrix() @ np.asarray(x, dtype=float)
        return np.concatenate([np.abs(out), np.abs(extra)]) if (out or extra.size) else np.zeros(0)


def build_vc_space(d):
    _require_valid(d)
    A = real_constraint_matrix(d)
    n = d.n_edges
    R, pivots = _rref(A, RANK_TOL) if A.size else (A, [])
    free = [j for j in range(n) if j not in pivots]
    basis = np.zeros((len(free), n))
    for k, j in enumerate(free):
        basis[k, j] = 1.0
        for i, p in enumerate(pivots):
            basis[k, p] = -R[i, j]
    dim = n - _numeric_rank(A)
    if dim != len(free):
        raise ReflexiveError("invalid_datum", "ill-conditioned constraint system (rank disagreement)")
    return VCSpace(d, basis, dim, A)


@dataclass(frozen=True, eq=False)
class SliceChart:
    """Affine chart params -> V_C onto the slice x_{e0} = 1.

    The free parameters are edge coordinates left unpivoted by elimination,
    so ``params`` holds edge names.
    """
    space: VCSpace
    e0: str
    params: tuple
    offset: np.ndarray
    directions: np.ndarray
    orthant: tuple

    @property
    def dim(self):
        return len(self.params)

    @property
    def datum(self):
        return self.space.datum

    def embed(self, p):
        p = np.asarray(p, dtype=float).reshape(self.dim)
        return self.offset + self.directions @ p

    def embed_complex(self, p):
        return self.space.complex_view(self.embed(p))

    def in_domain(self, p):
        p = np.asarray(p, dtype=float)
        if p.shape != (self.dim,) or not np.all(np.isfinite(p)):
            return False
        return bool(np.all(self.embed(p) > 0.0))

    def interior_point(self):
        """A strictly interior parameter point (Chebyshev-style LP centre)."""
        p, s = _max_min_coordinate(self.offset, self.directions)
        return p if s > POS_TOL else None


def _max_min_coordinate(offset, directions):
    n, k = directions.shape
    if k == 0:
        return np.zeros(0), float(np.min(offset)) if n else np.inf
    # maximize s subject to offset + D p >= s, s <= 1
    c = np.zeros(k + 1)
    c[-1] = -1.0
    A_ub = np.hstack([-directions, np.ones((n, 1))])
    b_ub = offset
    bounds = [(None, None)] * k + [(None, 1.0)]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if res.status != 0:
        return None, -np.inf
    return res.x[:k], float(res.x[-1])


def build_slice_chart(d, e0=None):
    e0 = e0 if e0 is not None else d.default_e0()
    if e0 is None or d.tau.get(e0) != "h":
        raise ReflexiveError("e0_not_horizontal", f"distinguished edge {e0!r} must be horizontal")
    space = build_vc_space(d)
    n = d.n_edges
    i0 = d.index(e0)
    order = [i0] + [j for j in range(n) if j != i0]

    slice_row = np.zeros((1, n))
    slice_row[0, i0] = 1.0
    B = np.vstack([space.constraints, slice_row]) if space.constraints.size else slice_row
    rhs = np.zeros((B.shape[0], 1))
    rhs[-1, 0] = 1.0
    aug = np.hstack([B[:, order], rhs])
    R, piv = _rref(aug, RANK_TOL)
    if n in piv:
        raise ReflexiveError("empty_slice", "x_e0 = 1 is incompatible with the constraints")

    pivots = [order[c] for c in piv]
    free = [order[c] for c in range(n) if c not in piv]
    offset = np.zeros(n)
    for i, p in enumerate(pivots):
        offset[p] = R[i, n]
    directions = np.zeros((n, len(free)))
    for k, j in enumerate(free):
        directions[j, k] = 1.0
        col = order.index(j)
        for i, p in enumerate(pivots):
            directions[p, k] = -R[i, col]

    _, s = _max_min_coordinate(offset, directions)
    if not s > POS_TOL:
        raise ReflexiveError("empty_slice", "open orthant meets the slice x_e0 = 1 in the empty set")
    orthant = tuple((e, "R>0" if d.tau[e] == "h" else "iR>0") for e in d.edges)
    return SliceChart(space, e0, tuple(d.edges[j] for j in free), offset, directions, orthant)


def load_chart(path, complete_kernel=False):
    d = ConfigurationDatum.from_json(path, complete_kernel=complete_kernel)
    return build_slice_chart(d, d.default_e0())
