"""Finite-sample audits of regularity (H1), degeneration detection (H2) and
pushability (H3) for a height field."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.stats import qmc

from .errors import ReflexiveError
from .height_field import (
    default_steps,
    directional_derivative,
    log_ext_jacobian,
    mismatches,
)

DEFAULT_SAMPLES = 100
DEFAULT_MARGIN = 1e-6
DEFAULT_BLOW_THRESHOLD = 5.0
DEFAULT_RAY_DEPTH = 1e-2


@dataclass(frozen=True, eq=False)
class PushFieldSpec:
    """Per-curve vector fields V_gamma with incidence sets I(gamma)."""
    fields: dict
    incidence: dict
    name: str = "custom"

    def __post_init__(self):
        for g, inc in self.incidence.items():
            if g not in inc:
                raise ValueError(f"incidence set of {g!r} must contain {g!r}")
        if set(self.fields) != set(self.incidence):
            raise ValueError("push fields and incidence sets must cover the same curves")

    def __call__(self, curve, u):
        return np.asarray(self.fields[curve](np.asarray(u, dtype=float)), dtype=float)


@dataclass(frozen=True, eq=False)
class Ray:
    """Boundary-approach path u(t), t in (0, 1], degenerating as t -> 0."""
    name: str
    path: Callable
    depth: float = DEFAULT_RAY_DEPTH

    def __call__(self, t):
        return np.asarray(self.path(t), dtype=float)


@dataclass
class AuditReport:
    hypothesis: str
    verdict: str
    evidence: list
    thresholds: dict
    seed: int | None = None
    notes: list = field(default_factory=list)

    @property
    def witnesses(self):
        return [e for e in self.evidence if e.get("violation")]

    def to_dict(self):
        return {
            "hypothesis": self.hypothesis,
            "verdict": self.verdict,
            "thresholds": self.thresholds,
            "evidence": self.evidence,
            "seed": self.seed,
            "notes": self.notes,
        }


def _floats(x):
    return [float(v) for v in np.asarray(x, dtype=float).reshape(-1)]


def sample_points(f, n=DEFAULT_SAMPLES, seed=0, extra=()):
    """Scrambled Halton points in ``f.sample_box`` that pass the guard,
    followed by any user-supplied points."""
    pts = []
    if f.dim == 0:
        pts = [np.zeros(0)] if n > 0 else []
    elif n > 0:
        lo = np.array([b[0] for b in f.sample_box], dtype=float)
        hi = np.array([b[1] for b in f.sample_box], dtype=float)
        sampler = qmc.Halton(d=f.dim, scramble=True, seed=seed)
        drawn = 0
        while len(pts) < n and drawn < 50 * n:
            batch = qmc.scale(sampler.random(n), lo, hi)
            drawn += n
            pts.extend(u for u in batch if f.in_domain(u))
        pts = pts[:n]
    pts.extend(np.asarray(u, dtype=float) for u in extra)
    return pts


def _rank(J, rank_tol):
    if J.size == 0:
        return 0, np.zeros(0)
    s = np.linalg.svd(J, compute_uv=False)
    if s[0] == 0.0:
        return 0, s
    return int(np.sum(s >= rank_tol * s[0])), s


def audit_regularity(f, samples, rank_tol=1e-6, step=None, seed=None):
    """(R1)-(R2): full-rank log-extremal-length Jacobians on both sides plus a
    step-halving stability test of the difference quotients."""
    samples = list(samples)
    if not samples:
        raise ReflexiveError("no_samples", "regularity audit needs at least one sample")
    thresholds = {"rank_tol": rank_tol, "step": step if step is not None else "default",
                  "dim": f.dim}
    if f.dim == 0:
        return AuditReport("H1", "pass", [], thresholds, seed, ["zero-dimensional slice: vacuous"])

    evidence = []
    failed = False
    for u in samples:
        u = np.asarray(u, dtype=float)
        h = float(np.max(default_steps(u, step)))
        quantities = {}
        bad = []
        for side in ("I", "II"):
            J = log_ext_jacobian(f, u, side, step)
            J_half = log_ext_jacobian(f, u, side, (step or 1e-5) / 2)
            r, s = _rank(J, rank_tol)
            scale = max(1.0, float(np.max(np.abs(J))))
            drift = float(np.max(np.abs(J - J_half)))
            drift_bound = 10 * h ** 2 * scale + 1e-8 * scale
            quantities[f"jacobian_{side}"] = [_floats(row) for row in J]
            quantities[f"rank_{side}"] = r
            quantities[f"singular_values_{side}"] = _floats(s)
            quantities[f"jacobian_norm_{side}"] = float(np.linalg.norm(J))
            quantities[f"fd_drift_{side}"] = drift
            if r < f.dim:
                bad.append(f"side {side}: rank {r} < dim {f.dim}")
            if drift > drift_bound:
                bad.append(f"side {side}: difference quotients unstable (drift {drift:.3g} > {drift_bound:.3g})")
        entry = {"point": _floats(u), "quantities": quantities}
        if bad:
            entry["violation"] = True
            entry["message"] = "; ".join(bad)
            failed = True
        evidence.append(entry)

    notes = []
    if failed:
        verdict = "fail"
    elif {f.ext_I.provenance, f.ext_II.provenance} & {"external", "table"}:
        verdict = "inconclusive"
        notes.append("C1 smoothness of non-closed-form assignments cannot be certified from samples")
    else:
        verdict = "pass"
    return AuditReport("H1", verdict, evidence, thresholds, seed, notes)


def default_rays(f, depth=DEFAULT_RAY_DEPTH):
    """One ray per finite facet of ``f.bounds`` and one per unbounded direction,
    each varying a single coordinate from the centre of the sample box."""
    if f.rays:
        return list(f.rays)
    ref = np.array([(lo + hi) / 2 for lo, hi in f.sample_box], dtype=float)
    rays = []
    for i, (lo, hi) in enumerate(f.bounds):
        name = f.param_names[i]

        def along(value_of_t, i=i):
            def path(t):
                u = ref.copy()
                u[i] = value_of_t(t)
                return u
            return path

        if lo is not None:
            rays.append(Ray(f"{name}->lower", along(lambda t, lo=lo, r=ref[i]: lo + t * (r - lo)), depth))
        if hi is not None:
            rays.append(Ray(f"{name}->upper", along(lambda t, hi=hi, r=ref[i]: hi - t * (hi - r)), depth))
        else:
            rays.append(Ray(f"{name}->inf", along(lambda t, r=ref[i]: max(r, 1.0) / t), depth))
    return rays


def audit_degeneration(f, rays=None, blow_threshold=DEFAULT_BLOW_THRESHOLD, steps=12, depth=None):
    """(H2) along declared boundary rays.

    A ray passes when max |m| grows strictly over the deeper half of the
    samples and exceeds ``blow_threshold`` at the deepest one. Growth below
    the threshold is inconclusive; a non-growing, sub-threshold sequence is
    a bounded witness and fails.
    """
    rays = list(rays) if rays is not None else default_rays(f)
    thresholds = {"blow_threshold": blow_threshold, "steps": steps}
    if depth is not None:
        thresholds["depth"] = depth
    evidence = []
    outcomes = []
    for ray in rays:
        t_min = depth if depth is not None else ray.depth
        ts = np.geomspace(1.0, t_min, steps)
        seq = []
        pts = []
        for t in ts:
            u = ray(t)
            if not f.in_domain(u):
                raise ReflexiveError("ray_exits_domain", f"ray {ray.name} leaves the domain at t={t}")
            seq.append(float(np.max(np.abs(mismatches(f, u)))) if f.curves.curves else 0.0)
            pts.append(u)
        seq = np.array(seq)
        tail = seq[len(seq) // 2:]
        growing = bool(np.all(np.diff(tail) > 0))
        final = float(seq[-1])
        if growing and final > blow_threshold:
            outcome = "pass"
        elif not growing and final <= blow_threshold:
            outcome = "fail"
        else:
            outcome = "inconclusive"
        outcomes.append(outcome)
        entry = {"point": _floats(pts[-1]),
                 "quantities": {"ray": ray.name, "t": _floats(ts), "max_abs_mismatch": _floats(seq),
                                "outcome": outcome}}
        if outcome == "fail":
            entry["violation"] = True
            entry["message"] = f"max |m| stays bounded ({final:.6g}) along {ray.name}"
        evidence.append(entry)

    if not rays:
        verdict = "inconclusive"
    elif "fail" in outcomes:
        verdict = "fail"
    elif "inconclusive" in outcomes:
        verdict = "inconclusive"
    else:
        verdict = "pass"
    return AuditReport("H2", verdict, evidence, thresholds, None,
                       ["only the listed rays are audited; escape along other sequences is untested"])


def audit_pushability(f, push, samples, margin=DEFAULT_MARGIN, step=None, seed=None):
    """(P1)-(P3) at every sample and every curve with |m| > margin."""
    samples = list(samples)
    if not samples:
        raise ReflexiveError("no_samples", "pushability audit needs at least one sample")
    curves = f.curves.curves
    evidence = []
    failed = False
    incidence_bound = 0.0
    for u in samples:
        u = np.asarray(u, dtype=float)
        m = mismatches(f, u)
        for k, g in enumerate(curves):
            if abs(m[k]) <= margin:
                continue
            V = push(g, u)
            dm = np.atleast_1d(directional_derivative(lambda x: mismatches(f, x), f, u, V, step))
            inc = push.incidence[g]
            problems = []
            p1 = float(np.sign(m[k]) * dm[k])
            if not p1 < 0:
                problems.append(f"P1: sign(m_{g}) * dm_{g}(V_{g}) = {p1:.6g} >= 0")
            for j, d in enumerate(curves):
                if d in inc:
                    incidence_bound = max(incidence_bound, abs(float(dm[j])))
                elif abs(dm[j]) >= margin:
                    problems.append(f"P2: |dm_{d}(V_{g})| = {abs(dm[j]):.6g} with {d} outside I({g})")
            lhs = abs(m[k]) * abs(dm[k])
            rhs = sum(abs(m[j]) * abs(dm[j]) for j, d in enumerate(curves) if d in inc and d != g)
            if not lhs > rhs:
                problems.append(f"P3: {lhs:.6g} <= {rhs:.6g}")
            entry = {"point": _floats(u),
                     "quantities": {"curve": g, "m": _floats(m), "push": _floats(V),
                                    "dm_along_push": _floats(dm), "sign_m_times_dm": p1,
                                    "p3_lhs": float(lhs), "p3_rhs": float(rhs)}}
            if problems:
                entry["violation"] = True
                entry["message"] = "; ".join(problems)
                failed = True
            evidence.append(entry)
    thresholds = {"margin": margin, "incidence_derivative_bound_observed": incidence_bound,
                  "push": push.name}
    notes = ["uniform boundedness of incidence derivatives over the whole domain: inconclusive "
             "(only the observed maximum is reported)"]
    return AuditReport("H3", "fail" if failed else "pass", evidence, thresholds, seed, notes)
