"""Period characters and the C-admissibility test.

A character is stored by its values on the fixed basis of Gamma; edge
periods are obtained through the iota matrix.
"""
from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

from .errors import ReflexiveError
from .homology_config import ConfigurationDatum

TOL_POS = 1e-12
TOL_RAY = 1e-9


@dataclass(frozen=True, eq=False)
class Character:
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex).reshape(-1)
        if not np.all(np.isfinite(vals)):
            raise ValueError("character values must be finite")
        object.__setattr__(self, "values", vals)

    def __call__(self, cls):
        """Evaluate on an integer homology class given in basis coordinates."""
        return complex(np.dot(np.asarray(cls, dtype=float), self.values))

    def to_list(self):
        return [[float(v.real), float(v.imag)] for v in self.values]

    @classmethod
    def from_list(cls, pairs):
        return cls(np.array([complex(re, im) for re, im in pairs]))


@dataclass(frozen=True, eq=False)
class AdmissiblePair:
    chi_I: Character
    chi_II: Character
    zeta: complex
    kappa: complex
    datum: ConfigurationDatum

    def to_dict(self):
        return {
            "chi_I": self.chi_I.to_list(),
            "chi_II": self.chi_II.to_list(),
            "zeta": [self.zeta.real, self.zeta.imag],
            "kappa": [self.kappa.real, self.kappa.imag],
        }


@dataclass(frozen=True)
class Violation:
    condition: str
    where: str
    detail: str = ""


@dataclass(frozen=True)
class AdmissibilityResult:
    zeta: complex | None
    kappa: complex | None
    violations: tuple

    @property
    def admissible(self):
        return self.zeta is not None and not self.violations

    @property
    def witness(self):
        return (self.zeta, self.kappa) if self.admissible else None


def period_coordinates(chi, d):
    """p_chi = (chi(iota(e)))_e, ordered like ``d.edges``."""
    values = chi.values if isinstance(chi, Character) else np.asarray(chi, dtype=complex)
    if values.shape != (d.rank,):
        raise ReflexiveError("dimension_mismatch",
                             f"character has {values.size} values, rank(Gamma) = {d.rank}")
    return d.iota_matrix().T.astype(float) @ values


def on_ray(z, kind, tol_pos=TOL_POS, tol_ray=TOL_RAY):
    """Membership of ``z`` in R_h = R>0, R_v = iR>0 or their conjugates.

    ``kind`` is one of 'h', 'v', 'h-bar', 'v-bar'.
    """
    if kind in ("h", "h-bar"):
        w = z
    elif kind == "v":
        w = z / 1j
    elif kind == "v-bar":
        w = z / -1j
    else:
        raise ValueError(kind)
    return w.real > tol_pos and abs(w.imag) <= tol_ray * abs(w)


def _phase(z):
    return z / abs(z)


def _close(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def check_admissible(chi_I, chi_II, d, tol=1e-9, e0=None):
    """Search for witnesses (zeta, kappa) and verify (C1)-(C3) for every edge.

    zeta and kappa are forced by the distinguished edge e0 and its partner;
    the remaining edges and the relations are then checked within ``tol``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    e0 = e0 if e0 is not None else d.default_e0()
    pI = period_coordinates(chi_I, d)
    pII = period_coordinates(chi_II, d)
    idx = {e: k for k, e in enumerate(d.edges)}
    z0 = pI[idx[e0]]
    if abs(z0) == 0.0:
        raise ReflexiveError("zero_period_e0", f"chi_I(iota({e0})) = 0")
    zeta = _phase(z0)
    partner = pII[idx[d.sigma[e0]]]
    if abs(partner) == 0.0:
        return AdmissibilityResult(zeta, None, (Violation("C3", e0, "partner period vanishes"),))
    kappa = _phase(partner) / _phase(z0.conjugate())

    violations = []
    for e in d.edges:
        t = d.tau[e]
        a = pI[idx[e]]
        b = pII[idx[d.sigma[e]]]
        if not on_ray(a / zeta, t, tol_ray=tol):
            violations.append(Violation("C1", e, f"zeta^-1 chi_I = {a / zeta:.6g} not on R_{t}"))
        if not on_ray(zeta / kappa * b, t + "-bar", tol_ray=tol):
            violations.append(Violation("C1", e, f"zeta kappa^-1 chi_II(sigma e) = {zeta / kappa * b:.6g} "
                                              f"not on conj(R_{t})"))
        if not _close(b, kappa * a.conjugate(), tol):
            violations.append(Violation("C3", e, f"chi_II(sigma e) = {b:.6g} != kappa conj(chi_I(e))"))

    sigma_perm = [idx[d.sigma[e]] for e in d.edges]
    for k, r in enumerate(d.relations):
        r = np.asarray(r, dtype=float)
        scale = max(1.0, float(np.sum(np.abs(r) * np.abs(pI))))
        if abs(np.dot(r, pI)) > tol * scale:
            violations.append(Violation("C2", f"relation {k}", "side I sum does not vanish"))
        if abs(np.dot(r, pII[sigma_perm])) > tol * scale:
            violations.append(Violation("C2", f"relation {k}", "side II sum does not vanish"))
    return AdmissibilityResult(zeta, kappa, tuple(violations))


def _character_from_periods(p, d):
    # iota generates Gamma, so M^T v = p has a unique solution whenever p is consistent
    M = d.iota_matrix().astype(float)
    v, *_ = np.linalg.lstsq(M.T.astype(complex), np.asarray(p, dtype=complex), rcond=None)
    return Character(v)


def normalize_pair(pair, tol=1e-9, e0=None):
    """Rotate/reflect to the representative with zeta = kappa = 1."""
    d = pair.datum
    e0 = e0 if e0 is not None else d.default_e0()
    pI = period_coordinates(pair.chi_I, d)
    z0 = pI[d.index(e0)]
    if abs(z0) == 0.0:
        raise ReflexiveError("zero_period_e0", f"chi_I(iota({e0})) = 0")
    zeta, kappa = complex(pair.zeta), complex(pair.kappa)
    chi_I = Character(pair.chi_I.values / zeta)
    chi_II = Character(pair.chi_II.values * zeta / kappa)
    res = check_admissible(chi_I, chi_II, d, tol=tol, e0=e0)
    if not res.admissible or not _close(res.zeta, 1.0, tol) or not _close(res.kappa, 1.0, tol):
        bad = ", ".join(f"{v.condition}@{v.where}" for v in res.violations) or "witness != 1"
        raise ReflexiveError("not_in_norm_cone", bad)
    return AdmissiblePair(chi_I, chi_II, 1.0 + 0j, 1.0 + 0j, d)


def admissible_pair(chi_I, chi_II, d, tol=1e-9, e0=None):
    """Build an AdmissiblePair after checking (C1)-(C3); raises ``not_admissible``."""
    res = check_admissible(chi_I, chi_II, d, tol=tol, e0=e0)
    if not res.admissible:
        raise ReflexiveError("not_admissible",
                             ", ".join(f"{v.condition}@{v.where}" for v in res.violations))
    return AdmissiblePair(chi_I, chi_II, complex(res.zeta), complex(res.kappa), d)


def pair_from_slice(chart, params, guard=None):
    """Normalized admissible pair at a slice point.

    ``guard`` is an optional extra domain restriction (e.g. a family's
    slit-length constraint) applied on top of the chart's open orthant.
    """
    params = np.asarray(params, dtype=float).reshape(-1)
    if not chart.in_domain(params) or (guard is not None and not guard(params)):
        raise ReflexiveError("out_of_domain", f"params {params.tolist()} outside the slice domain")
    d = chart.datum
    z = chart.embed_complex(params)
    chi_I = _character_from_periods(z, d)
    idx = {e: k for k, e in enumerate(d.edges)}
    pII = np.empty(d.n_edges, dtype=complex)
    for e in d.edges:
        pII[idx[d.sigma[e]]] = z[idx[e]].conjugate()
    chi_II = _character_from_periods(pII, d)
    return AdmissiblePair(chi_I, chi_II, 1.0 + 0j, 1.0 + 0j, d)
