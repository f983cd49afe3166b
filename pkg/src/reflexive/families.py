"""Height fields for the slit-torus dumbbell and the stacked-cylinder family,
push-field presets, and the JSON field-spec loader."""
from __future__ import annotations

import json

import numpy as np

from .errors import ReflexiveError
from .flat_surfaces import (
    SlitDumbbellSurface,
    StackedCylinderSurface,
    dumbbell_core_extremal_lengths,
    stacked_core_extremal_length,
)
from .height_field import AdmissibleCurveSet, ExtremalLengthAssignment, HeightField, mismatch
from .hypothesis_audit import PushFieldSpec, Ray

# the second marking exchanges alpha_i and beta_i
J_SWAP = {"alpha1": "beta1", "alpha2": "beta2", "beta1": "alpha1", "beta2": "alpha2"}


def dumbbell_reflexive_point(ell):
    """Positive root of b (b - ell) = 1."""
    return (ell + np.sqrt(ell * ell + 4.0)) / 2.0


def dumbbell_field(ell=0.5):
    if not ell > 0:
        raise ValueError("slit length must be positive")

    def ext_I(u, curve):
        return dumbbell_core_extremal_lengths(SlitDumbbellSurface(u[0], u[1], ell))[curve]

    def ext_II(u, curve):
        return dumbbell_core_extremal_lengths(SlitDumbbellSurface(u[0], u[1], ell))[J_SWAP[curve]]

    def guard(u):
        return bool(u[0] > ell and u[1] > ell)

    far = max(1.0, ell + 0.5)
    mid = 2.0 if ell < 2.0 else ell + 1.0
    rays = (
        Ray("b->ell", lambda t: np.array([ell + t, mid])),
        Ray("b->inf", lambda t: np.array([far / t, mid])),
        Ray("c->ell", lambda t: np.array([mid, ell + t])),
        Ray("c->inf", lambda t: np.array([mid, far / t])),
    )
    return HeightField(
        param_names=("b", "c"),
        curves=AdmissibleCurveSet.identity(("alpha1", "alpha2")),
        ext_I=ExtremalLengthAssignment("I", ext_I, "closed_form_dumbbell"),
        ext_II=ExtremalLengthAssignment("II", ext_II, "closed_form_dumbbell"),
        guard=guard,
        bounds=((ell, None), (ell, None)),
        sample_box=((ell + 0.1, ell + 2.5), (ell + 0.1, ell + 2.5)),
        rays=rays,
        name="dumbbell",
        meta={"family": "dumbbell", "ell": ell},
    )


def stacked_field(w=1.0, w_ii=2.0):
    """Negative control: one core class, both sides constant on the slice.

    Parameters are (h1, h2, t1, t2) with h3 = 1 - h1 - h2. Side II sees the
    same annulus with circumference ``w_ii``, so the single mismatch is the
    nonzero constant log(w / w_ii) unless the circumferences agree.
    """

    def surface(u, width):
        h1, h2, t1, t2 = u
        return StackedCylinderSurface(width, h1, h2, 1.0 - h1 - h2, t1 * width, t2 * width)

    def ext_I(u, curve):
        return stacked_core_extremal_length(surface(u, w))

    def ext_II(u, curve):
        return stacked_core_extremal_length(surface(u, w_ii))

    def guard(u):
        h1, h2, t1, t2 = u
        return bool(h1 > 0 and h2 > 0 and h1 + h2 < 1 and 0 <= t1 < 1 and 0 <= t2 < 1)

    rays = (
        Ray("h1->0", lambda t: np.array([0.3 * t, 0.3, 0.5, 0.5])),
        Ray("h2->0", lambda t: np.array([0.3, 0.3 * t, 0.5, 0.5])),
        Ray("h3->0", lambda t: np.array([0.5 - 0.2 * t, 0.5 - 0.2 * t, 0.5, 0.5])),
    )
    return HeightField(
        param_names=("h1", "h2", "t1", "t2"),
        curves=AdmissibleCurveSet.identity(("alpha",)),
        ext_I=ExtremalLengthAssignment("I", ext_I, "closed_form_stacked"),
        ext_II=ExtremalLengthAssignment("II", ext_II, "closed_form_stacked"),
        guard=guard,
        bounds=((0.0, 1.0), (0.0, 1.0), (0.0, 1.0), (0.0, 1.0)),
        sample_box=((0.05, 0.45), (0.05, 0.45), (0.05, 0.95), (0.05, 0.95)),
        rays=rays,
        name="stacked",
        meta={"family": "stacked", "w": w, "w_ii": w_ii},
    )


def coordinate_scaling(f, name="coordinate_scaling"):
    """V_k = u_k d/du_k for the k-th curve, incidence {curve}."""
    fields = {}
    for k, g in enumerate(f.curves.curves):
        i = k % max(f.dim, 1)

        def V(u, i=i):
            out = np.zeros(f.dim)
            if f.dim:
                out[i] = u[i]
            return out
        fields[g] = V
    return PushFieldSpec(fields, {g: {g} for g in f.curves.curves}, name)


def signed_coordinate_scaling(f):
    """m_k(u) * u_k d/du_k: the scaling field oriented against the mismatch.

    The plain scaling field decreases m_k everywhere, so it violates the
    sign condition wherever m_k < 0; weighting by m_k keeps the field C^1
    and makes sign(m_k) dm_k(V_k) = |m_k| dm_k(u_k d/du_k) < 0.
    """
    base = coordinate_scaling(f)
    fields = {}
    for g in f.curves.curves:
        def V(u, g=g):
            return mismatch(f, u, g) * base(g, u)
        fields[g] = V
    return PushFieldSpec(fields, dict(base.incidence), "signed_coordinate_scaling")


PUSH_PRESETS = {
    "coordinate_scaling": coordinate_scaling,
    "signed_coordinate_scaling": signed_coordinate_scaling,
}

DEFAULT_PUSH = {"dumbbell": "signed_coordinate_scaling", "stacked": "coordinate_scaling"}


def push_preset(f, name):
    try:
        return PUSH_PRESETS[name](f)
    except KeyError:
        raise ReflexiveError("usage", f"unknown push preset {name!r}") from None


def field_from_spec(spec):
    """Resolve a field-spec mapping to ``(field, push, box)``.

    Keys: ``family`` (dumbbell|stacked), family parameters (``ell``;
    ``w``, ``w_ii``), optional ``push`` preset name and ``box``.
    """
    if not isinstance(spec, dict) or "family" not in spec:
        raise ReflexiveError("malformed", "field spec must be an object with a 'family' key")
    family = spec["family"]
    try:
        if family == "dumbbell":
            f = dumbbell_field(float(spec.get("ell", 0.5)))
        elif family == "stacked":
            f = stacked_field(float(spec.get("w", 1.0)), float(spec.get("w_ii", 2.0)))
        else:
            raise ReflexiveError("malformed", f"unknown family {family!r}")
    except (TypeError, ValueError) as exc:
        raise ReflexiveError("malformed", str(exc)) from exc
    push = push_preset(f, spec.get("push", DEFAULT_PUSH[family]))
    box = spec.get("box")
    box = tuple(tuple(float(x) for x in b) for b in box) if box is not None else f.sample_box
    return f, push, box


def load_field_spec(path):
    with open(path, encoding="utf-8") as fh:
        try:
            spec = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ReflexiveError("malformed", f"invalid JSON: {exc}") from exc
    return field_from_spec(spec)
