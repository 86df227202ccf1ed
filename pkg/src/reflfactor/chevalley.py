"""Invariants of finite unitary reflection groups.

:func:`reynolds` projects a polynomial onto the invariants by group
averaging.  :func:`basic_invariants` finds homogeneous basic invariants
degree by degree: the Reynolds images of the degree-``d`` monomials span the
degree-``d`` invariants, and any part of that span not already produced by
products of earlier generators needs new generators.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import prod

import numpy as np

from .polyalg import (
    DEFAULT_SEED,
    Polynomial,
    PolyMap,
    jacobian_det,
    monomials_of_degree,
    sample_polydisk,
)
from .unigroup import FiniteUnitaryGroup, coordinate_blocks, is_reflection

RANK_TOL = 1e-8
INVARIANCE_TOL = 1e-9
DEFAULT_DEGREE_CAP = 12


class InvariantSearchError(RuntimeError):
    """Basic invariants could not be completed."""


@dataclass(frozen=True)
class InvariantBasis:
    generators: tuple[Polynomial, ...]
    degrees: tuple[int, ...]
    group_order: int
    reflection_count: int

    def as_map(self) -> PolyMap:
        return PolyMap(self.generators)

    def to_json(self) -> dict:
        return {
            "degrees": list(self.degrees),
            "group_order": self.group_order,
            "reflection_count": self.reflection_count,
            "generators": [g.to_json() for g in self.generators],
        }

    @classmethod
    def from_json(cls, data) -> InvariantBasis:
        return cls(
            tuple(Polynomial.from_json(g) for g in data["generators"]),
            tuple(data["degrees"]),
            int(data["group_order"]),
            int(data["reflection_count"]),
        )


def act(f: Polynomial, g: np.ndarray) -> Polynomial:
    """``f o g``, i.e. ``z -> f(g z)``."""
    return f.compose(PolyMap.linear(g))


def reynolds(G: FiniteUnitaryGroup, f: Polynomial) -> Polynomial:
    """Average of ``f o g`` over the group."""
    if f.dim != G.dim:
        raise ValueError(f"polynomial in {f.dim} variables, group of dimension {G.dim}")
    acc: dict = {}
    for g in G:
        for e, c in act(f, g).items():
            acc[e] = acc.get(e, 0j) + c
    return Polynomial(f.dim, {e: c / G.order for e, c in acc.items()})


def _coeff_matrix(polys, basis) -> np.ndarray:
    return np.array([[p.coefficient(e) for e in basis] for p in polys], dtype=complex).reshape(
        len(polys), len(basis)
    )


def _rank(m: np.ndarray) -> int:
    if m.size == 0:
        return 0
    s = np.linalg.svd(m, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > RANK_TOL * s[0]))


def _products_of_degree(gens, degrees, d, dim) -> list[Polynomial]:
    out = []
    bounds = [d // k for k in degrees]
    for powers in itertools.product(*(range(b + 1) for b in bounds)):
        if sum(a * k for a, k in zip(powers, degrees)) != d:
            continue
        p = Polynomial.constant(dim, 1.0)
        for g, a in zip(gens, powers):
            if a:
                p = p * g**a
        out.append(p)
    return out


def basic_invariants(G: FiniteUnitaryGroup, degree_cap: int = DEFAULT_DEGREE_CAP) -> InvariantBasis:
    """Homogeneous basic invariants of a reflection group.

    Generators come out in ascending degree, each scaled to graded-lex
    leading coefficient 1.  Within a degree, sparser Reynolds images are
    preferred, then larger source monomials in graded-lex order.

    Raises :class:`InvariantSearchError` if ``degree_cap`` is reached, or if
    the group turns out not to be generated by reflections (more than ``n``
    generators needed, or the degree product overshoots ``|G|``).
    """
    if degree_cap < 1:
        raise ValueError("degree_cap must be >= 1")
    n = G.dim
    gens: list[Polynomial] = []
    degrees: list[int] = []
    for d in range(1, degree_cap + 1):
        basis = monomials_of_degree(n, d)
        candidates = []
        for rank_pos, mono in enumerate(basis):
            r = reynolds(G, Polynomial.monomial(mono))
            if not r.is_zero():
                candidates.append((len(r), rank_pos, r))
        candidates.sort(key=lambda t: (t[0], t[1]))
        span = _coeff_matrix(_products_of_degree(gens, degrees, d, n), basis)
        rank = _rank(span)
        for _, _, cand in candidates:
            row = _coeff_matrix([cand], basis)
            trial = np.vstack([span, row]) if span.size else row
            new_rank = _rank(trial)
            if new_rank > rank:
                span, rank = trial, new_rank
                gens.append(cand.normalized())
                degrees.append(d)
                if len(gens) > n:
                    raise InvariantSearchError(
                        f"group is not generated by reflections: more than {n} basic "
                        f"invariants needed by degree {d} (degrees so far {degrees[:-1]}, "
                        f"achieved degree product {prod(degrees[:-1])}, |G| = {G.order})"
                    )
        if len(gens) == n:
            achieved = prod(degrees)
            if achieved == G.order:
                return InvariantBasis(tuple(gens), tuple(degrees), G.order, G.reflection_count())
            raise InvariantSearchError(
                f"group is not generated by reflections: degree product {achieved} "
                f"!= |G| = {G.order} (degrees {degrees})"
            )
    raise InvariantSearchError(
        f"cap exceeded: degree cap {degree_cap} reached with {len(gens)} of {n} "
        f"generators (degrees {degrees})"
    )


@dataclass
class ChevalleyReport:
    invariance_residual: float
    degree_product: int
    group_order: int
    reflection_degree_sum: int
    reflection_count: int
    jacobian_max_abs: float
    seed: int
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_json(self) -> dict:
        return {
            "checks": dict(self.checks),
            "passed": self.passed,
            "invariance_residual": self.invariance_residual,
            "degree_product": self.degree_product,
            "group_order": self.group_order,
            "reflection_degree_sum": self.reflection_degree_sum,
            "reflection_count": self.reflection_count,
            "jacobian_max_abs": self.jacobian_max_abs,
            "seed": self.seed,
        }


def verify_chevalley(
    B: InvariantBasis,
    G: FiniteUnitaryGroup,
    tol: float = INVARIANCE_TOL,
    samples: int = 20,
    seed: int = DEFAULT_SEED,
) -> ChevalleyReport:
    """Check a basis against the four Chevalley conditions.

    invariance under every element (max coefficient residual of ``P o g - P``),
    degree product equal to ``|G|``, ``sum(d_i - 1)`` equal to the number of
    reflections, and a Jacobian determinant that is nonzero somewhere.
    """
    residual = 0.0
    for P in B.generators:
        for g in G:
            residual = max(residual, act(P, g).max_coeff_distance(P))
    n_refl = sum(1 for g in G if is_reflection(g))
    degree_product = prod(B.degrees)
    degree_sum = sum(d - 1 for d in B.degrees)
    pts = sample_polydisk(np.random.default_rng(seed), samples, G.dim)
    jac = jacobian_det(B.as_map()) if len(B.generators) == G.dim else Polynomial.zero(G.dim)
    jac_max = float(np.max(np.abs(jac.evaluate_many(pts))))
    checks = {
        "invariance": residual < tol,
        "degree_product": degree_product == G.order,
        "reflection_count": degree_sum == n_refl,
        "jacobian_nonzero": jac_max > RANK_TOL,
    }
    return ChevalleyReport(
        invariance_residual=residual,
        degree_product=degree_product,
        group_order=G.order,
        reflection_degree_sum=degree_sum,
        reflection_count=n_refl,
        jacobian_max_abs=jac_max,
        seed=seed,
        checks=checks,
    )


def chevalley_map(G: FiniteUnitaryGroup, degree_cap: int = DEFAULT_DEGREE_CAP) -> PolyMap:
    """The map ``P_G`` built from basic invariants of the reflection group ``G``.

    Coordinates fixed by ``G`` keep their coordinate function.  Each block of
    coordinates mixed by ``G`` gets the basic invariants of ``G`` restricted
    to the block, placed in the block's slots in descending degree order.
    """
    n = G.dim
    comps: list[Polynomial | None] = [None] * n
    blocks, fixed = coordinate_blocks(G)
    for j in fixed:
        comps[j] = Polynomial.variable(n, j)
    for block in blocks:
        sub = basic_invariants(G.restrict(block), degree_cap)
        ordered = sorted(sub.generators, key=lambda p: -p.degree())
        for slot, P in zip(block, ordered):
            comps[slot] = _embed(P, block, n)
    return PolyMap(comps)


def _embed(p: Polynomial, coords, n: int) -> Polynomial:
    terms = {}
    for e, c in p.items():
        full = [0] * n
        for j, k in zip(coords, e):
            full[j] = k
        terms[tuple(full)] = c
    return Polynomial(n, terms)
