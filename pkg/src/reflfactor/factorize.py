"""Find and verify polynomial ``Psi`` with ``Psi o F = P_G o phi``.

The solver fits ``Psi`` with an ansatz of increasing total degree.  The
unknown coefficients enter ``Psi o F`` linearly, so evaluating at random
domain points gives an overdetermined linear system; the minimum-norm
least-squares solution is then checked symbolically.  Failure to find a
polynomial ``Psi`` within the degree cap is inconclusive: the factor is only
guaranteed to be holomorphic.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .chevalley import DEFAULT_DEGREE_CAP, chevalley_map
from .polyalg import (
    DEFAULT_SEED,
    PolyMap,
    Polynomial,
    identity_residuals,
    monomials_up_to,
)
from .propermap import (
    MultiplicityEstimate,
    Pseudoellipsoid,
    SolverConfig,
    domain_sampler,
    multiplicity_estimate,
    phi_map,
)
from .unigroup import FiniteUnitaryGroup, reflection_subgroup

IDENTITY_TOL = 1e-9
IDENTITY_SAMPLES = 40
LSTSQ_RCOND = 1e-8
TRUNCATE_TOL = 1e-10


def target_map(G: FiniteUnitaryGroup, E: Pseudoellipsoid, degree_cap: int = DEFAULT_DEGREE_CAP) -> PolyMap:
    """``P_G o phi`` where ``P_G`` comes from the reflection subgroup of ``G``."""
    if G.dim != E.n:
        raise ValueError(f"group of dimension {G.dim} on a domain in C^{E.n}")
    P = chevalley_map(reflection_subgroup(G), degree_cap)
    return P.compose(phi_map(E.n, E.p))


@dataclass
class FactorizationReport:
    status: str
    psi: PolyMap | None
    residual: float
    degree_cap_used: int
    degree: int | None
    random_residual: float | None
    multiplicities: dict | None
    seed: int
    degree_residuals: dict[int, float] = field(default_factory=dict)

    @property
    def found(self) -> bool:
        return self.status == "found"

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "psi": self.psi.to_json() if self.psi is not None else None,
            "psi_text": [c.to_string("w") for c in self.psi] if self.psi is not None else None,
            "degree": self.degree,
            "residual": self.residual,
            "random_residual": self.random_residual,
            "degree_cap_used": self.degree_cap_used,
            "degree_residuals": {str(k): v for k, v in sorted(self.degree_residuals.items())},
            "multiplicities": self.multiplicities,
            "seed": self.seed,
        }


def fit_psi(F: PolyMap, target: PolyMap, degree: int, rng: np.random.Generator, sampler: Callable) -> PolyMap:
    """Least-squares ``Psi`` of total degree ``<= degree`` with ``Psi o F ~ target``.

    Uses twice as many sample points as ansatz monomials.  Coefficients below
    the truncation tolerance are zeroed.
    """
    n_out = target.coarity
    mons = monomials_up_to(F.coarity, degree)
    xs = sampler(rng, 2 * len(mons))
    fx = F.evaluate_many(xs)
    exps = np.array(mons)
    V = np.prod(fx[:, None, :] ** exps[None, :, :], axis=2)
    rhs = target.evaluate_many(xs)
    coef, *_ = np.linalg.lstsq(V, rhs, rcond=LSTSQ_RCOND)
    comps = []
    for i in range(n_out):
        c = coef[:, i].copy()
        c.real[np.abs(c.real) < TRUNCATE_TOL] = 0.0
        c.imag[np.abs(c.imag) < TRUNCATE_TOL] = 0.0
        comps.append(Polynomial(F.coarity, dict(zip(mons, c))))
    return PolyMap(comps)


def _identity_residual(lhs: PolyMap, rhs: PolyMap, samples: int, seed: int) -> float:
    return max(float(identity_residuals(a, b, samples, seed).max()) for a, b in zip(lhs, rhs))


def multiplicity_ledger(
    psi: PolyMap,
    F: PolyMap,
    target: PolyMap,
    E: Pseudoellipsoid,
    trials: int,
    config: SolverConfig,
) -> dict:
    """Estimate ``m_F``, ``m_Psi`` and ``m_target`` and check ``m_F m_Psi = m_target``.

    ``F`` and the target are sampled on the domain; ``Psi`` is sampled on the
    image of the domain under ``F``.
    """
    on_E = domain_sampler(E)

    def on_image(rng, count):
        return F.evaluate_many(on_E(rng, count))

    m_f = multiplicity_estimate(F, trials, config, on_E)
    m_psi = multiplicity_estimate(psi, trials, config, on_image)
    m_t = multiplicity_estimate(target, trials, config, on_E)
    return _ledger(m_f, m_psi, m_t)


def _ledger(m_f: MultiplicityEstimate, m_psi: MultiplicityEstimate, m_t: MultiplicityEstimate) -> dict:
    return {
        "m_F": m_f.multiplicity,
        "m_psi": m_psi.multiplicity,
        "m_target": m_t.multiplicity,
        "product_holds": m_f.multiplicity * m_psi.multiplicity == m_t.multiplicity,
        "histograms_constant": m_f.consistent and m_psi.consistent and m_t.consistent,
        "details": {"F": m_f.to_json(), "psi": m_psi.to_json(), "target": m_t.to_json()},
    }


def solve_psi(
    F: PolyMap,
    G: FiniteUnitaryGroup,
    E: Pseudoellipsoid,
    degree_cap: int = 6,
    seed: int = DEFAULT_SEED,
    tol: float = IDENTITY_TOL,
    multiplicity_trials: int = 0,
    config: SolverConfig | None = None,
    target: PolyMap | None = None,
) -> FactorizationReport:
    """Lowest-degree polynomial ``Psi`` with ``Psi o F = P_G o phi``.

    A candidate is accepted when the symbolic residual (max coefficient of
    ``Psi o F - target``) and the randomised identity test over
    ``IDENTITY_SAMPLES`` points are both within ``tol``.  With
    ``multiplicity_trials > 0`` the report also carries the multiplicity
    ledger of the found factorization.
    """
    if not F.is_square() or F.arity != E.n:
        raise ValueError("F must be a square map on the domain's C^n")
    if degree_cap < 1:
        raise ValueError("degree_cap must be >= 1")
    target = target if target is not None else target_map(G, E)
    rng = np.random.default_rng(seed)
    sampler = domain_sampler(E)
    best = np.inf
    tried: dict[int, float] = {}
    for d in range(1, degree_cap + 1):
        psi = fit_psi(F, target, d, rng, sampler)
        composed = psi.compose(F)
        residual = composed.max_coeff_distance(target)
        tried[d] = residual
        best = min(best, residual)
        if residual > tol:
            continue
        rand_res = _identity_residual(composed, target, IDENTITY_SAMPLES, seed)
        if rand_res > tol:
            continue
        mults = None
        if multiplicity_trials > 0:
            cfg = config or SolverConfig(seed=seed)
            mults = multiplicity_ledger(psi, F, target, E, multiplicity_trials, cfg)
        return FactorizationReport("found", psi, residual, d, d, rand_res, mults, seed, tried)
    return FactorizationReport("not-found-within-cap", None, float(best), degree_cap, None, None, None, seed, tried)


@dataclass
class VerificationReport:
    identity_residuals: list[float]
    identity_passed: bool
    first_failure: int | None
    multiplicities: dict | None
    boundary: dict
    seed: int
    tol: float

    @property
    def passed(self) -> bool:
        ok = self.identity_passed and self.boundary["passed"]
        if self.multiplicities is not None:
            ok = ok and self.multiplicities["product_holds"]
        return ok

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "identity": {
                "passed": self.identity_passed,
                "first_failure": self.first_failure,
                "max_residual": max(self.identity_residuals),
                "residuals": list(self.identity_residuals),
                "tol": self.tol,
            },
            "multiplicities": self.multiplicities,
            "boundary": self.boundary,
            "seed": self.seed,
        }


RAY_LEVELS = (0.5, 0.9, 0.99, 0.999, 1.0)


def boundary_witness(psi: PolyMap, F: PolyMap, target: PolyMap, E: Pseudoellipsoid, rays: int, rng, tol: float) -> dict:
    """Follow rays ``t u`` (``u`` on the boundary) as ``t -> 1``.

    Along each ray ``|phi(t u)|`` must increase to 1 and ``Psi(F(t u))``
    must track ``P_G(phi(t u))``; at ``t = 1`` this puts ``Psi o F`` on the
    image of the unit sphere under ``P_G``.
    """
    phi = phi_map(E.n, E.p)
    us = E.sample(rng, rays, boundary=True)
    phi_norms, psi_norms, target_norms = [], [], []
    worst_gap = 0.0
    monotone = True
    for u in us:
        pts = np.array([t * u for t in RAY_LEVELS])
        pn = np.linalg.norm(phi.evaluate_many(pts), axis=1)
        lhs = psi.evaluate_many(F.evaluate_many(pts))
        rhs = target.evaluate_many(pts)
        worst_gap = max(worst_gap, float(np.max(np.abs(lhs - rhs) / (1 + np.abs(rhs)))))
        monotone &= bool(np.all(np.diff(pn) > 0))
        phi_norms.append(pn.tolist())
        psi_norms.append(np.linalg.norm(lhs, axis=1).tolist())
        target_norms.append(np.linalg.norm(rhs, axis=1).tolist())
    sphere_gap = max(abs(row[-1] - 1.0) for row in phi_norms)
    return {
        "levels": list(RAY_LEVELS),
        "phi_norms": phi_norms,
        "psi_of_F_norms": psi_norms,
        "target_norms": target_norms,
        "max_gap": worst_gap,
        "sphere_gap": sphere_gap,
        "monotone": monotone,
        "passed": monotone and worst_gap <= tol and sphere_gap <= 1e-12,
    }


def verify_factorization(
    psi: PolyMap,
    F: PolyMap,
    G: FiniteUnitaryGroup,
    E: Pseudoellipsoid,
    trials: int = 20,
    seed: int = DEFAULT_SEED,
    tol: float = IDENTITY_TOL,
    multiplicity_trials: int | None = None,
    rays: int = 4,
    config: SolverConfig | None = None,
    target: PolyMap | None = None,
) -> VerificationReport:
    """Check ``Psi o F = P_G o phi`` pointwise, by multiplicities and along boundary rays.

    Pass ``multiplicity_trials=0`` to skip the (slower) multiplicity ledger;
    by default it runs with ``trials`` targets per map.
    """
    if psi.arity != F.coarity:
        raise ValueError("psi and F have incompatible shapes")
    target = target if target is not None else target_map(G, E)
    rng = np.random.default_rng(seed)
    xs = E.sample(rng, trials)
    lhs = psi.evaluate_many(F.evaluate_many(xs))
    rhs = target.evaluate_many(xs)
    res = np.max(np.abs(lhs - rhs) / (1 + np.abs(lhs)), axis=1)
    bad = np.flatnonzero(res > tol)
    first = int(bad[0]) if len(bad) else None
    m_trials = trials if multiplicity_trials is None else multiplicity_trials
    mults = None
    if m_trials > 0:
        cfg = config or SolverConfig(seed=seed)
        mults = multiplicity_ledger(psi, F, target, E, m_trials, cfg)
    boundary = boundary_witness(psi, F, target, E, rays, rng, tol)
    return VerificationReport(res.tolist(), first is None, first, mults, boundary, seed, tol)
