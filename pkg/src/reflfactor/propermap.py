"""Pseudoellipsoids, the monomial map onto the ball, fibers and multiplicity.

Fibers ``F^{-1}(w)`` are computed numerically by multistart Newton
iteration (vectorised over starts).  Generic targets are always produced as
images ``F(x)`` of random domain points, since the image domain has no
explicit description.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field, replace
from math import prod
from typing import Callable, Mapping, Sequence

import numpy as np

from .polyalg import DEFAULT_SEED, PolyMap, Polynomial, jacobian_det, variables
from .unigroup import FiniteUnitaryGroup, orbit

GENERIC_TOL = 1e-6
MATCH_TOL = 1e-6


class NoPreimageError(RuntimeError):
    """Newton found no preimage from any start."""


@dataclass(frozen=True)
class Pseudoellipsoid:
    """``sum_{j<=n-k} |z_j|^2 + sum_i |z_{n-k+i}|^(2 p_i) < 1``."""

    n: int
    p: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "p", tuple(int(x) for x in self.p))
        if self.n < 1:
            raise ValueError(f"dimension must be positive, got {self.n}")
        if not 1 <= len(self.p) <= self.n:
            raise ValueError(f"need 1 <= k <= n exponents, got k={len(self.p)}, n={self.n}")
        if any(x < 2 for x in self.p):
            raise ValueError(f"exponents must be >= 2, got {list(self.p)}")

    @property
    def k(self) -> int:
        return len(self.p)

    def weights(self) -> np.ndarray:
        """Per-coordinate exponent: 1 on ball coordinates, ``p_i`` on the last ``k``."""
        return np.array([1] * (self.n - self.k) + list(self.p))

    def rho(self, points) -> np.ndarray:
        """Defining function at each row of ``points``; negative inside."""
        pts = np.atleast_2d(np.asarray(points, dtype=complex))
        return np.sum((np.abs(pts) ** 2) ** self.weights(), axis=1) - 1

    def contains(self, z, tol: float = 0.0) -> bool:
        return bool(self.rho(z)[0] < tol)

    def sample(self, rng: np.random.Generator, count: int, boundary: bool = False) -> np.ndarray:
        """Random points of the domain (or of its boundary).

        The ``n`` terms of the defining function get Dirichlet weights scaled
        by a level ``s`` in ``[0, 1)`` (``s = 1`` on the boundary), so
        ``rho = s - 1`` exactly up to rounding.
        """
        t = rng.dirichlet(np.ones(self.n), size=count)
        if boundary:
            s = np.ones((count, 1))
        else:
            s = rng.uniform(size=(count, 1)) ** (1.0 / self.n)
        mod = (s * t) ** (1.0 / (2 * self.weights()))
        phase = rng.uniform(0.0, 2 * np.pi, size=(count, self.n))
        return mod * np.exp(1j * phase)

    def to_json(self) -> dict:
        return {"n": self.n, "p": list(self.p)}

    @classmethod
    def from_json(cls, data: Mapping) -> Pseudoellipsoid:
        return cls(int(data["n"]), tuple(data["p"]))


def phi_map(n: int, p: Sequence[int]) -> PolyMap:
    """``(z_1, ..., z_{n-k}, z_{n-k+1}^{p_1}, ..., z_n^{p_k})``."""
    E = Pseudoellipsoid(n, tuple(p))
    z = variables(n)
    return PolyMap([zj**w for zj, w in zip(z, E.weights())])


def boundary_identity_check(E: Pseudoellipsoid, samples: int = 10_000, seed: int = DEFAULT_SEED) -> float:
    """Max of ``| |phi(z)|^2 - rho(z) - 1 |`` over points of the closed domain.

    Half of the samples are drawn on the boundary, where the identity says
    ``phi`` lands on the unit sphere.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    n_bdry = samples // 2
    pts = np.vstack([E.sample(rng, samples - n_bdry), E.sample(rng, n_bdry, boundary=True)])
    phi = phi_map(E.n, E.p)
    norm2 = np.sum(np.abs(phi.evaluate_many(pts)) ** 2, axis=1)
    return float(np.max(np.abs(norm2 - E.rho(pts) - 1)))


def singular_locus(F: PolyMap) -> Polynomial:
    """``det J_F``; its zero set is the branch locus."""
    return jacobian_det(F)


def pi_product(E: Pseudoellipsoid, points) -> np.ndarray:
    """``z_{n-k+1} ... z_n`` at each point (vanishes exactly on ``pi``)."""
    pts = np.atleast_2d(np.asarray(points, dtype=complex))
    return np.prod(pts[:, E.n - E.k:], axis=1)


@dataclass(frozen=True)
class SolverConfig:
    """Multistart Newton settings.  ``starts=None`` means 64 x min(Bezout, 512)."""

    starts: int | None = None
    seed_radius: float = 2.0
    max_steps: int = 50
    residual_tol: float = 1e-10
    dedup_tol: float = 1e-6
    seed: int = DEFAULT_SEED

    def n_starts(self, F: PolyMap) -> int:
        if self.starts is not None:
            return self.starts
        return 64 * min(bezout_number(F), 512)

    def to_json(self) -> dict:
        return {
            "starts": self.starts,
            "seed_radius": self.seed_radius,
            "max_steps": self.max_steps,
            "residual_tol": self.residual_tol,
            "dedup_tol": self.dedup_tol,
            "seed": self.seed,
        }


def bezout_number(F: PolyMap) -> int:
    return prod(max(d, 1) for d in F.degrees())


def sample_ball(rng: np.random.Generator, count: int, n: int, radius: float = 1.0) -> np.ndarray:
    """Uniform samples from the Euclidean ball of ``C^n``."""
    g = rng.normal(size=(count, 2 * n))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = radius * rng.uniform(size=(count, 1)) ** (1.0 / (2 * n))
    x = g * r
    return x[:, :n] + 1j * x[:, n:]


def dedupe(points, tol: float) -> list[np.ndarray]:
    out: list[np.ndarray] = []
    for p in points:
        if all(np.max(np.abs(p - q)) >= tol for q in out):
            out.append(p)
    return out


def newton(F: PolyMap, w, starts: np.ndarray, max_steps: int, residual_tol: float) -> np.ndarray:
    """Run Newton from every start; return the converged iterates."""
    w = np.asarray(w, dtype=complex)
    z = np.array(starts, dtype=complex)
    alive = np.ones(len(z), dtype=bool)
    done = np.zeros(len(z), dtype=bool)
    for _ in range(max_steps + 1):
        idx = np.flatnonzero(alive & ~done)
        if len(idx) == 0:
            break
        r = F.evaluate_many(z[idx]) - w
        conv = np.max(np.abs(r), axis=1) < residual_tol
        done[idx[conv]] = True
        idx, r = idx[~conv], r[~conv]
        if len(idx) == 0:
            break
        J = F.jacobian_many(z[idx])
        with np.errstate(all="ignore"):
            det = np.linalg.det(J)
        ok = np.isfinite(det) & (np.abs(det) > 1e-14)
        alive[idx[~ok]] = False
        idx, J, r = idx[ok], J[ok], r[ok]
        if len(idx) == 0:
            continue
        step = np.linalg.solve(J, r[..., None])[..., 0]
        z[idx] -= step
        blown = ~np.all(np.isfinite(z[idx]), axis=1) | (np.max(np.abs(z[idx]), axis=1) > 1e8)
        alive[idx[blown]] = False
    return z[done]


def preimages(F: PolyMap, w, config: SolverConfig = SolverConfig(), rng: np.random.Generator | None = None) -> list[np.ndarray]:
    """Distinct solutions of ``F(z) = w`` found by multistart Newton.

    Starts are uniform in the ball of radius ``config.seed_radius``; starts
    hitting a singular Jacobian are dropped.  Raises :class:`NoPreimageError`
    when no start converges.
    """
    if not F.is_square():
        raise ValueError("preimages needs a square map")
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    starts = sample_ball(rng, config.n_starts(F), F.arity, config.seed_radius)
    roots = newton(F, w, starts, config.max_steps, config.residual_tol)
    if len(roots) == 0:
        raise NoPreimageError(f"no preimage found for w = {np.asarray(w)} from {len(starts)} starts")
    return dedupe(roots, config.dedup_tol)


def generic_points(
    F: PolyMap,
    rng: np.random.Generator,
    count: int,
    sampler: Callable[[np.random.Generator, int], np.ndarray],
    E: Pseudoellipsoid | None = None,
    tol: float = GENERIC_TOL,
) -> np.ndarray:
    """Rejection-sample domain points away from ``det J_F = 0`` (and ``pi`` if ``E`` is given)."""
    det = singular_locus(F)
    out = []
    while len(out) < count:
        batch = sampler(rng, max(2 * (count - len(out)), 8))
        ok = np.abs(det.evaluate_many(batch)) > tol
        if E is not None:
            ok &= np.abs(pi_product(E, batch)) > tol
        out.extend(batch[ok])
    return np.array(out[:count])


def ball_sampler(n: int) -> Callable:
    return lambda rng, count: sample_ball(rng, count, n)


def domain_sampler(E: Pseudoellipsoid) -> Callable:
    return lambda rng, count: E.sample(rng, count)


@dataclass
class MultiplicityEstimate:
    multiplicity: int
    counts: list[int]
    histogram: dict[int, int]
    consistent: bool
    seed: int

    def __int__(self):
        return self.multiplicity

    def to_json(self) -> dict:
        return {
            "multiplicity": self.multiplicity,
            "counts": list(self.counts),
            "histogram": {str(k): v for k, v in sorted(self.histogram.items())},
            "consistent": self.consistent,
            "seed": self.seed,
        }


def multiplicity_estimate(
    F: PolyMap,
    trials: int = 20,
    config: SolverConfig = SolverConfig(),
    sampler: Callable | None = None,
) -> MultiplicityEstimate:
    """Largest fiber size over ``trials`` generic targets ``w = F(x)``.

    ``sampler(rng, count)`` draws the domain points ``x`` (default: the unit
    ball).  ``consistent`` is False when some trial saw fewer preimages than
    the maximum, which usually means too few Newton starts.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(config.seed)
    sampler = sampler or ball_sampler(F.arity)
    xs = generic_points(F, rng, trials, sampler)
    counts = []
    for x in xs:
        roots = preimages(F, F.evaluate(x), config, rng)
        counts.append(len(roots))
    hist = Counter(counts)
    m = max(counts)
    return MultiplicityEstimate(m, counts, dict(hist), len(hist) == 1, config.seed)


@dataclass
class CompleteFSet:
    """A fiber of ``F`` in the domain, and its image under ``phi``."""

    target: np.ndarray
    source_points: list[np.ndarray]
    image_points: list[np.ndarray]


def complete_fset(
    F: PolyMap,
    E: Pseudoellipsoid,
    w,
    config: SolverConfig = SolverConfig(),
    rng: np.random.Generator | None = None,
    dedup_tol: float = MATCH_TOL,
) -> CompleteFSet:
    roots = preimages(F, w, config, rng)
    inside = [x for x in roots if E.rho(x)[0] <= 1e-9]
    phi = phi_map(E.n, E.p)
    images = dedupe([phi.evaluate(x) for x in inside], dedup_tol)
    return CompleteFSet(np.asarray(w, dtype=complex), inside, images)


def match_sets(a: Sequence[np.ndarray], b: Sequence[np.ndarray], tol: float = MATCH_TOL) -> bool:
    """Greedy nearest-neighbour matching of two point sets at tolerance ``tol``."""
    if len(a) != len(b):
        return False
    remaining = list(b)
    for p in a:
        dists = [np.max(np.abs(p - q)) for q in remaining]
        j = int(np.argmin(dists))
        if dists[j] >= tol:
            return False
        remaining.pop(j)
    return True


@dataclass
class OrbitCheckReport:
    trials: int
    passes: int
    failures: int
    inconclusive: int
    reruns: int
    max_fiber_residual: float
    orbit_sizes: dict[int, int] = field(default_factory=dict)
    seed: int = DEFAULT_SEED

    @property
    def passed(self) -> bool:
        return self.failures == 0 and self.inconclusive == 0

    def to_json(self) -> dict:
        return {
            "trials": self.trials,
            "passes": self.passes,
            "failures": self.failures,
            "inconclusive": self.inconclusive,
            "reruns": self.reruns,
            "max_fiber_residual": self.max_fiber_residual,
            "orbit_sizes": {str(k): v for k, v in sorted(self.orbit_sizes.items())},
            "passed": self.passed,
            "seed": self.seed,
        }


def _orbit_trial(F, G, E, x, config, rng, tol):
    """``(status, orbit_size, fiber_residual)`` for one domain point."""
    w = F.evaluate(x)
    try:
        fset = complete_fset(F, E, w, config, rng, tol)
    except NoPreimageError:
        return "inconclusive", 0, 0.0
    if not any(np.max(np.abs(x - s)) < tol for s in fset.source_points):
        return "inconclusive", 0, 0.0
    resid = max(float(np.max(np.abs(F.evaluate(s) - w))) for s in fset.source_points)
    phi = phi_map(E.n, E.p)
    orb = orbit(G, phi.evaluate(x), tol)
    status = "pass" if match_sets(fset.image_points, orb, tol) else "fail"
    return status, len(orb), resid


def orbit_check(
    F: PolyMap,
    G: FiniteUnitaryGroup,
    E: Pseudoellipsoid,
    trials: int = 100,
    config: SolverConfig = SolverConfig(),
    tol: float = MATCH_TOL,
    rerun_inconclusive: bool = True,
) -> OrbitCheckReport:
    """Check that ``phi(F^{-1}(F(x)))`` is the ``G``-orbit of ``phi(x)``.

    Points ``x`` are drawn from the domain away from ``det J_F = 0`` and
    from ``pi``.  A trial whose computed fiber misses ``x`` itself is
    inconclusive rather than failed; with ``rerun_inconclusive`` such trials
    are retried once at the same ``x`` with four times the Newton starts.
    """
    if G.dim != E.n or F.arity != E.n:
        raise ValueError("map, group and domain dimensions disagree")
    rng = np.random.default_rng(config.seed)
    xs = generic_points(F, rng, trials, domain_sampler(E), E)
    passes = failures = inconclusive = reruns = 0
    sizes: Counter = Counter()
    worst = 0.0
    for x in xs:
        status, size, resid = _orbit_trial(F, G, E, x, config, rng, tol)
        if status == "inconclusive" and rerun_inconclusive:
            reruns += 1
            bigger = replace(config, starts=4 * config.n_starts(F))
            status, size, resid = _orbit_trial(F, G, E, x, bigger, rng, tol)
        worst = max(worst, resid)
        if status == "pass":
            passes += 1
            sizes[size] += 1
        elif status == "fail":
            failures += 1
        else:
            inconclusive += 1
    return OrbitCheckReport(trials, passes, failures, inconclusive, reruns, worst, dict(sizes), config.seed)
