"""Sparse multivariate polynomials with complex coefficients.

A :class:`Polynomial` is an immutable map from exponent tuples to complex
coefficients in a fixed number of variables.  A :class:`PolyMap` is an
ordered tuple of polynomials sharing that number of variables and is the
carrier for every holomorphic map in the package.

Terms are kept in canonical form: coefficients of magnitude below
:data:`ZERO_TOL` are dropped.  Iteration order is graded lexicographic,
highest term first.
"""
from __future__ import annotations

import itertools
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

ZERO_TOL = 1e-12
DEFAULT_SEED = 20160917

Exponent = tuple[int, ...]


def grlex_key(exp: Exponent) -> tuple:
    """Sort key for graded lexicographic order (larger key = larger monomial)."""
    return (sum(exp), exp)


def monomials_of_degree(n: int, d: int) -> list[Exponent]:
    """All exponent vectors in ``n`` variables of total degree ``d``, grlex descending."""
    out = []
    for cut in itertools.combinations(range(d + n - 1), n - 1):
        prev = -1
        exp = []
        for c in cut:
            exp.append(c - prev - 1)
            prev = c
        exp.append(d + n - 1 - prev - 1)
        out.append(tuple(exp))
    out.sort(key=grlex_key, reverse=True)
    return out


def monomials_up_to(n: int, d: int) -> list[Exponent]:
    """Exponent vectors of total degree ``<= d``, grlex ascending."""
    out = []
    for k in range(d + 1):
        out.extend(reversed(monomials_of_degree(n, k)))
    return out


class Polynomial:
    """Polynomial in ``dim`` complex variables ``z1 ... z_dim``.

    Arithmetic operators (``+ - * **``) work between polynomials of the same
    dimension and with scalars.  Calling the polynomial evaluates it.
    """

    __slots__ = ("_terms", "_dim", "__dict__")

    def __init__(self, dim: int, terms: Mapping[Sequence[int], complex] | None = None):
        if dim < 1:
            raise ValueError(f"dimension must be positive, got {dim}")
        clean: dict[Exponent, complex] = {}
        for exp, c in (terms or {}).items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != dim:
                raise ValueError(f"exponent {exp} has length {len(exp)}, expected {dim}")
            if any(e < 0 for e in exp):
                raise ValueError(f"negative exponent in {exp}")
            c = complex(c)
            if exp in clean:
                c += clean[exp]
            clean[exp] = c
        self._dim = dim
        self._terms = {
            e: clean[e]
            for e in sorted(clean, key=grlex_key, reverse=True)
            if abs(clean[e]) >= ZERO_TOL
        }

    # construction helpers

    @classmethod
    def constant(cls, dim: int, c: complex) -> Polynomial:
        return cls(dim, {(0,) * dim: c})

    @classmethod
    def zero(cls, dim: int) -> Polynomial:
        return cls(dim)

    @classmethod
    def variable(cls, dim: int, i: int) -> Polynomial:
        """The coordinate function ``z_{i+1}`` (``i`` is 0-based)."""
        if not 0 <= i < dim:
            raise ValueError(f"variable index {i} out of range for dimension {dim}")
        exp = [0] * dim
        exp[i] = 1
        return cls(dim, {tuple(exp): 1.0})

    @classmethod
    def monomial(cls, exp: Sequence[int], c: complex = 1.0) -> Polynomial:
        return cls(len(exp), {tuple(exp): c})

    # basic accessors

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def terms(self) -> dict[Exponent, complex]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __len__(self) -> int:
        return len(self._terms)

    def coefficient(self, exp: Sequence[int]) -> complex:
        return self._terms.get(tuple(exp), 0j)

    def is_zero(self) -> bool:
        return not self._terms

    def degree(self) -> int:
        """Total degree; ``-1`` for the zero polynomial."""
        return max((sum(e) for e in self._terms), default=-1)

    def is_homogeneous(self) -> bool:
        return len({sum(e) for e in self._terms}) <= 1

    def homogeneous_part(self, d: int) -> Polynomial:
        return Polynomial(self._dim, {e: c for e, c in self._terms.items() if sum(e) == d})

    def leading_term(self) -> tuple[Exponent, complex]:
        if not self._terms:
            raise ValueError("zero polynomial has no leading term")
        exp = next(iter(self._terms))
        return exp, self._terms[exp]

    def normalized(self) -> Polynomial:
        """Scale so the graded-lex leading coefficient is 1."""
        _, c = self.leading_term()
        return self * (1.0 / c)

    def canonical(self) -> Polynomial:
        return Polynomial(self._dim, self._terms)

    # comparison

    def max_coeff_distance(self, other: Polynomial) -> float:
        self._check_dim(other)
        keys = set(self._terms) | set(other._terms)
        return max((abs(self.coefficient(k) - other.coefficient(k)) for k in keys), default=0.0)

    def allclose(self, other: Polynomial, tol: float = ZERO_TOL) -> bool:
        return self.max_coeff_distance(other) <= tol

    def __eq__(self, other):
        if isinstance(other, (int, float, complex)):
            other = Polynomial.constant(self._dim, other)
        if not isinstance(other, Polynomial) or other._dim != self._dim:
            return NotImplemented
        return self.allclose(other, ZERO_TOL)

    __hash__ = None

    # arithmetic

    def _check_dim(self, other: Polynomial):
        if other._dim != self._dim:
            raise ValueError(f"dimension mismatch: {self._dim} vs {other._dim}")

    def _coerce(self, other) -> Polynomial:
        if isinstance(other, Polynomial):
            self._check_dim(other)
            return other
        if isinstance(other, (int, float, complex, np.number)):
            return Polynomial.constant(self._dim, complex(other))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms = dict(self._terms)
        for e, c in other._terms.items():
            terms[e] = terms.get(e, 0j) + c
        return Polynomial(self._dim, terms)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self._dim, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            c0 = complex(other)
            return Polynomial(self._dim, {e: c * c0 for e, c in self._terms.items()})
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms: dict[Exponent, complex] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                terms[e] = terms.get(e, 0j) + c1 * c2
        return Polynomial(self._dim, terms)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, (int, float, complex, np.number)):
            return NotImplemented
        return self * (1.0 / complex(other))

    def __pow__(self, k: int):
        if not isinstance(k, (int, np.integer)) or k < 0:
            raise ValueError("only non-negative integer powers are supported")
        result = Polynomial.constant(self._dim, 1.0)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def derivative(self, i: int) -> Polynomial:
        """Partial derivative with respect to ``z_{i+1}``."""
        terms = {}
        for e, c in self._terms.items():
            if e[i]:
                ne = list(e)
                ne[i] -= 1
                terms[tuple(ne)] = c * e[i]
        return Polynomial(self._dim, terms)

    def compose(self, inner: PolyMap) -> Polynomial:
        """Substitute the components of ``inner`` for the variables of ``self``."""
        if inner.coarity != self._dim:
            raise ValueError(
                f"cannot substitute a map with {inner.coarity} components into "
                f"a polynomial in {self._dim} variables"
            )
        return _substitute([self], inner)[0]

    # evaluation

    @cached_property
    def _arrays(self):
        if not self._terms:
            return np.zeros((0, self._dim), dtype=np.int64), np.zeros(0, dtype=complex)
        exps = np.array(list(self._terms), dtype=np.int64)
        coeffs = np.array(list(self._terms.values()), dtype=complex)
        return exps, coeffs

    def evaluate(self, z) -> complex:
        """Value at the point ``z`` (direct summation of ``c * z**e``)."""
        z = np.asarray(z, dtype=complex)
        if z.shape != (self._dim,):
            raise ValueError(f"point has shape {z.shape}, expected ({self._dim},)")
        return complex(self.evaluate_many(z[None, :])[0])

    def evaluate_many(self, points) -> np.ndarray:
        """Values at each row of an ``(N, dim)`` array of points."""
        pts = np.asarray(points, dtype=complex)
        if pts.ndim != 2 or pts.shape[1] != self._dim:
            raise ValueError(f"points have shape {pts.shape}, expected (N, {self._dim})")
        exps, coeffs = self._arrays
        if len(coeffs) == 0:
            return np.zeros(len(pts), dtype=complex)
        mons = np.prod(pts[:, None, :] ** exps[None, :, :], axis=2)
        return mons @ coeffs

    __call__ = evaluate

    # display / serialization

    def __repr__(self):
        return f"Polynomial({self._dim}, {self})"

    def __str__(self):
        return self.to_string()

    def to_string(self, var: str = "z") -> str:
        if not self._terms:
            return "0"
        parts = []
        for e, c in self._terms.items():
            mon = "*".join(
                f"{var}{i + 1}" if k == 1 else f"{var}{i + 1}^{k}" for i, k in enumerate(e) if k
            )
            coeff = _format_coeff(c)
            if not mon:
                parts.append(coeff)
            elif coeff == "1":
                parts.append(mon)
            elif coeff == "-1":
                parts.append("-" + mon)
            else:
                parts.append(f"{coeff}*{mon}")
        return " + ".join(parts).replace("+ -", "- ")

    def to_json(self) -> dict:
        return {
            "dim": self._dim,
            "terms": [
                {"exp": list(e), "re": c.real, "im": c.imag} for e, c in self._terms.items()
            ],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> Polynomial:
        dim = data["dim"]
        terms: dict[Exponent, complex] = {}
        for t in data["terms"]:
            exp = tuple(t["exp"])
            terms[exp] = terms.get(exp, 0j) + complex(t.get("re", 0.0), t.get("im", 0.0))
        return cls(dim, terms)


def _format_coeff(c: complex) -> str:
    def num(x):
        return f"{x:.12g}"

    if abs(c.imag) < ZERO_TOL:
        return num(c.real)
    if abs(c.real) < ZERO_TOL:
        return "1j" if abs(c.imag - 1) < ZERO_TOL else f"{num(c.imag)}j"
    return f"({num(c.real)}{c.imag:+.12g}j)"


def variables(n: int) -> list[Polynomial]:
    """The coordinate functions ``z1, ..., zn`` as polynomials."""
    return [Polynomial.variable(n, i) for i in range(n)]


class PolyMap:
    """A polynomial map ``C^arity -> C^coarity``."""

    __slots__ = ("_components", "_arity", "__dict__")

    def __init__(self, components: Iterable[Polynomial], arity: int | None = None):
        comps = tuple(components)
        if not comps:
            raise ValueError("a map needs at least one component")
        dims = {c.dim for c in comps}
        if len(dims) != 1:
            raise ValueError(f"components have mixed dimensions {sorted(dims)}")
        (dim,) = dims
        if arity is not None and arity != dim:
            raise ValueError(f"components have dimension {dim}, expected arity {arity}")
        self._components = comps
        self._arity = dim

    @classmethod
    def identity(cls, n: int) -> PolyMap:
        return cls(variables(n))

    @classmethod
    def linear(cls, matrix) -> PolyMap:
        """The map ``z -> M z``."""
        m = np.asarray(matrix, dtype=complex)
        rows, cols = m.shape
        comps = []
        for i in range(rows):
            terms = {}
            for j in range(cols):
                exp = [0] * cols
                exp[j] = 1
                terms[tuple(exp)] = m[i, j]
            comps.append(Polynomial(cols, terms))
        return cls(comps)

    @property
    def components(self) -> tuple[Polynomial, ...]:
        return self._components

    @property
    def arity(self) -> int:
        return self._arity

    @property
    def coarity(self) -> int:
        return len(self._components)

    def is_square(self) -> bool:
        return self._arity == self.coarity

    def __len__(self):
        return len(self._components)

    def __getitem__(self, i):
        return self._components[i]

    def __iter__(self):
        return iter(self._components)

    def degrees(self) -> list[int]:
        return [c.degree() for c in self._components]

    def max_coeff_distance(self, other: PolyMap) -> float:
        if other.coarity != self.coarity or other.arity != self.arity:
            raise ValueError("maps have different shapes")
        return max(a.max_coeff_distance(b) for a, b in zip(self, other))

    def allclose(self, other: PolyMap, tol: float = ZERO_TOL) -> bool:
        return self.max_coeff_distance(other) <= tol

    def __eq__(self, other):
        if not isinstance(other, PolyMap):
            return NotImplemented
        if other.coarity != self.coarity or other.arity != self.arity:
            return False
        return self.allclose(other)

    __hash__ = None

    def compose(self, inner: PolyMap) -> PolyMap:
        """``self o inner``."""
        if self._arity != inner.coarity:
            raise ValueError(
                f"arity mismatch: outer map takes {self._arity} arguments, "
                f"inner map has {inner.coarity} components"
            )
        return PolyMap(_substitute(self._components, inner))

    def jacobian(self) -> list[list[Polynomial]]:
        return [[c.derivative(j) for j in range(self._arity)] for c in self._components]

    def evaluate(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if z.shape != (self._arity,):
            raise ValueError(f"point has shape {z.shape}, expected ({self._arity},)")
        return self.evaluate_many(z[None, :])[0]

    def evaluate_many(self, points) -> np.ndarray:
        """``(N, arity)`` points to ``(N, coarity)`` values."""
        return np.stack([c.evaluate_many(points) for c in self._components], axis=1)

    __call__ = evaluate

    @cached_property
    def _jacobian_polys(self):
        return self.jacobian()

    def jacobian_many(self, points) -> np.ndarray:
        """Jacobian matrices at each point, shape ``(N, coarity, arity)``."""
        pts = np.asarray(points, dtype=complex)
        jac = self._jacobian_polys
        out = np.empty((len(pts), self.coarity, self._arity), dtype=complex)
        for i, row in enumerate(jac):
            for j, p in enumerate(row):
                out[:, i, j] = p.evaluate_many(pts)
        return out

    def __repr__(self):
        return "PolyMap(" + ", ".join(str(c) for c in self._components) + ")"

    def to_json(self) -> dict:
        return {"components": [c.to_json() for c in self._components]}

    @classmethod
    def from_json(cls, data: Mapping) -> PolyMap:
        return cls(Polynomial.from_json(c) for c in data["components"])


def _substitute(outer: Sequence[Polynomial], inner: PolyMap) -> list[Polynomial]:
    n = inner.arity
    max_exp = [0] * inner.coarity
    for p in outer:
        for e in p._terms:
            for j, k in enumerate(e):
                max_exp[j] = max(max_exp[j], k)
    powers = []
    for j, f in enumerate(inner.components):
        pw = [Polynomial.constant(n, 1.0)]
        for _ in range(max_exp[j]):
            pw.append(pw[-1] * f)
        powers.append(pw)
    result = []
    for p in outer:
        acc: dict[Exponent, complex] = {}
        for e, c in p._terms.items():
            term = Polynomial.constant(n, c)
            for j, k in enumerate(e):
                if k:
                    term = term * powers[j][k]
            for te, tc in term._terms.items():
                acc[te] = acc.get(te, 0j) + tc
        result.append(Polynomial(n, acc))
    return result


def evaluate(f: Polynomial, z) -> complex:
    return f.evaluate(z)


def compose(g: PolyMap, f: PolyMap) -> PolyMap:
    """Symbolic composition ``g o f``, expanded to canonical form."""
    return g.compose(f)


def jacobian_det(F: PolyMap) -> Polynomial:
    """Determinant of the matrix of partial derivatives of a square map."""
    if not F.is_square():
        raise ValueError(f"jacobian determinant needs a square map, got {F.coarity}x{F.arity}")
    return determinant(F.jacobian())


def determinant(matrix: Sequence[Sequence[Polynomial]]) -> Polynomial:
    """Laplace expansion memoised over column subsets; ``O(n 2^n)`` products."""
    n = len(matrix)
    dim = matrix[0][0].dim
    memo: dict[int, Polynomial] = {0: Polynomial.constant(dim, 1.0)}

    def minor(row: int, cols: int) -> Polynomial:
        # cols: bitmask of columns still available for rows row..n-1
        if cols in memo:
            return memo[cols]
        acc = Polynomial.zero(dim)
        sign = 1
        for j in range(n):
            if cols >> j & 1:
                entry = matrix[row][j]
                if not entry.is_zero():
                    sub = minor(row + 1, cols & ~(1 << j))
                    acc = acc + entry * sub * sign
                sign = -sign
        memo[cols] = acc
        return acc

    return minor(0, (1 << n) - 1)


def sample_polydisk(rng: np.random.Generator, count: int, n: int) -> np.ndarray:
    """Uniform samples from the unit polydisk ``{|z_j| < 1}``."""
    r = np.sqrt(rng.uniform(size=(count, n)))
    theta = rng.uniform(0.0, 2 * np.pi, size=(count, n))
    return r * np.exp(1j * theta)


def poly_equal_random(
    f: Polynomial,
    g: Polynomial,
    trials: int = 20,
    tol: float = 1e-9,
    seed: int = DEFAULT_SEED,
) -> bool:
    """Randomised identity test on the unit polydisk.

    True iff ``|f(z) - g(z)| <= tol * (1 + |f(z)|)`` at ``trials`` sampled
    points.  A true result can be a false positive only on a measure-zero
    event; a false result is always a genuine difference.
    """
    return identity_residuals(f, g, trials, seed).max() <= tol


def identity_residuals(f: Polynomial, g: Polynomial, trials: int, seed: int = DEFAULT_SEED) -> np.ndarray:
    """Relative residuals ``|f - g| / (1 + |f|)`` at each sampled point."""
    if f.dim != g.dim:
        raise ValueError(f"dimension mismatch: {f.dim} vs {g.dim}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    pts = sample_polydisk(np.random.default_rng(seed), trials, f.dim)
    fv = f.evaluate_many(pts)
    gv = g.evaluate_many(pts)
    return np.abs(fv - gv) / (1 + np.abs(fv))
