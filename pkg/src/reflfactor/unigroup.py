"""Finite subgroups of the unitary group ``U_n``.

Elements are plain ``numpy`` complex arrays.  A :class:`FiniteUnitaryGroup`
stores them in breadth-first order (identity first) together with a hash
index keyed on entries rounded to six decimals, so membership queries cost
a dictionary lookup instead of a scan.
"""
from __future__ import annotations

import itertools
from collections import deque
from typing import Iterable, Mapping, Sequence

import numpy as np

EQ_TOL = 1e-9
UNITARY_TOL = 1e-9
REFLECTION_SV_TOL = 1e-8
DEFAULT_ORDER_CAP = 10_000

_DECIMALS = 6
_SCALE = 10.0**_DECIMALS
# entries closer than this (in scaled units) to a rounding boundary get both buckets probed
_BOUNDARY = EQ_TOL * _SCALE
_MAX_PROBE_ENTRIES = 12


class GroupNotFiniteError(RuntimeError):
    """Closure exceeded its order cap."""


def as_matrix(m, dim: int | None = None) -> np.ndarray:
    a = np.array(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if dim is not None and a.shape[0] != dim:
        raise ValueError(f"expected a {dim}x{dim} matrix, got {a.shape[0]}x{a.shape[0]}")
    return a


def is_unitary(m, tol: float = UNITARY_TOL) -> bool:
    m = np.asarray(m, dtype=complex)
    return bool(np.max(np.abs(m @ m.conj().T - np.eye(len(m)))) < tol)


def check_unitary(m, tol: float = UNITARY_TOL) -> np.ndarray:
    m = as_matrix(m)
    if not is_unitary(m, tol):
        dev = np.max(np.abs(m @ m.conj().T - np.eye(len(m))))
        raise ValueError(f"matrix is not unitary (max |U U* - I| = {dev:.3g})")
    return m


def _bucket_keys(m: np.ndarray) -> list[tuple]:
    flat = np.concatenate([m.real.ravel(), m.imag.ravel()]) * _SCALE
    base = np.round(flat)
    frac = flat - np.floor(flat)
    # near x.5 the rounding can flip under perturbation; probe the other side too
    ambiguous = np.flatnonzero(np.abs(frac - 0.5) < _BOUNDARY)
    if len(ambiguous) > _MAX_PROBE_ENTRIES:
        ambiguous = ambiguous[:_MAX_PROBE_ENTRIES]
    keys = []
    for choice in itertools.product((0, 1), repeat=len(ambiguous)):
        key = base.copy()
        for idx, flip in zip(ambiguous, choice):
            if flip:
                key[idx] = np.floor(flat[idx]) if base[idx] > flat[idx] else np.ceil(flat[idx])
        keys.append(tuple((key + 0.0).astype(np.int64).tolist()))
    return keys


def _primary_key(m: np.ndarray) -> tuple:
    flat = np.concatenate([m.real.ravel(), m.imag.ravel()]) * _SCALE
    return tuple(np.round(flat).astype(np.int64).tolist())


def matrices_close(a: np.ndarray, b: np.ndarray, tol: float = EQ_TOL) -> bool:
    return bool(np.max(np.abs(a - b)) < tol)


class FiniteUnitaryGroup:
    """A finite group of ``n x n`` unitary matrices.

    Build one with :func:`closure`.  The constructor trusts that ``elements``
    is already closed; it only deduplicates and indexes them.
    """

    def __init__(self, elements: Iterable[np.ndarray], dim: int, generators: Sequence[np.ndarray] = ()):
        self.dim = dim
        self.generators = tuple(as_matrix(g, dim) for g in generators)
        self._elements: list[np.ndarray] = []
        self._index: dict[tuple, list[int]] = {}
        for e in elements:
            self._add(as_matrix(e, dim))
        if not self._elements or self.index_of(np.eye(dim)) is None:
            raise ValueError("group must contain the identity")

    def _add(self, m: np.ndarray) -> bool:
        if self.index_of(m) is not None:
            return False
        self._index.setdefault(_primary_key(m), []).append(len(self._elements))
        self._elements.append(m)
        return True

    def index_of(self, m) -> int | None:
        """Position of ``m`` in :attr:`elements`, or ``None`` if absent."""
        m = np.asarray(m, dtype=complex)
        for key in _bucket_keys(m):
            for i in self._index.get(key, ()):
                if matrices_close(self._elements[i], m):
                    return i
        return None

    def __contains__(self, m) -> bool:
        return self.index_of(m) is not None

    @property
    def elements(self) -> list[np.ndarray]:
        return list(self._elements)

    @property
    def order(self) -> int:
        return len(self._elements)

    def __len__(self):
        return len(self._elements)

    def __iter__(self):
        return iter(self._elements)

    def reflections(self) -> list[np.ndarray]:
        return [g for g in self._elements if is_reflection(g)]

    def reflection_count(self) -> int:
        return len(self.reflections())

    def is_subgroup_of(self, other: FiniteUnitaryGroup) -> bool:
        return self.dim == other.dim and all(g in other for g in self._elements)

    def is_normal_in(self, other: FiniteUnitaryGroup) -> bool:
        for g in other:
            ginv = g.conj().T
            for r in self._elements:
                if g @ r @ ginv not in self:
                    return False
        return True

    def element_order(self, g) -> int:
        g = np.asarray(g, dtype=complex)
        eye = np.eye(self.dim)
        power = g
        for k in range(1, self.order + 1):
            if matrices_close(power, eye):
                return k
            power = power @ g
        raise ValueError("element has no finite order within the group order")

    def restrict(self, coords: Sequence[int]) -> FiniteUnitaryGroup:
        """Image of the group acting on an invariant coordinate block."""
        idx = np.ix_(coords, coords)
        return closure([g[idx] for g in self._elements])

    def to_json(self) -> dict:
        gens = self.generators or tuple(self._elements)
        return {
            "dim": self.dim,
            "generators": [matrix_to_json(g) for g in gens],
            "order": self.order,
            "reflection_count": self.reflection_count(),
        }

    def __repr__(self):
        return f"FiniteUnitaryGroup(dim={self.dim}, order={self.order})"


def trivial_group(dim: int) -> FiniteUnitaryGroup:
    return FiniteUnitaryGroup([np.eye(dim)], dim)


def closure(generators: Sequence, order_cap: int = DEFAULT_ORDER_CAP, dim: int | None = None) -> FiniteUnitaryGroup:
    """Breadth-first product closure of a set of unitary generators.

    Raises :class:`GroupNotFiniteError` once more than ``order_cap`` distinct
    elements have been found, and ``ValueError`` for non-unitary input.
    """
    if order_cap < 1:
        raise ValueError("order_cap must be >= 1")
    gens = [check_unitary(g) for g in generators]
    if dim is None:
        if not gens:
            raise ValueError("need at least one generator or an explicit dimension")
        dim = gens[0].shape[0]
    for g in gens:
        if g.shape != (dim, dim):
            raise ValueError(f"generator of shape {g.shape} in a group of dimension {dim}")

    group = FiniteUnitaryGroup([np.eye(dim, dtype=complex)], dim, generators=gens)
    queue = deque([np.eye(dim, dtype=complex)])
    while queue:
        x = queue.popleft()
        for g in gens:
            y = x @ g
            if group._add(y):
                if group.order > order_cap:
                    raise GroupNotFiniteError(
                        f"not finite within cap: more than {order_cap} elements generated"
                    )
                queue.append(y)
    return group


def is_reflection(g, sv_tol: float = REFLECTION_SV_TOL) -> bool:
    """True iff the fixed space of ``g`` is a hyperplane (``rank(g - I) == 1``)."""
    g = np.asarray(g, dtype=complex)
    s = np.linalg.svd(g - np.eye(len(g)), compute_uv=False)
    return int(np.sum(s > sv_tol)) == 1


def reflection_subgroup(G: FiniteUnitaryGroup) -> FiniteUnitaryGroup:
    """Subgroup generated by all reflections of ``G`` (trivial if there are none)."""
    refl = G.reflections()
    if not refl:
        return trivial_group(G.dim)
    return closure(refl, order_cap=G.order, dim=G.dim)


def coset_decomposition(G: FiniteUnitaryGroup, H: FiniteUnitaryGroup) -> list[np.ndarray]:
    """Representatives ``h0 = I, h1, ..., hk`` of the right cosets ``H h_i`` in ``G``."""
    if H.dim != G.dim or not H.is_subgroup_of(G):
        raise ValueError("H is not a subgroup of G")
    covered = [False] * G.order
    reps = []
    for i, g in enumerate(G):
        if covered[i]:
            continue
        reps.append(g)
        for h in H:
            j = G.index_of(h @ g)
            if j is None:
                raise ValueError("H is not a subgroup of G")
            covered[j] = True
    return reps


def orbit(G: FiniteUnitaryGroup, z, tol: float = 1e-6) -> list[np.ndarray]:
    """Distinct points ``g z``, in group-element order."""
    z = np.asarray(z, dtype=complex)
    if z.shape != (G.dim,):
        raise ValueError(f"point has shape {z.shape}, expected ({G.dim},)")
    pts: list[np.ndarray] = []
    for g in G:
        w = g @ z
        if all(np.max(np.abs(w - p)) >= tol for p in pts):
            pts.append(w)
    return pts


def coordinate_blocks(G: FiniteUnitaryGroup) -> tuple[list[list[int]], list[int]]:
    """Split coordinates into blocks coupled by ``G`` and coordinates ``G`` fixes.

    Coordinate ``j`` is fixed when every element acts on it as the identity.
    The remaining coordinates are grouped into the connected components of
    the "some element mixes i and j" relation.
    """
    n = G.dim
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    moved = set()
    for g in G:
        d = np.abs(g - np.eye(n)) > EQ_TOL
        for i, j in zip(*np.nonzero(d)):
            moved.update((int(i), int(j)))
            parent[find(int(i))] = find(int(j))
    blocks: dict[int, list[int]] = {}
    for j in sorted(moved):
        blocks.setdefault(find(j), []).append(j)
    fixed = [j for j in range(n) if j not in moved]
    return sorted(blocks.values()), fixed


# constructors

def permutation_matrix(perm: Sequence[int]) -> np.ndarray:
    """Matrix sending ``z`` to ``(z[perm[0]], z[perm[1]], ...)``."""
    n = len(perm)
    m = np.zeros((n, n), dtype=complex)
    for i, j in enumerate(perm):
        m[i, j] = 1
    return m


def root_of_unity(p: int, k: int = 1) -> complex:
    return complex(np.exp(2j * np.pi * k / p))


def symmetric_group(n: int, dim: int | None = None) -> FiniteUnitaryGroup:
    """Coordinate permutations of the first ``n`` of ``dim`` variables."""
    dim = dim or n
    gens = []
    for i in range(n - 1):
        perm = list(range(dim))
        perm[i], perm[i + 1] = perm[i + 1], perm[i]
        gens.append(permutation_matrix(perm))
    if not gens:
        return trivial_group(dim)
    return closure(gens)


# JSON

def matrix_to_json(m: np.ndarray) -> list:
    return [[[float(x.real), float(x.imag)] for x in row] for row in m]


def matrix_from_json(data, dim: int) -> np.ndarray:
    """Accepts ``n`` rows of ``n`` ``[re, im]`` pairs, or a flat list of ``n*n`` pairs."""
    entries = np.asarray(data, dtype=float)
    if entries.shape == (dim, dim, 2):
        return entries[..., 0] + 1j * entries[..., 1]
    if entries.shape == (dim * dim, 2):
        return (entries[:, 0] + 1j * entries[:, 1]).reshape(dim, dim)
    raise ValueError(f"matrix entries have shape {entries.shape}, expected ({dim}, {dim}, 2)")


def group_from_json(data: Mapping, order_cap: int = DEFAULT_ORDER_CAP) -> FiniteUnitaryGroup:
    dim = int(data["dim"])
    gens = [check_unitary(matrix_from_json(g, dim)) for g in data["generators"]]
    if not gens:
        return trivial_group(dim)
    return closure(gens, order_cap=order_cap, dim=dim)
