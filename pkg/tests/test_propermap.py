import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import example_map, swap_group
from reflfactor.chevalley import chevalley_map
from reflfactor.polyalg import PolyMap, Polynomial, variables
from reflfactor.propermap import (
    NoPreimageError,
    Pseudoellipsoid,
    SolverConfig,
    boundary_identity_check,
    complete_fset,
    domain_sampler,
    generic_points,
    match_sets,
    multiplicity_estimate,
    orbit_check,
    phi_map,
    preimages,
    singular_locus,
)
from reflfactor.unigroup import closure


def example_fiber_oracle(w):
    """Fiber of (z1 z2, z1 + z2, z3^2, z4) over w, from roots of t^2 - w2 t + w1."""
    r1, r2 = np.roots([1, -w[1], w[0]])
    s = np.sqrt(complex(w[2]))
    pts = []
    for (a, b), c in itertools.product([(r1, r2), (r2, r1)], [s, -s]):
        pts.append(np.array([a, b, c, w[3]]))
    return pts


# phi_map

def test_phi_map_22():
    z1, z2, z3, z4 = variables(4)
    assert phi_map(4, (2, 2)) == PolyMap([z1, z2, z3**2, z4**2])


def test_phi_map_one_dimensional():
    (z,) = variables(1)
    assert phi_map(1, (2,)) == PolyMap([z**2])


def test_phi_map_cubic():
    z1, z2, z3 = variables(3)
    assert phi_map(3, (3,)) == PolyMap([z1, z2, z3**3])


@pytest.mark.parametrize("n,p", [(2, (1,)), (1, (2, 2)), (3, ())])
def test_phi_map_invalid(n, p):
    with pytest.raises(ValueError):
        phi_map(n, p)


# boundary identity

@pytest.mark.parametrize("n,p", [(1, (2,)), (4, (2, 2)), (3, (3, 2))])
def test_boundary_identity(n, p):
    assert boundary_identity_check(Pseudoellipsoid(n, p), samples=10_000) <= 1e-12


def test_boundary_points_map_to_sphere():
    E = Pseudoellipsoid(4, (2, 2))
    pts = E.sample(np.random.default_rng(2), 100, boundary=True)
    assert np.max(np.abs(E.rho(pts))) < 1e-12
    norms = np.linalg.norm(phi_map(4, (2, 2)).evaluate_many(pts), axis=1)
    assert np.max(np.abs(norms - 1)) < 1e-12


def test_origin():
    E = Pseudoellipsoid(4, (2, 2))
    assert E.rho(np.zeros(4))[0] == -1
    assert np.linalg.norm(phi_map(4, (2, 2)).evaluate(np.zeros(4))) == 0


def test_interior_samples_inside():
    E = Pseudoellipsoid(3, (3, 2))
    assert np.all(E.rho(E.sample(np.random.default_rng(0), 500)) < 0)


# singular locus

def test_singular_locus_phi():
    z = variables(4)
    assert singular_locus(phi_map(4, (2, 2))) == 4 * z[2] * z[3]


def test_singular_locus_example():
    z1, z2, z3, z4 = variables(4)
    assert singular_locus(example_map()) == 2 * z3 * (z2 - z1)


def test_singular_locus_identity():
    assert singular_locus(PolyMap.identity(3)) == Polynomial.constant(3, 1)


def test_singular_locus_matches_finite_differences():
    F = example_map()
    det = singular_locus(F)
    rng = np.random.default_rng(4)
    h = 1e-6
    for x in rng.normal(size=(5, 4)) + 1j * rng.normal(size=(5, 4)):
        J = np.empty((4, 4), dtype=complex)
        for j in range(4):
            e = np.zeros(4)
            e[j] = h
            J[:, j] = (F.evaluate(x + e) - F.evaluate(x - e)) / (2 * h)
        assert abs(det(x) - np.linalg.det(J)) <= 1e-6 * (1 + abs(det(x)))


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 4).flatmap(lambda n: st.tuples(st.just(n), st.lists(st.integers(2, 4), min_size=1, max_size=n))))
def test_phi_jacobian_formula(args):
    n, p = args
    k = len(p)
    z = variables(n)
    expected = Polynomial.constant(n, float(np.prod(p)))
    for zi, pi in zip(z[n - k:], p):
        expected = expected * zi ** (pi - 1)
    assert singular_locus(phi_map(n, p)) == expected


# preimages

def test_preimages_phi():
    roots = preimages(phi_map(4, (2, 2)), [0.1, 0.2, 0.09, 0.04])
    expected = [np.array([0.1, 0.2, a, b]) for a in (0.3, -0.3) for b in (0.2, -0.2)]
    assert match_sets(roots, expected)


def test_preimages_square():
    (z,) = variables(1)
    roots = preimages(PolyMap([z**2]), [1.0])
    assert match_sets(roots, [np.array([1.0]), np.array([-1.0])])


def test_preimages_example_match_oracle():
    F = example_map()
    rng = np.random.default_rng(8)
    E = Pseudoellipsoid(4, (2, 2))
    for x in generic_points(F, rng, 5, domain_sampler(E), E):
        w = F.evaluate(x)
        roots = preimages(F, w)
        assert len(roots) == 4
        assert match_sets(roots, example_fiber_oracle(w))


def test_preimages_constant_map_raises():
    one = Polynomial.constant(1, 1.0)
    with pytest.raises(NoPreimageError):
        preimages(PolyMap([one]), [0.5])


def test_preimages_need_square_map():
    z1, z2 = variables(2)
    with pytest.raises(ValueError):
        preimages(PolyMap([z1 * z2]), [1.0])


def test_default_start_count():
    F = example_map()
    assert SolverConfig().n_starts(F) == 64 * 4


# multiplicity

def test_multiplicity_phi():
    m = multiplicity_estimate(phi_map(4, (2, 2)), trials=20)
    assert m.multiplicity == 4 and m.consistent


def test_multiplicity_example():
    m = multiplicity_estimate(example_map(), trials=20)
    assert m.multiplicity == 4 and m.histogram == {4: 20}


def test_multiplicity_target():
    target = chevalley_map(swap_group(4)).compose(phi_map(4, (2, 2)))
    m = multiplicity_estimate(target, trials=20)
    assert m.multiplicity == 8 and m.consistent


def test_multiplicity_requires_trials():
    with pytest.raises(ValueError):
        multiplicity_estimate(phi_map(1, (2,)), trials=0)


@settings(max_examples=6, deadline=None)
@given(st.lists(st.integers(2, 3), min_size=1, max_size=2), st.integers(0, 2))
def test_multiplicity_of_phi_is_exponent_product(p, extra):
    n = len(p) + extra
    m = multiplicity_estimate(phi_map(n, p), trials=3)
    assert m.multiplicity == int(np.prod(p))


# complete F-sets

def test_complete_fset_members_hit_target():
    F = example_map()
    E = Pseudoellipsoid(4, (2, 2))
    rng = np.random.default_rng(5)
    for x in generic_points(F, rng, 5, domain_sampler(E), E):
        w = F.evaluate(x)
        fs = complete_fset(F, E, w)
        assert fs.source_points
        for s in fs.source_points:
            assert np.max(np.abs(F.evaluate(s) - w)) <= 1e-8
            assert E.rho(s)[0] <= 1e-9
        phi = phi_map(4, (2, 2))
        mapped = [phi.evaluate(s) for s in fs.source_points]
        for y in mapped:
            assert min(np.max(np.abs(y - q)) for q in fs.image_points) < 1e-8
        for q in fs.image_points:
            assert min(np.max(np.abs(y - q)) for y in mapped) < 1e-8


def test_example_fiber_image_is_swap_orbit():
    F = example_map()
    E = Pseudoellipsoid(4, (2, 2))
    x = np.array([0.3 + 0.1j, -0.2j, 0.4, 0.25 - 0.1j])
    fs = complete_fset(F, E, F.evaluate(x))
    y = phi_map(4, (2, 2)).evaluate(x)
    swapped = y[[1, 0, 2, 3]]
    assert match_sets(fs.image_points, [y, swapped])


def test_match_sets():
    a = [np.array([0.0, 1.0]), np.array([1.0, 0.0])]
    assert match_sets(a, a[::-1])
    assert not match_sets(a, a[:1])
    assert not match_sets(a, [a[0], a[0]])


# orbit check

def test_orbit_check_example():
    rep = orbit_check(example_map(), swap_group(4), Pseudoellipsoid(4, (2, 2)), trials=100)
    assert rep.failures == 0
    assert rep.inconclusive <= 5
    assert rep.passes + rep.failures + rep.inconclusive == 100
    assert rep.orbit_sizes == {2: rep.passes}
    assert rep.max_fiber_residual <= 1e-8


def test_orbit_check_phi_trivial_group():
    E = Pseudoellipsoid(4, (2, 2))
    rep = orbit_check(phi_map(4, (2, 2)), closure([np.eye(4)]), E, trials=20)
    assert rep.passed and rep.orbit_sizes == {1: 20}


def test_orbit_check_target_swap_group():
    E = Pseudoellipsoid(4, (2, 2))
    G = swap_group(4)
    target = chevalley_map(G).compose(phi_map(4, (2, 2)))
    rep = orbit_check(target, G, E, trials=20)
    assert rep.passed and rep.orbit_sizes == {2: 20}


def test_orbit_check_wrong_group_fails():
    E = Pseudoellipsoid(4, (2, 2))
    rep = orbit_check(example_map(), closure([np.eye(4)]), E, trials=10)
    assert rep.failures == 10


def test_orbit_check_dimension_mismatch():
    with pytest.raises(ValueError):
        orbit_check(example_map(), swap_group(2), Pseudoellipsoid(4, (2, 2)), trials=1)


# domain

@pytest.mark.parametrize("n,p", [(0, (2,)), (2, (2, 2, 2)), (2, (1,))])
def test_pseudoellipsoid_invalid(n, p):
    with pytest.raises(ValueError):
        Pseudoellipsoid(n, p)


def test_pseudoellipsoid_json_round_trip():
    E = Pseudoellipsoid(4, (2, 3))
    assert Pseudoellipsoid.from_json(E.to_json()) == E
