import numpy as np
import pytest

from reflfactor.polyalg import PolyMap, variables
from reflfactor.propermap import Pseudoellipsoid
from reflfactor.unigroup import closure, permutation_matrix, root_of_unity, symmetric_group


def swap_group(dim=2):
    perm = list(range(dim))
    perm[0], perm[1] = 1, 0
    return closure([permutation_matrix(perm)])


def cyclic_group(p):
    """<diag(1, zeta_p)> acting on C^2."""
    return closure([np.diag([1, root_of_unity(p)])])


def signed_permutations():
    return closure([permutation_matrix([1, 0]), np.diag([-1.0, 1.0])])


def example_map():
    """The worked example F = (z1 z2, z1 + z2, z3^2, z4) on E^4_(2,2)."""
    z1, z2, z3, z4 = variables(4)
    return PolyMap([z1 * z2, z1 + z2, z3**2, z4])


@pytest.fixture
def swap2():
    return swap_group(2)


@pytest.fixture
def swap4():
    return swap_group(4)


@pytest.fixture
def s3():
    return symmetric_group(3)


@pytest.fixture
def b2():
    return signed_permutations()


@pytest.fixture
def F_example():
    return example_map()


@pytest.fixture
def E22():
    return Pseudoellipsoid(4, (2, 2))


def group_spec(G):
    return {"dim": G.dim, "generators": G.to_json()["generators"]}


def make_job(command, seed=None, **payload):
    job = {"command": command, "payload": payload}
    if seed is not None:
        job["seed"] = seed
    return job


def example_job(command, seed=None, **extra):
    """A CLI job for the worked example (swap group, E^4_(2,2))."""
    payload = {
        "F": example_map().to_json(),
        "group": group_spec(swap_group(4)),
        "pseudoellipsoid": {"n": 4, "p": [2, 2]},
    }
    payload.update(extra)
    return make_job(command, seed, **payload)
