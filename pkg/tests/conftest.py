import pathlib
import sys

import numpy as np
import pytest

_SRC = pathlib.Path(__file__).resolve().parents[1] / "src"
if str(_SRC) not in sys.path:
    try:
        import fblcrd  # noqa: F401
    except ImportError:
        sys.path.insert(0, str(_SRC))

import fblcrd as f  # noqa: E402


@pytest.fixture(scope="session")
def binary_instance():
    return f.binary_hamming_instance(a=0.5, c=0.2)


@pytest.fixture(scope="session")
def binary_solution(binary_instance):
    return f.solve_crd(binary_instance, 0.1, tol=1e-9)


@pytest.fixture(scope="session")
def binary_field(binary_solution):
    return f.tilted_density(binary_solution)


def random_instance(rng, max_size=4, interior=(0.25, 0.7), min_range=0.0):
    """A random joint source, distortion matrix, and interior budget.

    min_range rejects draws whose zero-rate distortion sits within that
    margin of the floor; perturbation-based checks (finite differences)
    need headroom for the feasible set not to collapse under them.
    """
    while True:
        nx, ns, ny = rng.integers(2, max_size + 1, size=3)
        pmf = rng.dirichlet(np.ones(int(nx) * int(ns))).reshape(int(nx), int(ns))
        d = rng.uniform(0.0, 1.0, (int(nx), int(ny)))
        inst = f.validate(f.JointSource(pmf), f.DistortionSpec(d))
        if inst.zero_rate_distortion - inst.d_floor >= min_range:
            break
    u = float(rng.uniform(*interior))
    budget = inst.d_floor + u * (inst.zero_rate_distortion - inst.d_floor)
    return inst, budget
