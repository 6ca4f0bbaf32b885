import numpy as np
import pytest

from madd import ProcessSpec


@pytest.fixture(scope="session")
def w1():
    """Skip-free walk on Z: steps -1/0/+1 with masses 0.2/0.3/0.5."""
    return ProcessSpec.from_atoms(
        1, 1, [(0, 0, (-1,), 0.2), (0, 0, (0,), 0.3), (0, 0, (1,), 0.5)]
    )


@pytest.fixture(scope="session")
def w2():
    """Two-layer walk on Z: layer 1 jumps +1 or hops to layer 2 in place,
    layer 2 hops back, steps -1, or stays."""
    return ProcessSpec.from_atoms(
        1,
        2,
        [
            (0, 0, (1,), 0.7),
            (0, 1, (0,), 0.3),
            (1, 0, (0,), 0.3),
            (1, 1, (-1,), 0.4),
            (1, 1, (0,), 0.3),
        ],
    )


@pytest.fixture(scope="session")
def w3():
    """Lazy nearest-neighbour walk on Z^2 with drift (0.2, 0)."""
    return ProcessSpec.from_atoms(
        2,
        1,
        [
            (0, 0, (1, 0), 0.4),
            (0, 0, (-1, 0), 0.2),
            (0, 0, (0, 1), 0.15),
            (0, 0, (0, -1), 0.15),
            (0, 0, (0, 0), 0.1),
        ],
    )


@pytest.fixture(scope="session")
def three_layer_reducible():
    """Three layers on Z^2 whose closed-walk displacements only span an
    index-2 sublattice: the full chain is not irreducible."""
    return ProcessSpec.from_atoms(
        2,
        3,
        [
            (0, 0, (-1, 0), 0.75),
            (0, 1, (1, 1), 0.25),
            (1, 2, (0, 1), 1.0),
            (2, 0, (0, 0), 1.0),
        ],
    )


@pytest.fixture(scope="session")
def periodic_walk():
    """Simple +-1 walk: period 2, detectable by scan and gcd test."""
    return ProcessSpec.from_atoms(1, 1, [(0, 0, (-1,), 0.5), (0, 0, (1,), 0.5)])


@pytest.fixture(scope="session")
def lazy_right_walk():
    """Stays or moves right: aperiodic but not irreducible (one-sided)."""
    return ProcessSpec.from_atoms(1, 1, [(0, 0, (0,), 0.5), (0, 0, (1,), 0.5)])


@pytest.fixture(scope="session")
def centered_walk():
    """Symmetric lazy walk: zero drift."""
    return ProcessSpec.from_atoms(
        1, 1, [(0, 0, (-1,), 0.25), (0, 0, (0,), 0.5), (0, 0, (1,), 0.25)]
    )


def random_spec(seed: int, d: int = 1, p: int = 2) -> ProcessSpec:
    """Row-stochastic spec with irreducible aperiodic structure, for
    property tests."""
    rng = np.random.default_rng(seed)
    entries = []
    for i in range(p):
        atoms = []
        # lazy atom plus +-basis steps keep the chain irreducible/aperiodic
        atoms.append((i, (0,) * d))
        for k in range(d):
            for sgn in (1, -1):
                dx = [0] * d
                dx[k] = sgn
                atoms.append((i, tuple(dx)))
        if p > 1:
            atoms.append(((i + 1) % p, (0,) * d))
            dx = [0] * d
            dx[0] = 1
            atoms.append(((i + 1) % p, tuple(dx)))
        w = rng.uniform(0.05, 1.0, size=len(atoms))
        w /= w.sum()
        for (j, dx), wk in zip(atoms, w):
            entries.append((i, j, dx, float(wk)))
    return ProcessSpec.from_atoms(d, p, entries)
