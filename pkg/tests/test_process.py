import numpy as np
import pytest

from madd import (
    PreconditionError,
    ProcessSpec,
    SpecError,
    moments,
    stationary_distribution,
    validate,
)
from conftest import random_spec


class TestConstruction:
    def test_row_mass_must_be_one(self):
        with pytest.raises(SpecError, match="row 1"):
            ProcessSpec.from_atoms(1, 1, [(0, 0, (1,), 0.99)])

    def test_displacement_length_checked(self):
        with pytest.raises(SpecError, match="length"):
            ProcessSpec.from_atoms(2, 1, [(0, 0, (1,), 1.0)])

    def test_negative_mass_rejected(self):
        with pytest.raises(SpecError, match="negative"):
            ProcessSpec.from_atoms(1, 1, [(0, 0, (1,), 1.2), (0, 0, (0,), -0.2)])

    def test_zero_mass_atoms_stripped(self):
        spec = ProcessSpec.from_atoms(
            1, 1, [(0, 0, (1,), 1.0), (0, 0, (5,), 0.0)]
        )
        assert spec.measure(0, 0) == {(1,): 1.0}

    def test_duplicate_atoms_merged(self):
        spec = ProcessSpec.from_atoms(1, 1, [(0, 0, (1,), 0.4), (0, 0, (1,), 0.6)])
        assert spec.measure(0, 0) == {(1,): 1.0}

    def test_json_round_trip(self, w2):
        assert ProcessSpec.from_dict(w2.to_dict()) == w2


class TestValidate:
    def test_w1_all_flags(self, w1):
        report = validate(w1)
        assert report.all_ok

    def test_w2_all_flags(self, w2):
        report = validate(w2)
        assert report.all_ok
        assert report.diagnostics["zero_walk_length_gcd"] == 1

    def test_w3_all_flags(self, w3):
        assert validate(w3).all_ok

    def test_three_layer_chain_not_irreducible(self, three_layer_reducible):
        report = validate(three_layer_reducible)
        assert report.markov_irreducible
        assert not report.chain_irreducible
        assert not report.diagnostics["displacement_lattice_full"]

    def test_three_layer_oracle_bounded_bfs(self, three_layer_reducible):
        # independent oracle: breadth-first search of the chain on
        # Z^2 x {1,2,3} restricted to max-norm radius 10 never reaches
        # the lattice point (0, -1) on the base layer
        spec = three_layer_reducible
        seen = {((0, 0), 0)}
        frontier = [((0, 0), 0)]
        while frontier:
            (x, y), layer = frontier.pop()
            for j in range(spec.p):
                for dx, _ in spec.jumps[layer][j]:
                    nxt = ((x + dx[0], y + dx[1]), j)
                    if max(abs(nxt[0][0]), abs(nxt[0][1])) <= 10 and nxt not in seen:
                        seen.add(nxt)
                        frontier.append(nxt)
        assert ((0, -1), 0) not in seen

    def test_periodic_walk_flagged(self, periodic_walk):
        report = validate(periodic_walk)
        assert report.chain_irreducible
        assert not report.aperiodic
        assert report.diagnostics["zero_walk_length_gcd"] == 2

    def test_one_sided_walk_not_irreducible(self, lazy_right_walk):
        report = validate(lazy_right_walk)
        assert report.aperiodic
        assert not report.chain_irreducible
        assert not report.diagnostics["displacement_cone_full"]

    def test_centered_walk_flagged(self, centered_walk):
        report = validate(centered_walk)
        assert report.chain_irreducible and report.aperiodic
        assert not report.non_centered


class TestStationary:
    def test_w1_trivial(self, w1):
        assert stationary_distribution(w1) == pytest.approx([1.0])

    def test_w2_direct_solve_oracle(self, w2):
        # independent oracle: least squares on the stacked system
        P = w2.row_matrix()
        A = np.vstack([(P - np.eye(2)).T, np.ones(2)])
        b = np.array([0.0, 0.0, 1.0])
        expected = np.linalg.lstsq(A, b, rcond=None)[0]
        pi = stationary_distribution(w2)
        assert pi == pytest.approx(expected, abs=1e-13)
        assert pi == pytest.approx([0.5, 0.5], abs=1e-13)

    def test_three_layer_markov_part(self, three_layer_reducible):
        pi = stationary_distribution(three_layer_reducible)
        assert pi == pytest.approx([2 / 3, 1 / 6, 1 / 6], abs=1e-13)

    def test_reducible_markov_part_raises(self):
        spec = ProcessSpec.from_atoms(
            1, 2, [(0, 0, (1,), 1.0), (1, 1, (-1,), 1.0)]
        )
        with pytest.raises(PreconditionError):
            stationary_distribution(spec)

    @pytest.mark.parametrize("seed", range(5))
    def test_invariance_and_positivity_random(self, seed):
        spec = random_spec(seed, d=1 + seed % 2, p=1 + seed % 3)
        pi = stationary_distribution(spec)
        assert np.abs(pi @ spec.row_matrix() - pi).max() < 1e-12
        assert pi.min() > 0
        assert pi.sum() == pytest.approx(1.0, abs=1e-12)


class TestMoments:
    def test_w1(self, w1):
        mom = moments(w1)
        assert mom.global_drift == pytest.approx([0.3], abs=1e-15)
        assert mom.second_moments[0, 0] == pytest.approx(np.array([[0.7]]), abs=1e-15)

    def test_w2(self, w2):
        mom = moments(w2)
        assert mom.global_drift == pytest.approx([0.15], abs=1e-15)
        assert mom.local_drifts[0, 0] == pytest.approx([0.7])
        assert mom.local_drifts[1, 1] == pytest.approx([-0.4])

    def test_w3(self, w3):
        mom = moments(w3)
        assert mom.global_drift == pytest.approx([0.2, 0.0], abs=1e-15)
        assert mom.second_moments[0, 0] == pytest.approx(
            np.array([[0.6, 0.0], [0.0, 0.3]]), abs=1e-15
        )

    def test_global_drift_is_weighted_sum(self, w2):
        mom = moments(w2)
        manual = np.einsum("i,ija->a", mom.pi, mom.local_drifts)
        assert mom.global_drift == pytest.approx(manual, abs=0)


def test_drift_matches_rho_gradient(w1, w2, w3):
    from madd import rho_eval

    for spec in (w1, w2, w3):
        ev = rho_eval(spec, np.zeros(spec.d))
        drift = moments(spec).global_drift
        assert np.abs(ev.grad - drift).max() < 1e-6
