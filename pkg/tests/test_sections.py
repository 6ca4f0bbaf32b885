from fractions import Fraction

import numpy as np
import pytest

from madd import (
    apply_section,
    appropriate_section,
    energy_matrix,
    fourier,
    moments,
    rho_eval,
    stationary_distribution,
)
from conftest import random_spec


class TestApplySection:
    def test_zero_section_is_identity(self, w2):
        shifted = apply_section(w2, np.zeros((2, 1)))
        for i in range(2):
            for j in range(2):
                atoms = {tuple(float(v) for v in c): w for c, w in shifted.shifted_jumps[i][j]}
                base = {tuple(map(float, dx)): w for dx, w in w2.jumps[i][j]}
                assert atoms == pytest.approx(base)

    def test_w2_atom_relocation(self, w2):
        g = appropriate_section(w2)  # rows (11/6, 0)
        shifted = apply_section(w2, g)
        # cross-layer atoms move by the row difference, diagonal is fixed
        ((coords01, w01),) = shifted.shifted_jumps[0][1]
        ((coords10, w10),) = shifted.shifted_jumps[1][0]
        assert (float(coords01[0]), w01) == pytest.approx((-11 / 6, 0.3), abs=1e-15)
        assert (float(coords10[0]), w10) == pytest.approx((11 / 6, 0.3), abs=1e-15)
        assert shifted.shifted_jumps[0][0] == (((Fraction(1),), 0.7),)

    def test_constant_rows_change_nothing(self, w2):
        ones = apply_section(w2, np.ones((2, 1)))
        zero = apply_section(w2, np.zeros((2, 1)))
        assert ones.shifted_jumps == zero.shifted_jumps

    def test_round_trip_recovers_supports(self, w2):
        # undoing the shift g_j - g_i on each shifted atom lands exactly
        # on the original integer support (exact rational path)
        g = appropriate_section(w2)
        fwd = apply_section(w2, g)
        for i in range(2):
            for j in range(2):
                undone = sorted(
                    (
                        tuple(c - (g.exact[j][k] - g.exact[i][k]) for k, c in enumerate(coords)),
                        w,
                    )
                    for coords, w in fwd.shifted_jumps[i][j]
                )
                base = sorted((tuple(map(Fraction, dx)), w) for dx, w in w2.jumps[i][j])
                assert undone == base

    def test_spectrum_invariance_random_sections(self, w2):
        rng = np.random.default_rng(9)
        for _ in range(5):
            g = rng.normal(size=(2, 1))
            theta = rng.uniform(-np.pi, np.pi, size=1)
            shifted = apply_section(w2, g)
            ev_base = np.sort_complex(np.linalg.eigvals(fourier(w2, theta)))
            ev_shift = np.sort_complex(np.linalg.eigvals(shifted.fourier(theta)))
            assert ev_shift == pytest.approx(ev_base, abs=1e-9)

    def test_drift_invariance(self, w2):
        g = np.array([[2.5], [-1.0]])
        shifted = apply_section(w2, g)
        assert shifted.global_drift() == pytest.approx(
            moments(w2).global_drift, abs=1e-12
        )


class TestAppropriateSection:
    def test_w1_trivial(self, w1):
        g = appropriate_section(w1)
        assert g.g == pytest.approx(np.zeros((1, 1)))

    def test_w3_trivial(self, w3):
        assert appropriate_section(w3).g == pytest.approx(np.zeros((1, 2)))

    def test_w2_exact_value(self, w2):
        g = appropriate_section(w2)
        # hand solve: 0.3 (g1 - g2) = 0.7 - 0.15, last row pinned to zero;
        # exact arithmetic over the stored double masses, so the result
        # sits within one rounding of the ideal 11/6
        assert g.exact[1] == (Fraction(0),)
        assert float(g.exact[0][0]) == pytest.approx(11 / 6, abs=1e-15)

    def test_row_drift_sums_equalized(self, w2):
        g = appropriate_section(w2)
        shifted = apply_section(w2, g)
        m = moments(w2).global_drift
        rows = shifted.row_drift_sums()
        assert np.abs(rows - m).max() < 1e-10

    @pytest.mark.parametrize("seed", range(4))
    def test_appropriateness_random(self, seed):
        spec = random_spec(seed, d=2, p=3)
        g = appropriate_section(spec)
        shifted = apply_section(spec, g)
        m = moments(spec).global_drift
        assert np.abs(shifted.row_drift_sums() - m).max() < 1e-10


class TestEnergyMatrix:
    def test_w1(self, w1):
        assert energy_matrix(w1).sigma == pytest.approx(np.array([[0.7]]), abs=1e-15)

    def test_w2_against_hand_oracle(self, w2):
        # independent oracle: solve the one-unknown system by hand and
        # weight the shifted second moments by pi = (1/2, 1/2)
        delta = Fraction(11, 6)  # g1 - g2 from 0.3 (g1 - g2) = 0.55
        sigma_oracle = (
            Fraction(1, 2) * (Fraction(7, 10) + Fraction(3, 10) * delta**2)
            + Fraction(1, 2) * (Fraction(3, 10) * delta**2 + Fraction(4, 10))
        )
        sigma = energy_matrix(w2).sigma
        assert sigma_oracle == Fraction(187, 120)
        assert sigma[0, 0] == pytest.approx(float(sigma_oracle), abs=1e-14)

    def test_centered_walk_still_defined(self, centered_walk):
        assert energy_matrix(centered_walk).sigma == pytest.approx(np.array([[0.5]]), abs=1e-15)

    def test_w3(self, w3):
        assert energy_matrix(w3).sigma == pytest.approx(np.array([[0.6, 0.0], [0.0, 0.3]]), abs=1e-14)

    def test_independent_of_constant_row_shift(self, w2):
        # the appropriately sectioned process is unique, so shifting the
        # section by a constant row yields the identical process
        g = appropriate_section(w2)
        g_shifted = np.asarray(g.g) + 7.25
        a = apply_section(w2, g.g)
        b = apply_section(w2, g_shifted)
        for i in range(2):
            for j in range(2):
                ca = [(tuple(map(float, c)), w) for c, w in a.shifted_jumps[i][j]]
                cb = [(tuple(map(float, c)), w) for c, w in b.shifted_jumps[i][j]]
                assert ca == cb

    def test_matches_rho_hessian(self, w1, w2, w3):
        for spec in (w1, w2, w3):
            sigma = energy_matrix(spec).sigma
            hess = rho_eval(spec, np.zeros(spec.d)).hess
            assert np.abs(sigma - hess).max() < 1e-6

    @pytest.mark.parametrize("seed", range(3))
    def test_positive_definite_random(self, seed):
        spec = random_spec(seed + 20, d=2, p=2)
        sigma = energy_matrix(spec).sigma
        np.linalg.cholesky(sigma)
        assert sigma == pytest.approx(sigma.T, abs=0)
