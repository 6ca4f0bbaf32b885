"""Changes of section and the energy matrix.

A change of section is a p x d real matrix g; it relocates the atoms of
measure (i, j) by g_j - g_i without touching any probability.  Spectra of
the transforms, the modulating chain and the global drift are invariant.
The *appropriate* section is the unique one (up to constant rows) after
which every row's summed local drift equals the global drift; the energy
matrix is the stationary-weighted raw second moment of the appropriately
sectioned process, and doubles as the Hessian of the spectral-radius map
at 0.

Internally the linear algebra runs over exact rationals (every float is a
dyadic rational), so the appropriate section, the shifted supports and
the energy matrix are exact for any float-mass input.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import NumericError, PreconditionError
from .process import ProcessSpec, stationary_distribution

ATOM_MERGE_TOL = 1e-12


# -- exact linear algebra -----------------------------------------------------


def _solve_exact(A: list[list[Fraction]], bs: list[list[Fraction]]) -> list[list[Fraction]]:
    """Solve A x = b over the rationals for each right-hand side in bs."""
    n = len(A)
    m = len(bs)
    aug = [row[:] + [bs[k][i] for k in range(m)] for i, row in enumerate(A)]
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if piv is None:
            raise NumericError("exact linear solve hit a singular system")
        aug[col], aug[piv] = aug[piv], aug[col]
        pval = aug[col][col]
        aug[col] = [v / pval for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [v - f * w for v, w in zip(aug[r], aug[col])]
    return [[aug[i][n + k] for i in range(n)] for k in range(m)]


def _exact_row_matrix(spec: ProcessSpec) -> list[list[Fraction]]:
    return [
        [sum((Fraction(w) for _, w in spec.jumps[i][j]), Fraction(0)) for j in range(spec.p)]
        for i in range(spec.p)
    ]


def _exact_pi(spec: ProcessSpec) -> list[Fraction]:
    """Stationary distribution over exact rationals (pi P = pi, sum = 1)."""
    p = spec.p
    P = _exact_row_matrix(spec)
    # rows of (P - I)^T, last equation replaced by sum(pi) = 1
    A = [[P[j][i] - (Fraction(1) if i == j else Fraction(0)) for j in range(p)] for i in range(p)]
    A[-1] = [Fraction(1)] * p
    b = [Fraction(0)] * p
    b[-1] = Fraction(1)
    pi = _solve_exact(A, [b])[0]
    if any(v <= 0 for v in pi):
        raise PreconditionError("stationary distribution is not strictly positive")
    return pi


def _exact_row_drift_sums(spec: ProcessSpec) -> list[list[Fraction]]:
    """Row i of the result is sum_j (first moment of measure (i, j))."""
    out = []
    for i in range(spec.p):
        row = [Fraction(0)] * spec.d
        for j in range(spec.p):
            for dx, w in spec.jumps[i][j]:
                wf = Fraction(w)
                for k in range(spec.d):
                    row[k] += wf * dx[k]
        out.append(row)
    return out


# -- public types -------------------------------------------------------------


@dataclass(frozen=True)
class SectionMatrix:
    """A p x d section; ``exact`` carries the rational entries when the
    matrix came out of the exact solver."""

    g: np.ndarray
    exact: tuple[tuple[Fraction, ...], ...] | None = None

    @staticmethod
    def from_array(g) -> "SectionMatrix":
        return SectionMatrix(g=np.asarray(g, dtype=float))

    def exact_rows(self) -> tuple[tuple[Fraction, ...], ...]:
        if self.exact is not None:
            return self.exact
        return tuple(tuple(Fraction(float(v)) for v in row) for row in self.g)


@dataclass(frozen=True)
class SectionedProcess:
    """The g-changed process: same masses, atoms shifted by g_j - g_i.

    Shifted supports live in R^d; coordinates are Fractions (exact) when
    the section is exact, floats (merged at ATOM_MERGE_TOL) otherwise.
    """

    base: ProcessSpec
    section: SectionMatrix
    shifted_jumps: tuple  # p x p tuple of tuples ((coords, mass), ...)

    def fourier(self, theta) -> np.ndarray:
        """Transform of the sectioned process; phase-twisted base transform."""
        from .transforms import fourier as base_fourier

        theta = np.asarray(theta, dtype=float)
        F = base_fourier(self.base, theta)
        phase = np.exp(1j * (self.section.g @ theta))
        return F * np.outer(1.0 / phase, phase)

    def row_drift_sums(self) -> np.ndarray:
        """Row i: sum over j of the local drift of shifted measure (i, j)."""
        p, d = self.base.p, self.base.d
        out = np.zeros((p, d))
        for i in range(p):
            for j in range(p):
                for coords, w in self.shifted_jumps[i][j]:
                    out[i] += w * np.array([float(v) for v in coords])
        return out

    def global_drift(self) -> np.ndarray:
        pi = stationary_distribution(self.base)
        return pi @ self.row_drift_sums()


@dataclass(frozen=True)
class EnergyMatrix:
    """Stationary-weighted raw second moment of the appropriately
    sectioned process; symmetric positive-definite for valid inputs."""

    sigma: np.ndarray

    def __post_init__(self):
        s = self.sigma
        if not np.allclose(s, s.T, atol=0):
            raise NumericError("energy matrix is not symmetric")
        try:
            np.linalg.cholesky(s)
        except np.linalg.LinAlgError:
            raise NumericError(
                "energy matrix is not positive-definite; the sectioned support "
                "is degenerate (contained in a hyperplane)"
            ) from None


# -- operations ---------------------------------------------------------------


def apply_section(spec: ProcessSpec, g) -> SectionedProcess:
    """Shift the atoms of measure (i, j) by g_j - g_i, keeping all masses."""
    section = g if isinstance(g, SectionMatrix) else SectionMatrix.from_array(g)
    if section.g.shape != (spec.p, spec.d):
        raise PreconditionError(
            f"section shape {section.g.shape} does not match (p, d) = ({spec.p}, {spec.d})"
        )
    exact = section.exact
    shifted: list[list[tuple]] = []
    for i in range(spec.p):
        row = []
        for j in range(spec.p):
            cell: dict = {}
            for dx, w in spec.jumps[i][j]:
                if exact is not None:
                    coords = tuple(
                        Fraction(dx[k]) + exact[j][k] - exact[i][k] for k in range(spec.d)
                    )
                else:
                    raw = tuple(
                        dx[k] + section.g[j, k] - section.g[i, k] for k in range(spec.d)
                    )
                    coords = tuple(round(v / ATOM_MERGE_TOL) * ATOM_MERGE_TOL for v in raw)
                cell[coords] = cell.get(coords, 0.0) + w
            row.append(tuple(sorted(cell.items())))
        shifted.append(tuple(row))
    return SectionedProcess(base=spec, section=section, shifted_jumps=tuple(shifted))


def appropriate_section(spec: ProcessSpec) -> SectionMatrix:
    """The section equalizing every row's summed drift with the global one.

    Solves (I - P) g = M - 1 m exactly over the rationals, where P is the
    modulating transition matrix and row i of M is sum_j m_ij, then fixes
    the free constant by zeroing the last row of g.
    """
    p, d = spec.p, spec.d
    pi = _exact_pi(spec)
    Mrows = _exact_row_drift_sums(spec)
    m = [sum(pi[i] * Mrows[i][k] for i in range(p)) for k in range(d)]
    if p == 1:
        g = np.zeros((1, d))
        return SectionMatrix(g=g, exact=((Fraction(0),) * d,))
    P = _exact_row_matrix(spec)
    # unknowns g[0..p-2] with g[p-1] = 0; equations: first p-1 rows
    A = [
        [(Fraction(1) if i == j else Fraction(0)) - P[i][j] for j in range(p - 1)]
        for i in range(p - 1)
    ]
    rhs = [[Mrows[i][k] - m[k] for i in range(p - 1)] for k in range(d)]
    cols = _solve_exact(A, rhs)
    g_exact = tuple(
        tuple(cols[k][i] for k in range(d)) for i in range(p - 1)
    ) + ((Fraction(0),) * d,)
    # consistency of the dropped equation (exact by construction)
    for k in range(d):
        lhs = sum(
            ((Fraction(1) if p - 1 == j else Fraction(0)) - P[p - 1][j]) * g_exact[j][k]
            for j in range(p)
        )
        if lhs != Mrows[p - 1][k] - m[k]:
            raise NumericError("appropriate-section system is inconsistent")
    g = np.array([[float(v) for v in row] for row in g_exact])
    return SectionMatrix(g=g, exact=g_exact)


def energy_matrix(spec: ProcessSpec) -> EnergyMatrix:
    """Exact stationary-weighted second moment of the g-changed process."""
    pi = _exact_pi(spec)
    section = appropriate_section(spec)
    shifted = apply_section(spec, section)
    d = spec.d
    sigma = [[Fraction(0)] * d for _ in range(d)]
    for i in range(spec.p):
        for j in range(spec.p):
            for coords, w in shifted.shifted_jumps[i][j]:
                wf = pi[i] * Fraction(w)
                for k in range(d):
                    ck = coords[k]
                    for l in range(k, d):
                        sigma[k][l] += wf * ck * coords[l]
    out = np.zeros((d, d))
    for k in range(d):
        for l in range(k, d):
            out[k, l] = out[l, k] = float(sigma[k][l])
    return EnergyMatrix(sigma=out)
