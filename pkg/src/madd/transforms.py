"""Fourier and Laplace transforms of the jump matrix and their spectra.

The transform at a point is a p x p complex (or, on the real domain,
nonnegative) matrix.  Near theta = 0 the Fourier transform has a simple
leading eigenvalue k(theta); splitting off its spectral projection gives
the decomposition mu-hat = k * proj + rem with proj idempotent,
proj * rem = rem * proj = 0 and the remainder spectrally dominated.
That split, the Perron data of nonnegative transforms, and derivative
checks of k at 0 are what this module provides.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _fd, _walks
from .errors import (
    DecompositionUnavailableError,
    NumericError,
    PreconditionError,
    ResourceError,
)
from .process import Measure, ProcessSpec

GAP_TOL = 1e-8
CONV_CAP_1D = 10_000
CONV_CAP_ND = 2_000


def fourier(spec: ProcessSpec, theta) -> np.ndarray:
    """Fourier transform at theta: entry (i,j) = sum_x e^{i x.theta} mu_ij(x)."""
    theta = np.asarray(theta, dtype=float)
    F = np.zeros((spec.p, spec.p), dtype=complex)
    for i in range(spec.p):
        for j in range(spec.p):
            xs, ws = spec.atoms_arrays(i, j)
            if len(ws):
                F[i, j] = ws @ np.exp(1j * (xs @ theta))
    return F


def fourier_many(spec: ProcessSpec, thetas: np.ndarray) -> np.ndarray:
    """Fourier transform on a batch of points; returns (K, p, p)."""
    thetas = np.asarray(thetas, dtype=float)
    K = thetas.shape[0]
    F = np.zeros((K, spec.p, spec.p), dtype=complex)
    for i in range(spec.p):
        for j in range(spec.p):
            xs, ws = spec.atoms_arrays(i, j)
            if len(ws):
                F[:, i, j] = np.exp(1j * (thetas @ xs.T)) @ ws
    return F


def laplace(spec: ProcessSpec, c) -> np.ndarray:
    """Real Laplace transform at c: entry (i,j) = sum_x e^{c.x} mu_ij(x)."""
    c = np.asarray(c, dtype=float)
    L = np.zeros((spec.p, spec.p))
    for i in range(spec.p):
        for j in range(spec.p):
            xs, ws = spec.atoms_arrays(i, j)
            if len(ws):
                L[i, j] = ws @ np.exp(xs @ c)
    return L


def _convolve_measures(a: Measure, b: Measure, d: int) -> dict:
    out: dict = {}
    for xa, wa in a:
        for xb, wb in b:
            key = tuple(u + v for u, v in zip(xa, xb))
            out[key] = out.get(key, 0.0) + wa * wb
    return out


def convolution_power(spec: ProcessSpec, n: int, cap: int | None = None) -> ProcessSpec:
    """n-step jump matrix: (mu*n)_ij(x) = P_(0,i)(Z_n = (x,j)).

    Returned as a ProcessSpec (rows still sum to 1).  n = 0 gives the
    identity: a point mass at the origin on the diagonal.
    """
    if n < 0:
        raise PreconditionError("convolution power needs n >= 0")
    if cap is None:
        cap = CONV_CAP_1D if spec.d == 1 else CONV_CAP_ND
    if n > cap:
        raise ResourceError(f"convolution power n={n} exceeds cap {cap}")
    p, d = spec.p, spec.d
    origin = (0,) * d
    cur: list[list[dict]] = [
        [({origin: 1.0} if i == j else {}) for j in range(p)] for i in range(p)
    ]
    for _ in range(n):
        nxt: list[list[dict]] = [[{} for _ in range(p)] for _ in range(p)]
        for i in range(p):
            for k in range(p):
                if not cur[i][k]:
                    continue
                for j in range(p):
                    meas = spec.jumps[k][j]
                    if not meas:
                        continue
                    cell = nxt[i][j]
                    for xa, wa in cur[i][k].items():
                        for xb, wb in meas:
                            key = tuple(u + v for u, v in zip(xa, xb))
                            cell[key] = cell.get(key, 0.0) + wa * wb
        cur = nxt
    entries = [
        (i, j, dx, w)
        for i in range(p)
        for j in range(p)
        for dx, w in cur[i][j].items()
    ]
    return ProcessSpec.from_atoms(d, p, entries)


@dataclass(frozen=True)
class PerronTriple:
    """Leading eigenvalue of a nonnegative irreducible matrix with its
    positive right/left eigenvectors, normalized so max(right) = 1 and
    left @ right = 1."""

    rho: float
    right: np.ndarray
    left: np.ndarray


def perron_triple(M: np.ndarray, tol: float = 1e-15, max_iter: int = 50_000) -> PerronTriple:
    """Perron data by power iteration on M and M.T, Rayleigh-refined.

    Falls back to a dense eigensolve if the iteration converges too
    slowly (tiny spectral gap).
    """
    M = np.asarray(M, dtype=float)
    p = M.shape[0]
    if M.shape != (p, p):
        raise PreconditionError("matrix must be square")
    if (M < 0).any():
        raise PreconditionError("matrix must be nonnegative")
    adj = [[j for j in range(p) if M[i, j] > 0] for i in range(p)]
    if not _walks.strongly_connected(adj):
        raise PreconditionError("matrix is reducible; Perron data not unique")

    def iterate(A):
        x = np.full(p, 1.0 / p)
        for _ in range(max_iter):
            y = A @ x
            s = y.max()
            if s <= 0:
                raise NumericError("power iteration collapsed")
            y /= s
            if np.abs(y - x).max() <= tol:
                return y
            x = y
        return None

    right = iterate(M)
    left = iterate(M.T)
    if right is None or left is None:
        # near-degenerate gap: let the dense solver finish the job
        ev, V = np.linalg.eig(M)
        k = int(np.argmax(np.abs(ev)))
        right = np.abs(V[:, k].real) + np.abs(V[:, k].imag)
        ev2, W = np.linalg.eig(M.T)
        k2 = int(np.argmin(np.abs(ev2 - ev[k])))
        left = np.abs(W[:, k2].real) + np.abs(W[:, k2].imag)
        if right.min() <= 0 or left.min() <= 0:
            raise NumericError("Perron eigenvector not strictly positive")
    rho = float(left @ M @ right) / float(left @ right)
    right = right / right.max()
    left = left / float(left @ right)
    return PerronTriple(rho=rho, right=right, left=left)


@dataclass(frozen=True)
class SpectralDecomposition:
    """Split of a transform value into k * proj + rem along the leading
    eigenvalue (proj is its spectral projection)."""

    k: complex
    proj: np.ndarray
    rem: np.ndarray


def leading_eigenvalue(M: np.ndarray) -> complex:
    ev = np.linalg.eigvals(M)
    return complex(ev[np.argmax(np.abs(ev))])


def leading_decomposition(spec: ProcessSpec, theta) -> SpectralDecomposition:
    """Decomposition of fourier(spec, theta) along its leading eigenvalue.

    Requires a modulus gap > GAP_TOL between the leading eigenvalue and
    the rest of the spectrum; the projection is built from the matching
    right and left eigenvectors.
    """
    M = fourier(spec, theta)
    if spec.p == 1:
        return SpectralDecomposition(
            k=complex(M[0, 0]), proj=np.ones((1, 1), dtype=complex),
            rem=np.zeros((1, 1), dtype=complex),
        )
    ev, V = np.linalg.eig(M)
    order = np.argsort(-np.abs(ev))
    k, second = ev[order[0]], ev[order[1]]
    if np.abs(k) - np.abs(second) <= GAP_TOL:
        raise DecompositionUnavailableError(
            f"leading eigenvalue gap {np.abs(k) - np.abs(second):.3e} below {GAP_TOL:.0e}"
        )
    v = V[:, order[0]]
    evt, W = np.linalg.eig(M.T)
    kt = int(np.argmin(np.abs(evt - k)))
    w = W[:, kt]
    proj = np.outer(v, w) / (w @ v)
    rem = M - k * proj
    return SpectralDecomposition(k=complex(k), proj=proj, rem=rem)


@dataclass(frozen=True)
class ScanReport:
    """Spectral radii of the Fourier transform on a uniform grid of
    [-pi, pi)^d with a small ball around 0 removed."""

    grid_points_per_axis: int
    excluded_radius: float
    thetas: np.ndarray  # (K, d)
    radii: np.ndarray  # (K,)

    @property
    def max_radius(self) -> float:
        return float(self.radii.max())

    @property
    def argmax_theta(self) -> np.ndarray:
        return self.thetas[int(np.argmax(self.radii))]


def spectral_scan(spec: ProcessSpec, grid_points_per_axis: int) -> ScanReport:
    """Max spectral radius of fourier(spec, .) away from 0.

    Grid per axis: theta_k = -pi + 2 pi k / N for k = 0..N-1; points with
    ||theta|| < 2 pi / N are excluded.  For a process satisfying the
    standing assumptions the maximum is strictly below 1.
    """
    N = int(grid_points_per_axis)
    if N < 3:
        raise PreconditionError("need at least 3 grid points per axis")
    axis = -np.pi + 2 * np.pi * np.arange(N) / N
    grids = np.meshgrid(*([axis] * spec.d), indexing="ij")
    thetas = np.stack([g.ravel() for g in grids], axis=1)
    keep = np.linalg.norm(thetas, axis=1) >= 2 * np.pi / N
    thetas = thetas[keep]
    F = fourier_many(spec, thetas)
    if spec.p == 1:
        radii = np.abs(F[:, 0, 0])
    else:
        radii = np.abs(np.linalg.eigvals(F)).max(axis=1)
    return ScanReport(
        grid_points_per_axis=N,
        excluded_radius=2 * np.pi / N,
        thetas=thetas,
        radii=radii,
    )


@dataclass(frozen=True)
class DerivativeCheck:
    """Finite-difference derivatives of the leading Fourier eigenvalue at 0
    against their structural targets (i * drift, minus the energy matrix)."""

    grad_fd: np.ndarray
    grad_target: np.ndarray
    hess_fd: np.ndarray
    hess_target: np.ndarray

    @property
    def grad_residual(self) -> float:
        return float(np.abs(self.grad_fd - self.grad_target).max())

    @property
    def hess_residual(self) -> float:
        return float(np.abs(self.hess_fd - self.hess_target).max())


def k_derivative_check(spec: ProcessSpec) -> DerivativeCheck:
    """Check grad k(0) = i * m and Hess k(0) = -sigma by finite differences."""
    from .process import moments
    from .sections import energy_matrix

    m = moments(spec).global_drift
    sigma = energy_matrix(spec).sigma

    def k_at(theta):
        return leading_eigenvalue(fourier(spec, theta))

    x0 = np.zeros(spec.d)
    grad = _fd.gradient(k_at, x0)
    hess = _fd.hessian(k_at, x0)
    return DerivativeCheck(
        grad_fd=grad,
        grad_target=1j * m,
        hess_fd=hess,
        hess_target=-sigma.astype(complex),
    )
