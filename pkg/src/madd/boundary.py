"""The spectral-radius map rho, its unit sublevel set, and Doob transforms.

rho(c) is the Perron root of the real Laplace transform at c.  It is
smooth, log-convex and norm-coercive, so {rho <= 1} is a compact convex
body containing 0 on its boundary.  For a non-centered process the outer
normal map c -> grad rho(c) / ||grad rho(c)|| is a homeomorphism from
{rho = 1} onto the sphere; boundary_point inverts it by maximizing u . c
over the body (damped Newton on the KKT system).  At a boundary point c
the Doob transform reweights jumps by (phi_j / phi_i) e^{c.x}, producing
a probability jump matrix whose drift is grad rho(c).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _fd
from .errors import NumericError, PreconditionError
from .process import DRIFT_ZERO_TOL, ProcessSpec, moments
from .transforms import laplace, perron_triple

BOUNDARY_RHO_TOL = 1e-8  # doob_transform precondition
KKT_GRAD_TOL = 1e-11
KKT_RHO_TOL = 1e-12
UNIT_NORM_TOL = 1e-12


def rho_value(spec: ProcessSpec, c) -> float:
    """Perron root of the Laplace transform at c (inf on overflow)."""
    with np.errstate(over="ignore"):
        L = laplace(spec, c)
    if not np.isfinite(L).all():
        return float("inf")
    return perron_triple(L).rho


@dataclass(frozen=True)
class RhoEvaluation:
    c: np.ndarray
    rho: float
    grad: np.ndarray
    hess: np.ndarray


def rho_eval(spec: ProcessSpec, c) -> RhoEvaluation:
    """rho with gradient and Hessian by central finite differences."""
    c = np.asarray(c, dtype=float)

    def f(x):
        return rho_value(spec, x)

    return RhoEvaluation(
        c=c,
        rho=f(c),
        grad=_fd.gradient(f, c).real.astype(float),
        hess=_fd.hessian(f, c).real.astype(float),
    )


def ray_to_boundary(spec: ProcessSpec, v, base=None, s_max: float = 256.0) -> float:
    """Positive s with rho(base + s v) = 1, by bracketing and bisection.

    ``base`` must be in the open unit sublevel set (default: the interior
    minimizer of rho, so the search is valid for every direction by
    star-shapedness).  Norm-coercivity guarantees the bracket.
    """
    v = np.asarray(v, dtype=float)
    base = rho_minimizer(spec) if base is None else np.asarray(base, dtype=float)
    lo, hi = 0.0, 1.0
    while rho_value(spec, base + hi * v) <= 1.0:
        lo = hi
        hi *= 2.0
        if hi > s_max:
            raise NumericError("no boundary crossing found along the ray")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if rho_value(spec, base + mid * v) <= 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


_minimizer_cache: dict = {}


def rho_minimizer(spec: ProcessSpec) -> np.ndarray:
    """Global minimizer of rho (damped Newton; rho is smooth and strictly
    convex with positive-definite Hessians on the unit sublevel set)."""
    if spec in _minimizer_cache:
        return _minimizer_cache[spec]
    c = np.zeros(spec.d)
    val = rho_value(spec, c)
    for _ in range(80):
        g = _fd.gradient(lambda x: rho_value(spec, x), c).real
        if np.abs(g).max() < 1e-11:
            break
        H = _fd.hessian(lambda x: rho_value(spec, x), c).real
        try:
            step = np.linalg.solve(H, -g)
        except np.linalg.LinAlgError:
            step = -g
        alpha = 1.0
        while alpha > 2.0**-30:
            cand = c + alpha * step
            v = rho_value(spec, cand)
            if np.isfinite(v) and v < val:
                c, val = cand, v
                break
            alpha *= 0.5
        else:
            break
    _minimizer_cache[spec] = c
    if len(_minimizer_cache) > 64:
        _minimizer_cache.pop(next(iter(_minimizer_cache)))
    return c


@dataclass(frozen=True)
class BoundaryPoint:
    """Point c on {rho = 1} whose Doob drift m_c points along u."""

    u: np.ndarray
    c: np.ndarray
    m_c: np.ndarray
    rho: float
    grad: np.ndarray

    @property
    def gamma_residual(self) -> float:
        """Max-norm distance between grad rho(c)/||grad rho(c)|| and u."""
        return float(np.abs(self.grad / np.linalg.norm(self.grad) - self.u).max())


def _polish_to_boundary(spec: ProcessSpec, c: np.ndarray, direction: np.ndarray) -> np.ndarray:
    """Scalar Newton along ``direction`` until |rho - 1| is at roundoff."""
    n = direction / np.linalg.norm(direction)
    for _ in range(6):
        r = rho_value(spec, c)
        if abs(r - 1.0) <= 1e-15:
            break
        slope = float(_fd.gradient(lambda x: rho_value(spec, x), c) @ n)
        if slope == 0.0:
            break
        c = c - (r - 1.0) / slope * n
    return c


def _normal_at(spec: ProcessSpec, c: np.ndarray) -> np.ndarray:
    g = _fd.gradient(lambda x: rho_value(spec, x), c).real
    return g / np.linalg.norm(g)


def _normal_map_seed(spec: ProcessSpec, u: np.ndarray, tol: float, max_iter: int = 80):
    """Boundary point whose outer normal is close to u, by iterating
    ray crossings from the interior minimizer of rho."""
    base = rho_minimizer(spec)
    v = u.copy()
    beta = 0.8
    best, best_res = None, np.inf
    for _ in range(max_iter):
        c = base + ray_to_boundary(spec, v, base=base) * v
        n = _normal_at(spec, c)
        res = float(np.abs(n - u).max())
        if res < best_res:
            best, best_res = c, res
        if res <= tol:
            return c
        v = v + beta * (u - n)
        v /= np.linalg.norm(v)
    return best


def boundary_point(spec: ProcessSpec, u, max_iter: int = 200) -> BoundaryPoint:
    """Solve max u . c subject to rho(c) <= 1 for the KKT point.

    A normal-map warm start (ray crossings from the interior minimizer
    of rho, star-shaped by convexity) lands near the answer; a damped
    Newton iteration on F(c, lam) = (grad rho(c) - lam u, rho(c) - 1)
    with lam kept positive and steps trust-capped finishes to roundoff.
    The exact drift direction maps to c = 0.
    """
    u = np.asarray(u, dtype=float)
    mom = moments(spec)
    m = mom.global_drift
    if float(np.linalg.norm(m)) <= DRIFT_ZERO_TOL:
        raise PreconditionError(
            "process is centered (zero global drift); a non-zero drift is required "
            "for the boundary map"
        )
    if abs(np.linalg.norm(u) - 1.0) > UNIT_NORM_TOL:
        raise PreconditionError(f"direction must be a unit vector, got norm {np.linalg.norm(u)}")
    m_hat = m / np.linalg.norm(m)
    if float(np.abs(u - m_hat).max()) < 1e-15:
        c = np.zeros(spec.d)
        ev = rho_eval(spec, c)
        return BoundaryPoint(u=u, c=c, m_c=_doob_drift(spec, c), rho=ev.rho, grad=ev.grad)

    c = _normal_map_seed(spec, u, tol=1e-3)
    lam = max(
        float(_fd.gradient(lambda x: rho_value(spec, x), c).real @ u), 1e-8
    )
    converged = False
    reseeds = 0
    it = 0
    while it < max_iter:
        it += 1
        ev = rho_eval(spec, c)
        F = np.concatenate([ev.grad - lam * u, [ev.rho - 1.0]])
        merit = float(np.linalg.norm(F))
        if float(np.abs(ev.grad - lam * u).max()) <= KKT_GRAD_TOL * max(1.0, abs(lam)) and abs(
            ev.rho - 1.0
        ) <= KKT_RHO_TOL:
            converged = True
            break
        J = np.zeros((spec.d + 1, spec.d + 1))
        J[: spec.d, : spec.d] = ev.hess
        J[: spec.d, spec.d] = -u
        J[spec.d, : spec.d] = ev.grad
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(J, -F, rcond=None)[0]
        cap = float(np.abs(step[: spec.d]).max())
        if cap > 0.5:
            step = step * (0.5 / cap)
        alpha = 1.0
        accepted = False
        while alpha > 2.0**-24:
            c_new = c + alpha * step[: spec.d]
            lam_new = lam + alpha * step[spec.d]
            if lam_new <= 0:
                alpha *= 0.5
                continue
            rho_new = rho_value(spec, c_new)
            if not np.isfinite(rho_new):
                alpha *= 0.5
                continue
            grad_new = _fd.gradient(lambda x: rho_value(spec, x), c_new).real
            F_new = np.concatenate([grad_new - lam_new * u, [rho_new - 1.0]])
            if np.linalg.norm(F_new) <= (1.0 - 1e-4 * alpha) * merit:
                c, lam = c_new, lam_new
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            if reseeds >= 2:
                raise NumericError(
                    f"boundary solve stalled after {it} iterations; last c = {c.tolist()}"
                )
            reseeds += 1
            c = _normal_map_seed(spec, u, tol=1e-6)
            lam = max(
                float(_fd.gradient(lambda x: rho_value(spec, x), c).real @ u), 1e-8
            )
    if not converged:
        raise NumericError(f"boundary solve did not converge in {max_iter} iterations")

    c = _polish_to_boundary(spec, c, _fd.gradient(lambda x: rho_value(spec, x), c).real)
    ev = rho_eval(spec, c)
    if abs(ev.rho - 1.0) > 1e-10:
        raise NumericError(f"boundary polish left |rho - 1| = {abs(ev.rho - 1.0):.3e}")
    return BoundaryPoint(u=u, c=ev.c, m_c=_doob_drift(spec, ev.c), rho=ev.rho, grad=ev.grad)


@dataclass(frozen=True)
class DoobTransform:
    """Exponential reweighting at a boundary point: same supports, masses
    (phi_j / phi_i) e^{c.x} mu_ij(x), which are again row-stochastic."""

    c: np.ndarray
    phi: np.ndarray
    transformed: ProcessSpec


def doob_transform(spec: ProcessSpec, c) -> DoobTransform:
    """Doob transform of parameter c (requires |rho(c) - 1| < 1e-8).

    Rows are renormalized by their computed total (each equals rho(c) up
    to roundoff), so the result is exactly row-stochastic.
    """
    c = np.asarray(c, dtype=float)
    triple = perron_triple(laplace(spec, c))
    if abs(triple.rho - 1.0) > BOUNDARY_RHO_TOL:
        raise PreconditionError(
            f"c is not on the unit-spectral-radius boundary: rho(c) = {triple.rho:.12g}"
        )
    phi = triple.right
    p, d = spec.p, spec.d
    rows = []
    for i in range(p):
        cells = []
        for j in range(p):
            cell = [
                (dx, (phi[j] / phi[i]) * float(np.exp(c @ np.asarray(dx))) * w)
                for dx, w in spec.jumps[i][j]
            ]
            cells.append(cell)
        total = sum(w for cell in cells for _, w in cell)
        rows.append([[(dx, w / total) for dx, w in cell] for cell in cells])
    entries = [
        (i, j, dx, w)
        for i in range(p)
        for j in range(p)
        for dx, w in rows[i][j]
    ]
    transformed = ProcessSpec.from_atoms(d, p, entries)
    return DoobTransform(c=c, phi=phi, transformed=transformed)


def _doob_drift(spec: ProcessSpec, c: np.ndarray) -> np.ndarray:
    return moments(doob_transform(spec, c).transformed).global_drift


def unit_directions(d: int, n: int, seed: int = 0) -> np.ndarray:
    """Deterministic direction sample: both signs for d = 1, equiangular
    for d = 2, seeded Gaussian directions for d >= 3."""
    if d == 1:
        return np.array([[1.0], [-1.0]][: max(1, min(n, 2))])
    if d == 2:
        ang = 2 * np.pi * np.arange(n) / n
        return np.stack([np.cos(ang), np.sin(ang)], axis=1)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((n, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


@dataclass(frozen=True)
class BoundaryTrace:
    points: list
    max_step: float
    max_gamma_residual: float


def boundary_trace(spec: ProcessSpec, n_directions: int) -> BoundaryTrace:
    """boundary_point over a sampled set of directions, with continuity
    diagnostics (consecutive distance, outer-normal round-trip residual)."""
    us = unit_directions(spec.d, n_directions)
    points = [boundary_point(spec, u) for u in us]
    cs = np.array([pt.c for pt in points])
    if len(points) > 1:
        steps = np.linalg.norm(np.diff(cs, axis=0), axis=1)
        max_step = float(steps.max())
    else:
        max_step = 0.0
    max_res = max(pt.gamma_residual for pt in points)
    return BoundaryTrace(points=points, max_step=max_step, max_gamma_residual=max_res)
