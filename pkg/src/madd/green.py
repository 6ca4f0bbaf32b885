"""Green functions of a transient non-centered process, three ways, and
their large-distance asymptotic equivalent.

Methods
-------
* ``green_series``   truncated sum of n-step probabilities, propagated as
  dense arrays over a moving bounding box (with absolute pruning for
  d >= 2); the error field is a geometric tail estimate from the decay of
  the last partial terms.
* ``green_resolvent`` Fourier inversion of the damped resolvent
  (I - t mu-hat(theta))^{-1} on a uniform grid for a schedule of damping
  factors t < 1, extrapolated to t = 1.  Damping keeps the integrand
  smooth for every d; the undamped grid integral (integrable singularity
  for d >= 2) is exposed separately for validation.
* ``green_mc``       mean visit counts over simulated paths with
  counter-based RNG streams, reproducible for a fixed seed and
  independent of the number of worker threads.

The asymptotic equivalent in direction u is
``chi_ij(u) * ||x||^{-(d-1)/2} * exp(-c(u) . x)`` where c(u) is the
boundary point whose Doob drift points along u and chi collects the
Gaussian-integral prefactor, the Perron-vector ratio and the projection
entry.  The exponent applied to ||m_c|| is configurable; the default
(d-3)/2 is the one consistent with the one-dimensional renewal limit
G -> 1/m (see the d = 2 discrimination test in the acceptance suite).
"""

from __future__ import annotations

import os
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .boundary import boundary_point, doob_transform, rho_eval
from .errors import NumericError, PreconditionError, ResourceError
from .process import ProcessSpec, moments, require_assumptions, stationary_distribution
from .transforms import CONV_CAP_1D, CONV_CAP_ND, fourier_many

SERIES_PRUNE = 1e-16
DEFAULT_SCHEDULE = (0.9, 0.95, 0.975, 0.9875)
_MC_CHUNK = 1 << 15


def _max_threads() -> int:
    try:
        return max(1, int(os.environ.get("MADD_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class GreenEstimate:
    """A Green-function value with its method tag and error field.

    ``error`` is a truncation bound for the series, the last extrapolation
    increment for the resolvent, and the standard error for monte-carlo.
    """

    value: float
    method: str
    error: float
    params: dict = field(default_factory=dict)


# -- series method -------------------------------------------------------------


class _BoxArray:
    """Dense nonnegative array over an integer box [lo, lo + shape)."""

    def __init__(self, p: int, lo: np.ndarray, shape: tuple[int, ...]):
        self.p = p
        self.lo = np.asarray(lo, dtype=np.int64)
        self.data = np.zeros((p, *shape))

    def at(self, j: int, x: np.ndarray) -> float:
        idx = np.asarray(x, dtype=np.int64) - self.lo
        if (idx < 0).any() or (idx >= self.data.shape[1:]).any():
            return 0.0
        return float(self.data[(j, *idx)])


def _accumulate(total: _BoxArray | None, cur: _BoxArray) -> _BoxArray:
    if total is None:
        out = _BoxArray(cur.p, cur.lo, cur.data.shape[1:])
        out.data += cur.data
        return out
    lo = np.minimum(total.lo, cur.lo)
    hi = np.maximum(
        total.lo + np.array(total.data.shape[1:]), cur.lo + np.array(cur.data.shape[1:])
    )
    if (lo == total.lo).all() and (hi == total.lo + np.array(total.data.shape[1:])).all():
        out = total
    else:
        # grow with slack so repeated unions stay amortized
        slack = 8
        lo = lo - np.where(lo < total.lo, slack, 0)
        hi = hi + np.where(hi > total.lo + np.array(total.data.shape[1:]), slack, 0)
        out = _BoxArray(total.p, lo, tuple(hi - lo))
        off = total.lo - lo
        sl = tuple(slice(o, o + s) for o, s in zip(off, total.data.shape[1:]))
        out.data[(slice(None), *sl)] = total.data
    off = cur.lo - out.lo
    sl = tuple(slice(o, o + s) for o, s in zip(off, cur.data.shape[1:]))
    out.data[(slice(None), *sl)] += cur.data
    return out


class _SeriesRun:
    """Propagation of the n-step law from (0, source layer) to a horizon,
    accumulating the partial Green array and the last partial terms."""

    TAIL_TERMS = 10

    def __init__(self, spec: ProcessSpec, source: int, horizon: int, prune: float):
        self.spec = spec
        self.horizon = horizon
        self.prune = prune if spec.d >= 2 else 0.0
        self.pruned_mass = 0.0

        d, p = spec.d, spec.p
        atoms = [
            (i, j, np.asarray(dx, dtype=np.int64), w)
            for i in range(p)
            for j in range(p)
            for dx, w in spec.jumps[i][j]
        ]
        dxs = np.array([a[2] for a in atoms])
        min_dx, max_dx = dxs.min(axis=0), dxs.max(axis=0)

        cur = _BoxArray(p, np.zeros(d, dtype=np.int64), (1,) * d)
        cur.data[(source, *([0] * d))] = 1.0
        total: _BoxArray | None = None
        tail: list[_BoxArray] = []
        for n in range(horizon + 1):
            total = _accumulate(total, cur)
            if n >= horizon + 1 - self.TAIL_TERMS:
                tail.append(cur)
            if n == horizon:
                break
            new_lo = cur.lo + min_dx
            new_shape = tuple(np.array(cur.data.shape[1:]) + (max_dx - min_dx))
            new = _BoxArray(p, new_lo, new_shape)
            for i, j, dx, w in atoms:
                off = (cur.lo + dx) - new_lo
                sl = tuple(slice(o, o + s) for o, s in zip(off, cur.data.shape[1:]))
                new.data[(j, *sl)] += w * cur.data[i]
            if self.prune > 0.0:
                small = (new.data > 0) & (new.data < self.prune)
                self.pruned_mass += float(new.data[small].sum())
                new.data[small] = 0.0
                mask = new.data.any(axis=0)
                if mask.any():
                    bounds = []
                    for axis in range(d):
                        other = tuple(k for k in range(d) if k != axis)
                        line = mask.any(axis=other) if other else mask
                        nz = np.nonzero(line)[0]
                        bounds.append((nz[0], nz[-1] + 1))
                    sl = tuple(slice(a, b) for a, b in bounds)
                    trimmed = _BoxArray(
                        p,
                        new.lo + np.array([a for a, _ in bounds]),
                        tuple(b - a for a, b in bounds),
                    )
                    trimmed.data[...] = new.data[(slice(None), *sl)]
                    new = trimmed
            cur = new
        self.total = total
        self.tail = tail

    def estimate(self, x: np.ndarray, j: int) -> tuple[float, float]:
        value = self.total.at(j, x)
        terms = [t.at(j, x) for t in self.tail]
        last = terms[-1]
        tail_bound = 0.0
        if last > 0.0:
            first = next((t for t in terms if t > 0.0), last)
            k = len(terms) - 1 - terms.index(first)
            ratio = (last / first) ** (1.0 / k) if k > 0 and first > 0 else 1.0
            if ratio < 1.0:
                tail_bound = last * ratio / (1.0 - ratio)
            else:
                tail_bound = float("inf")
        return value, tail_bound + self.pruned_mass


_series_cache: OrderedDict = OrderedDict()


def _series_run(spec: ProcessSpec, source: int, horizon: int) -> _SeriesRun:
    key = (spec, source, horizon)
    if key in _series_cache:
        _series_cache.move_to_end(key)
        return _series_cache[key]
    run = _SeriesRun(spec, source, horizon, SERIES_PRUNE)
    _series_cache[key] = run
    while len(_series_cache) > 6:
        _series_cache.popitem(last=False)
    return run


def default_series_horizon(spec: ProcessSpec) -> int:
    return 2000 if spec.d == 1 else 800


def green_series(
    spec: ProcessSpec,
    i: int,
    x,
    j: int,
    horizon: int | None = None,
    tol: float | None = None,
    source=None,
) -> GreenEstimate:
    """Truncated visit-count series from (source, i) to (x, j).

    Jumps are translation invariant, so the value only depends on the
    displacement; ``source`` (default the origin) is subtracted from x.
    The reported error adds a geometric tail extrapolated from the decay
    of the last partial terms and (for d >= 2) the total pruned mass.
    If ``tol`` is given and not reached within the horizon the estimate
    is still returned, flagged ``converged = False``.
    """
    require_assumptions(spec, non_centered=True)
    if horizon is None:
        horizon = default_series_horizon(spec)
    cap = CONV_CAP_1D if spec.d == 1 else CONV_CAP_ND
    if horizon > cap:
        raise ResourceError(f"series horizon {horizon} exceeds cap {cap}")
    x = np.asarray(x, dtype=np.int64)
    if source is not None:
        x = x - np.asarray(source, dtype=np.int64)
    run = _series_run(spec, i, horizon)
    value, err = run.estimate(x, j)
    converged = err <= tol if tol is not None else True
    return GreenEstimate(
        value=value,
        method="series",
        error=err,
        params={"horizon": horizon, "tol": tol, "converged": converged},
    )


# -- resolvent method ----------------------------------------------------------


_grid_cache: OrderedDict = OrderedDict()
_field_cache: OrderedDict = OrderedDict()


def _theta_grid(d: int, M: int, offset: bool) -> np.ndarray:
    key = (d, M, offset)
    if key in _grid_cache:
        _grid_cache.move_to_end(key)
        return _grid_cache[key]
    shift = 0.5 if offset else 0.0
    axis = -np.pi + 2 * np.pi * (np.arange(M) + shift) / M
    grids = np.meshgrid(*([axis] * d), indexing="ij")
    thetas = np.stack([g.ravel() for g in grids], axis=1)
    _grid_cache[key] = thetas
    while len(_grid_cache) > 4:
        _grid_cache.popitem(last=False)
    return thetas


def _resolvent_field(spec: ProcessSpec, t: float, M: int, j: int, offset: bool) -> np.ndarray:
    """Column j of (I - t mu-hat)^{-1} on the theta grid; shape (K, p)."""
    key = (spec, t, M, j, offset)
    if key in _field_cache:
        _field_cache.move_to_end(key)
        return _field_cache[key]
    thetas = _theta_grid(spec.d, M, offset)
    K, p = thetas.shape[0], spec.p
    out = np.empty((K, p), dtype=complex)
    chunk = 1 << 20
    for s in range(0, K, chunk):
        F = fourier_many(spec, thetas[s : s + chunk])
        A = -t * F
        A[:, np.arange(p), np.arange(p)] += 1.0
        if p == 1:
            out[s : s + chunk, 0] = 1.0 / A[:, 0, 0]
        else:
            rhs = np.zeros((A.shape[0], p, 1), dtype=complex)
            rhs[:, j, 0] = 1.0
            out[s : s + chunk] = np.linalg.solve(A, rhs)[:, :, 0]
    _field_cache[key] = out
    while len(_field_cache) > 16:
        _field_cache.popitem(last=False)
    return out


def _grid_value(spec: ProcessSpec, t: float, M: int, i: int, x: np.ndarray, j: int, offset: bool) -> float:
    thetas = _theta_grid(spec.d, M, offset)
    col = _resolvent_field(spec, t, M, j, offset)
    phases = np.exp(-1j * (thetas @ x))
    return float((col[:, i] * phases).mean().real)


def _neville_to_zero(ss, vs) -> float:
    cur = list(vs)
    n = len(ss)
    for m in range(1, n):
        cur = [
            (ss[k] * cur[k + 1] - ss[k + m] * cur[k]) / (ss[k] - ss[k + m])
            for k in range(n - m)
        ]
    return cur[0]


def default_resolvent_grid(spec: ProcessSpec) -> int:
    return {1: 4096, 2: 256}.get(spec.d, 64)


def auto_schedule(spec: ProcessSpec, x, M: int) -> tuple[float, ...]:
    """Damping schedule balancing extrapolation error against grid
    wrap-around: the finest 1 - t keeps lattice images suppressed by
    roughly e^{-12}, the coarsest keeps (1 - t) * (typical visit epoch)
    moderate.  The visit epoch combines the travel time ||x|| / ||m||
    with the geometric mixing tail 1 / (1 - min rho)."""
    from .boundary import rho_minimizer, rho_value

    x = np.asarray(x, dtype=float)
    m_norm = max(float(np.linalg.norm(moments(spec).global_drift)), 1e-3)
    s_alias = 12.0 * m_norm / M
    rho_min = rho_value(spec, rho_minimizer(spec))
    tau = 10.0 + 3.0 / max(1.0 - rho_min, 1e-3) + 1.5 * float(np.linalg.norm(x)) / m_norm
    s_min = max(s_alias, 0.05 / tau)
    return tuple(1.0 - min(0.25, s_min * 2**k) for k in range(3, -1, -1))


def green_resolvent(
    spec: ProcessSpec,
    i: int,
    x,
    j: int,
    schedule: tuple[float, ...] | None = DEFAULT_SCHEDULE,
    grid_size: int | None = None,
    check_resolution: bool = False,
) -> GreenEstimate:
    """Damped-resolvent Fourier inversion extrapolated to no damping.

    For each t in the schedule the grid sum of
    (I - t mu-hat(theta))^{-1}_{ij} e^{-i x.theta} is a well-conditioned
    quadrature (spectral radius <= t < 1); the values are polynomial
    extrapolated in 1 - t to 0.  ``schedule=None`` picks the schedule
    from x and the grid automatically.  With ``check_resolution`` the
    grid is doubled once and a disagreement beyond 10x the reported
    error raises a resolution error.
    """
    require_assumptions(spec, non_centered=True)
    x = np.asarray(x, dtype=np.int64).astype(float)
    M = default_resolvent_grid(spec) if grid_size is None else int(grid_size)
    if schedule is None:
        schedule = auto_schedule(spec, x, M)
    ts = sorted(set(float(t) for t in schedule))
    if len(ts) < 2 or not all(0 < t < 1 for t in ts):
        raise PreconditionError("damping schedule needs >= 2 distinct values in (0, 1)")
    ss = [1.0 - t for t in ts]  # decreasing damping gap
    vs = [_grid_value(spec, 1.0 - s, M, i, x, j, offset=False) for s in ss]
    value = _neville_to_zero(ss, vs)
    prev = _neville_to_zero(ss[:-1], vs[:-1]) if len(ss) > 2 else vs[-1]
    err = 1.5 * abs(value - prev) + 1e-12
    if value < 0:
        err = max(err, -1.5 * value)
    if check_resolution:
        vs2 = [_grid_value(spec, 1.0 - s, 2 * M, i, x, j, offset=False) for s in ss]
        value2 = _neville_to_zero(ss, vs2)
        if abs(value2 - value) > 10 * max(err, 1e-12):
            raise NumericError(
                f"grid of {M} points per axis too coarse: doubling moved the value "
                f"by {abs(value2 - value):.3e} (reported error {err:.3e})"
            )
    return GreenEstimate(
        value=max(value, 0.0),
        method="resolvent",
        error=err,
        params={"schedule": tuple(1.0 - s for s in ss), "grid_size": M},
    )


def green_resolvent_undamped(
    spec: ProcessSpec, i: int, x, j: int, grid_size: int | None = None
) -> GreenEstimate:
    """Undamped grid integral on a half-offset grid; d >= 2 only.

    The integrand has an integrable singularity at 0, so convergence in
    the grid size is slow; the error field is the change under halving.
    """
    require_assumptions(spec, non_centered=True)
    if spec.d < 2:
        raise PreconditionError("undamped inversion needs d >= 2 (integrable singularity)")
    x = np.asarray(x, dtype=np.int64).astype(float)
    M = default_resolvent_grid(spec) if grid_size is None else int(grid_size)
    value = _grid_value(spec, 1.0, M, i, x, j, offset=True)
    coarse = _grid_value(spec, 1.0, M // 2, i, x, j, offset=True)
    return GreenEstimate(
        value=max(value, 0.0),
        method="resolvent",
        error=abs(value - coarse),
        params={"grid_size": M, "undamped": True},
    )


# -- monte-carlo method --------------------------------------------------------


def _jump_tables(spec: ProcessSpec):
    p, d = spec.p, spec.d
    outcomes = []
    for i in range(p):
        row = []
        for j in range(p):
            for dx, w in spec.jumps[i][j]:
                row.append((w, dx, j))
        outcomes.append(row)
    kmax = max(len(r) for r in outcomes)
    cum = np.ones((p, kmax))
    dxs = np.zeros((p, kmax, d), dtype=np.int64)
    nxt = np.zeros((p, kmax), dtype=np.int64)
    for i, row in enumerate(outcomes):
        acc = 0.0
        for k, (w, dx, j) in enumerate(row):
            acc += w
            cum[i, k] = acc
            dxs[i, k] = dx
            nxt[i, k] = j
        for k in range(len(row), kmax):
            dxs[i, k] = row[-1][1]
            nxt[i, k] = row[-1][2]
    cum[:, -1] = np.inf  # guard against u == 1 roundoff
    return cum, dxs, nxt


def green_mc_many(
    spec: ProcessSpec,
    i: int,
    targets: list[tuple[tuple[int, ...], int]],
    n_paths: int = 100_000,
    horizon: int = 500,
    seed: int = 0,
) -> list[GreenEstimate]:
    """Visit-count estimates for several targets from one path ensemble.

    Paths are simulated in fixed-size chunks; chunk c draws from a Philox
    stream keyed by (seed, c), and chunk results are reduced in index
    order, so the output is reproducible for a fixed seed regardless of
    the worker count (``MADD_THREADS``).
    """
    require_assumptions(spec, non_centered=True)
    d = spec.d
    cum, dxs, nxt = _jump_tables(spec)
    B = horizon * max(spec.max_jump_norm(), 1) + 1
    side = 2 * B + 1
    strides = np.array([side**k for k in range(d)], dtype=np.int64)

    def encode(pos, lay):
        return (pos + B) @ strides * spec.p + lay

    codes = np.array(
        [encode(np.asarray(tx, dtype=np.int64), tj) for tx, tj in targets], dtype=np.int64
    )
    # duplicate targets share a tally slot and are expanded afterwards
    sorted_codes, inverse = np.unique(codes, return_inverse=True)
    slot_of_target = inverse
    T = len(sorted_codes)

    def run_chunk(c: int, size: int):
        rng = np.random.Generator(np.random.Philox(key=[int(seed), int(c)]))
        pos = np.zeros((size, d), dtype=np.int64)
        lay = np.full(size, i, dtype=np.int64)
        counts = np.zeros((size, T), dtype=np.int32)

        def tally():
            code = encode(pos, lay)
            loc = np.searchsorted(sorted_codes, code)
            loc_c = np.minimum(loc, T - 1)
            hit = sorted_codes[loc_c] == code
            if hit.any():
                np.add.at(counts, (np.nonzero(hit)[0], loc_c[hit]), 1)

        tally()
        for _ in range(horizon):
            u = rng.random(size)
            idx = (u[:, None] > cum[lay]).sum(axis=1)
            pos += dxs[lay, idx]
            lay = nxt[lay, idx]
            tally()
        s = counts.sum(axis=0, dtype=np.int64)
        sq = (counts.astype(np.int64) ** 2).sum(axis=0)
        return s, sq

    chunks = [
        (c, min(_MC_CHUNK, n_paths - c * _MC_CHUNK))
        for c in range((n_paths + _MC_CHUNK - 1) // _MC_CHUNK)
    ]
    workers = _max_threads()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(lambda args: run_chunk(*args), chunks))
    else:
        results = [run_chunk(*args) for args in chunks]
    total = np.zeros(T, dtype=np.int64)
    total_sq = np.zeros(T, dtype=np.int64)
    for s, sq in results:
        total += s
        total_sq += sq
    mean = total / n_paths
    var = np.maximum(total_sq / n_paths - mean**2, 0.0)
    se = np.sqrt(var / max(n_paths - 1, 1))
    return [
        GreenEstimate(
            value=float(mean[slot]),
            method="monte-carlo",
            error=float(se[slot]),
            params={"n_paths": n_paths, "horizon": horizon, "seed": seed},
        )
        for slot in slot_of_target
    ]


def green_mc(
    spec: ProcessSpec,
    i: int,
    x,
    j: int,
    n_paths: int = 100_000,
    horizon: int = 500,
    seed: int = 0,
) -> GreenEstimate:
    """Mean visit count of (x, j) over simulated paths started at (0, i)."""
    x = tuple(int(v) for v in np.asarray(x, dtype=np.int64))
    return green_mc_many(spec, i, [(x, j)], n_paths, horizon, seed)[0]


def default_mc_horizon(spec: ProcessSpec, x) -> int:
    """Horizon covering both the travel time to x and the geometric tail
    of late visits (rate 1 - min rho; slow-drift walks mix slowly)."""
    from .boundary import rho_minimizer, rho_value

    m_norm = max(float(np.linalg.norm(moments(spec).global_drift)), 1e-3)
    rho_min = rho_value(spec, rho_minimizer(spec))
    travel = (np.abs(np.asarray(x, dtype=float)).sum() + 20.0) / m_norm
    mixing = 9.0 / max(1.0 - rho_min, 1e-3)
    return int(travel + mixing)


# -- asymptotic equivalent -----------------------------------------------------


def rotation_to_e1(u: np.ndarray) -> np.ndarray:
    """Orthogonal map sending u to the first basis vector and fixing the
    orthogonal complement of their span (for u = -e1 the plane (e1, e2)
    is rotated by pi)."""
    u = np.asarray(u, dtype=float)
    d = u.size
    if d == 1:
        return np.array([[1.0 if u[0] > 0 else -1.0]])
    cos = u[0]
    b = u.copy()
    b[0] = 0.0
    nb = np.linalg.norm(b)
    if nb < 1e-14:
        R = np.eye(d)
        if cos < 0:
            R[0, 0] = R[1, 1] = -1.0
        return R
    b /= nb
    a = np.zeros(d)
    a[0] = 1.0
    R = np.eye(d)
    R += (cos - 1.0) * (np.outer(a, a) + np.outer(b, b))
    R += nb * (np.outer(a, b) - np.outer(b, a))
    return R


@dataclass(frozen=True)
class AsymptoticCoefficient:
    """Everything entering the asymptotic equivalent in direction u.

    ``chi[i, j]`` multiplies ||x||^{-(d-1)/2} e^{-c.x}; it is
    (2 pi)^{-(d-1)/2} (phi_i / phi_j) ||m_c||^{m_exponent} proj0_{ij}
    / sqrt(det sigma_u_1), with the determinant of an empty matrix taken
    as 1 (d = 1)."""

    u: np.ndarray
    c: np.ndarray
    m_c_norm: float
    rotation: np.ndarray
    sigma_u: np.ndarray
    sigma_u_1: np.ndarray
    proj0: np.ndarray
    phi: np.ndarray
    chi: np.ndarray
    m_exponent: float


_coeff_cache: OrderedDict = OrderedDict()


def asymptotic_coefficient(
    spec: ProcessSpec, u, m_exponent: float | None = None
) -> AsymptoticCoefficient:
    """Direction-dependent prefactor of the asymptotic Green function."""
    u = np.asarray(u, dtype=float)
    d = spec.d
    if m_exponent is None:
        m_exponent = (d - 3) / 2.0
    key = (spec, tuple(u), float(m_exponent))
    if key in _coeff_cache:
        _coeff_cache.move_to_end(key)
        return _coeff_cache[key]

    bp = boundary_point(spec, u)
    doob = doob_transform(spec, bp.c)
    m_c = moments(doob.transformed).global_drift
    m_norm = float(np.linalg.norm(m_c))
    R = rotation_to_e1(u)
    hess = rho_eval(spec, bp.c).hess
    sigma_u = R @ hess @ R.T
    sigma_u_1 = sigma_u[1:, 1:]
    if d > 1:
        try:
            np.linalg.cholesky(sigma_u_1)
        except np.linalg.LinAlgError:
            raise NumericError("transverse energy matrix is not positive-definite") from None
        det1 = float(np.linalg.det(sigma_u_1))
    else:
        det1 = 1.0
    pi_c = stationary_distribution(doob.transformed)
    proj0 = np.tile(pi_c, (spec.p, 1))
    phi = doob.phi
    pref = (2 * np.pi) ** (-(d - 1) / 2.0) * m_norm**m_exponent / np.sqrt(det1)
    chi = pref * np.outer(phi, 1.0 / phi) * proj0
    coeff = AsymptoticCoefficient(
        u=u,
        c=bp.c,
        m_c_norm=m_norm,
        rotation=R,
        sigma_u=sigma_u,
        sigma_u_1=sigma_u_1,
        proj0=proj0,
        phi=phi,
        chi=chi,
        m_exponent=float(m_exponent),
    )
    _coeff_cache[key] = coeff
    while len(_coeff_cache) > 256:
        _coeff_cache.popitem(last=False)
    return coeff


def asymptotic_green(spec: ProcessSpec, i: int, x, j: int, m_exponent: float | None = None) -> float:
    """Asymptotic equivalent chi_ij(x/||x||) ||x||^{-(d-1)/2} e^{-c.x}."""
    x = np.asarray(x, dtype=float)
    r = float(np.linalg.norm(x))
    if r == 0.0:
        raise PreconditionError("asymptotic equivalent needs x != 0")
    u = x / r
    coeff = asymptotic_coefficient(spec, u, m_exponent)
    return float(coeff.chi[i, j] * r ** (-(spec.d - 1) / 2.0) * np.exp(-coeff.c @ x))


# -- cross-method comparison ----------------------------------------------------


def doob_conjugation_residual(
    spec: ProcessSpec, c, i: int, x, j: int, horizon: int | None = None
) -> float:
    """|G_c(x) - (phi_j / phi_i) e^{c.x} G(x)| with both sides summed to the
    same horizon (the identity holds term by term)."""
    x = np.asarray(x, dtype=np.int64)
    doob = doob_transform(spec, c)
    g = green_series(spec, i, x, j, horizon).value
    gc = green_series(doob.transformed, i, x, j, horizon).value
    phi = doob.phi
    return abs(gc - (phi[j] / phi[i]) * float(np.exp(np.asarray(c) @ x)) * g)


@dataclass(frozen=True)
class CompareRow:
    r: float
    x: tuple[int, ...]
    method: str
    value: float
    error: float
    asym: float
    ratio: float


@dataclass(frozen=True)
class ComparisonTable:
    u: np.ndarray
    i: int
    j: int
    rows: list = field(default_factory=list)
    doob_residuals: list = field(default_factory=list)


def nearest_lattice_point(r: float, u: np.ndarray) -> np.ndarray:
    """Coordinatewise rounding of r*u with ties toward +inf."""
    return np.floor(r * np.asarray(u, dtype=float) + 0.5).astype(np.int64)


def compare(
    spec: ProcessSpec,
    u,
    radii,
    i: int,
    j: int,
    methods=("series", "resolvent", "mc"),
    series_horizon: int | None = None,
    mc_paths: int = 100_000,
    mc_horizon: int | None = None,
    seed: int = 0,
    grid_size: int | None = None,
    m_exponent: float | None = None,
) -> ComparisonTable:
    """Exact-method values against the asymptotic equivalent along a ray.

    Each radius is snapped to the nearest lattice point; every requested
    method contributes a row with its ratio to the asymptotic value.  The
    Doob-conjugation residual (series method, transformed process) is
    reported per radius.
    """
    u = np.asarray(u, dtype=float)
    rows: list[CompareRow] = []
    residuals = []
    coeff = asymptotic_coefficient(spec, u, m_exponent)
    for r in radii:
        x = nearest_lattice_point(float(r), u)
        asym = asymptotic_green(spec, i, x, j, m_exponent)
        estimates: list[GreenEstimate] = []
        if "series" in methods:
            estimates.append(green_series(spec, i, x, j, series_horizon))
        if "resolvent" in methods:
            estimates.append(
                green_resolvent(spec, i, x, j, schedule=None, grid_size=grid_size)
            )
        if "mc" in methods:
            horizon = mc_horizon or default_mc_horizon(spec, x)
            estimates.append(green_mc(spec, i, x, j, mc_paths, horizon, seed))
        for est in estimates:
            rows.append(
                CompareRow(
                    r=float(r),
                    x=tuple(int(v) for v in x),
                    method=est.method,
                    value=est.value,
                    error=est.error,
                    asym=asym,
                    ratio=est.value / asym if asym > 0 else float("nan"),
                )
            )
        residuals.append(
            doob_conjugation_residual(spec, coeff.c, i, x, j, series_horizon)
        )
    return ComparisonTable(u=u, i=i, j=j, rows=rows, doob_residuals=residuals)
