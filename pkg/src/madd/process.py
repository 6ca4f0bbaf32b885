"""Finite-support Markov-additive processes on Z^d x {1..p}.

A process is described by its jump matrix: a p x p array of finite
sub-probability measures on Z^d, one per ordered pair of modulating
layers, with every row summing to a full probability.  This module owns
the value types, the structural validation of a description, and the
first/second order data (stationary distribution, local and global
drifts, raw second moments) everything downstream is built on.

Layers are 0-based throughout the Python API; the JSON interchange format
is 1-based (see ``ProcessSpec.from_dict``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import PreconditionError, SpecError
from . import _walks

ROW_MASS_TOL = 1e-12
DRIFT_ZERO_TOL = 1e-10

Atom = tuple[int, ...]
# canonical form of a measure: atoms sorted, strictly positive masses
Measure = tuple[tuple[Atom, float], ...]


def _canonical_measure(atoms, d: int, where: str) -> Measure:
    merged: dict[Atom, float] = {}
    for dx, prob in atoms:
        key = tuple(int(v) for v in dx)
        if len(key) != d:
            raise SpecError(f"{where}: displacement {key} has length {len(key)}, expected d={d}")
        if any(v != dx_i for v, dx_i in zip(key, dx)):
            raise SpecError(f"{where}: displacement {tuple(dx)} is not integral")
        prob = float(prob)
        if prob < 0:
            raise SpecError(f"{where}: negative mass {prob} at {key}")
        if prob == 0.0:
            continue
        merged[key] = merged.get(key, 0.0) + prob
    return tuple(sorted(merged.items()))


@dataclass(frozen=True)
class ProcessSpec:
    """Immutable description of the process: dimensions plus jump matrix."""

    d: int
    p: int
    jumps: tuple[tuple[Measure, ...], ...]

    def __post_init__(self):
        if self.d < 1 or self.p < 1:
            raise SpecError(f"dimensions must be positive, got d={self.d}, p={self.p}")
        if len(self.jumps) != self.p or any(len(row) != self.p for row in self.jumps):
            raise SpecError("jump matrix must be p x p")
        total_atoms = 0
        for i, row in enumerate(self.jumps):
            mass = 0.0
            for j, measure in enumerate(row):
                m = sum(w for _, w in measure)
                if m > 1 + ROW_MASS_TOL:
                    raise SpecError(f"measure ({i + 1},{j + 1}) has total mass {m} > 1")
                mass += m
                total_atoms += len(measure)
            if abs(mass - 1.0) > ROW_MASS_TOL:
                raise SpecError(f"row {i + 1} has total mass {mass:.17g}, expected 1")
        if total_atoms == 0:
            raise SpecError("empty support")

    @staticmethod
    def from_atoms(d: int, p: int, entries) -> "ProcessSpec":
        """Build from an iterable of (i, j, dx, prob) with 0-based layers."""
        cells: dict[tuple[int, int], list] = {}
        for i, j, dx, prob in entries:
            if not (0 <= i < p and 0 <= j < p):
                raise SpecError(f"layer pair ({i},{j}) out of range for p={p}")
            cells.setdefault((i, j), []).append((dx, prob))
        jumps = tuple(
            tuple(
                _canonical_measure(cells.get((i, j), ()), d, f"measure ({i + 1},{j + 1})")
                for j in range(p)
            )
            for i in range(p)
        )
        return ProcessSpec(d, p, jumps)

    @staticmethod
    def from_dict(obj: dict) -> "ProcessSpec":
        """Parse the JSON interchange form (1-based layer indices)."""
        for key in ("d", "p", "jumps"):
            if key not in obj:
                raise SpecError(f"missing field '{key}'")
        d, p = obj["d"], obj["p"]
        if not isinstance(d, int) or not isinstance(p, int):
            raise SpecError("fields 'd' and 'p' must be integers")
        entries = []
        for n, cell in enumerate(obj["jumps"]):
            for key in ("from", "to", "atoms"):
                if key not in cell:
                    raise SpecError(f"jumps[{n}]: missing field '{key}'")
            i, j = cell["from"], cell["to"]
            if not (1 <= i <= p and 1 <= j <= p):
                raise SpecError(f"jumps[{n}]: layer pair ({i},{j}) out of range for p={p}")
            for a, atom in enumerate(cell["atoms"]):
                for key in ("dx", "prob"):
                    if key not in atom:
                        raise SpecError(f"jumps[{n}].atoms[{a}]: missing field '{key}'")
                dx = atom["dx"]
                if len(dx) != d:
                    raise SpecError(
                        f"jumps[{n}].atoms[{a}]: dx has length {len(dx)}, expected d={d}"
                    )
                entries.append((i - 1, j - 1, tuple(dx), atom["prob"]))
        return ProcessSpec.from_atoms(d, p, entries)

    def to_dict(self) -> dict:
        cells = []
        for i in range(self.p):
            for j in range(self.p):
                if self.jumps[i][j]:
                    cells.append(
                        {
                            "from": i + 1,
                            "to": j + 1,
                            "atoms": [
                                {"dx": list(dx), "prob": w} for dx, w in self.jumps[i][j]
                            ],
                        }
                    )
        return {"d": self.d, "p": self.p, "jumps": cells}

    # -- convenience accessors -------------------------------------------------

    def measure(self, i: int, j: int) -> dict[Atom, float]:
        return dict(self.jumps[i][j])

    def atoms_arrays(self, i: int, j: int):
        """Support and masses of measure (i, j) as numpy arrays."""
        meas = self.jumps[i][j]
        if not meas:
            return np.zeros((0, self.d), dtype=np.int64), np.zeros(0)
        xs = np.array([dx for dx, _ in meas], dtype=np.int64)
        ws = np.array([w for _, w in meas])
        return xs, ws

    def row_matrix(self) -> np.ndarray:
        """Transition matrix of the modulating chain (total masses)."""
        P = np.zeros((self.p, self.p))
        for i in range(self.p):
            for j in range(self.p):
                P[i, j] = sum(w for _, w in self.jumps[i][j])
        return P

    def max_jump_norm(self) -> int:
        return max(
            (max(abs(v) for v in dx) for row in self.jumps for m in row for dx, _ in m),
            default=0,
        )

    def layer_adjacency(self) -> list[list[int]]:
        return [
            [j for j in range(self.p) if self.jumps[i][j]] for i in range(self.p)
        ]


@dataclass(frozen=True)
class MomentData:
    """First and second order data of the jumps.

    ``local_drifts[i][j]`` is the first moment of measure (i, j),
    ``second_moments[i][j]`` its raw d x d second moment, and
    ``global_drift`` the stationary-weighted sum of the local drifts.
    """

    pi: np.ndarray
    local_drifts: np.ndarray  # (p, p, d)
    second_moments: np.ndarray  # (p, p, d, d)
    global_drift: np.ndarray  # (d,)


@dataclass(frozen=True)
class ValidationReport:
    rows_stochastic: bool
    markov_irreducible: bool
    chain_irreducible: bool
    aperiodic: bool
    non_centered: bool
    diagnostics: dict = field(default_factory=dict)

    @property
    def all_ok(self) -> bool:
        return (
            self.rows_stochastic
            and self.markov_irreducible
            and self.chain_irreducible
            and self.aperiodic
            and self.non_centered
        )


def stationary_distribution(spec: ProcessSpec) -> np.ndarray:
    """Stationary row vector of the modulating chain.

    Solves pi P = pi with sum(pi) = 1; requires the layer graph to be
    strongly connected so that the solution is unique and positive.
    """
    if not _walks.strongly_connected(spec.layer_adjacency()):
        raise PreconditionError("modulating chain is reducible; no unique stationary law")
    P = spec.row_matrix()
    A = (P - np.eye(spec.p)).T
    A[-1, :] = 1.0
    b = np.zeros(spec.p)
    b[-1] = 1.0
    pi = np.linalg.solve(A, b)
    if pi.min() <= 0:
        raise PreconditionError("stationary solve produced non-positive entries")
    return pi


def moments(spec: ProcessSpec) -> MomentData:
    """Local drifts, raw second moments and the global drift."""
    pi = stationary_distribution(spec)
    p, d = spec.p, spec.d
    drifts = np.zeros((p, p, d))
    seconds = np.zeros((p, p, d, d))
    for i in range(p):
        for j in range(p):
            xs, ws = spec.atoms_arrays(i, j)
            if len(ws) == 0:
                continue
            xf = xs.astype(float)
            drifts[i, j] = ws @ xf
            seconds[i, j] = np.einsum("k,ka,kb->ab", ws, xf, xf)
    global_drift = np.einsum("i,ija->a", pi, drifts)
    return MomentData(pi=pi, local_drifts=drifts, second_moments=seconds, global_drift=global_drift)


@lru_cache(maxsize=64)
def _chain_structure(spec: ProcessSpec, walk_cap: int, gcd_cap: int):
    edges = {
        (i, j): [dx for dx, _ in spec.jumps[i][j]]
        for i in range(spec.p)
        for j in range(spec.p)
        if spec.jumps[i][j]
    }
    sigs = _walks.closed_walk_signatures(edges, spec.p, spec.d, 0, walk_cap)
    disps = [v for _, v in sigs]
    diffs = {tuple(a - b for a, b in zip(v, w)) for v in disps for w in disps}
    lattice_full = _walks.lattice_spans_zd(diffs, spec.d)
    cone_full = _walks.cone_spans_rd(disps, spec.d)
    long_sigs = _walks.closed_walk_signatures(edges, spec.p, spec.d, 0, gcd_cap)
    g = _walks.zero_walk_gcd(long_sigs)
    return sigs, lattice_full, cone_full, g


def validate(spec: ProcessSpec) -> ValidationReport:
    """Decide the standing structural assumptions for ``spec``.

    Full-chain irreducibility and aperiodicity are decided from bounded
    enumerations of closed walks at a base layer: the walk displacements
    must generate Z^d (exact lattice test) and positively span R^d (cone
    test), and zero-displacement walk lengths must have gcd 1.  Both
    enumeration caps appear in the diagnostics.
    """
    rows_ok = True  # enforced at construction; re-checked for the report
    for i in range(spec.p):
        mass = sum(w for m in spec.jumps[i] for _, w in m)
        rows_ok = rows_ok and abs(mass - 1.0) <= ROW_MASS_TOL

    markov_irr = _walks.strongly_connected(spec.layer_adjacency())

    walk_cap = spec.p * (2 + spec.max_jump_norm())
    gcd_cap = 4 * walk_cap
    sigs, lattice_full, cone_full, g = _chain_structure(spec, walk_cap, gcd_cap)
    chain_irr = markov_irr and lattice_full and cone_full
    aperiodic = markov_irr and g == 1

    if markov_irr:
        drift = moments(spec).global_drift
        non_centered = float(np.linalg.norm(drift)) > DRIFT_ZERO_TOL
    else:
        drift = None
        non_centered = False

    diagnostics = {
        "walk_enumeration_cap": walk_cap,
        "gcd_enumeration_cap": gcd_cap,
        "closed_walks_found": len(sigs),
        "displacement_lattice_full": lattice_full,
        "displacement_cone_full": cone_full,
        "zero_walk_length_gcd": g,
        "global_drift": None if drift is None else [float(v) for v in drift],
    }
    return ValidationReport(
        rows_stochastic=rows_ok,
        markov_irreducible=markov_irr,
        chain_irreducible=chain_irr,
        aperiodic=aperiodic,
        non_centered=non_centered,
        diagnostics=diagnostics,
    )


def require_assumptions(spec: ProcessSpec, *, non_centered: bool = False) -> ValidationReport:
    """Raise PreconditionError unless the standing assumptions hold."""
    report = validate(spec)
    if not (report.markov_irreducible and report.chain_irreducible):
        raise PreconditionError("process is not irreducible")
    if not report.aperiodic:
        raise PreconditionError("process is not aperiodic")
    if non_centered and not report.non_centered:
        raise PreconditionError(
            "process is centered (zero global drift); a non-zero drift is required"
        )
    return report
