"""Finite-difference oracle for the position-dependent-mass Hamiltonian.

The kinetic term -(1/2) d/dx (1/m) d/dx is discretized in flux form with 1/m
taken at half points, which yields an exactly symmetric tridiagonal matrix
with Dirichlet ends. Radial problems use the same operator with the effective
potential V + l(l+1)/(2 m r^2) - m'/(2 m^2 r), either on a uniform r grid or on
a uniform grid in u = ln r (with the Jacobian folded in symmetrically).

``verify`` compares a constructed system against this oracle. It only uses
m, V and the domain to build H; analytic wavefunctions enter overlaps,
residuals and the choice of the default box.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
import math

import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal

from .errors import ConvergenceFailure, InvalidGrid, SingularMass
from .pct_maps import count_nodes, truncation_box

SCHEMA = "pct-pdm/1"
RADIAL_NOTE = (
    "radial operator: the first-order mass term of the reduced radial equation equals the flux form "
    "-(1/2)(phi'/m)' plus the potential -m'/(2 m^2 r); no discrepancy with the three-dimensional Hamiltonian"
)


class Coordinate(str, Enum):
    LINEAR = "Linear"
    LOG = "Log"


@dataclass(frozen=True)
class Grid:
    """N interior nodes a + i h (i = 1..N), h = (b - a)/(N + 1); for Log grids a, b are in u = ln r."""

    a: float
    b: float
    N: int
    coordinate: Coordinate = Coordinate.LINEAR

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b) and self.a < self.b):
            raise InvalidGrid(f"grid needs finite a < b, got [{self.a}, {self.b}]")
        if int(self.N) != self.N or self.N < 16:
            raise InvalidGrid(f"grid needs N >= 16 interior points, got {self.N}")
        object.__setattr__(self, "coordinate", Coordinate(self.coordinate))

    @property
    def h(self):
        return (self.b - self.a) / (self.N + 1)

    @property
    def nodes(self):
        return self.a + self.h * np.arange(1, self.N + 1)

    @property
    def half_points(self):
        return self.a + self.h * (np.arange(0, self.N + 1) + 0.5)

    def refined(self, times=1):
        """Same interval, h halved ``times`` times (N -> 2N + 1 keeps the old nodes)."""
        n = self.N
        for _ in range(times):
            n = 2 * n + 1
        return replace(self, N=n)

    def physical_nodes(self):
        return np.exp(self.nodes) if self.coordinate is Coordinate.LOG else self.nodes

    def to_dict(self):
        return {"a": self.a, "b": self.b, "N": self.N, "h": self.h, "coordinate": self.coordinate.value}


@dataclass(frozen=True)
class DiscreteHamiltonian:
    diag: np.ndarray
    offdiag: np.ndarray
    grid: Grid
    bc: str = "Dirichlet"

    @property
    def N(self):
        return self.diag.size

    def apply(self, v):
        v = np.asarray(v, dtype=float)
        out = self.diag * v
        out[:-1] += self.offdiag * v[1:]
        out[1:] += self.offdiag * v[:-1]
        return out

    def dense(self):
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)


def _weights(profile, xs):
    with np.errstate(all="ignore"):
        m = np.asarray(profile.m(xs), dtype=float)
    bad = ~(np.isfinite(m) & (m > 0))
    if np.any(bad):
        raise SingularMass(f"m <= 0 or not finite at x={xs[bad][0]:.6g}; shrink the domain")
    return 1.0 / m


def _finite(values, xs, what):
    values = np.asarray(values, dtype=float)
    if values.shape != xs.shape:
        values = np.broadcast_to(values, xs.shape).copy()
    if not np.all(np.isfinite(values)):
        bad = xs[~np.isfinite(values)]
        raise SingularMass(f"{what} is not finite at x={bad[0]:.6g}")
    return values


def discretize_1d(profile, V, grid: Grid) -> DiscreteHamiltonian:
    """-(1/2h^2)[w+(phi_{i+1} - phi_i) - w-(phi_i - phi_{i-1})] + V phi_i with w = 1/m at half points.

    A Log grid (u = ln x, needs x > 0) is accepted for half-line problems whose
    wavefunctions have power-law behaviour at x = 0.
    """
    if grid.coordinate is Coordinate.LOG:
        return _log_hamiltonian(profile, V, grid)
    xs, hp = grid.nodes, grid.half_points
    w = _weights(profile, hp)
    with np.errstate(all="ignore"):
        v = _finite(V(xs), xs, "V")
    h2 = grid.h**2
    diag = 0.5 * (w[:-1] + w[1:]) / h2 + v
    off = -0.5 * w[1:-1] / h2
    return DiscreteHamiltonian(diag, off, grid)


def _log_hamiltonian(profile, W, grid):
    # -(1/2) d/dx (1/m) d/dx with x = e^u becomes -(1/2) e^-u d/du (e^-u/m) d/du;
    # scaling the unknowns by sqrt(x) makes the matrix symmetric
    u, uh = grid.nodes, grid.half_points
    r = np.exp(u)
    with np.errstate(all="ignore"):
        w = _finite(W(r), r, "potential")
    p = np.exp(-uh) * _weights(profile, np.exp(uh))
    h2 = grid.h**2
    diag = (0.5 * (p[:-1] + p[1:]) / h2 + w * r) / r
    off = -0.5 * p[1:-1] / h2 / np.exp(0.5 * (u[:-1] + u[1:]))
    return DiscreteHamiltonian(diag, off, grid)


def effective_radial_potential(profile, V, ell, r):
    r = np.asarray(r, dtype=float)
    m, dm = profile.m(r), profile.dm(r)
    return V(r) + ell * (ell + 1) / (2.0 * m * r * r) - dm / (2.0 * m * m * r)


def discretize_radial(profile, V, ell, grid: Grid) -> DiscreteHamiltonian:
    """Reduced radial equation for phi = r chi on a linear r grid or a uniform u = ln r grid.

    On the log grid the unknowns are sqrt(r) phi, so the matrix stays
    symmetric and unit vectors correspond to unit L2 norm in r.
    """
    if ell < 0 or int(ell) != ell:
        raise InvalidGrid("l must be a nonnegative integer")
    if grid.coordinate is Coordinate.LINEAR:
        if grid.a < 0:
            raise InvalidGrid("linear radial grids need a >= 0")
        xs = grid.nodes
        with np.errstate(all="ignore"):
            W = _finite(effective_radial_potential(profile, V, ell, xs), xs, "effective potential")
        w = _weights(profile, grid.half_points)
        h2 = grid.h**2
        return DiscreteHamiltonian(0.5 * (w[:-1] + w[1:]) / h2 + W, -0.5 * w[1:-1] / h2, grid)
    return _log_hamiltonian(profile, lambda r: effective_radial_potential(profile, V, ell, r), grid)


def _sign_fix(vecs):
    for j in range(vecs.shape[1]):
        v = vecs[:, j]
        idx = np.flatnonzero(np.abs(v) > 1e-6 * np.abs(v).max())
        if idx.size and v[idx[0]] < 0:
            vecs[:, j] = -v
    return vecs


def eigen_lowest(H: DiscreteHamiltonian, k: int):
    """The k lowest eigenpairs: Sturm bisection for values, inverse iteration for vectors.

    Returns (values, vectors) with values ascending and unit-norm vectors as
    columns, each with its first significant component positive.
    """
    n = H.N
    if not 1 <= k <= n:
        raise ValueError(f"k must be in 1..{n}")
    try:
        # absolute tolerance far below roundoff: bisection then resolves each
        # eigenvalue to full relative precision even on strongly graded matrices
        vals, vecs = eigh_tridiagonal(
            H.diag, H.offdiag, select="i", select_range=(0, k - 1), lapack_driver="stebz", tol=1e-300
        )
    except (LinAlgError, ValueError) as exc:
        raise ConvergenceFailure(f"tridiagonal eigensolver failed: {exc}", {"N": n, "k": k}) from exc
    if not (np.all(np.isfinite(vals)) and np.all(np.isfinite(vecs))):
        raise ConvergenceFailure("non-finite eigenpairs", {"N": n, "k": k})
    resid = np.array([np.linalg.norm(H.apply(vecs[:, j]) - vals[j] * vecs[:, j]) for j in range(k)])
    scale = np.abs(H.diag).max() + 2.0 * (np.abs(H.offdiag).max() if H.offdiag.size else 0.0)
    if np.any(resid > 1e-6 * scale):
        raise ConvergenceFailure(
            "inverse iteration did not converge",
            {"N": n, "k": k, "residuals": resid.tolist(), "matrix_scale": scale},
        )
    return vals, _sign_fix(vecs)


# ------------------------------------------------------------- verification


@dataclass(frozen=True)
class PairRecord:
    n: int
    E_analytic: float
    E_numeric: float
    abs_err: float
    rel_err: float
    overlap: float
    residual: float
    ordinal: int
    E_raw: float
    nodes_analytic: int
    within_tol: bool

    def to_dict(self):
        return {k: _clean(v) for k, v in self.__dict__.items()}


def _clean(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    return v


@dataclass(frozen=True)
class SpectrumReport:
    system: dict
    grid_meta: dict
    tol: float
    candidate: str
    pairs: list
    unmatched_analytic: list
    unmatched_numeric: list
    numeric: list
    numeric_raw: list
    convergence: list
    adjudication: dict
    offsets: dict
    spacings: list
    numeric_nodes: list
    box_stability: dict | None = None
    other_segments: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def passed(self):
        return not self.unmatched_analytic and all(p.within_tol for p in self.pairs)

    def to_dict(self):
        return _clean(
            {
                "schema": SCHEMA,
                "system": self.system,
                "grid": self.grid_meta,
                "tol": self.tol,
                "candidate": self.candidate,
                "passed": self.passed,
                "pairs": [p.to_dict() for p in self.pairs],
                "unmatched_analytic": self.unmatched_analytic,
                "unmatched_numeric": self.unmatched_numeric,
                "numeric": self.numeric,
                "numeric_raw": self.numeric_raw,
                "numeric_nodes": self.numeric_nodes,
                "convergence": self.convergence,
                "adjudication": self.adjudication,
                "offsets": self.offsets,
                "spacings": self.spacings,
                "box_stability": self.box_stability,
                "other_segments": self.other_segments,
                "notes": self.notes,
            }
        )

    def check_consistency(self):
        """List of internal inconsistencies; empty when the report hangs together."""
        problems = []
        num = self.numeric
        claimed = [p.ordinal for p in self.pairs]
        if len(set(claimed)) != len(claimed):
            problems.append("a numeric level is claimed twice")
        if any(b < a for a, b in zip(self.numeric_raw, self.numeric_raw[1:])):
            problems.append("raw numeric levels are not ascending")
        for p in self.pairs:
            if not 0 <= p.ordinal < len(num) or num[p.ordinal] != p.E_numeric:
                problems.append(f"pair n={p.n} does not point at its numeric level")
                continue
            if not math.isclose(p.abs_err, abs(p.E_numeric - p.E_analytic), rel_tol=1e-12, abs_tol=1e-300):
                problems.append(f"pair n={p.n} abs_err inconsistent")
            if p.E_analytic != 0 and not math.isclose(
                p.rel_err, p.abs_err / abs(p.E_analytic), rel_tol=1e-12, abs_tol=1e-300
            ):
                problems.append(f"pair n={p.n} rel_err inconsistent")
            if math.isfinite(p.overlap) and not -1e-12 <= p.overlap <= 1.0 + 1e-12:
                problems.append(f"pair n={p.n} overlap outside [0, 1]")
            if p.within_tol != (p.rel_err < self.tol):
                problems.append(f"pair n={p.n} tolerance flag inconsistent")
        free = sorted(set(range(len(num))) - set(claimed))
        if sorted(self.unmatched_numeric) != sorted(num[i] for i in free):
            problems.append("unmatched numeric levels do not complement the matched ones")
        matched_n = {p.n for p in self.pairs}
        if matched_n & set(self.unmatched_analytic):
            problems.append("a level is both matched and unmatched")
        return problems


def _segments(grid: Grid, system):
    """Split the grid interval at singular points and operative-domain edges.

    Returns (primary, others) as (lo, hi) pairs in grid coordinates; primary
    lies inside the operative domain.
    """
    log = grid.coordinate is Coordinate.LOG
    tr = (lambda v: math.log(v) if v > 0 else -math.inf) if log else (lambda v: v)
    lo_op, hi_op = (tr(v) if math.isfinite(v) else v for v in system.operative_domain)
    cuts = {grid.a, grid.b}
    for s in tuple(system.singular_points) + tuple(system.operative_domain):
        if math.isfinite(s) and (not log or s > 0):
            c = tr(s)
            if grid.a < c < grid.b:
                cuts.add(c)
    cuts = sorted(cuts)
    primary, others = None, []
    for lo, hi in zip(cuts, cuts[1:]):
        if lo >= lo_op - 1e-15 and hi <= hi_op + 1e-15:
            if primary is None or hi - lo > primary[1] - primary[0]:
                if primary is not None:
                    others.append(primary)
                primary = (lo, hi)
            else:
                others.append((lo, hi))
        else:
            others.append((lo, hi))
    return primary, others


def _sub_grid(grid: Grid, lo, hi):
    if (lo, hi) == (grid.a, grid.b):
        return grid
    n = max(16, int(round((hi - lo) / grid.h)) - 1)
    return Grid(lo, hi, n, grid.coordinate)


def _hamiltonian(system, grid):
    if system.radial:
        return discretize_radial(system.profile, system.V, system.ell, grid)
    return discretize_1d(system.profile, system.V, grid)


def _solve(system, grid, k):
    H = _hamiltonian(system, grid)
    vals, vecs = eigen_lowest(H, min(k, H.N))
    return H, vals, vecs


def _analytic_vector(system, n, grid):
    x = grid.physical_nodes()
    with np.errstate(all="ignore"):
        a = np.asarray(system.phi(n, x), dtype=float)
    if grid.coordinate is Coordinate.LOG:
        a = a * np.sqrt(x)
    norm = np.linalg.norm(a)
    if not (np.all(np.isfinite(a)) and norm > 0):
        return None
    return a / norm


def _extrapolate(levels, method):
    """Combine eigenvalues from successively halved h, ordinal by ordinal."""
    e = [np.asarray(v) for v in levels]
    if method is None or len(e) == 1:
        return e[0]
    if method == "richardson":
        k = min(len(e[0]), len(e[1]))
        return (4.0 * e[1][:k] - e[0][:k]) / 3.0
    k = min(len(v) for v in e)
    x0, x1, x2 = e[0][:k], e[1][:k], e[2][:k]
    d1, d2 = x1 - x0, x2 - x1
    den = d2 - d1
    with np.errstate(all="ignore"):
        out = x2 - d2 * d2 / den
    return np.where(np.abs(den) > 1e-14 * np.maximum(1.0, np.abs(x2)), out, x2)


def _greedy(energies, numeric, tol):
    """Match each analytic level (ascending n) to the nearest unclaimed numeric level within 10·tol·|E|."""
    claimed, out = set(), {}
    for n, e in energies:
        window = 10.0 * tol * abs(e) if e != 0 else 10.0 * tol
        best, dist = None, math.inf
        for i, v in enumerate(numeric):
            d = abs(v - e)
            if i not in claimed and d <= window and d < dist:
                best, dist = i, d
        if best is not None:
            claimed.add(best)
            out[n] = best
    return out


def default_grid(system, n_check, N=4000, coordinate=None, level=1e-8) -> Grid:
    """Box where |phi_n| (n <= n_check) falls below ``level`` of its max at truncated edges."""
    ns = range(n_check + 1) if system.n_max is None else range(min(n_check, system.n_max) + 1)
    lo, hi = truncation_box(system, ns, level=level)
    log = coordinate == Coordinate.LOG or (coordinate is None and system.log_grid)
    if log and lo > 0:
        return Grid(math.log(lo), math.log(hi), N, Coordinate.LOG)
    return Grid(lo, hi, N, Coordinate.LINEAR)


def verify(
    system,
    grid: Grid | None = None,
    n_check: int = 5,
    tol: float = 1e-6,
    extrapolate: str | None = "richardson",
    box_check: bool = True,
    candidate: str | None = None,
) -> SpectrumReport:
    """Compare analytic levels and wavefunctions of ``system`` against the finite-difference oracle.

    extrapolate: None (raw E at N), "richardson" (N and 2N+1) or "aitken"
    (N, 2N+1, 4N+3; for problems converging slower than h^2).
    """
    if extrapolate not in (None, "richardson", "aitken"):
        raise ValueError(f"unknown extrapolation {extrapolate!r}")
    if grid is None:
        grid = default_grid(system, n_check)
    if grid.coordinate is Coordinate.LOG and not system.operative_domain[0] >= 0:
        raise InvalidGrid("log grids need an operative domain inside x > 0")
    candidate = candidate or system.primary
    primary, others = _segments(grid, system)
    if primary is None:
        raise InvalidGrid(f"grid [{grid.a}, {grid.b}] does not reach the operative domain")
    g = _sub_grid(grid, *primary)
    ns = [n for n in range(n_check + 1) if system.n_max is None or n <= system.n_max]
    k = max(ns) + 1

    H, vals, vecs = _solve(system, g, k)
    levels = [vals]
    n_levels = {"richardson": 2, "aitken": 3}.get(extrapolate, 2)
    for t in range(1, n_levels):
        levels.append(_solve(system, g.refined(t), k)[1])
    best = _extrapolate(levels, extrapolate)
    numeric = [float(v) for v in best]

    analytic = {name: [(n, float(f(n))) for n in ns] for name, f in system.energy_candidates.items()}
    matches = {name: _greedy(es, numeric, tol) for name, es in analytic.items()}

    pairs, unmatched = [], []
    E_primary = dict(analytic[candidate])
    for n in ns:
        i = matches[candidate].get(n)
        if i is None:
            unmatched.append(n)
            continue
        ea, en = E_primary[n], numeric[i]
        a = _analytic_vector(system, n, g)
        if a is None:
            overlap = residual = math.nan
            nodes = -1
        else:
            overlap = float(abs(np.dot(a, vecs[:, i])))
            residual = float(np.linalg.norm(H.apply(a) - ea * a))
            nodes = count_nodes(a)
        abs_err = abs(en - ea)
        rel_err = abs_err / abs(ea) if ea != 0 else abs_err
        pairs.append(PairRecord(n, ea, en, abs_err, rel_err, overlap, residual, i, float(vals[i]), nodes, rel_err < tol))
    claimed = {p.ordinal for p in pairs}
    unmatched_numeric = [numeric[i] for i in range(len(numeric)) if i not in claimed]

    convergence = []
    for j in range(len(numeric)):
        row = {"ordinal": j, "E_levels": [float(lv[j]) for lv in levels if j < len(lv)]}
        p = next((p for p in pairs if p.ordinal == j), None)
        if p is not None:
            errs = [abs(lv[j] - p.E_analytic) for lv in levels if j < len(lv)]
            row["errors_vs_analytic"] = errs
            row["ratio_vs_analytic"] = errs[0] / errs[1] if errs[1] > 0 else math.inf
        if len(row["E_levels"]) >= 3:
            e0, e1, e2 = row["E_levels"][:3]
            row["ratio_successive"] = (e0 - e1) / (e1 - e2) if e1 != e2 else math.inf
        convergence.append(row)

    adjudication = {}
    for n in ns:
        entry = {}
        for name in analytic:
            i = matches[name].get(n)
            entry[name] = None if i is None else {"ordinal": i, "E_numeric": numeric[i]}
        entry["supported"] = [name for name in analytic if matches[name].get(n) is not None]
        adjudication[str(n)] = entry
    counts = {name: len(m) for name, m in matches.items()}
    top = max(counts.values())
    chosen = None if top == 0 else (candidate if counts[candidate] == top else max(counts, key=counts.get))
    adjudication["match_counts"] = counts
    adjudication["chosen"] = chosen

    offsets = {}
    for name, es in analytic.items():
        d = [numeric[n] - e for n, e in es if n < len(numeric)]
        if d:
            offsets[name] = {
                "by_ordinal": d,
                "mean": float(np.mean(d)),
                "spread": float(np.max(d) - np.min(d)),
            }
    spacings = [b - a for a, b in zip(numeric, numeric[1:])]

    box = _box_stability(system, g, k, vals) if box_check else None
    other = []
    for lo, hi in others:
        try:
            sg = _sub_grid(grid, lo, hi)
            ov = _solve(system, sg, k)[1]
            other.append({"interval": [lo, hi], "N": sg.N, "lowest": [float(v) for v in ov]})
        except Exception as exc:  # a segment outside the profile domain is reported, not fatal
            other.append({"interval": [lo, hi], "error": f"{type(exc).__name__}: {exc}"})

    notes = [RADIAL_NOTE] if system.radial else []
    meta = dict(grid.to_dict())
    meta["segment"] = g.to_dict()
    meta["extrapolation"] = extrapolate
    meta["levels"] = n_levels if extrapolate else 1
    return SpectrumReport(
        system=system.metadata(),
        grid_meta=meta,
        tol=tol,
        candidate=candidate,
        pairs=pairs,
        unmatched_analytic=unmatched,
        unmatched_numeric=unmatched_numeric,
        numeric=numeric,
        numeric_raw=[float(v) for v in vals],
        convergence=convergence,
        adjudication=adjudication,
        offsets=offsets,
        spacings=spacings,
        numeric_nodes=[count_nodes(vecs[:, j]) for j in range(vecs.shape[1])],
        box_stability=box,
        other_segments=other,
        notes=notes,
    )


def _box_stability(system, g: Grid, k, vals):
    """Re-solve on a box enlarged by half its width at truncated (infinite-domain) edges, same h."""
    log = g.coordinate is Coordinate.LOG
    a, b = system.operative_domain
    if log:
        a = math.log(a) if a > 0 else -math.inf
        b = math.log(b) if math.isfinite(b) else math.inf
    width = g.b - g.a
    lo = g.a - 0.5 * width if not math.isfinite(a) else g.a
    hi = g.b + 0.5 * width if not math.isfinite(b) else g.b
    if (lo, hi) == (g.a, g.b):
        return {"enlarged": False}
    n = int(round((hi - lo) / g.h)) - 1
    try:
        big = _solve(system, Grid(lo, hi, n, g.coordinate), k)[1]
    except Exception as exc:
        return {"enlarged": True, "error": f"{type(exc).__name__}: {exc}"}
    m = min(len(big), len(vals))
    shifts = np.abs(np.asarray(big[:m]) - np.asarray(vals[:m]))
    return {"enlarged": True, "interval": [lo, hi], "shifts": shifts.tolist(), "max_shift": float(shifts.max())}
