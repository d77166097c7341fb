"""Orthogonal polynomials and quadrature rules.

Hermite and generalized Laguerre polynomials are evaluated with their upward
three-term recurrences, which are stable for the moderate degrees (n <~ 50)
used by the wavefunction formulas. Arguments may be scalars or numpy arrays.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
import math

import numpy as np
from scipy.special import gammaln

from .errors import IntegrationFailure, NonFiniteIntegrand


class Family(str, Enum):
    HERMITE = "Hermite"
    LAGUERRE = "GeneralizedLaguerre"


@dataclass(frozen=True)
class PolynomialEval:
    family: Family
    degree: int
    argument: float
    value: float
    parameter: float | None = None


def _check_degree(n):
    if int(n) != n or n < 0:
        raise ValueError(f"degree must be a nonnegative integer, got {n!r}")
    return int(n)


def hermite(n, x):
    """Physicists' Hermite polynomial H_n(x)."""
    n = _check_degree(n)
    x = np.asarray(x, dtype=float)
    h_prev = np.ones_like(x)
    if n == 0:
        return h_prev if h_prev.ndim else float(h_prev)
    h = 2.0 * x
    for k in range(1, n):
        h_prev, h = h, 2.0 * x * h - 2.0 * k * h_prev
    return h if h.ndim else float(h)


def laguerre(n, nu, x):
    """Generalized Laguerre polynomial L_n^nu(x)."""
    n = _check_degree(n)
    x = np.asarray(x, dtype=float)
    l_prev = np.ones_like(x)
    if n == 0:
        return l_prev if l_prev.ndim else float(l_prev)
    lag = 1.0 + nu - x
    for k in range(1, n):
        l_prev, lag = lag, ((2 * k + 1 + nu - x) * lag - (k + nu) * l_prev) / (k + 1)
    return lag if lag.ndim else float(lag)


def hermite_eval(n, x) -> PolynomialEval:
    return PolynomialEval(Family.HERMITE, n, float(x), float(hermite(n, x)))


def laguerre_eval(n, nu, x) -> PolynomialEval:
    if nu <= -1:
        raise ValueError("Laguerre parameter must exceed -1")
    return PolynomialEval(Family.LAGUERRE, n, float(x), float(laguerre(n, nu, x)), float(nu))


def hermite_norm_sq(n):
    """sqrt(pi) 2^n n!, the squared norm of H_n under exp(-x^2)."""
    return math.exp(0.5 * math.log(math.pi) + n * math.log(2.0) + gammaln(n + 1))


def laguerre_norm_sq(n, nu):
    """Gamma(n+nu+1)/n!, the squared norm of L_n^nu under x^nu exp(-x)."""
    return math.exp(gammaln(n + nu + 1) - gammaln(n + 1))


# ---------------------------------------------------------------- quadrature


class RuleKind(str, Enum):
    SIMPSON = "CompositeSimpson"
    GAUSS_LEGENDRE = "GaussLegendre"


@dataclass(frozen=True)
class QuadratureRule:
    kind: RuleKind
    nodes: np.ndarray
    weights: np.ndarray
    interval: tuple[float, float]

    def __post_init__(self):
        a, b = self.interval
        if not a < b:
            raise ValueError("quadrature interval must satisfy a < b")
        if self.nodes.shape != self.weights.shape:
            raise ValueError("nodes and weights differ in length")
        if np.any(np.diff(self.nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if self.nodes[0] < a or self.nodes[-1] > b:
            raise ValueError("nodes must lie inside the interval")
        if np.any(self.weights <= 0):
            raise ValueError("weights must be positive")


def simpson_rule(a, b, npts=2001) -> QuadratureRule:
    """Composite Simpson rule on ``npts`` equally spaced nodes (npts odd)."""
    if npts < 3:
        raise ValueError("Simpson rule needs at least 3 nodes")
    if npts % 2 == 0:
        npts += 1
    x = np.linspace(a, b, npts)
    h = (b - a) / (npts - 1)
    w = np.full(npts, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return QuadratureRule(RuleKind.SIMPSON, x, w * h / 3.0, (float(a), float(b)))


def gauss_legendre_rule(a, b, order=64, panels=1) -> QuadratureRule:
    """Composite Gauss-Legendre rule with ``panels`` equal panels."""
    t, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    nodes, weights = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (hi - lo)
        nodes.append(lo + half * (t + 1.0))
        weights.append(half * w)
    return QuadratureRule(
        RuleKind.GAUSS_LEGENDRE, np.concatenate(nodes), np.concatenate(weights), (float(a), float(b))
    )


def panel_gauss_rule(edges, order=32) -> QuadratureRule:
    """Gauss-Legendre rule on arbitrary (e.g. geometrically graded) panels."""
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ValueError("panel edges must be strictly increasing")
    t, w = np.polynomial.legendre.leggauss(order)
    half = 0.5 * np.diff(edges)
    nodes = (edges[:-1, None] + half[:, None] * (t[None, :] + 1.0)).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return QuadratureRule(RuleKind.GAUSS_LEGENDRE, nodes, weights, (float(edges[0]), float(edges[-1])))


def integrate(f, rule: QuadratureRule) -> float:
    values = np.asarray(f(rule.nodes), dtype=float)
    if values.shape != rule.nodes.shape:
        values = np.broadcast_to(values, rule.nodes.shape)
    if not np.all(np.isfinite(values)):
        bad = rule.nodes[~np.isfinite(values)]
        raise NonFiniteIntegrand(f"integrand not finite at {bad.size} node(s), first x={bad[0]:.6g}")
    return float(np.dot(rule.weights, values))


def adaptive_simpson(f, a, b, tol=1e-10, max_depth=50) -> float:
    """Adaptive Simpson quadrature of a scalar function to absolute ``tol``.

    Raises IntegrationFailure when a subinterval would need more than
    ``max_depth`` bisections to meet its share of the tolerance.
    """
    if a == b:
        return 0.0
    sign = 1.0
    if a > b:
        a, b, sign = b, a, -1.0

    def simpson(fa, fm, fb, lo, hi):
        return (hi - lo) / 6.0 * (fa + 4.0 * fm + fb)

    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    for v, x in ((fa, a), (fb, b), (fm, 0.5 * (a + b))):
        if not math.isfinite(v):
            raise NonFiniteIntegrand(f"integrand not finite at x={x:.6g}")
    total = 0.0
    stack = [(a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 0)]
    while stack:
        lo, hi, flo, fmid, fhi, whole, eps, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = f(lm), f(rm)
        if not (math.isfinite(flm) and math.isfinite(frm)):
            raise NonFiniteIntegrand(f"integrand not finite near x={mid:.6g}")
        left = simpson(flo, flm, fmid, lo, mid)
        right = simpson(fmid, frm, fhi, mid, hi)
        delta = left + right - whole
        if abs(delta) <= 15.0 * eps:
            total += left + right + delta / 15.0
        elif depth >= max_depth:
            raise IntegrationFailure(
                f"adaptive Simpson exceeded depth {max_depth} on [{lo:.6g}, {hi:.6g}]"
            )
        else:
            stack.append((lo, mid, flo, flm, fmid, left, 0.5 * eps, depth + 1))
            stack.append((mid, hi, fmid, frm, fhi, right, 0.5 * eps, depth + 1))
    return sign * total
