"""Point canonical transformation machinery.

A transformation y = q(x), psi(y) = g(x) phi(x) with g = sqrt(q'/m) maps the
constant-mass reference equation onto the position-dependent-mass one when

    V(x) - E = (q'^2/m) [Vref(q(x)) - Eref] + F(m, q)/m,

    F(m, q) = (1/4) [m''/m - (3/2)(m'/m)^2 - q'''/q' + (3/2)(q''/q')^2].

This module provides the transformation functions, the reference problems,
F and a residual checker for that identity.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
import math
from typing import Callable

import numpy as np

from .errors import InvalidParams, SingularPoint
from .mass_catalog import MASS_EPS, MassProfile, mu
from .special_fn import hermite, laguerre

FD_STEP = 1e-4
QPRIME_EPS = 1e-12


def _fd_step(x):
    return FD_STEP * np.maximum(1.0, np.abs(x))


@dataclass(frozen=True)
class PctFunctions:
    """q and its derivatives; missing higher derivatives come from fourth-order central differences of q'."""

    q: Callable
    dq: Callable
    d2q: Callable | None = None
    d3q: Callable | None = None
    label: str = ""

    def q2(self, x):
        if self.d2q is not None:
            return self.d2q(x)
        x = np.asarray(x, dtype=float)
        h = _fd_step(x)
        f = self.dq
        return (8.0 * (f(x + h) - f(x - h)) - (f(x + 2 * h) - f(x - 2 * h))) / (12.0 * h)

    def q3(self, x):
        if self.d3q is not None:
            return self.d3q(x)
        x = np.asarray(x, dtype=float)
        h = _fd_step(x)
        f = self.dq
        return (16.0 * (f(x + h) + f(x - h)) - (f(x + 2 * h) + f(x - 2 * h)) - 30.0 * f(x)) / (12.0 * h * h)

    def g(self, profile: MassProfile, x):
        x = np.asarray(x, dtype=float)
        return np.sqrt(self.dq(x) / profile.m(x))


def tau_map(profile: MassProfile, tau) -> PctFunctions:
    """q = tau * mu, so that q' = sqrt(m)."""
    if not tau > 0:
        raise InvalidParams("tau must be positive")
    return PctFunctions(
        q=lambda x: tau * mu(profile, tau, x),
        dq=lambda x: np.sqrt(profile.m(np.asarray(x, dtype=float))),
        label="tau*mu",
    )


def power_map(profile: MassProfile, tau, coeff, power) -> PctFunctions:
    """q = coeff * mu^power (needs mu > 0)."""
    if not tau > 0:
        raise InvalidParams("tau must be positive")

    def q(x):
        return coeff * np.asarray(mu(profile, tau, x)) ** power

    def dq(x):
        x = np.asarray(x, dtype=float)
        u = np.asarray(mu(profile, tau, x))
        return coeff * power * u ** (power - 1.0) * np.sqrt(profile.m(x)) / tau

    return PctFunctions(q=q, dq=dq, label=f"{coeff:g}*mu^{power:g}")


# ---------------------------------------------------------- reference problems


class ReferenceClass(str, Enum):
    OSCILLATOR = "Oscillator"
    COULOMB = "Coulomb"
    MORSE = "Morse"
    OSCILLATOR3D = "Oscillator3D"


@dataclass(frozen=True)
class ReferenceProblem:
    kind: ReferenceClass
    V: Callable
    E: Callable
    psi: Callable
    domain: tuple[float, float]
    params: dict = field(default_factory=dict)
    n_max: int | None = None
    n_max_candidates: dict = field(default_factory=dict)

    def valid_n(self, n):
        return n >= 0 and (self.n_max is None or n <= self.n_max)


def oscillator(lam) -> ReferenceProblem:
    if not lam > 0:
        raise InvalidParams("lambda must be positive")
    l2 = lam * lam
    return ReferenceProblem(
        ReferenceClass.OSCILLATOR,
        V=lambda y: 0.5 * l2 * l2 * np.asarray(y, dtype=float) ** 2,
        E=lambda n: l2 * (n + 0.5),
        psi=lambda n, y: np.exp(-0.5 * l2 * np.asarray(y, dtype=float) ** 2) * hermite(n, lam * np.asarray(y)),
        domain=(-math.inf, math.inf),
        params={"lambda": lam},
    )


def coulomb(Z) -> ReferenceProblem:
    if not Z > 0:
        raise InvalidParams("Z must be positive")

    def psi(n, y):
        y = np.asarray(y, dtype=float)
        k = Z / (n + 1.0)
        return y * np.exp(-k * y) * laguerre(n, 1.0, 2.0 * k * y)

    return ReferenceProblem(
        ReferenceClass.COULOMB,
        V=lambda y: -Z / np.asarray(y, dtype=float),
        E=lambda n: -(Z**2) / (2.0 * (n + 1.0) ** 2),
        psi=psi,
        domain=(0.0, math.inf),
        params={"Z": Z},
    )


def morse_n_max_candidates(xi):
    """Both readings of the top Morse level.

    "printed": the largest integer not exceeding xi/2.
    "normalizable": the largest n with xi - 2n - 1 > 0 (None if there is none).
    """
    top = math.ceil((xi - 1.0) / 2.0) - 1
    return {"printed": int(math.floor(xi / 2.0)), "normalizable": top if top >= 0 else None}


def morse_reference(lam, xi, sign="printed") -> ReferenceProblem:
    """Morse reference with the well written either as printed (negative) or standard (positive).

    The printed form has Vref = -(lam^2/2)(e^{-2 lam y} - xi)^2 and
    Eref = -(lam^2/2)(xi - 2n - 1)^2 - lam^2 xi^2/2; the standard form flips the
    sign of Vref and has Eref = lam^2 xi^2/2 - (lam^2/2)(xi - 2n - 1)^2.
    """
    if not (lam > 0 and xi > 0):
        raise InvalidParams("Morse lambda and xi must be positive")
    if sign not in ("printed", "standard"):
        raise InvalidParams(f"unknown Morse sign convention {sign!r}")
    s = -1.0 if sign == "printed" else 1.0
    l2 = lam * lam

    def V(y):
        return s * 0.5 * l2 * (np.exp(-2.0 * lam * np.asarray(y, dtype=float)) - xi) ** 2

    def E(n):
        if sign == "printed":
            return -0.5 * l2 * (xi - 2 * n - 1) ** 2 - 0.5 * l2 * xi**2
        return 0.5 * l2 * xi**2 - 0.5 * l2 * (xi - 2 * n - 1) ** 2

    def psi(n, y):
        y = np.asarray(y, dtype=float)
        z = np.exp(-2.0 * lam * y)
        k = xi - 2 * n - 1
        return np.exp(-k * lam * y - 0.5 * z) * laguerre(n, k, z)

    cands = morse_n_max_candidates(xi)
    return ReferenceProblem(
        ReferenceClass.MORSE,
        V=V,
        E=E,
        psi=psi,
        domain=(-math.inf, math.inf),
        params={"lambda": lam, "xi": xi, "sign": sign},
        n_max=cands["printed"],
        n_max_candidates=cands,
    )


OSC3D_CONSTANTS = {"printed": 0.75, "standard": 1.5}


def oscillator3d(lam, L, spectrum="standard") -> ReferenceProblem:
    """Radial 3D isotropic oscillator for the reduced function (lam rho)^{L+1} ... ."""
    if not lam > 0:
        raise InvalidParams("lambda must be positive")
    if spectrum not in OSC3D_CONSTANTS:
        raise InvalidParams(f"unknown spectrum variant {spectrum!r}")
    c = OSC3D_CONSTANTS[spectrum]
    l2 = lam * lam

    def psi(n, rho):
        rho = np.asarray(rho, dtype=float)
        return (lam * rho) ** (L + 1) * np.exp(-0.5 * l2 * rho**2) * laguerre(n, L + 0.5, l2 * rho**2)

    return ReferenceProblem(
        ReferenceClass.OSCILLATOR3D,
        V=lambda rho: 0.5 * l2 * l2 * np.asarray(rho, dtype=float) ** 2,
        E=lambda n: l2 * (2 * n + L + c),
        psi=psi,
        domain=(0.0, math.inf),
        params={"lambda": lam, "L": L, "spectrum": spectrum},
    )


# ----------------------------------------------------------- F and residuals


def f_functional(profile: MassProfile, pct: PctFunctions, x):
    """F(m, q) = (1/4)[m''/m - (3/2)(m'/m)^2 - q'''/q' + (3/2)(q''/q')^2]."""
    x = np.asarray(x, dtype=float)
    m = np.asarray(profile.m(x), dtype=float)
    q1 = np.asarray(pct.dq(x), dtype=float)
    if np.any(m <= 0.0):
        raise SingularPoint("mass vanishes")
    if np.any(q1 == 0.0):
        raise SingularPoint("q' vanishes")
    b = profile.dm(x) / m
    c = pct.q2(x) / q1
    out = 0.25 * (profile.d2m(x) / m - 1.5 * b * b - pct.q3(x) / q1 + 1.5 * c * c)
    return out if np.ndim(out) else float(out)


def pct_rhs(profile: MassProfile, pct: PctFunctions, ref: ReferenceProblem, n, x):
    """(q'^2/m)[Vref(q) - Eref(n)] + F/m, which must equal V(x) - E."""
    x = np.asarray(x, dtype=float)
    m = profile.m(x)
    q1 = pct.dq(x)
    return q1 * q1 / m * (ref.V(pct.q(x)) - ref.E(n)) + f_functional(profile, pct, x) / m


@dataclass(frozen=True)
class ResidualReport:
    max_residual: float
    points: tuple
    residuals: tuple
    skipped: tuple

    def to_dict(self):
        return {
            "max_residual": self.max_residual,
            "points": list(self.points),
            "skipped": list(self.skipped),
        }


def residual_report(profile, pct, ref, n, V, E, xs) -> ResidualReport:
    """Pointwise residual of the transformation identity, skipping near-singular points."""
    if not ref.valid_n(n):
        raise InvalidParams(f"n={n} outside the reference range")
    kept, res, skipped = [], [], []
    for x in np.atleast_1d(np.asarray(xs, dtype=float)):
        m = float(profile.m(x))
        q1 = float(pct.dq(x)) if m > MASS_EPS else 0.0
        if m <= MASS_EPS or not abs(q1) > QPRIME_EPS:
            skipped.append(float(x))
            continue
        r = abs(float(V(x)) - E - float(pct_rhs(profile, pct, ref, n, x)))
        kept.append(float(x))
        res.append(r)
    if not kept:
        raise SingularPoint("every sample point is singular")
    return ResidualReport(max(res), tuple(kept), tuple(res), tuple(skipped))


def pct_residual(profile, pct, ref, n, V, E, xs) -> float:
    """max |V - E - (q'^2/m)[Vref(q) - Eref(n)] - F/m| over the usable points of ``xs``."""
    return residual_report(profile, pct, ref, n, V, E, xs).max_residual
