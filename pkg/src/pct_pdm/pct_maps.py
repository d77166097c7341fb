"""Exactly solvable position-dependent-mass systems built from reference problems.

Each constructor returns a TargetSystem carrying the potential, the energy
formula(s), unnormalized wavefunctions and the transformation used, so that
the construction can be re-checked through ``pct_core.pct_residual``.

Formulas are assembled term by term in their published form. Where a
published energy disagrees with the one implied by the transformation, both
are exposed in ``energy_candidates`` and the numerical oracle decides.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
import math
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from . import pct_core
from .errors import EmptyDomain, InvalidParams, NonNormalizable
from .mass_catalog import MassProfile, ScaleParams, correction_term, mu
from .special_fn import QuadratureRule, hermite, integrate, laguerre, panel_gauss_rule

MU_EPS = 1e-10
EDGE_LEVEL = 1e-8


class ClassTag(str, Enum):
    OSC1 = "Osc1"
    OSC2 = "Osc2"
    COU1 = "Cou1"
    COU2 = "Cou2"
    MORSE = "Morse"
    RADIAL_A = "Radial3DA"
    RADIAL_B = "Radial3DB"
    RADIAL_LOG = "Radial3DLog"


@dataclass(frozen=True)
class TargetSystem:
    class_tag: ClassTag
    profile: MassProfile
    params: ScaleParams
    V: Callable
    energy_candidates: dict
    phi: Callable
    operative_domain: tuple[float, float]
    transform: Callable | None = None
    n_max: int | None = None
    n_max_candidates: dict = field(default_factory=dict)
    singular_points: tuple = ()
    variant: str = "printed"
    primary: str = "printed"
    log_grid: bool = False
    notes: tuple = ()
    _norms: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def profile_id(self):
        return self.profile.id

    @property
    def radial(self):
        return False

    def E(self, n):
        self.check_n(n)
        return self.energy_candidates[self.primary](n)

    def check_n(self, n):
        if int(n) != n or n < 0 or (self.n_max is not None and n > self.n_max):
            raise InvalidParams(f"n={n} outside the level range of {self.class_tag.value}")

    def levels(self, n_max):
        top = n_max if self.n_max is None else min(n_max, self.n_max)
        return [(n, self.E(n)) for n in range(top + 1)]

    def spectrum_increasing(self, n_top=5):
        es = [e for _, e in self.levels(n_top)]
        return all(b > a for a, b in zip(es, es[1:]))

    def pct(self, n):
        """(PctFunctions, ReferenceProblem) realizing level n, or None when not available."""
        return None if self.transform is None else self.transform(n)

    def A(self, n):
        if n not in self._norms:
            self._norms[n] = normalize(self, n)
        return self._norms[n]

    def normalized_phi(self, n, x):
        return self.A(n) * self.phi(n, x)

    def metadata(self):
        return {
            "class": self.class_tag.value,
            "profile": self.profile.id,
            "profile_params": dict(self.profile.params),
            "params": self.params.as_dict(),
            "variant": self.variant,
            "primary_candidate": self.primary,
            "operative_domain": [_num(v) for v in self.operative_domain],
            "n_max": self.n_max,
            "n_max_candidates": dict(self.n_max_candidates),
            "energy_candidates": sorted(self.energy_candidates),
            "notes": list(self.notes),
        }


def _num(v):
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return float(v)


# --------------------------------------------------------------- domains


def positive_mu_domain(profile: MassProfile, tau, eps=MU_EPS):
    """Connected component of {mu > eps} that contains the right part of the profile domain."""
    a, b = profile.domain

    def f(x):
        return mu(profile, tau, x) - eps

    if math.isfinite(b):
        hi = b
    else:
        hi = max(a, 0.0) + 1.0 if math.isfinite(a) else 1.0
        for _ in range(64):
            if f(hi) > 0:
                break
            hi = 2.0 * hi + 1.0
    if not f(hi) > 0:
        raise EmptyDomain(f"mu <= {eps:g} on the whole domain of profile {profile.id!r}")
    if math.isfinite(a):
        lo = a
        if f(lo) > 0:
            return (a, b)
    else:
        lo, step = hi - 1.0, 1.0
        while f(lo) > 0:
            step *= 2.0
            lo = hi - step
            if lo < -1e6:
                return (a, b)
    return (brentq(f, lo, hi, xtol=1e-300, rtol=1e-15, maxiter=400), b)


# --------------------------------------------------------------- the maps


def _check_tau(tau):
    if not tau > 0:
        raise InvalidParams("tau must be positive")


def oscillator1(profile: MassProfile, alpha, tau) -> TargetSystem:
    """q = tau*mu onto the oscillator with lambda^2 = alpha/tau."""
    if not alpha > 0:
        raise InvalidParams("alpha must be positive")
    _check_tau(tau)
    lam = math.sqrt(alpha / tau)
    s = math.sqrt(alpha * tau)

    def V(x):
        return 0.5 * alpha**2 * np.asarray(mu(profile, tau, x)) ** 2 + correction_term(profile, x)

    def phi(n, x):
        u = np.asarray(mu(profile, tau, x))
        return profile.m(x) ** 0.25 * np.exp(-0.5 * alpha * tau * u * u) * hermite(n, s * u)

    pct = pct_core.tau_map(profile, tau)
    ref = pct_core.oscillator(lam)
    return TargetSystem(
        ClassTag.OSC1,
        profile,
        ScaleParams(tau=tau, alpha=alpha),
        V=V,
        energy_candidates={"printed": lambda n: alpha / tau * (n + 0.5)},
        phi=phi,
        operative_domain=profile.domain,
        transform=lambda n: (pct, ref),
        singular_points=profile.singular_points,
    )


def oscillator2(profile: MassProfile, tau, scale=1.0) -> TargetSystem:
    """q proportional to sqrt(mu) onto the oscillator.

    ``scale`` is the reference oscillator strength used for the transformation
    behind level n. It cancels from V, E and phi and only enters ``pct``.
    """
    _check_tau(tau)
    dom = positive_mu_domain(profile, tau)

    def V(x):
        x = np.asarray(x, dtype=float)
        u = np.asarray(mu(profile, tau, x))
        m, dm, d2m = profile.m(x), profile.dm(x), profile.d2m(x)
        bracket = d2m / m - 1.75 * (dm / m) ** 2 - 0.75 / tau**2 * m / u**2
        return -0.5 / tau**2 / u + bracket / (8.0 * m)

    def phi(n, x):
        u = np.asarray(mu(profile, tau, x))
        k = 2 * n + 1
        return (profile.m(x) * u) ** 0.25 * np.exp(-2.0 * u / k) * hermite(n, 2.0 * np.sqrt(u / k))

    def transform(n):
        c = 2.0 / (scale * math.sqrt(2 * n + 1))
        return pct_core.power_map(profile, tau, c, 0.5), pct_core.oscillator(scale)

    return TargetSystem(
        ClassTag.OSC2,
        profile,
        ScaleParams(tau=tau),
        V=V,
        energy_candidates={"printed": lambda n: -2.0 / (tau**2 * (2 * n + 1) ** 2)},
        phi=phi,
        operative_domain=dom,
        transform=transform,
        singular_points=profile.singular_points,
        log_grid=True,
    )


def coulomb1(profile: MassProfile, alpha, tau) -> TargetSystem:
    """q = tau*mu onto the Coulomb problem with Z = alpha^2 tau."""
    if not alpha > 0:
        raise InvalidParams("alpha must be positive")
    _check_tau(tau)
    dom = positive_mu_domain(profile, tau)
    Z = alpha**2 * tau

    def V(x):
        return -(alpha**2) / np.asarray(mu(profile, tau, x)) + correction_term(profile, x)

    def phi(n, x):
        u = np.asarray(mu(profile, tau, x))
        k = alpha**2 * tau**2 / (n + 1)
        return profile.m(x) ** 0.25 * u * np.exp(-k * u) * laguerre(n, 1.0, 2.0 * k * u)

    pct = pct_core.tau_map(profile, tau)
    ref = pct_core.coulomb(Z)
    return TargetSystem(
        ClassTag.COU1,
        profile,
        ScaleParams(tau=tau, alpha=alpha),
        V=V,
        energy_candidates={
            "printed": lambda n: -((alpha**2 * tau) ** 2) / (n + 1) ** 2,
            "reference": ref.E,
        },
        phi=phi,
        operative_domain=dom,
        transform=lambda n: (pct, ref),
        singular_points=profile.singular_points,
    )


def coulomb2(profile: MassProfile, tau, variant="printed", charge=1.0) -> TargetSystem:
    """q proportional to mu^2 onto the Coulomb problem.

    variant "printed" carries the published potential, spectrum and
    wavefunction. Variant "derived" carries what the transformation actually
    produces: V = mu^2/(2 tau^2) + correction + 3/(8 tau^2 mu^2),
    E = 2(n+1)/tau^2 and phi = m^{1/4} mu^{3/2} e^{-mu^2/2} L_n^1(mu^2).
    ``charge`` is the reference Coulomb strength; it cancels like ``scale`` in
    oscillator2.
    """
    _check_tau(tau)
    if variant not in ("printed", "derived"):
        raise InvalidParams(f"unknown Coulomb-2 variant {variant!r}")
    dom = positive_mu_domain(profile, tau)
    sign = -1.0 if variant == "printed" else 1.0

    def V(x):
        x = np.asarray(x, dtype=float)
        u = np.asarray(mu(profile, tau, x))
        m, dm, d2m = profile.m(x), profile.dm(x), profile.d2m(x)
        bracket = d2m / m - 1.75 * (dm / m) ** 2 + sign * 3.0 * m / (tau**2 * u**2)
        return sign * 0.5 / tau**2 * u**2 + bracket / (8.0 * m)

    if variant == "printed":

        def phi(n, x):
            u = np.asarray(mu(profile, tau, x))
            return profile.m(x) ** 0.25 * u**1.5 * np.exp(-u * u) * laguerre(n, 1.0, 2.0 * u * u)

        energies = {"printed": lambda n: -2.0 * (n + 1) / tau**2}
        coeff = lambda n: (n + 1) / charge
    else:

        def phi(n, x):
            u = np.asarray(mu(profile, tau, x))
            return profile.m(x) ** 0.25 * u**1.5 * np.exp(-0.5 * u * u) * laguerre(n, 1.0, u * u)

        energies = {"derived": lambda n: 2.0 * (n + 1) / tau**2}
        coeff = lambda n: (n + 1) / (2.0 * charge)

    ref = pct_core.coulomb(charge)
    return TargetSystem(
        ClassTag.COU2,
        profile,
        ScaleParams(tau=tau),
        V=V,
        energy_candidates=energies,
        phi=phi,
        operative_domain=dom,
        transform=lambda n: (pct_core.power_map(profile, tau, coeff(n), 2.0), ref),
        singular_points=profile.singular_points,
        variant=variant,
        primary="printed" if variant == "printed" else "derived",
    )


def morse(profile: MassProfile, lam, xi, tau, variant="printed") -> TargetSystem:
    """q = tau*mu onto the Morse problem.

    variant "printed": V = -(lam^2/2)[f - xi]^2 + correction with f = e^{-2 lam tau mu},
    with energy candidates "printed" = (lam^2/2)(xi-2n-1)^2 - lam^2 xi^2/2 and
    "reference" = -(lam^2/2)(xi-2n-1)^2 - lam^2 xi^2/2.
    variant "standard": the well with positive sign and E = lam^2 xi^2/2 - (lam^2/2)(xi-2n-1)^2.
    """
    if not (lam > 0 and xi > 0):
        raise InvalidParams("Morse lambda and xi must be positive")
    _check_tau(tau)
    if variant not in ("printed", "standard"):
        raise InvalidParams(f"unknown Morse variant {variant!r}")
    ref = pct_core.morse_reference(lam, xi, sign=variant)
    s = -1.0 if variant == "printed" else 1.0

    def V(x):
        f = np.exp(-2.0 * lam * tau * np.asarray(mu(profile, tau, x)))
        return s * 0.5 * lam**2 * (f - xi) ** 2 + correction_term(profile, x)

    def phi(n, x):
        u = np.asarray(mu(profile, tau, x))
        f = np.exp(-2.0 * lam * tau * u)
        k = xi - 2 * n - 1
        return profile.m(x) ** 0.25 * np.exp(-k * lam * tau * u - 0.5 * f) * laguerre(n, k, f)

    l2 = lam * lam
    if variant == "printed":
        energies = {
            "printed": lambda n: 0.5 * l2 * (xi - 2 * n - 1) ** 2 - 0.5 * l2 * xi**2,
            "reference": ref.E,
        }
    else:
        energies = {"standard": ref.E}
    pct = pct_core.tau_map(profile, tau)
    return TargetSystem(
        ClassTag.MORSE,
        profile,
        ScaleParams(tau=tau, lam=lam, xi=xi),
        V=V,
        energy_candidates=energies,
        phi=phi,
        operative_domain=profile.domain,
        transform=lambda n: (pct, ref),
        n_max=ref.n_max,
        n_max_candidates=dict(ref.n_max_candidates),
        singular_points=profile.singular_points,
        variant=variant,
        primary=variant,
    )


# -------------------------------------------------- boxes and normalization


def truncation_box(system, ns, level=1e-10, start=1.0):
    """Finite box inside the operative domain where |phi_n| at truncated edges is below ``level``·max.

    Finite edges of the operative domain are kept as they are; infinite edges
    are pushed outward by doubling.
    """
    a, b = system.operative_domain
    if math.isfinite(a) and math.isfinite(b):
        return (a, b)
    if math.isfinite(a):
        lo, hi = a, a + start
    elif math.isfinite(b):
        lo, hi = b - start, b
    else:
        lo, hi = -start, start
    c = 0.5 * (lo + hi) if not (math.isfinite(a) or math.isfinite(b)) else (a if math.isfinite(a) else b)
    ns = list(ns)
    for _ in range(80):
        # uniform samples plus geometric ones, so wide boxes still resolve the peak
        parts = [np.linspace(lo, hi, 4001)]
        if hi - c > 1e-3:
            parts.append(c + np.geomspace(1e-3 * min(1.0, hi - c), hi - c, 2000))
        if c - lo > 1e-3:
            parts.append(c - np.geomspace(1e-3 * min(1.0, c - lo), c - lo, 2000))
        xs = np.unique(np.concatenate(parts))
        xs = xs[(xs > a) & (xs < b) & (xs >= lo) & (xs <= hi)]
        grow_lo = grow_hi = False
        with np.errstate(all="ignore"):
            for n in ns:
                vals = np.abs(np.asarray(system.phi(n, xs), dtype=float))
                vals = np.where(np.isfinite(vals), vals, 0.0)
                peak = vals.max()
                if not math.isfinite(a) and vals[0] > level * peak:
                    grow_lo = True
                if not math.isfinite(b) and vals[-1] > level * peak:
                    grow_hi = True
        if not (grow_lo or grow_hi):
            return (float(lo), float(hi))
        width = hi - lo
        if grow_lo:
            lo -= width
        if grow_hi:
            hi += width
    raise NonNormalizable(f"wavefunctions of {system.class_tag.value} do not decay inside |x| < {width:g}")


def graded_edges(a, b, finite_left, finite_right, panels=200, depth=40):
    """Panel edges on [a, b], geometrically refined toward edges where phi may be singular."""
    inner = np.linspace(a, b, panels + 1)
    h = inner[1] - inner[0]
    steps = h * 2.0 ** -np.arange(1, depth)
    pieces = [inner]
    # stop refining where panels would fall below the floating-point resolution of the edge
    if finite_left:
        pieces.append(a + steps[steps > 1e-12 * max(1.0, abs(a))])
    if finite_right:
        pieces.append(b - steps[steps > 1e-12 * max(1.0, abs(b))])
    return np.unique(np.concatenate(pieces))


def default_rule(system, ns, order=24, panels=200) -> QuadratureRule:
    lo, hi = truncation_box(system, np.atleast_1d(ns))
    a, b = system.operative_domain
    return panel_gauss_rule(graded_edges(lo, hi, lo == a, hi == b, panels=panels), order=order)


def converged_integral(system, ns, f, rtol=1e-12, max_panels=12800):
    """Integral of f over the truncation box of levels ``ns``, doubling panels until it settles.

    Slowly decaying states need wide boxes; a fixed panel count would under-resolve their peak.
    """
    panels, prev = 200, None
    while True:
        rule = default_rule(system, ns, panels=panels)
        with np.errstate(all="ignore"):
            val = integrate(f, rule)
            # cancelling integrands (overlaps) settle relative to the integral of |f|
            scale = integrate(lambda x: np.abs(f(x)), rule)
        if prev is not None and abs(val - prev) <= rtol * max(scale, 1e-300):
            return val
        if panels >= max_panels:
            raise NonNormalizable(f"quadrature did not settle: {prev!r} vs {val!r} with {panels} panels")
        prev, panels = val, 2 * panels


def normalize(system, n, rule: QuadratureRule | None = None) -> float:
    """A(n) = [integral of phi_n^2]^(-1/2) over the operative domain."""
    system.check_n(n)
    f = lambda x: np.asarray(system.phi(n, x), dtype=float) ** 2
    if rule is None:
        total = converged_integral(system, [n], f)
    else:
        _check_edges(system, n, rule)
        with np.errstate(all="ignore"):
            total = integrate(f, rule)
    if not (total > 0 and math.isfinite(total)):
        raise NonNormalizable(f"integral of phi_{n}^2 is {total!r}")
    return 1.0 / math.sqrt(total)


def _check_edges(system, n, rule):
    a, b = system.operative_domain
    lo, hi = rule.interval
    if lo < a or hi > b:
        raise NonNormalizable(f"quadrature interval {rule.interval} leaves the operative domain")
    vals = np.abs(np.asarray(system.phi(n, rule.nodes), dtype=float))
    peak = vals.max()
    for edge, natural in ((lo, lo == a), (hi, hi == b)):
        if natural:
            continue
        v = abs(float(system.phi(n, edge)))
        if v > EDGE_LEVEL * peak:
            raise NonNormalizable(f"|phi_{n}({edge:g})| = {v:.3g} exceeds {EDGE_LEVEL:g} of its maximum")


def count_nodes(values, rel_floor=1e-8):
    """Sign changes of sampled values, ignoring samples below rel_floor·max in magnitude."""
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    if v.size == 0:
        return 0
    keep = v[np.abs(v) > rel_floor * np.abs(v).max()]
    return int(np.count_nonzero(np.signbit(keep[1:]) != np.signbit(keep[:-1])))


def build(class_tag, profile, variant=None, **params) -> TargetSystem:
    """Dispatch by class tag ("osc1", "osc2", "cou1", "cou2", "morse")."""
    tag = str(class_tag).lower()
    tau = params.get("tau", 1.0)
    try:
        if tag == "osc1":
            return oscillator1(profile, params["alpha"], tau)
        if tag == "osc2":
            return oscillator2(profile, tau)
        if tag == "cou1":
            return coulomb1(profile, params["alpha"], tau)
        if tag == "cou2":
            return coulomb2(profile, tau, variant=variant or "printed")
        if tag == "morse":
            return morse(profile, params["lam"], params["xi"], tau, variant=variant or "printed")
    except KeyError as exc:
        raise InvalidParams(f"class {tag} needs parameter {exc.args[0]!r}") from None
    raise InvalidParams(f"unknown class {class_tag!r}")
