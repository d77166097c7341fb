"""Radial systems for a power-law mass m(r) = alpha r^gamma in three dimensions.

The reduced radial function phi(r) = r chi(r) obeys

    -(1/2)(phi'/m)' + [V + l(l+1)/(2 m r^2) - m'/(2 m^2 r)] phi = E phi,

and a transformation rho = q(r) onto the radial 3D oscillator with angular
momentum L gives

    V - E + l(l+1)/(2 m r^2) = (q'^2/m)[Vref(q) - Eref] + L(L+1)(q'/q)^2/(2m)
                               + m'/(2 m^2 r) + F(m, q)/m.

Three families are provided: q = r^(1 + gamma/2) (oscillator-like),
q proportional to r^(1/2 + gamma/4) (Coulomb-like) and q = ln(r)/lambda for
gamma = -2. Their published energies use the reference constant 3/4 in
Eref = lambda^2 (2n + L + c); the standard value is c = 3/2. Both are exposed
as energy candidates ("printed" and "standard").
"""
from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from . import pct_core
from .errors import InvalidParams, SingularPoint
from .mass_catalog import MASS_EPS, ScaleParams, powerlaw
from .pct_core import OSC3D_CONSTANTS, PctFunctions
from .pct_maps import ClassTag, TargetSystem
from .special_fn import laguerre


def Lambda(ell, gamma):
    """|gamma + 2|^-1 sqrt(4 l(l+1) + (gamma - 1)^2)."""
    if gamma == -2:
        raise InvalidParams("Lambda(l) is undefined for gamma = -2")
    return math.sqrt(4 * ell * (ell + 1) + (gamma - 1) ** 2) / abs(gamma + 2)


@dataclass(frozen=True)
class RadialSystem(TargetSystem):
    ell: int = 0
    Lambda: float = 0.0
    gamma: float = 0.0
    alpha_m: float = 1.0
    C: float = 0.0
    case_tag: str = "A"

    @property
    def radial(self):
        return True

    def pct(self, n):
        pct, ref, _ = self.transform(n, "printed")
        return pct, ref

    def reference(self, n, spectrum="printed"):
        """(PctFunctions, ReferenceProblem, L) realizing level n against the chosen reference constant."""
        return self.transform(n, spectrum)

    def metadata(self):
        out = super().metadata()
        out.update(
            ell=self.ell, Lambda=self.Lambda, gamma=self.gamma, alpha_m=self.alpha_m, C=self.C, case=self.case_tag
        )
        return out


def _check_ell(ell):
    if int(ell) != ell or ell < 0:
        raise InvalidParams("l must be a nonnegative integer")
    return int(ell)


def _power_pct(coeff, nu):
    return PctFunctions(
        q=lambda r: coeff * np.asarray(r, dtype=float) ** nu,
        dq=lambda r: coeff * nu * np.asarray(r, dtype=float) ** (nu - 1.0),
        label=f"{coeff:g}*r^{nu:g}",
    )


def powerlaw_case_a(alpha_m, gamma, C, ell) -> RadialSystem:
    """q = r^nu with nu = 1 + gamma/2: V = (alpha/2) C^2 r^(gamma+2)."""
    if gamma == -2:
        raise InvalidParams("case (a) needs gamma != -2")
    if not C > 0:
        raise InvalidParams("C must be positive")
    ell = _check_ell(ell)
    profile = powerlaw(alpha_m, gamma)
    nu = 1.0 + gamma / 2.0
    lam_ = Lambda(ell, gamma)
    xi = (2.0 * alpha_m * C / (gamma + 2.0)) ** (1.0 / (gamma + 2.0))
    power = nu * lam_ + (gamma + 1.0) / 2.0

    def V(r):
        return 0.5 * alpha_m * C**2 * np.asarray(r, dtype=float) ** (gamma + 2.0)

    def phi(n, r):
        s = xi * np.asarray(r, dtype=float)
        z = s ** (gamma + 2.0)
        return s**power * np.exp(-0.5 * z) * laguerre(n, lam_, z)

    def transform(n, spectrum="printed"):
        ref = pct_core.oscillator3d(math.sqrt(alpha_m * C / nu), lam_ - 0.5, spectrum)
        return _power_pct(1.0, nu), ref, lam_ - 0.5

    energies = {
        name: (lambda n, c=c: nu * C * (2 * n + lam_ - 0.5 + c)) for name, c in OSC3D_CONSTANTS.items()
    }
    return RadialSystem(
        ClassTag.RADIAL_A,
        profile,
        ScaleParams(alpha=alpha_m),
        V=V,
        energy_candidates=energies,
        phi=phi,
        operative_domain=(0.0, math.inf),
        transform=transform,
        singular_points=(0.0,),
        ell=ell,
        Lambda=lam_,
        gamma=float(gamma),
        alpha_m=float(alpha_m),
        C=float(C),
        case_tag="A",
    )


def powerlaw_case_b(alpha_m, gamma, C, ell, variant="printed") -> RadialSystem:
    """q proportional to r^nu with nu = 1/2 + gamma/4: a Coulomb-like potential.

    variant "printed" uses V = -(1/2)(C/sqrt(alpha)) r^(-1 + gamma/2); variant
    "derived" uses the exponent -1 - gamma/2 that the transformation produces.
    The two coincide for gamma = 0. The wavefunction scale xi_n follows the
    candidate constant of the variant (1/8 printed, 1/2 derived).
    """
    if gamma == -2:
        raise InvalidParams("case (b) needs gamma != -2")
    if not C > 0:
        raise InvalidParams("C must be positive")
    if variant not in ("printed", "derived"):
        raise InvalidParams(f"unknown case (b) variant {variant!r}")
    ell = _check_ell(ell)
    profile = powerlaw(alpha_m, gamma)
    nu = 0.5 + gamma / 4.0
    lam_ = Lambda(ell, gamma)
    exponent = -1.0 + gamma / 2.0 if variant == "printed" else -1.0 - gamma / 2.0
    shift = {"printed": 0.125, "standard": 0.5}
    k = 1.0 + gamma / 2.0
    power = k * lam_ + (1.0 + gamma) / 2.0

    def V(r):
        return -0.5 * C / math.sqrt(alpha_m) * np.asarray(r, dtype=float) ** exponent

    def energy(n, s):
        return -0.5 * C**2 / (gamma + 2.0) ** 2 / (n + lam_ + s) ** 2

    phi_shift = shift["printed" if variant == "printed" else "standard"]

    def phi(n, r):
        xin = (4.0 * math.sqrt(alpha_m) * C / ((gamma + 2.0) ** 2 * (n + lam_ + phi_shift))) ** (1.0 / k)
        z = (xin * np.asarray(r, dtype=float)) ** k
        return (xin * np.asarray(r, dtype=float)) ** power * np.exp(-0.5 * z) * laguerre(n, 2.0 * lam_, z)

    def transform(n, spectrum="printed"):
        L = 2.0 * lam_ - 0.5
        c = OSC3D_CONSTANTS[spectrum]
        # reference strength 1; coeff^2 fixed by matching the r^(-1-gamma/2) coefficient
        coeff = math.sqrt(C * math.sqrt(alpha_m) / (2.0 * nu * nu * (2 * n + L + c)))
        return _power_pct(coeff, nu), pct_core.oscillator3d(1.0, L, spectrum), L

    energies = {name: (lambda n, s=s: energy(n, s)) for name, s in shift.items()}
    return RadialSystem(
        ClassTag.RADIAL_B,
        profile,
        ScaleParams(alpha=alpha_m),
        V=V,
        energy_candidates=energies,
        phi=phi,
        operative_domain=(0.0, math.inf),
        transform=transform,
        singular_points=(0.0,),
        variant=variant,
        primary="printed" if variant == "printed" else "standard",
        ell=ell,
        Lambda=lam_,
        gamma=float(gamma),
        alpha_m=float(alpha_m),
        C=float(C),
        case_tag="B",
    )


def powerlaw_singular(alpha_m, C, ell=0, lam=1.0) -> RadialSystem:
    """m = alpha r^-2 with q = ln(r)/lam; S-wave only, operative on r > 1 where q > 0."""
    if ell != 0:
        raise InvalidParams("the gamma = -2 solution exists for l = 0 only")
    if not alpha_m > 0:
        raise InvalidParams("alpha must be positive")
    profile = powerlaw(alpha_m, -2.0)
    lam_ = 0.5 * math.sqrt(1.0 + 4.0 * alpha_m * C**2)

    def V(r):
        t = np.log(np.asarray(r, dtype=float))
        return 0.5 / alpha_m * t * t + 0.5 * C**2 / (t * t)

    def phi(n, r):
        r = np.asarray(r, dtype=float)
        t = np.log(r)
        return r**-0.5 * t ** (lam_ + 0.5) * np.exp(-0.5 * t * t) * laguerre(n, lam_, t * t)

    def transform(n, spectrum="printed"):
        pct = PctFunctions(
            q=lambda r: np.log(np.asarray(r, dtype=float)) / lam,
            dq=lambda r: 1.0 / (lam * np.asarray(r, dtype=float)),
            label="ln(r)/lambda",
        )
        return pct, pct_core.oscillator3d(lam, lam_ - 0.5, spectrum), lam_ - 0.5

    energies = {
        "printed": lambda n: (2 * n + lam_ + 11.0 / 8.0) / alpha_m,
        "standard": lambda n: (2 * n + lam_ + 17.0 / 8.0) / alpha_m,
    }
    return RadialSystem(
        ClassTag.RADIAL_LOG,
        profile,
        ScaleParams(alpha=alpha_m),
        V=V,
        energy_candidates=energies,
        phi=phi,
        operative_domain=(1.0, math.inf),
        transform=transform,
        singular_points=(1.0,),
        ell=0,
        Lambda=lam_,
        gamma=-2.0,
        alpha_m=float(alpha_m),
        C=float(C),
        case_tag="Log",
        log_grid=True,
    )


def radial_rhs(profile, pct, ref, n, L, r):
    """Right-hand side of the radial transformation identity."""
    r = np.asarray(r, dtype=float)
    m, dm = profile.m(r), profile.dm(r)
    q, q1 = pct.q(r), pct.dq(r)
    return (
        q1 * q1 / m * (ref.V(q) - ref.E(n))
        + L * (L + 1.0) * (q1 / q) ** 2 / (2.0 * m)
        + dm / (2.0 * m * m * r)
        + pct_core.f_functional(profile, pct, r) / m
    )


def radial_map_condition(profile, pct, ref, n, ell, L, V, E, rs) -> float:
    """max |V - E + l(l+1)/(2 m r^2) - rhs| over rs, the radial analogue of pct_residual."""
    out = 0.0
    for r in np.atleast_1d(np.asarray(rs, dtype=float)):
        if not r > 0:
            raise SingularPoint(f"r={r} is not interior")
        m = float(profile.m(r))
        if m <= MASS_EPS or float(pct.dq(r)) == 0.0:
            raise SingularPoint(f"mass or q' vanishes at r={r:g}")
        lhs = float(V(r)) - E + ell * (ell + 1) / (2.0 * m * r * r)
        out = max(out, abs(lhs - float(radial_rhs(profile, pct, ref, n, L, r))))
    return out


def effective_potential(system: RadialSystem, r):
    """V + l(l+1)/(2 m r^2) - m'/(2 m^2 r): the 1D potential seen by phi in flux form."""
    r = np.asarray(r, dtype=float)
    p = system.profile
    m = p.m(r)
    return system.V(r) + system.ell * (system.ell + 1) / (2.0 * m * r * r) - p.dm(r) / (2.0 * m * m * r)


def build(case, alpha_m=1.0, gamma=2.0, C=1.0, ell=0, variant=None) -> RadialSystem:
    case = str(case).lower()
    if case in ("a", "radial-a"):
        return powerlaw_case_a(alpha_m, gamma, C, ell)
    if case in ("b", "radial-b"):
        return powerlaw_case_b(alpha_m, gamma, C, ell, variant=variant or "printed")
    if case in ("log", "radial-log"):
        return powerlaw_singular(alpha_m, C, ell)
    raise InvalidParams(f"unknown radial case {case!r}")
