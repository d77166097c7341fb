"""Position-dependent mass profiles and the scaled integral mu(x).

A profile carries m(x) (dimensionless, in units of the bare mass), its first
two derivatives and optionally a closed-form antiderivative ``S`` of sqrt(m)
that vanishes at the anchor point. Then

    mu(x) = S(x) / tau,         mu(anchor) = 0.

Without a closed form, mu is computed by adaptive Simpson quadrature.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import json
import math
from typing import Callable

import numpy as np
from scipy.special import expit, log_expit

from .errors import DomainViolation, IntegrationFailure, InvalidParams
from .expr import compile_expression
from .special_fn import adaptive_simpson

INF = math.inf
MASS_EPS = 1e-12

# finite-difference steps for profiles defined without closed-form derivatives
FD_STEP_D1 = 1e-5
FD_STEP_D2 = 1e-4


@dataclass(frozen=True)
class ScaleParams:
    tau: float = 1.0
    alpha: float | None = None
    lam: float | None = None
    xi: float | None = None
    Z: float | None = None

    def __post_init__(self):
        if not self.tau > 0:
            raise InvalidParams("tau must be positive")
        for name in ("lam", "xi", "Z"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise InvalidParams(f"{name} must be positive")

    def as_dict(self):
        return {k: v for k, v in self.__dict__.items() if v is not None}


@dataclass(frozen=True)
class MassProfile:
    id: str
    m: Callable
    dm: Callable
    d2m: Callable
    domain: tuple[float, float]
    anchor: float
    params: dict = field(default_factory=dict)
    S: Callable | None = None
    m_text: str = ""
    mu_text: str = ""
    singular_points: tuple = ()
    radial: bool = False

    @property
    def has_closed_mu(self):
        return self.S is not None

    def inside(self, x):
        x = np.asarray(x, dtype=float)
        a, b = self.domain
        return (x >= a) & (x <= b) & np.isfinite(x)

    def check_inside(self, x):
        if not np.all(self.inside(x)):
            bad = np.atleast_1d(np.asarray(x, dtype=float))[~np.atleast_1d(self.inside(x))]
            raise DomainViolation(
                f"x={bad[0]:.6g} outside domain {self.domain} of profile {self.id!r}"
            )

    def mu(self, x, tau=1.0):
        return mu(self, tau, x)

    def describe(self):
        return {
            "id": self.id,
            "params": dict(self.params),
            "domain": [_jsonable(v) for v in self.domain],
            "anchor": _jsonable(self.anchor),
            "m": self.m_text,
            "mu": self.mu_text,
            "closed_mu": self.has_closed_mu,
        }


def _jsonable(v):
    if v == INF:
        return "inf"
    if v == -INF:
        return "-inf"
    return float(v)


# ------------------------------------------------------------------ mu(x)


def mu(profile: MassProfile, tau, x):
    """mu(x) = (1/tau) * integral of sqrt(m) from the anchor to x."""
    if not tau > 0:
        raise InvalidParams("tau must be positive")
    profile.check_inside(x)
    if profile.S is not None:
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.asarray(profile.S(np.asarray(x, dtype=float)), dtype=float) / tau
        return out if out.ndim else float(out)
    return numeric_mu(profile, tau, x)


def numeric_mu(profile: MassProfile, tau, x, tol=1e-10):
    """mu by adaptive Simpson quadrature, ignoring any closed form."""
    profile.check_inside(x)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    start = profile.anchor
    if math.isinf(start):
        start = _tail_cutoff(profile, start)

    def sqrt_m(t):
        return math.sqrt(max(float(profile.m(t)), 0.0))

    with np.errstate(divide="ignore", invalid="ignore"):
        singular = not math.isfinite(sqrt_m(start))
    if singular:
        # integrable blow-up at the anchor: t = start + sign*s^4 turns sqrt(m) ~ |t|^p into
        # ~ s^(3 + 4p), continuous at s = 0 for p >= -3/4 (powerlaw gamma >= -3/2)
        def integral(xi):
            sign = 1.0 if xi >= start else -1.0

            def g(s):
                s = max(s, 1e-30)
                return 4.0 * s**3 * sqrt_m(start + sign * s**4)

            return sign * adaptive_simpson(g, 0.0, abs(xi - start) ** 0.25, tol=tol * tau)
    else:

        def integral(xi):
            return adaptive_simpson(sqrt_m, start, xi, tol=tol * tau)

    out = np.array([integral(xi) for xi in xs]) / tau
    return out if np.ndim(x) else float(out[0])


def _tail_cutoff(profile, direction, level=1e-15):
    """Point beyond which sqrt(m) (and hence the tail of its integral) is negligible."""
    a, b = profile.domain
    x0 = min(max(0.0, a), b) if math.isfinite(a) or math.isfinite(b) else 0.0
    step = 1.0
    for _ in range(60):
        x = x0 + math.copysign(step, direction)
        if math.sqrt(max(float(profile.m(x)), 0.0)) < level:
            return x
        step *= 1.5
    raise IntegrationFailure(f"sqrt(m) does not decay toward {direction} for profile {profile.id!r}")


def correction_term(profile: MassProfile, x):
    """(1/8m)[m''/m - (7/4)(m'/m)^2]: the mass-induced potential shared by q = tau*mu maps."""
    profile.check_inside(x)
    x = np.asarray(x, dtype=float)
    m, dm, d2m = profile.m(x), profile.dm(x), profile.d2m(x)
    out = (d2m / m - 1.75 * (dm / m) ** 2) / (8.0 * m)
    return out if np.ndim(out) else float(out)


# ------------------------------------------------------------ the catalog


def constant_mass():
    return MassProfile(
        id="constant",
        m=lambda x: np.ones_like(np.asarray(x, dtype=float)),
        dm=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        d2m=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        domain=(-INF, INF),
        anchor=0.0,
        S=lambda x: np.asarray(x, dtype=float),
        m_text="1",
        mu_text="x/tau",
    )


def example1(gamma=2.0):
    """m = [(gamma + x^2)/(1 + x^2)]^2."""
    g = float(gamma)
    if g <= 0:
        raise InvalidParams("example1 needs gamma > 0 so that m stays positive")

    def parts(x):
        x = np.asarray(x, dtype=float)
        s = 1.0 + x * x
        r = (g + x * x) / s
        r1 = -2.0 * x * (g - 1.0) / s**2
        r2 = (g - 1.0) * (6.0 * x * x - 2.0) / s**3
        return r, r1, r2

    def m(x):
        return parts(x)[0] ** 2

    def dm(x):
        r, r1, _ = parts(x)
        return 2.0 * r * r1

    def d2m(x):
        r, r1, r2 = parts(x)
        return 2.0 * (r1 * r1 + r * r2)

    return MassProfile(
        id="example1",
        m=m,
        dm=dm,
        d2m=d2m,
        domain=(-INF, INF),
        anchor=0.0,
        params={"gamma": g},
        S=lambda x: np.asarray(x, dtype=float) + (g - 1.0) * np.arctan(x),
        m_text="[(gamma + x^2)/(1 + x^2)]^2",
        mu_text="[x + (gamma - 1) atan(x)]/tau",
    )


def example2(gamma=1.0):
    """Smooth mass step m = 1 + tanh(gamma x); mu is anchored at x -> -inf."""
    g = float(gamma)
    if g <= 0:
        raise InvalidParams("example2 needs gamma > 0")

    def m(x):
        return 2.0 * expit(2.0 * g * np.asarray(x, dtype=float))

    def dm(x):
        z = 2.0 * g * np.asarray(x, dtype=float)
        return 4.0 * g * expit(z) * expit(-z)

    def d2m(x):
        x = np.asarray(x, dtype=float)
        return -2.0 * g * np.tanh(g * x) * dm(x)

    def S(x):
        # sqrt(2)/gamma * atanh(sqrt((1 + tanh)/2)), written to avoid cancellation
        z = 2.0 * g * np.asarray(x, dtype=float)
        u = np.sqrt(expit(z))
        return math.sqrt(2.0) / g * (np.log1p(u) - 0.5 * log_expit(-z))

    return MassProfile(
        id="example2",
        m=m,
        dm=dm,
        d2m=d2m,
        domain=(-INF, INF),
        anchor=-INF,
        params={"gamma": g},
        S=S,
        m_text="1 + tanh(gamma x)",
        mu_text="(sqrt(2)/(tau gamma)) atanh(sqrt(1 + tanh(gamma x))/sqrt(2))",
    )


def example3(gamma=1.0):
    """Asymptotically vanishing mass m = 1/(gamma + x^2)."""
    g = float(gamma)
    if g <= 0:
        raise InvalidParams("example3 needs gamma > 0")

    def m(x):
        x = np.asarray(x, dtype=float)
        return 1.0 / (g + x * x)

    def dm(x):
        x = np.asarray(x, dtype=float)
        return -2.0 * x / (g + x * x) ** 2

    def d2m(x):
        x = np.asarray(x, dtype=float)
        return (6.0 * x * x - 2.0 * g) / (g + x * x) ** 3

    return MassProfile(
        id="example3",
        m=m,
        dm=dm,
        d2m=d2m,
        domain=(-INF, INF),
        # ln(x + sqrt(gamma + x^2)) vanishes here
        anchor=(1.0 - g) / 2.0,
        params={"gamma": g},
        S=lambda x: np.arcsinh(np.asarray(x, dtype=float) / math.sqrt(g)) + 0.5 * math.log(g),
        m_text="1/(gamma + x^2)",
        mu_text="ln(x + sqrt(gamma + x^2))/tau",
    )


def example4(lam=1.0):
    """m = tanh(lam x)^2 on x > 0; m(0) = 0 is a singular point excluded from the domain."""
    lm = float(lam)
    if lm <= 0:
        raise InvalidParams("example4 needs lambda > 0")

    def m(x):
        return np.tanh(lm * np.asarray(x, dtype=float)) ** 2

    def dm(x):
        z = lm * np.asarray(x, dtype=float)
        return 2.0 * lm * np.tanh(z) / np.cosh(z) ** 2

    def d2m(x):
        z = lm * np.asarray(x, dtype=float)
        sech2 = 1.0 / np.cosh(z) ** 2
        return 2.0 * lm**2 * sech2 * (sech2 - 2.0 * np.tanh(z) ** 2)

    def S(x):
        # ln(cosh z) = |z| + log1p(exp(-2|z|)) - ln 2
        z = np.abs(lm * np.asarray(x, dtype=float))
        return (z + np.log1p(np.exp(-2.0 * z)) - math.log(2.0)) / lm

    return MassProfile(
        id="example4",
        m=m,
        dm=dm,
        d2m=d2m,
        domain=(0.0, INF),
        anchor=0.0,
        params={"lambda": lm},
        S=S,
        m_text="tanh(lambda x)^2",
        mu_text="ln(cosh(lambda x))/(lambda tau)",
        singular_points=(0.0,),
    )


def powerlaw(alpha=1.0, gamma=2.0):
    """Radial mass m(r) = alpha r^gamma on r > 0 (gamma >= -2)."""
    a, g = float(alpha), float(gamma)
    if a <= 0:
        raise InvalidParams("powerlaw needs alpha > 0")
    if g < -2:
        raise InvalidParams("powerlaw supports gamma >= -2 only")
    nu = 1.0 + g / 2.0

    def m(r):
        return a * np.asarray(r, dtype=float) ** g

    def dm(r):
        return a * g * np.asarray(r, dtype=float) ** (g - 1.0)

    def d2m(r):
        return a * g * (g - 1.0) * np.asarray(r, dtype=float) ** (g - 2.0)

    if nu == 0.0:
        S = lambda r: math.sqrt(a) * np.log(np.asarray(r, dtype=float))
        anchor, mu_text = 1.0, "sqrt(alpha) ln(r)/tau"
    else:
        S = lambda r: math.sqrt(a) * np.asarray(r, dtype=float) ** nu / nu
        anchor, mu_text = 0.0, "sqrt(alpha) r^(1 + gamma/2)/((1 + gamma/2) tau)"
    return MassProfile(
        id="powerlaw",
        m=m,
        dm=dm,
        d2m=d2m,
        domain=(0.0, INF),
        anchor=anchor,
        params={"alpha": a, "gamma": g},
        S=S,
        m_text="alpha r^gamma",
        mu_text=mu_text,
        singular_points=(0.0,),
        radial=True,
    )


_BUILDERS = {
    "constant": (constant_mass, {}),
    "example1": (example1, {"gamma": "gamma"}),
    "example2": (example2, {"gamma": "gamma"}),
    "example3": (example3, {"gamma": "gamma"}),
    "example4": (example4, {"lambda": "lam"}),
    "powerlaw": (powerlaw, {"alpha": "alpha", "gamma": "gamma"}),
}


def catalog():
    """All built-in profiles at their default parameters."""
    return [build(name) for name in _BUILDERS]


def catalog_ids():
    return list(_BUILDERS)


def build(profile_id, **params):
    """Build a catalog profile by id; ``params`` use the catalog's names (gamma, lambda, alpha)."""
    if profile_id not in _BUILDERS:
        raise KeyError(f"unknown profile {profile_id!r}")
    fn, names = _BUILDERS[profile_id]
    unknown = set(params) - set(names)
    if unknown:
        raise InvalidParams(f"profile {profile_id!r} has no parameter(s) {sorted(unknown)}")
    return fn(**{names[k]: float(v) for k, v in params.items()})


# ------------------------------------------------------------ user profiles


def _fd_first(f, h_rel=FD_STEP_D1):
    def d(x):
        x = np.asarray(x, dtype=float)
        h = h_rel * np.maximum(1.0, np.abs(x))
        return (f(x + h) - f(x - h)) / (2.0 * h)

    return d


def _fd_second(f, h_rel=FD_STEP_D2):
    def d2(x):
        x = np.asarray(x, dtype=float)
        h = h_rel * np.maximum(1.0, np.abs(x))
        return (f(x + h) - 2.0 * f(x) + f(x - h)) / h**2

    return d2


def _parse_bound(v):
    if isinstance(v, str):
        return float(v.replace("infinity", "inf"))
    return float(v)


def user_profile(id, m, params=None, domain=(-INF, INF), anchor=0.0, mu=None, dm=None, d2m=None):
    """Profile from expression strings in ``x`` and named parameters.

    ``mu`` is the closed-form integral of sqrt(m) at tau = 1; it is shifted so
    that it vanishes at ``anchor``. Missing derivatives fall back to central
    differences with steps FD_STEP_D1 (m') and FD_STEP_D2 (m''), scaled by
    max(1, |x|).
    """
    params = {k: float(v) for k, v in (params or {}).items()}
    names = tuple(params)
    m_expr = compile_expression(m, names)
    m_fn = lambda x: m_expr(x, **params)
    dm_fn = (lambda x, e=compile_expression(dm, names): e(x, **params)) if dm else _fd_first(m_fn)
    d2m_fn = (lambda x, e=compile_expression(d2m, names): e(x, **params)) if d2m else _fd_second(m_fn)
    S = None
    if mu:
        mu_expr = compile_expression(mu, names)
        offset = float(mu_expr(anchor, **params)) if math.isfinite(anchor) else 0.0
        S = lambda x: mu_expr(x, **params) - offset
    a, b = (_parse_bound(v) for v in domain)
    if not a < b:
        raise InvalidParams("profile domain must satisfy a < b")
    return MassProfile(
        id=id,
        m=m_fn,
        dm=dm_fn,
        d2m=d2m_fn,
        domain=(a, b),
        anchor=float(anchor),
        params=params,
        S=S,
        m_text=m,
        mu_text=(mu + "/tau") if mu else "",
    )


def profile_from_dict(spec: dict) -> MassProfile:
    """Build a profile from the JSON definition format.

    Catalog entries: ``{"id": "example1", "params": {"gamma": 2}, "domain": [a, b]}``.
    User entries additionally give ``"m"`` (and optionally ``"mu"``, ``"dm"``,
    ``"d2m"``, ``"anchor"``) as expression strings.
    """
    if "id" not in spec:
        raise InvalidParams("profile definition needs an 'id'")
    params = spec.get("params", {})
    if "m" in spec:
        return user_profile(
            spec["id"],
            spec["m"],
            params=params,
            domain=spec.get("domain", (-INF, INF)),
            anchor=float(spec.get("anchor", 0.0)),
            mu=spec.get("mu"),
            dm=spec.get("dm"),
            d2m=spec.get("d2m"),
        )
    prof = build(spec["id"], **params)
    if "domain" in spec:
        a, b = (_parse_bound(v) for v in spec["domain"])
        lo, hi = prof.domain
        if a < lo or b > hi or not a < b:
            raise InvalidParams(f"domain {spec['domain']} is not a subinterval of {prof.domain}")
        prof = _replace(prof, domain=(a, b))
    return prof


def _replace(profile, **changes):
    from dataclasses import replace

    return replace(profile, **changes)


def load_profile(path) -> MassProfile:
    with open(path) as fh:
        return profile_from_dict(json.load(fh))
