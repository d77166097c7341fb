import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pct_pdm import mass_catalog as mc
from pct_pdm import pct_core as pc
from pct_pdm import pct_maps as pm
from pct_pdm.errors import EmptyDomain, InvalidParams, NonNormalizable
from pct_pdm.fixtures import load_fixture
from pct_pdm.mass_catalog import mu
from pct_pdm.special_fn import integrate, panel_gauss_rule, simpson_rule

PROFILES = [mc.constant_mass(), mc.example1(2.0), mc.example2(1.0), mc.example3(1.0), mc.example4(1.0)]
PIDS = [p.id for p in PROFILES]


def _systems(p):
    """Every map with the energy candidate that the transformation identity actually supports."""
    return [
        (pm.oscillator1(p, 1.0, 1.0), "printed"),
        (pm.oscillator2(p, 1.0), "printed"),
        (pm.coulomb1(p, 1.0, 1.0), "reference"),
        (pm.coulomb2(p, 1.0, variant="derived"), "derived"),
        (pm.morse(p, 1.0, 9.0, 1.0), "reference"),
        (pm.morse(p, 1.0, 9.0, 1.0, variant="standard"), "standard"),
    ]


def _interior(system, count=20):
    lo, hi = system.operative_domain
    lo, hi = max(lo, -5.0), min(hi, 5.0)
    return np.linspace(lo, hi, count + 2)[1:-1]


def _scaled_residual(system, n, E, xs):
    """Pointwise residual over the largest term of V: finite-difference roundoff grows like 1/m, as those terms do."""
    pct, ref = system.pct(n)
    rep = pc.residual_report(system.profile, pct, ref, n, system.V, E, xs)
    pts = np.array(rep.points)
    scale = np.maximum.reduce([np.ones_like(pts), np.abs(system.V(pts)), np.abs(mc.correction_term(system.profile, pts))])
    return np.max(np.array(rep.residuals) / scale)


# ------------------------------------------------------------------ reductions


def test_oscillator1_constant_mass_reduction():
    lam = 1.3
    s = pm.oscillator1(mc.constant_mass(), lam**2, 1.0)
    ref = pc.oscillator(lam)
    xs = np.linspace(-4, 4, 41)
    assert np.max(np.abs(s.V(xs) - 0.5 * lam**4 * xs**2)) < 1e-10
    for n in range(6):
        assert s.E(n) == pytest.approx(lam**2 * (n + 0.5), abs=1e-12)
        assert s.E(n) == pytest.approx(ref.E(n), abs=1e-12)
        psi = ref.psi(n, xs)
        assert np.max(np.abs(s.normalized_phi(n, xs) - psi / _l2(ref.psi, n, (-12, 12)))) < 1e-10


def test_coulomb1_constant_mass_reduction():
    alpha = 1.2
    s = pm.coulomb1(mc.constant_mass(), alpha, 1.0)
    ref = pc.coulomb(alpha**2)
    xs = np.linspace(0.1, 20, 50)
    assert np.max(np.abs(s.V(xs) - ref.V(xs))) < 1e-10
    for n in range(4):
        assert s.energy_candidates["reference"](n) == ref.E(n)
        psi = ref.psi(n, xs) / _l2(ref.psi, n, (0.0, 200.0))
        assert np.max(np.abs(s.normalized_phi(n, xs) - psi)) < 1e-10


def test_morse_constant_mass_reduction():
    s = pm.morse(mc.constant_mass(), 1.0, 9.0, 1.0, variant="standard")
    ref = pc.morse_reference(1.0, 9.0, "standard")
    xs = np.linspace(-1.5, 6, 50)
    assert np.max(np.abs(s.V(xs) - ref.V(xs))) < 1e-10
    for n in range(4):
        assert s.E(n) == ref.E(n)
        psi = ref.psi(n, xs) / _l2(ref.psi, n, (-4.0, 40.0))
        assert np.max(np.abs(s.normalized_phi(n, xs) - psi)) < 1e-10


def _l2(psi, n, interval):
    edges = np.linspace(*interval, 801)
    return math.sqrt(integrate(lambda y: psi(n, y) ** 2, panel_gauss_rule(edges, 24)))


def test_coulomb2_and_oscillator2_constant_mass_potentials():
    xs = np.linspace(0.2, 6, 30)
    one = mc.constant_mass()
    assert np.allclose(pm.oscillator2(one, 1.0).V(xs), -0.5 / xs - 3.0 / (32.0 * xs**2), rtol=1e-14)
    assert np.allclose(pm.coulomb2(one, 1.0).V(xs), -0.5 * xs**2 - 3.0 / (8.0 * xs**2), rtol=1e-14)
    assert np.allclose(pm.coulomb2(one, 1.0, variant="derived").V(xs), 0.5 * xs**2 + 3.0 / (8.0 * xs**2), rtol=1e-14)


# ------------------------------------------------------------------ residuals


@pytest.mark.parametrize("profile", PROFILES, ids=PIDS)
def test_residual_all_maps(profile):
    for s, cand in _systems(profile):
        xs = _interior(s)
        top = 5 if s.n_max is None else min(5, s.n_max)
        for n in range(top + 1):
            assert _scaled_residual(s, n, s.energy_candidates[cand](n), xs) < 1e-6, (s.class_tag, n)


@pytest.mark.parametrize("profile", PROFILES, ids=PIDS)
def test_printed_energies_that_break_the_identity(profile):
    """Printed Cou-1, Cou-2 and Morse energies differ from what the transformation yields, by known amounts."""
    cou1 = pm.coulomb1(profile, 1.0, 1.0)
    morse = pm.morse(profile, 1.0, 9.0, 1.0)
    for n in range(4):
        gap = cou1.energy_candidates["printed"](n) - cou1.energy_candidates["reference"](n)
        assert gap == pytest.approx(-0.5 / (n + 1) ** 2, rel=1e-14)
        gap = morse.energy_candidates["printed"](n) - morse.energy_candidates["reference"](n)
        assert gap == pytest.approx((9 - 2 * n - 1) ** 2, rel=1e-14)
    cou2 = pm.coulomb2(profile, 1.0)
    xs = _interior(cou2)
    assert all(_scaled_residual(cou2, n, cou2.E(n), xs) > 1e-2 for n in range(4))


def test_oscillator2_and_coulomb2_extra_terms():
    p = mc.example1(2.0)
    xs = np.linspace(0.3, 5, 25)
    u = mu(p, 1.7, xs)
    corr = mc.correction_term(p, xs)
    osc2 = pm.oscillator2(p, 1.7).V(xs) - (-0.5 / 1.7**2 / u + corr)
    assert np.allclose(osc2, -3.0 / (32 * 1.7**2) / u**2, rtol=1e-12)
    cou2 = pm.coulomb2(p, 1.7).V(xs) - (-0.5 / 1.7**2 * u**2 + corr)
    assert np.allclose(cou2, -3.0 / (8 * 1.7**2) / u**2, rtol=1e-12)


def test_morse_example4_potential_terms():
    lam = 0.8
    p = mc.example4(lam)
    xs = np.linspace(0.2, 5, 25)
    f = np.exp(-2 * lam * mu(p, 1.0, xs))
    extra = pm.morse(p, lam, 9.0, 1.0).V(xs) + 0.5 * lam**2 * (f - 9.0) ** 2
    sh = np.sinh(lam * xs)
    assert np.allclose(extra, -0.5 * lam**2 * (sh**-2 + 1.25 * sh**-4), rtol=1e-12)


# ------------------------------------------------------------------ spectra


def test_spectrum_formulas():
    for p in PROFILES:
        assert [pm.oscillator1(p, 2.0, 0.5).E(n) for n in range(3)] == [2.0, 6.0, 10.0]
        osc2 = pm.oscillator2(p, 2.0)
        assert [osc2.E(n) for n in range(3)] == pytest.approx([-0.5, -0.5 / 9, -0.5 / 25], rel=1e-15)
        cou1 = pm.coulomb1(p, 1.3, 0.7)
        assert all(cou1.E(n) / cou1.E(0) == pytest.approx(1 / (n + 1) ** 2, rel=1e-14) for n in range(6))
        cou2 = pm.coulomb2(p, 0.5)
        assert all(cou2.E(n + 1) - cou2.E(n) == pytest.approx(-8.0, rel=1e-14) for n in range(5))
        m = pm.morse(p, 1.5, 9.0, 1.0)
        for n in range(m.n_max):
            assert m.E(n) - m.E(n + 1) == pytest.approx(2 * 1.5**2 * (9 - 2 * n - 2), rel=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.2, 6), st.floats(0.1, 5), st.floats(0.2, 4), st.integers(0, 20))
def test_oscillator1_energy_independent_of_profile_parameter(gamma, alpha, tau, n):
    assert pm.oscillator1(mc.example1(gamma), alpha, tau).E(n) == pm.oscillator1(mc.constant_mass(), alpha, tau).E(n)


def test_spectrum_ordering_flags():
    p = mc.example1(2.0)
    assert pm.oscillator1(p, 1.0, 1.0).spectrum_increasing()
    assert pm.oscillator2(p, 1.0).spectrum_increasing()
    assert pm.coulomb1(p, 1.0, 1.0).spectrum_increasing()
    assert pm.coulomb2(p, 1.0, variant="derived").spectrum_increasing()
    assert pm.morse(p, 1.0, 9.0, 1.0, variant="standard").spectrum_increasing()
    # printed Cou-2 and printed Morse spectra decrease with n; they are flagged, not reordered
    assert not pm.coulomb2(p, 1.0).spectrum_increasing()
    assert not pm.morse(p, 1.0, 9.0, 1.0).spectrum_increasing()


def test_morse_level_range():
    m = pm.morse(mc.example1(2.0), 1.0, 9.0, 1.0)
    assert m.n_max == 4
    assert m.n_max_candidates == {"printed": 4, "normalizable": 3}
    assert [n for n, _ in m.levels(10)] == [0, 1, 2, 3, 4]
    with pytest.raises(InvalidParams):
        m.E(5)
    meta = m.metadata()
    assert meta["energy_candidates"] == ["printed", "reference"] and meta["n_max"] == 4


# ------------------------------------------------------------------ normalization

# systems whose wavefunctions decay fast enough for the default quadrature and form an orthonormal set
VERIFIED = [
    ("osc1-constant", lambda: pm.oscillator1(mc.constant_mass(), 1.0, 1.0)),
    ("osc1-example1", lambda: pm.oscillator1(mc.example1(2.0), 1.0, 1.0)),
    ("osc1-example3", lambda: pm.oscillator1(mc.example3(1.0), 1.0, 1.0)),
    ("cou1-constant", lambda: pm.coulomb1(mc.constant_mass(), 1.0, 1.0)),
    ("cou1-example1", lambda: pm.coulomb1(mc.example1(2.0), 1.0, 1.0)),
    ("cou1-example2", lambda: pm.coulomb1(mc.example2(1.0), 1.0, 1.0)),
    ("cou1-example4", lambda: pm.coulomb1(mc.example4(1.0), 1.0, 1.0)),
    ("cou2-derived-example1", lambda: pm.coulomb2(mc.example1(2.0), 1.0, variant="derived")),
    ("cou2-derived-example4", lambda: pm.coulomb2(mc.example4(1.0), 1.0, variant="derived")),
    ("morse-constant", lambda: pm.morse(mc.constant_mass(), 1.0, 9.0, 1.0, variant="standard")),
    ("morse-example1", lambda: pm.morse(mc.example1(2.0), 1.0, 9.0, 1.0, variant="standard")),
]


def test_ground_state_normalization_constant():
    assert pm.normalize(pm.oscillator1(mc.constant_mass(), 1.0, 1.0), 0) == pytest.approx(math.pi**-0.25, abs=1e-8)


def test_example1_normalization_constants():
    """After the substitution u = mu the integral becomes the Hermite norm, so A(n) has a closed form."""
    s = pm.oscillator1(mc.example1(2.0), 1.0, 1.0)
    stored = load_fixture("example1_osc1_norms")["A"]
    for n in range(6):
        A = pm.normalize(s, n)
        closed = math.pi**-0.25 / math.sqrt(2.0**n * math.factorial(n))
        assert A == pytest.approx(closed, rel=1e-8)
        assert A == pytest.approx(stored[n], rel=1e-10)


@pytest.mark.parametrize("name, make", VERIFIED, ids=[v[0] for v in VERIFIED])
def test_orthonormality_and_nodes(name, make):
    s = make()
    top = 4 if s.n_max is None else min(4, s.n_max_candidates["normalizable"])
    ns = list(range(top + 1))
    A = [s.A(n) for n in ns]
    gram = np.array(
        [[pm.converged_integral(s, ns, lambda x: A[i] * A[j] * s.phi(i, x) * s.phi(j, x)) for j in ns] for i in ns]
    )
    assert np.all(np.abs(np.diag(gram) - 1.0) < 1e-6)
    assert np.max(np.abs(gram - np.eye(len(ns)))) < 1e-5
    xs = pm.default_rule(s, ns).nodes
    assert [pm.count_nodes(s.phi(n, xs)) for n in ns] == ns


def test_oscillator2_nodes_follow_half_degree():
    """Osc-2 states are Hermite polynomials of sqrt(mu): H_n keeps only its positive zeros, floor(n/2)."""
    s = pm.oscillator2(mc.constant_mass(), 1.0)
    xs = np.geomspace(1e-8, 400, 20001)
    assert [pm.count_nodes(s.phi(n, xs)) for n in range(6)] == [0, 0, 1, 1, 2, 2]


def test_normalize_with_explicit_rule_checks_edges():
    s = pm.oscillator1(mc.constant_mass(), 1.0, 1.0)
    assert pm.normalize(s, 2, simpson_rule(-12, 12, 4001)) == pytest.approx(pm.normalize(s, 2), rel=1e-10)
    with pytest.raises(NonNormalizable):
        pm.normalize(s, 2, simpson_rule(-2, 2, 401))
    cou = pm.coulomb1(mc.constant_mass(), 1.0, 1.0)
    with pytest.raises(NonNormalizable):
        pm.normalize(cou, 0, simpson_rule(-1, 10, 101))


def test_normalization_cache_is_idempotent_under_threads():
    s = pm.oscillator1(mc.example1(2.0), 1.0, 1.0)
    with ThreadPoolExecutor(8) as pool:
        values = list(pool.map(lambda _: s.A(3), range(16)))
    assert len(set(values)) == 1
    assert values[0] == pytest.approx(load_fixture("example1_osc1_norms")["A"][3], rel=1e-10)


def test_count_nodes_ignores_roundoff_tails():
    assert pm.count_nodes([1.0, 0.5, 1e-20, -1e-20, 0.2, -0.4, 0.1]) == 2
    assert pm.count_nodes([]) == 0


# ------------------------------------------------------------------ domains and errors


def test_operative_domains():
    assert pm.oscillator1(mc.example1(2.0), 1.0, 1.0).operative_domain == (-math.inf, math.inf)
    lo, hi = pm.coulomb1(mc.example1(2.0), 1.0, 1.0).operative_domain
    assert hi == math.inf and abs(mu(mc.example1(2.0), 1.0, lo)) == pytest.approx(pm.MU_EPS, rel=1e-3)
    # under the mass step mu only decays toward the left, so the cut sits far out
    lo, hi = pm.oscillator2(mc.example2(1.0), 1.0).operative_domain
    assert lo < -20 and hi == math.inf
    assert pm.morse(mc.example4(1.0), 1.0, 9.0, 1.0).operative_domain == (0.0, math.inf)


def test_errors():
    p = mc.example1(2.0)
    negative = mc.user_profile("u", "1", domain=("-inf", 0), anchor=0.0)
    for make in (pm.oscillator2, pm.coulomb2):
        with pytest.raises(EmptyDomain):
            make(negative, 1.0)
    with pytest.raises(EmptyDomain):
        pm.coulomb1(negative, 1.0, 1.0)
    bad = [
        lambda: pm.oscillator1(p, 0.0, 1.0),
        lambda: pm.oscillator1(p, 1.0, -1.0),
        lambda: pm.oscillator2(p, 0.0),
        lambda: pm.coulomb1(p, -1.0, 1.0),
        lambda: pm.coulomb2(p, 1.0, variant="other"),
        lambda: pm.morse(p, 0.0, 9.0, 1.0),
        lambda: pm.morse(p, 1.0, 9.0, 1.0, variant="other"),
        lambda: pm.build("osc1", p),
        lambda: pm.build("nosuch", p),
        lambda: pm.oscillator1(p, 1.0, 1.0).E(-1),
        lambda: pm.oscillator1(p, 1.0, 1.0).E(1.5),
    ]
    for call in bad:
        with pytest.raises(InvalidParams):
            call()


def test_build_dispatch():
    p = mc.example1(2.0)
    assert pm.build("osc1", p, alpha=2.0, tau=0.5).E(0) == 2.0
    assert pm.build("Morse", p, lam=1.0, xi=9.0).class_tag is pm.ClassTag.MORSE
    assert pm.build("cou2", p, variant="derived").variant == "derived"
    meta = pm.build("cou1", p, alpha=1.0).metadata()
    assert meta["class"] == "Cou1" and meta["energy_candidates"] == ["printed", "reference"]
