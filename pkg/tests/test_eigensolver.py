import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pct_pdm import eigensolver as es
from pct_pdm import mass_catalog as mc
from pct_pdm import pct_maps as pm
from pct_pdm import radial3d as r3
from pct_pdm.errors import InvalidGrid, SingularMass
from pct_pdm.fixtures import load_fixture

ONE = mc.constant_mass()


def jacobi_eigen(a, sweeps=100, tol=1e-15):
    """Cyclic Jacobi rotations on a dense symmetric matrix; independent of any library eigensolver."""
    a = np.array(a, dtype=float)
    n = a.shape[0]
    v = np.eye(n)
    for _ in range(sweeps):
        off = math.sqrt(np.sum(np.tril(a, -1) ** 2))
        if off < tol * math.sqrt(np.sum(a * a)):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) < 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * a[p, q])
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rot = np.array([[c, s], [-s, c]])
                a[[p, q], :] = rot.T @ a[[p, q], :]
                a[:, [p, q]] = a[:, [p, q]] @ rot
                v[:, [p, q]] = v[:, [p, q]] @ rot
    order = np.argsort(np.diag(a))
    return np.diag(a)[order], v[:, order]


def _tridiag(diag, off):
    grid = es.Grid(0.0, 1.0, max(16, len(diag)))
    return es.DiscreteHamiltonian(np.asarray(diag, dtype=float), np.asarray(off, dtype=float), grid)


# ------------------------------------------------------------------ grids


def test_grid_geometry():
    g = es.Grid(-1.0, 1.0, 19)
    assert g.h == pytest.approx(0.1, rel=1e-15)
    assert g.nodes[0] == pytest.approx(-0.9) and g.nodes[-1] == pytest.approx(0.9)
    assert g.half_points.size == g.N + 1
    fine = g.refined()
    assert fine.N == 39 and np.allclose(fine.nodes[1::2], g.nodes, atol=1e-15)
    assert es.Grid(-2.0, 2.0, 16, "Log").physical_nodes()[0] == pytest.approx(math.exp(-2 + 4 / 17))
    for bad in [(1.0, 0.0, 20), (0.0, 1.0, 15), (0.0, math.inf, 20), (0.0, 1.0, 20.5)]:
        with pytest.raises(InvalidGrid):
            es.Grid(*bad)


# ------------------------------------------------------------------ eigen_lowest


def test_toeplitz_3x3():
    vals, vecs = es.eigen_lowest(_tridiag([2, 2, 2], [-1, -1]), 3)
    assert np.allclose(vals, [2 - math.sqrt(2), 2, 2 + math.sqrt(2)], atol=1e-14)
    assert np.allclose(vecs.T @ vecs, np.eye(3), atol=1e-14)


def test_identity_like():
    vals, vecs = es.eigen_lowest(_tridiag([3.5] * 5, [0.0] * 4), 5)
    assert np.all(vals == 3.5)
    assert np.allclose(np.abs(vecs), np.eye(5))
    assert np.all(vecs.sum(axis=0) > 0)


def test_random_tridiagonal_against_jacobi():
    rng = np.random.default_rng(20240611)
    d, e = rng.normal(size=50), rng.normal(size=49)
    H = _tridiag(d, e)
    ref_vals, ref_vecs = jacobi_eigen(H.dense())
    vals, vecs = es.eigen_lowest(H, 50)
    assert np.max(np.abs(vals - ref_vals)) < 1e-10
    overlaps = np.abs(np.sum(vecs * ref_vecs, axis=0))
    assert np.max(np.abs(overlaps - 1.0)) < 1e-8


@settings(max_examples=40, deadline=None)
@given(st.integers(16, 30), st.integers(1, 16), st.integers(0, 2**32 - 1))
def test_lowest_eigenpairs_property(n, k, seed):
    rng = np.random.default_rng(seed)
    H = _tridiag(rng.uniform(-5, 5, n), rng.uniform(-2, 2, n - 1))
    vals, vecs = es.eigen_lowest(H, k)
    ref, _ = jacobi_eigen(H.dense())
    assert np.max(np.abs(vals - ref[:k])) < 1e-10
    assert np.all(np.diff(vals) >= 0)
    assert np.allclose(np.linalg.norm(vecs, axis=0), 1.0, atol=1e-12)
    for j in range(k):
        v = vecs[:, j]
        first = v[np.abs(v) > 1e-6 * np.abs(v).max()][0]
        assert first > 0
        assert np.linalg.norm(H.apply(v) - vals[j] * v) < 1e-9


def test_eigen_lowest_validates_k():
    H = _tridiag([1.0] * 16, [0.1] * 15)
    for k in (0, 17):
        with pytest.raises(ValueError):
            es.eigen_lowest(H, k)


# ------------------------------------------------------------------ discretization


def test_exact_symmetry_and_dense_form():
    H = es.discretize_1d(mc.example1(2.0), lambda x: 0.5 * x * x, es.Grid(-5, 5, 64))
    D = H.dense()
    assert np.array_equal(D, D.T)
    v = np.random.default_rng(1).normal(size=64)
    assert np.allclose(D @ v, H.apply(v), rtol=1e-14, atol=1e-12)
    L = es.discretize_radial(mc.powerlaw(1.0, -2.0), lambda r: np.log(r) ** 2, 0, es.Grid(-3, 3, 64, "Log")).dense()
    assert np.array_equal(L, L.T)


def test_particle_in_a_box():
    vals, _ = es.eigen_lowest(es.discretize_1d(ONE, lambda x: 0 * x, es.Grid(0, 1, 2000)), 1)
    assert vals[0] == pytest.approx(math.pi**2 / 2, rel=1e-3)
    assert vals[0] == pytest.approx(4.9348022, rel=1e-3)


def test_harmonic_oscillator_raw_and_extrapolated():
    g = es.Grid(-12, 12, 4000)
    V = lambda x: 0.5 * x * x
    exact = np.arange(6) + 0.5
    raw = es.eigen_lowest(es.discretize_1d(ONE, V, g), 6)[0]
    fine = es.eigen_lowest(es.discretize_1d(ONE, V, g.refined()), 6)[0]
    # second-order scheme: raw error ~ h^2 E^2 / 24, removed by one Richardson step
    assert np.max(np.abs(raw - exact)) < 1e-4
    assert np.max(np.abs((4 * fine - raw) / 3 - exact) / exact) < 1e-6


def test_hydrogen_ground_state():
    vals, _ = es.eigen_lowest(es.discretize_radial(ONE, lambda r: -1.0 / r, 0, es.Grid(0, 200, 8000)), 2)
    assert vals[0] == pytest.approx(-0.5, abs=1e-4)
    assert vals[1] == pytest.approx(-0.125, abs=1e-4)


@pytest.mark.parametrize("grid", [es.Grid(0, 12, 4000), es.Grid(-10, math.log(12.0), 4000, "Log")], ids=["linear", "log"])
def test_isotropic_oscillator_p_wave(grid):
    V = lambda r: 0.5 * r * r
    raw = es.eigen_lowest(es.discretize_radial(ONE, V, 1, grid), 4)[0]
    fine = es.eigen_lowest(es.discretize_radial(ONE, V, 1, grid.refined()), 4)[0]
    exact = 2 * np.arange(4) + 1 + 1.5
    assert np.max(np.abs((4 * fine - raw) / 3 - exact)) < 1e-5


def test_singular_mass_detected():
    # N = 16 on [-1, 1] puts a half point exactly at 0, where tanh^2 vanishes
    with pytest.raises(SingularMass):
        es.discretize_1d(mc.example4(1.0), lambda x: 0 * x, es.Grid(-1, 1, 16))
    with pytest.raises(SingularMass):
        es.discretize_1d(ONE, lambda x: 1.0 / x, es.Grid(-1, 1, 17))
    with pytest.raises(InvalidGrid):
        es.discretize_radial(ONE, lambda r: 0 * r, 0, es.Grid(-1, 1, 20))
    with pytest.raises(InvalidGrid):
        es.discretize_radial(ONE, lambda r: 0 * r, -1, es.Grid(0, 1, 20))


@settings(max_examples=30, deadline=None)
@given(st.floats(0.2, 6), st.floats(0.2, 4), st.floats(-3, 3))
def test_variational_lower_bound(gamma, width, shift):
    p = mc.example1(gamma)
    V = lambda x: 0.5 * (x - shift) ** 2 - 1.0
    g = es.Grid(-width - 3, width + 3, 200)
    vals = es.eigen_lowest(es.discretize_1d(p, V, g), 1)[0]
    assert vals[0] >= np.min(V(g.nodes)) - 1e-12


# ------------------------------------------------------------------ verify


def test_verify_constant_oscillator():
    rep = es.verify(pm.oscillator1(ONE, 1.0, 1.0), grid=es.Grid(-12, 12, 4000), n_check=5, tol=1e-6)
    assert rep.passed and not rep.unmatched_analytic
    assert [p.n for p in rep.pairs] == list(range(6))
    for p in rep.pairs:
        assert p.rel_err < 1e-6
        assert p.overlap > 1 - 1e-8
        assert p.nodes_analytic == p.n
    assert rep.numeric_nodes[:6] == list(range(6))
    assert rep.check_consistency() == []


def test_verify_example1_fixture_and_convergence():
    stored = load_fixture("example1_osc1_verify")
    g = es.Grid(**{k: stored["meta"]["grid"][k] for k in ("a", "b", "N", "coordinate")})
    rep = es.verify(pm.oscillator1(mc.example1(2.0), 1.0, 1.0), grid=g, n_check=5, tol=stored["meta"]["tol"])
    assert rep.passed
    assert np.allclose(rep.numeric[:6], stored["E_numeric"], rtol=1e-12)
    assert np.allclose(rep.numeric_raw[:6], stored["E_raw"], rtol=1e-12)
    for row in rep.convergence[:6]:
        assert 3.5 < row["ratio_vs_analytic"] < 4.5


def test_verify_coulomb1_mass_step_adjudicates():
    rep = es.verify(pm.coulomb1(mc.example2(1.0), 1.0, 1.0), n_check=3, tol=1e-4, candidate="reference")
    assert rep.passed
    assert all(p.rel_err < 1e-4 for p in rep.pairs)
    assert rep.adjudication["match_counts"] == {"printed": 0, "reference": 4}
    printed = es.verify(pm.coulomb1(mc.example2(1.0), 1.0, 1.0), n_check=3, tol=1e-4)
    assert not printed.passed and printed.unmatched_analytic == [0, 1, 2, 3]
    assert printed.adjudication["chosen"] == "reference"


def test_verify_oscillator2_supports_odd_levels_only():
    rep = es.verify(pm.oscillator2(ONE, 1.0), n_check=5, tol=1e-4)
    assert [p.n for p in rep.pairs] == [1, 3, 5]
    assert [p.ordinal for p in rep.pairs] == [0, 1, 2]
    assert rep.unmatched_analytic == [0, 2, 4]
    assert all(p.nodes_analytic == p.ordinal for p in rep.pairs)


def test_verify_morse_example4_fixture():
    stored = load_fixture("morse_example4_verify")
    meta = stored["meta"]
    g = es.Grid(**{k: meta["grid"][k] for k in ("a", "b", "N", "coordinate")})
    s = pm.morse(mc.example4(meta["lambda"]), meta["lambda"], meta["xi"], meta["tau"])
    rep = es.verify(s, grid=g, n_check=meta["n_check"], tol=meta["tol"])
    assert np.allclose(rep.numeric[:4], stored["E_numeric"], rtol=1e-12)
    assert rep.adjudication["chosen"] == stored["chosen"]
    assert rep.box_stability["max_shift"] == pytest.approx(stored["box_max_shift"], rel=1e-9)
    assert set(rep.adjudication["match_counts"]) == {"printed", "reference"}
    assert rep.check_consistency() == []


def test_verify_splits_at_singular_point():
    s = pm.oscillator1(mc.example4(1.0), 1.0, 1.0)
    rep = es.verify(s, grid=es.Grid(-10, 10, 4001), n_check=2, tol=1e-3, box_check=False)
    assert rep.grid_meta["segment"]["a"] == 0.0
    assert len(rep.other_segments) == 1 and rep.other_segments[0]["interval"] == [-10.0, 0.0]


def test_verify_radial_log_grid():
    stored = load_fixture("singular_log_levels")
    g = es.Grid(**{k: stored["meta"]["grid"][k] for k in ("a", "b", "N", "coordinate")})
    rep = es.verify(r3.powerlaw_singular(1.0, 1.0), grid=g, n_check=3, tol=1e-4)
    assert np.allclose(rep.numeric[:4], stored["E_numeric"], rtol=1e-12)
    assert rep.adjudication["match_counts"] == {"printed": 0, "standard": 4}
    assert rep.offsets["printed"]["mean"] == pytest.approx(0.75, abs=1e-6)
    assert np.allclose(rep.spacings[:3], 2.0, atol=1e-6)
    assert rep.notes == [es.RADIAL_NOTE]


def test_verify_ignores_analytic_wavefunctions_when_building_h():
    s = pm.oscillator1(mc.example1(2.0), 1.0, 1.0)
    g = es.Grid(-10, 10, 800)
    noisy = dataclasses.replace(s, phi=lambda n, x: np.cos(7.0 * np.asarray(x) + n))
    a, b = es.verify(s, grid=g, n_check=3), es.verify(noisy, grid=g, n_check=3)
    assert a.numeric == b.numeric
    assert [p.overlap for p in a.pairs] != [p.overlap for p in b.pairs]


def test_verify_is_deterministic_and_thread_safe():
    systems = [pm.oscillator1(mc.example1(g), 1.0, 1.0) for g in (0.5, 2.0, 4.0)]
    g = es.Grid(-12, 12, 1000)
    seq = [es.verify(s, grid=g, n_check=3).to_dict() for s in systems]
    with ThreadPoolExecutor(3) as pool:
        par = list(pool.map(lambda s: es.verify(s, grid=g, n_check=3).to_dict(), systems))
    assert seq == par


def test_greedy_matching_never_forces():
    out = es._greedy([(0, 1.0), (1, 2.0), (2, 3.0)], [1.0000001, 2.5, 2.9999999], 1e-6)
    assert out == {0: 0, 2: 2}
    # one numeric level cannot serve two analytic levels
    assert es._greedy([(0, 1.0), (1, 1.0)], [1.0], 1e-6) == {0: 0}


def test_report_consistency_detects_tampering():
    rep = es.verify(pm.oscillator1(ONE, 1.0, 1.0), grid=es.Grid(-12, 12, 1000), n_check=2, tol=1e-4)
    assert rep.check_consistency() == []
    bad = dataclasses.replace(rep, pairs=[dataclasses.replace(rep.pairs[0], abs_err=1.0)] + rep.pairs[1:])
    assert bad.check_consistency()
    d = rep.to_dict()
    assert d["schema"] == "pct-pdm/1" and d["passed"] is True


def test_verify_argument_errors():
    s = pm.oscillator1(ONE, 1.0, 1.0)
    with pytest.raises(ValueError):
        es.verify(s, grid=es.Grid(-5, 5, 100), extrapolate="other")
    with pytest.raises(InvalidGrid):
        es.verify(s, grid=es.Grid(-5, 5, 100, "Log"))
    with pytest.raises(InvalidGrid):
        es.verify(pm.coulomb1(ONE, 1.0, 1.0), grid=es.Grid(-5, -1, 100))
