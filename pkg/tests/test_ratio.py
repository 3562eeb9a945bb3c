import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from synthlab import rng as rngmod
from synthlab.core import CoefficientSet, enumerate_spectrum
from synthlab.errors import ArgumentError, HypothesisViolationError, UndefinedRatioError
from synthlab.measures import make_measure
from synthlab.ratio import (
    converse_check,
    expected_error_closed_form,
    expected_error_exact,
    fourier_ratio,
    fr_lower_certificate,
    growth_table,
    kuznecov_fit,
    local_fr,
    random_band_limited,
    random_k_term,
    select_lines,
    sparse_approx,
    uncertainty_product,
)
from synthlab.sphere import SphereModel
from synthlab.synthesis import make_window
from synthlab.torus import TorusModel

T2 = TorusModel(2)
S2 = SphereModel()


@pytest.fixture(scope="module")
def bump():
    return make_window("bump")


def lines_with_norms(table, norms: dict):
    """Coefficients putting all of a line's mass on its first label."""
    vals = {}
    for i, a in norms.items():
        v = np.zeros(table.multiplicities[i], dtype=complex)
        v[0] = a
        vals[i] = v
    return CoefficientSet.from_lines(table, vals)


# -- Fourier ratio ----------------------------------------------------------


def test_single_eigenfunction_ratio_one():
    table = enumerate_spectrum(T2, 6.0)
    r = fourier_ratio(lines_with_norms(table, {3: 2.5}))
    assert r.fr == pytest.approx(1.0, abs=1e-12)
    assert r.n_lines == 1


def test_two_equal_lines():
    table = enumerate_spectrum(T2, 6.0)
    assert fourier_ratio(lines_with_norms(table, {1: 0.7, 4: 0.7})).fr == pytest.approx(math.sqrt(2), abs=1e-12)


@pytest.mark.parametrize("n", [3, 5, 9])
def test_n_equal_lines(n):
    table = enumerate_spectrum(T2, 10.0)
    f = lines_with_norms(table, {i: 1.3 for i in range(n)})
    assert fourier_ratio(f).fr == pytest.approx(math.sqrt(n), abs=1e-12)


def test_zero_function_ratio_undefined():
    table = enumerate_spectrum(T2, 4.0)
    with pytest.raises(UndefinedRatioError):
        fourier_ratio(CoefficientSet.zeros(table))


@given(st.integers(0, 2**32 - 1))
def test_ratio_at_least_one(seed):
    f = random_band_limited(T2, 8.0, np.random.default_rng(seed))
    r = fourier_ratio(f)
    assert r.fr >= 1.0 - 1e-12
    if r.n_lines == 1:
        assert r.fr == pytest.approx(1.0, abs=1e-12)
    else:
        assert r.fr > 1.0 + 1e-12


def test_local_ratio_single_line(bump):
    table = enumerate_spectrum(S2, 12.0)
    r = local_fr(lines_with_norms(table, {5: 1.0}), 3.0, bump)
    assert r.fr_R == pytest.approx(1.0, abs=1e-12)


def test_local_ratio_two_to_one_weights(bump):
    # psi(0) = 1 and psi(5 / R) = 1/2 when 5 / R is the half level
    table = enumerate_spectrum(T2, 6.0)
    i = table.index_of_key(25)
    R = 5.0 / bump.C_psi
    f = lines_with_norms(table, {0: 1.0, i: 1.0})
    assert bump(5.0 / R) == pytest.approx(0.5, abs=1e-10)
    assert local_fr(f, R, bump).fr_R == pytest.approx(3 / math.sqrt(5), abs=1e-9)


def test_local_ratio_flat_band(bump):
    f = random_band_limited(T2, 5.0, np.random.default_rng(3))
    R = 200.0
    lo = float(bump(5.0 / R))
    ratio = local_fr(f, R, bump).fr_R / fourier_ratio(f).fr
    assert lo <= ratio <= 1.0 / lo


def test_local_ratio_zero_input(bump):
    table = enumerate_spectrum(T2, 30.0)
    with pytest.raises(UndefinedRatioError):
        local_fr(CoefficientSet.zeros(table), 1.0, bump)


# -- sparse approximation ---------------------------------------------------


def test_single_line_approximation_exact():
    table = enumerate_spectrum(T2, 5.0)
    f = lines_with_norms(table, {2: 1.0 + 2.0j})
    res = sparse_approx(f, 3, 5, seed=1)
    assert np.max(res.errors) == 0.0
    assert np.array_equal(res.best.values, f.values)


@settings(max_examples=25)
@given(st.integers(0, 2**32 - 1), st.integers(1, 12))
def test_expected_error_identity(seed, k):
    f = random_band_limited(T2, 6.0, np.random.default_rng(seed))
    exact = expected_error_exact(f, k)
    closed = expected_error_closed_form(f, k)
    assert abs(exact - closed) <= 1e-12 * max(1.0, f.l2_norm() ** 2)


def test_closed_form_formula():
    table = enumerate_spectrum(T2, 6.0)
    f = lines_with_norms(table, {0: 1.0, 3: 1.0})
    # FR^2 - 1 = 1 and ||f||^2 = 2
    assert expected_error_closed_form(f, 4) == pytest.approx(0.5, abs=1e-15)


def test_best_of_twenty_meets_threshold():
    table = enumerate_spectrum(T2, 6.0)
    f = lines_with_norms(table, {1: 1.0, 4: 1.0})
    assert fourier_ratio(f).fr == pytest.approx(math.sqrt(2))
    k = math.floor((2 - 1) / 0.5**2) + 1
    assert k == 5
    res = sparse_approx(f, k, 20, seed=rngmod.DEFAULT_SEED)
    assert math.sqrt(res.errors[res.best_trial]) < 0.5 * f.l2_norm()
    assert (res.best - f).l2_norm() < 0.5 * f.l2_norm()


def test_monte_carlo_mean_and_unbiased():
    f = random_band_limited(T2, 6.0, np.random.default_rng(11), n_lines=4)
    res = sparse_approx(f, 5, 20_000, seed=7)
    assert abs(res.mean_error - res.predicted_mean) <= 4 * res.stderr
    assert np.all(np.abs(res.bias_zscores()) <= 4.0)


def test_sparse_approx_thread_independent():
    f = random_band_limited(T2, 6.0, np.random.default_rng(2), n_lines=5)
    a = sparse_approx(f, 4, 500, seed=3, threads=1)
    b = sparse_approx(f, 4, 500, seed=3, threads=4)
    assert np.array_equal(a.errors, b.errors)
    assert a.best_trial == b.best_trial


def test_sparse_approx_arguments():
    table = enumerate_spectrum(T2, 4.0)
    f = lines_with_norms(table, {1: 1.0})
    with pytest.raises(ArgumentError):
        sparse_approx(f, 2, 0)
    with pytest.raises(ArgumentError):
        sparse_approx(f, 0, 4)
    with pytest.raises(UndefinedRatioError):
        sparse_approx(CoefficientSet.zeros(table), 2, 4)


# -- converse ---------------------------------------------------------------


def test_converse_exact_k_term():
    f = random_band_limited(T2, 8.0, np.random.default_rng(5), n_lines=3)
    res = converse_check(f, f)
    assert res.eta == 0.0
    assert res.k == np.count_nonzero(f.values)
    assert res.fr <= math.sqrt(res.k) + 1e-12
    assert res.ok


def test_converse_rejects_zero_P():
    f = random_band_limited(T2, 8.0, np.random.default_rng(5))
    with pytest.raises(HypothesisViolationError):
        converse_check(f, CoefficientSet.zeros(f.table))


def test_converse_randomized_instances():
    gen = rngmod.stream(rngmod.DEFAULT_SEED, 0)
    for _ in range(100):
        f = random_band_limited(T2, 20.0, gen)
        P = random_k_term(f, gen)
        res = converse_check(f, P)
        assert res.n_lambda == f.table.weyl_count
        assert res.slack >= 0.0


# -- growth -----------------------------------------------------------------


def test_growth_torus_closed_form():
    gt = growth_table(T2, 6.0)
    i = int(np.flatnonzero(gt.keys == 25)[0])
    assert gt.A[i] ** 2 == pytest.approx(12 / (2 * math.pi) ** 2, rel=1e-12)
    assert gt.A[0] ** 2 == pytest.approx(1 / T2.volume, rel=1e-12)
    assert gt.cross_check_error <= 1e-10


def test_growth_sphere_closed_form():
    gt = growth_table(S2, 12.0)
    assert gt.A[10] ** 2 == pytest.approx(21 / (4 * math.pi), rel=1e-12)
    assert gt.A[0] ** 2 == pytest.approx(1 / S2.volume, rel=1e-12)
    assert gt.cross_check_error <= 1e-10


def test_growth_envelope_and_radius():
    gt = growth_table(T2, 10.0, radius=4.0)
    assert np.all(np.diff(gt.envelope) >= 0)
    assert np.all(gt.envelope >= gt.A)
    assert gt.A_R == pytest.approx(np.max(gt.A[gt.lambdas <= 4.0]))
    assert math.isfinite(gt.A_R)


# -- certificates -----------------------------------------------------------


def test_lower_certificate_single_eigenfunction(bump):
    table = enumerate_spectrum(T2, 6.0)
    c = fr_lower_certificate(lines_with_norms(table, {3: 1.0}), 4.0, bump)
    assert c.ok
    assert all(s.slack >= 0 for s in c.steps)


@pytest.mark.parametrize("R", [8.0, 16.0, 32.0])
def test_lower_certificate_segment(bump, R):
    seg = make_measure({"kind": "segment"}, T2)
    f = seg.coefficients(enumerate_spectrum(T2, bump.C_psi * R))
    c = fr_lower_certificate(f, R, bump, seg)
    assert [s.name for s in c.steps] == ["sup_bound", "num_upper", "num_lower", "l2_vs_sup", "fr_lower"]
    assert c.ok, [(s.name, s.slack) for s in c.steps]
    assert c.c0 == pytest.approx(bump.c_psi / c.C3)


def test_lower_certificate_full_volume_weakest(bump):
    seg = make_measure({"kind": "segment"}, T2)
    f = seg.coefficients(enumerate_spectrum(T2, bump.C_psi * 8))
    thin = fr_lower_certificate(f, 8.0, bump, seg)
    full = fr_lower_certificate(f, 8.0, bump, None)
    assert full.ok
    assert full.lower_bound <= thin.lower_bound


def test_lower_certificate_band_violation(bump):
    f = random_band_limited(T2, 30.0, np.random.default_rng(1), n_lines=40)
    with pytest.raises(HypothesisViolationError):
        fr_lower_certificate(f, 2.0, bump)


def test_uncertainty_all_lines(bump):
    f = random_band_limited(S2, bump.C_psi * 4, np.random.default_rng(8))
    u = uncertainty_product(f, 4.0, bump, selection="all")
    assert u.eta == 0.0
    assert u.fr_R <= math.sqrt(u.M_R) * (1 + 1e-12)
    assert u.ok


def test_uncertainty_single_line(bump):
    table = enumerate_spectrum(T2, bump.C_psi * 4)
    u = uncertainty_product(lines_with_norms(table, {4: 1.0}), 4.0, bump)
    assert u.M_R == 1
    assert u.fr_R == pytest.approx(1.0, abs=1e-12)
    assert u.ok


def test_uncertainty_greedy_segment(bump):
    seg = make_measure({"kind": "segment"}, T2)
    for R in (8.0, 16.0):
        f = seg.coefficients(enumerate_spectrum(T2, bump.C_psi * R))
        u = uncertainty_product(f, R, bump, seg, eta_target=0.1)
        assert u.eta <= 0.1
        # concentration holds with equality by construction of eta
        assert all(s.slack > 0 for s in u.steps[-2:])
        assert u.ok


def test_uncertainty_selection_too_small(bump):
    table = enumerate_spectrum(T2, bump.C_psi * 4)
    f = lines_with_norms(table, {2: 1.0})
    with pytest.raises(HypothesisViolationError):
        uncertainty_product(f, 4.0, bump, selection=[0])


def test_greedy_ties_prefer_smaller_lambda():
    w = np.array([1.0, 2.0, 2.0, 0.5])
    lam = np.array([0.0, 3.0, 1.0, 2.0])
    # one heavy line leaves 3.5 / 5.5 > 0.5, both leave 1.5 / 5.5
    assert list(select_lines(w, lam, 0.3)) == [1, 2]
    assert list(select_lines(w[[0, 1, 2]], lam[[0, 1, 2]], 0.5)) == [1, 2]
    only = select_lines(np.array([2.0, 2.0]), np.array([5.0, 1.0]), 0.5)
    assert list(only) == [1]


@pytest.mark.parametrize("model,R", [(T2, 4.0), (S2, 4.0)], ids=["torus2", "sphere2"])
def test_certificates_randomized(bump, model, R):
    gen = rngmod.stream(rngmod.DEFAULT_SEED, 17)
    for _ in range(100):
        f = random_band_limited(model, bump.C_psi * R, gen)
        u = uncertainty_product(f, R, bump)
        assert u.ok, [(s.name, s.slack) for s in u.steps]


# -- cumulative growth ------------------------------------------------------


def test_kuznecov_equator():
    kf = kuznecov_fit(make_measure({"kind": "equator"}, S2), 120.0)
    assert abs(kf.exponent - 1.0) <= 0.1
    assert kf.hypersurface and kf.bounded
    assert np.max(kf.line_norms) <= 2.1


def test_kuznecov_latitude_same_class():
    kf = kuznecov_fit(make_measure({"kind": "latitude", "theta0": math.pi / 3}, S2), 120.0)
    assert abs(kf.exponent - 1.0) <= 0.1
    assert kf.bounded


def test_kuznecov_two_atoms():
    atoms = make_measure({"kind": "atom-set", "points": [[0.5, 0.0], [2.0, 1.0]]}, S2)
    kf = kuznecov_fit(atoms, 120.0)
    assert abs(kf.exponent - 2.0) <= 0.2
    assert not kf.bounded
    assert np.all(np.diff(kf.cumulative) >= 0)


def test_kuznecov_needs_sphere():
    with pytest.raises(ArgumentError):
        kuznecov_fit(make_measure({"kind": "segment"}, T2), 20.0)
