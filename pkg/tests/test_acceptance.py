"""Acceptance criteria, one test each.

Every test prints a single ``PASS``/``FAIL`` line with the measured numbers.
Run ``pytest tests/test_acceptance.py -s`` to see them, or
``python tests/test_acceptance.py`` for the lines alone.
"""

import math
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

from synthlab import rng as rngmod
from synthlab.cli import run_experiment, write_report
from synthlab.config import parse_config
from synthlab.core import CoefficientSet, enumerate_spectrum, lp_partial_sum, spectral_profile
from synthlab.measures import make_measure, minkowski_volume
from synthlab.ratio import (
    converse_check,
    expected_error_closed_form,
    expected_error_exact,
    fourier_ratio,
    kuznecov_fit,
    random_band_limited,
    random_k_term,
    sparse_approx,
    uncertainty_product,
)
from synthlab.sphere import SphereModel, legendre_at_zero_exact, sphere_quadrature
from synthlab.synthesis import endpoint_dyadic, make_window, stability_certificate
from synthlab.torus import TorusModel

T2 = TorusModel(2)
S2 = SphereModel()
CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def report(number, title, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} [{number:>2}] {title}: {detail}"
    print(line)
    return ok


def equator_identity():
    eq = make_measure({"kind": "equator"}, S2)
    table = enumerate_spectrum(S2, math.sqrt(64 * 65))
    c = eq.coefficients(table, method="quadrature")
    norms2 = c.line_norms() ** 2
    ref = np.array([math.pi * (2 * l + 1) * legendre_at_zero_exact(l) ** 2 for l in range(65)])
    rel = float(np.max(np.abs(norms2 - ref) / np.maximum(ref, 1.0)))
    odd = (table.labels[:, 0] % 2 == 1) | (table.labels[:, 1] != 0)
    vanish = float(np.max(np.abs(c.values[odd])))
    ok = rel <= 1e-10 and vanish <= 1e-12
    return report(1, "equator identity l <= 64", ok, f"max rel err {rel:.2e} (1e-10), odd/m!=0 max {vanish:.2e} (1e-12)")


def equator_limit():
    eq = make_measure({"kind": "equator"}, S2)
    ls = np.arange(0, 2001, 2)
    measured = np.abs(eq.label_coefficients(np.stack([ls, 0 * ls], axis=1), 0.0)) ** 2
    oracle = np.array([math.pi * (2 * l + 1) * legendre_at_zero_exact(int(l)) ** 2 for l in ls])
    match = float(np.max(np.abs((measured - 4.0) - (oracle - 4.0))))
    big = ls >= 10
    worst = float(np.max(np.abs(measured[big] - 4.0) * ls[big]))
    ok = match <= 1e-12 and worst < 3.0
    return report(2, "equator norm -> 2, even l <= 2000", ok,
                  f"|measured - oracle| {match:.2e} (1e-12), max l*|norm2 - 4| {worst:.3f} (< 3)")


def divergence_vs_boundedness():
    eq = make_measure({"kind": "equator"}, S2)
    prof = spectral_profile(S2, eq, 80.0)
    sums = [lp_partial_sum(prof, 6.0, lam) for lam in (20.0, 40.0, 80.0)]
    ratios = [sums[1] / sums[0], sums[2] / sums[1]]
    sup = float(np.max(prof.norms))
    ok = min(ratios) >= 1.8 and sup <= 2.1
    return report(3, "p = 6 partial sums grow, sup bounded", ok,
                  f"doubling ratios {ratios[0]:.3f}, {ratios[1]:.3f} (>= 1.8), sup {sup:.4f} (<= 2.1)")


def sparse_identity():
    gen = rngmod.stream(rngmod.DEFAULT_SEED, 4)
    worst = 0.0
    for _ in range(50):
        f = random_band_limited(T2, 8.0, gen)
        k = int(gen.integers(1, 20))
        scale = max(1.0, f.l2_norm() ** 2)
        worst = max(worst, abs(expected_error_exact(f, k) - expected_error_closed_form(f, k)) / scale)
    f = random_band_limited(T2, 6.0, gen, n_lines=5)
    mc = sparse_approx(f, 5, 20_000, seed=rngmod.DEFAULT_SEED)
    z = abs(mc.mean_error - mc.predicted_mean) / mc.stderr
    table = enumerate_spectrum(T2, 2.0)
    two = CoefficientSet.from_lines(table, {1: [1, 0, 0, 0], 2: [1, 0, 0, 0]})
    best = sparse_approx(two, 5, 20, seed=rngmod.DEFAULT_SEED)
    rel = math.sqrt(best.errors[best.best_trial]) / two.l2_norm()
    ok = worst <= 1e-12 and z <= 4.0 and abs(fourier_ratio(two).fr - math.sqrt(2)) < 1e-12 and rel < 0.5
    return report(4, "sparse approximation identity", ok,
                  f"identity err {worst:.1e} (1e-12), MC z {z:.2f} (<= 4), best-of-20 rel err {rel:.3f} (< 0.5)")


def converse_bound():
    gen = rngmod.stream(rngmod.DEFAULT_SEED, 5)
    slacks = []
    for _ in range(100):
        f = random_band_limited(T2, 20.0, gen)
        slacks.append(converse_check(f, random_k_term(f, gen)).slack)
    m = float(min(slacks))
    return report(5, "converse bound, 100 instances on T^2", m >= 0.0, f"min slack {m:.4f} (>= 0)")


def stability_exponents():
    seg = make_measure({"kind": "segment"}, T2)
    cert = stability_certificate(seg, 3.0, [8, 16, 32, 64], window=make_window())
    spread = cert.ratio_spread()
    ve = minkowski_volume(seg, [0.02, 0.04, 0.08, 0.16], 200_000, rngmod.DEFAULT_SEED)
    ok = spread <= 2.0 and abs(ve.exponent - 1.0) <= 0.15
    return report(6, "stability exponents, segment p = 3", ok,
                  f"ratio spread {spread:.3f} (<= 2), Minkowski exponent {ve.exponent:.3f} (1 +- 0.15)")


def endpoint_diagnostics():
    sub = make_measure({"kind": "subtorus", "k": 1}, T2)
    w = make_window()
    R = [8, 16, 32, 64, 128]
    e = endpoint_dyadic(sub, R, w, lambda_max=512.0)
    pre = endpoint_dyadic(sub, R[:1], w, lambda_max=4.0 * R[-1])
    bound = 2.0 * pre.b_sup()
    tail = e.tail_after(6)
    ok = tail < 1e-8 and e.b_sup() <= bound
    return report(7, "endpoint dyadic diagnostics", ok,
                  f"a_j tail after 6 {tail:.1e} (< 1e-8), sup b_j {e.b_sup():.3f} (<= {bound:.3f})")


def uncertainty_certificates():
    w = make_window()
    certs = []
    seg = make_measure({"kind": "segment"}, T2)
    for R in (8.0, 16.0, 32.0):
        certs.append(uncertainty_product(seg.coefficients(enumerate_spectrum(T2, w.C_psi * R)), R, w, seg))
    eq = make_measure({"kind": "equator"}, S2)
    for R in (4.0, 8.0):
        certs.append(uncertainty_product(eq.coefficients(enumerate_spectrum(S2, w.C_psi * R)), R, w, eq))
    for model, tag in ((T2, 8), (S2, 9)):
        gen = rngmod.stream(rngmod.DEFAULT_SEED, tag)
        for i in range(100):
            R = (4.0, 8.0)[i % 2]
            certs.append(uncertainty_product(random_band_limited(model, w.C_psi * R, gen), R, w))
    bad = [(i, s.name) for i, c in enumerate(certs) for s in c.steps if not s.ok]
    rel = min(s.slack / max(abs(s.lhs), abs(s.rhs), 1e-300) for c in certs for s in c.steps)
    return report(8, "uncertainty certificates", not bad,
                  f"{len(certs)} certificates x 8 steps, {len(bad)} failures, min relative slack {rel:.1e}")


def weyl_counts():
    n = enumerate_spectrum(T2, 100.0).weyl_count
    dev = abs(n / 100.0**2 - math.pi)
    sphere_ok = all(enumerate_spectrum(S2, math.sqrt(L * (L + 1))).weyl_count == (L + 1) ** 2
                    for L in (0, 1, 7, 32, 100))
    ok = dev <= 0.05 and sphere_ok
    return report(9, "Weyl counts", ok, f"T^2 N(100) = {n}, |N/L^2 - pi| {dev:.4f} (<= 0.05), sphere (L+1)^2 {sphere_ok}")


def kuznecov_growth():
    eq = kuznecov_fit(make_measure({"kind": "equator"}, S2), 120.0)
    atoms = kuznecov_fit(make_measure({"kind": "atom-set", "points": [[0.3, 0.2], [2.0, 4.0]]}, S2), 120.0)
    ok = abs(eq.exponent - 1.0) <= 0.1 and abs(atoms.exponent - 2.0) <= 0.2
    return report(10, "cumulative coefficient growth", ok,
                  f"equator {eq.exponent:.3f} (1 +- 0.1), two atoms {atoms.exponent:.3f} (2 +- 0.2)")


def infrastructure():
    L = 32
    table = enumerate_spectrum(S2, math.sqrt(L * (L + 1)))
    q = sphere_quadrature(L)
    B = S2.basis(table.labels, q.points)
    g_sphere = float(np.max(np.abs((np.conj(B).T * q.weights) @ B - np.eye(len(table.labels)))))
    ttable = enumerate_spectrum(T2, 10.0)
    grid = T2.grid_for_band(10.0)
    B = T2.basis(ttable.labels, grid.points)
    g_torus = float(np.max(np.abs((np.conj(B).T * grid.weights) @ B - np.eye(len(ttable.labels)))))
    gen = rngmod.stream(rngmod.DEFAULT_SEED, 11)
    parseval = 0.0
    for man, tab, gr in ((S2, table, q), (T2, ttable, grid)):
        c = CoefficientSet(tab, gen.standard_normal(tab.weyl_count) + 1j * gen.standard_normal(tab.weyl_count))
        back = man.analyze(man.synthesize(c, gr), gr, tab)
        parseval = max(parseval, float(np.max(np.abs(back.values - c.values))))
    identical = True
    with tempfile.TemporaryDirectory() as tmp:
        for name in ("volume_subtorus", "approx_two_lines"):
            command = name.split("_")[0]
            blobs = []
            for threads in (1, 4):
                cfg = parse_config((CONFIGS / f"{name}.conf").read_text(), command)
                cfg.threads = threads
                paths = write_report(run_experiment(cfg), Path(tmp) / str(threads))
                blobs.append([Path(paths[k]).read_bytes() for k in sorted(paths)])
            identical &= blobs[0] == blobs[1]
    ok = g_sphere <= 1e-10 and g_torus <= 1e-10 and parseval <= 1e-9 and identical
    return report(11, "infrastructure", ok,
                  f"Gram sphere {g_sphere:.1e}, torus {g_torus:.1e} (1e-10), round trip {parseval:.1e} (1e-9), "
                  f"reports byte-identical across threads {identical}")


CRITERIA = [
    equator_identity, equator_limit, divergence_vs_boundedness, sparse_identity, converse_bound,
    stability_exponents, endpoint_diagnostics, uncertainty_certificates, weyl_counts, kuznecov_growth,
    infrastructure,
]


@pytest.mark.parametrize("criterion", CRITERIA, ids=[c.__name__ for c in CRITERIA])
def test_criterion(criterion):
    assert criterion()


if __name__ == "__main__":
    start = time.perf_counter()
    results = [c() for c in CRITERIA]
    print(f"{sum(results)}/{len(results)} criteria pass in {time.perf_counter() - start:.1f}s")
    sys.exit(0 if all(results) else 2)
