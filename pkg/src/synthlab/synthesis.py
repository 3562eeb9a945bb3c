"""Windows with compactly supported Fourier transform, low-pass multipliers
``P_R = psi(sqrt(-Laplacian) / R)``, and the stability and endpoint certificates
built from them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq
from scipy.special import roots_legendre

from .core import CUTOFF_EPS, CoefficientSet, enumerate_spectrum
from .errors import ArgumentError, ResolutionError
from .measures import ThinMeasure, fit_power_law

PSI0_TOL = 1e-12
SLACK_TOL = 1e-12


def _bump(xi):
    xi = np.asarray(xi, dtype=float)
    out = np.zeros_like(xi)
    inside = np.abs(xi) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - xi[inside] ** 2))
    return out


def _triangle(xi):
    return np.clip(1.0 - np.abs(np.asarray(xi, dtype=float)), 0.0, None)


_PROFILES = {"bump": _bump, "fejer": _triangle}


_PANEL = 32


@lru_cache(maxsize=32)
def _gauss01(n):
    """n-node rule on [0, 1]: composite Gauss-Legendre with 32-node panels."""
    m = max(1, n // _PANEL)
    x, w = roots_legendre(min(n, _PANEL))
    left = np.arange(m)[:, None] / m
    xi = (left + (x[None, :] + 1.0) / (2.0 * m)).reshape(-1)
    wts = np.tile(w / (2.0 * m), m)
    return xi, wts


@dataclass(eq=False)
class Window:
    """Even psi with psi-hat supported in [-1, 1], scaled so psi(0) = 1.

    ``psi(t) = (1 / pi) * int_0^1 cos(t xi) psi_hat(xi) d xi`` evaluated by
    Gauss-Legendre on [0, 1]; the rule is refined with |t| so the oscillation
    stays resolved.
    """

    name: str
    n_nodes: int
    scale: float
    c_psi: float = 0.5
    C_psi: float = field(default=None)

    def profile(self, xi):
        return self.scale * _PROFILES[self.name](xi)

    def _rule(self, n):
        xi, w = _gauss01(n)
        return xi, w * self.profile(xi) / math.pi

    def __call__(self, t):
        t = np.abs(np.asarray(t, dtype=float))
        flat = t.reshape(-1)
        out = np.empty_like(flat)
        # rule size per value depends on |t| only, so a value never depends on its batch
        need = np.maximum(self.n_nodes, 2 ** np.ceil(np.log2(np.maximum(4.0 * flat + 64.0, 1.0)))).astype(np.int64)
        for n in np.unique(need):
            sel = need == n
            xi, wts = self._rule(int(n))
            vals = flat[sel]
            res = np.empty(len(vals))
            step = max(1, (1 << 22) // int(n))
            for s in range(0, len(vals), step):
                # row-wise sum, so a value does not depend on how many share the call
                res[s : s + step] = np.sum(np.cos(np.outer(vals[s : s + step], xi)) * wts, axis=1)
            out[sel] = res
        return out.reshape(t.shape) if t.ndim else float(out[0])

    @property
    def sup_abs(self):
        # psi_hat >= 0 forces |psi(t)| <= psi(0)
        return 1.0


def make_window(name="bump", n_nodes=256) -> Window:
    if name not in _PROFILES:
        raise ArgumentError(f"unknown window {name!r}; choose from {sorted(_PROFILES)}")
    prof = _PROFILES[name]

    def raw_integral(n):
        xi, w = _gauss01(n)
        return float(np.sum(w * prof(xi))) / math.pi

    n = n_nodes
    prev = raw_integral(n)
    while True:
        cur = raw_integral(2 * n)
        if abs(cur - prev) <= PSI0_TOL * abs(cur):
            break
        n *= 2
        prev = cur
        if n > 1 << 16:
            raise ResolutionError("window normalization did not settle", required_order=n)
    win = Window(name, n, 1.0 / cur)
    win.C_psi, win.c_psi = window_constants(win)
    return win


def window_constants(window, level=0.5):
    """(C_psi, c_psi): first t with psi(t) = level, and c_psi = level.

    |psi| >= c_psi on [0, C_psi] is verified on a grid.
    """
    hi = 0.5
    while window(hi) > level:
        hi *= 2.0
        if hi > 1e3:
            raise ArgumentError("window never drops to the requested level")
    C = brentq(lambda t: window(t) - level, 0.0, hi, xtol=1e-14)
    grid = np.linspace(0.0, C, 2001)
    if np.min(np.abs(window(grid))) < level * (1 - 1e-9):
        raise ArgumentError("window dips below c_psi inside [0, C_psi]")
    return float(C), float(level)


def window_eval(window: Window, t):
    return window(t)


def fejer_closed_form(t):
    t = np.asarray(t, dtype=float)
    half = t / 2.0
    with np.errstate(invalid="ignore", divide="ignore"):
        val = np.where(half == 0.0, 1.0, (np.sin(half) / np.where(half == 0.0, 1.0, half)) ** 2)
    return val


# ---------------------------------------------------------------------------
# multipliers


@dataclass
class LowPass:
    coeffs: CoefficientSet
    factors: np.ndarray  # psi(lambda / R) per line
    num: float  # sum |psi| ||E_lambda f||
    den: float  # (sum |psi|^2 ||E_lambda f||^2)^(1/2) = ||P_R f||_2
    R: float


def lowpass_apply(coeffs: CoefficientSet, R: float, window: Window) -> LowPass:
    if not R >= 1:
        raise ArgumentError(f"R must be at least 1, got {R}")
    factors = window(coeffs.table.lambdas / R)
    norms = coeffs.line_norms()
    num = float(np.sum(np.abs(factors) * norms))
    den = float(np.sqrt(np.sum((factors * norms) ** 2)))
    return LowPass(coeffs.scale_lines(factors), factors, num, den, float(R))


def _grid_band_ok(coeffs, grid):
    top = float(coeffs.table.lambdas[-1]) if len(coeffs.table) else 0.0
    return grid.band * (1 + CUTOFF_EPS) + CUTOFF_EPS >= top


def lowpass_eval_grid(coeffs: CoefficientSet, grid, support=None, radius=None):
    """Synthesize on ``grid``; leakage is the share of ||.||^2 farther than ``radius`` from ``support``.

    ``support`` is a measure (its dense support sample is used) or a point array.
    """
    if not _grid_band_ok(coeffs, grid):
        raise ResolutionError(
            f"grid resolves band {grid.band:.6g} but coefficients reach {coeffs.table.lambdas[-1]:.6g}",
            required_order=math.ceil(coeffs.table.lambdas[-1]),
        )
    man = coeffs.table.manifold
    values = man.synthesize(coeffs, grid)
    if support is None or radius is None:
        return values, float("nan")
    if isinstance(support, ThinMeasure):
        pts = support.support_points(min(radius / 20.0, 0.01))
    else:
        pts = np.asarray(support, dtype=float)
    dist = man.distance_to_set(pts, grid.points)
    energy = grid.weights * np.abs(values) ** 2
    total = float(np.sum(energy))
    if total == 0.0:
        return values, 0.0
    return values, float(np.sum(energy[dist > radius]) / total)


# ---------------------------------------------------------------------------
# test functions for pairings


@dataclass(eq=False)
class TestFunction:
    """A smooth chi known through its coefficients <chi, e_j> and its sup norm."""

    name: str
    coefficients: object  # callable(table) -> CoefficientSet
    sup_norm: float

    __test__ = False  # not a pytest class


def constant_test_function(manifold):
    def coeffs(table):
        out = np.zeros(table.weyl_count, dtype=complex)
        if len(table):
            out[0] = math.sqrt(manifold.volume)
        return CoefficientSet(table, out)

    return TestFunction("constant", coeffs, 1.0)


def eigenfunction_test_function(manifold, label):
    label = tuple(int(v) for v in label)

    def coeffs(table):
        hit = np.all(table.labels == np.asarray(label), axis=1)
        return CoefficientSet(table, hit.astype(complex))

    basis_sup = manifold.norm_const if hasattr(manifold, "norm_const") else None
    if basis_sup is None:
        l = label[0]
        basis_sup = math.sqrt((2 * l + 1) / (4 * math.pi))  # |Y_l^m| <= its zonal bound
    return TestFunction(f"eigenfunction{label}", coeffs, float(basis_sup))


def bump_test_function(manifold, center, kappa=4.0):
    """von Mises type bump exp(kappa (cos - 1)) around ``center``; sup norm 1."""
    from scipy.special import ive

    from .sphere import SphereModel, sph_harm_table

    center = np.asarray(center, dtype=float)
    if isinstance(manifold, SphereModel):
        x, w = np.polynomial.legendre.leggauss(512)
        g = np.exp(kappa * (x - 1.0))

        def coeffs(table):
            L = manifold.degree(table)
            from .sphere import legendre_p

            # Funk-Hecke: <g(x.n), Y_l^m> = 2 pi int g P_l * conj(Y_l^m(n))
            fh = np.array([2 * math.pi * np.sum(w * g * legendre_p(l, x)) for l in range(L + 1)])
            y = sph_harm_table(L, center[0], center[1])[0]
            idx = table.labels[:, 0] ** 2 + table.labels[:, 0] + table.labels[:, 1]
            return CoefficientSet(table, fh[table.labels[:, 0]] * np.conj(y[idx]))

        return TestFunction(f"bump(kappa={kappa})", coeffs, 1.0)

    def coeffs(table):
        j = table.labels
        # exp(kappa (cos t - 1)) = sum_n ive(n, kappa) e^{i n t}
        per_axis = ive(np.abs(j), kappa) * np.exp(-1j * j * center)
        return CoefficientSet(table, (2 * math.pi) ** (manifold.dim / 2) * np.prod(per_axis, axis=1))

    return TestFunction(f"bump(kappa={kappa})", coeffs, 1.0)


def pairing(f: CoefficientSet, chi: CoefficientSet) -> complex:
    """<f, chi> = sum_j f_j conj(chi_j) over the common labels."""
    n = min(f.table.weyl_count, chi.table.weyl_count)
    return complex(np.sum(f.values[:n] * np.conj(chi.values[:n])))


# ---------------------------------------------------------------------------
# certificates


@dataclass
class StabilityCertificate:
    measure: dict
    p: float
    window: str
    band_factor: float
    R: np.ndarray
    lambda_max: np.ndarray
    l2_norm: np.ndarray  # ||P_R u||_2
    lp_norm: np.ndarray  # ||u||_{lp-hat, <= Lambda_R}
    ratio: np.ndarray  # ||P_R u||_2 / (R^{d/2 - d/p} ||u||_lp)
    support_volume: np.ndarray  # |E^{C0/R}|
    pairings: dict  # name -> |<P_R u, chi>|
    pairing_bounds: dict  # name -> ||P_R u||_2 ||chi||_inf |E^{C0/R}|^(1/2)
    exponent_l2: float  # d/2 - d/p
    exponent_pairing: float  # k/2 - d/p
    fits: dict = field(default_factory=dict)  # name -> (slope, residual)

    def ratio_spread(self):
        return float(np.max(self.ratio) / np.min(self.ratio))


def _support_volume(measure, delta, volume_estimate=None):
    exact = measure.neighborhood_volume(delta)
    if exact is not None:
        return float(exact)
    if volume_estimate is None:
        raise ArgumentError(f"{measure.kind} needs a VolumeEstimate for |E^delta|")
    return volume_estimate.volume_at(delta)


def stability_certificate(measure, p, R_grid, tests=(), window=None, band_factor=4.0,
                          volume_estimate=None, method="auto") -> StabilityCertificate:
    """Record every ingredient of the low-pass stability bound over ``R_grid``.

    At scale R the measure is truncated at ``band_factor * R`` (so R <= Lambda/2
    holds on every row) and the lp-hat norm is taken over the same band.
    """
    if not p > 2:
        raise ArgumentError("p must exceed 2")
    if band_factor < 2:
        raise ArgumentError("band_factor must be at least 2 so that R <= Lambda/2")
    window = window or make_window()
    man = measure.manifold
    d, k = man.dim, measure.nominal_dim
    R_grid = np.asarray(sorted(R_grid), dtype=float)
    if np.any(R_grid < 1):
        raise ArgumentError("R must be at least 1")
    top = enumerate_spectrum(man, band_factor * R_grid[-1])
    full = measure.coefficients(top, method=method)
    rows = {"lam": [], "l2": [], "lp": [], "vol": []}
    pair, bound = {t.name: [] for t in tests}, {t.name: [] for t in tests}
    chi_full = {t.name: t.coefficients(top) for t in tests}
    for R in R_grid:
        lam = band_factor * R
        u = full.truncate(lam)
        lp = float(np.sum(u.line_norms() ** p) ** (1.0 / p))
        low = lowpass_apply(u, R, window)
        vol = _support_volume(measure, 1.0 / R, volume_estimate)
        rows["lam"].append(lam)
        rows["l2"].append(low.den)
        rows["lp"].append(lp)
        rows["vol"].append(vol)
        for t in tests:
            chi = chi_full[t.name].truncate(lam)
            pair[t.name].append(abs(pairing(low.coeffs, chi)))
            bound[t.name].append(low.den * t.sup_norm * math.sqrt(vol))
    l2, lp = np.array(rows["l2"]), np.array(rows["lp"])
    e_l2 = d / 2 - d / p
    cert = StabilityCertificate(
        measure=measure.describe(), p=float(p), window=window.name, band_factor=float(band_factor),
        R=R_grid, lambda_max=np.array(rows["lam"]), l2_norm=l2, lp_norm=lp,
        ratio=l2 / (R_grid**e_l2 * lp), support_volume=np.array(rows["vol"]),
        pairings={n: np.array(v) for n, v in pair.items()},
        pairing_bounds={n: np.array(v) for n, v in bound.items()},
        exponent_l2=e_l2, exponent_pairing=k / 2 - d / p,
    )
    if len(R_grid) >= 2:
        def fit(y):
            y = np.asarray(y, dtype=float)
            if np.any(y <= 0):
                return (float("nan"), float("nan"))
            s, _, _, res = fit_power_law(R_grid, y)
            return (s, res)

        cert.fits["l2_norm"] = fit(l2)
        cert.fits["ratio"] = fit(cert.ratio)
        cert.fits["support_volume"] = fit(cert.support_volume)
        for n in pair:
            cert.fits[f"pairing:{n}"] = fit(cert.pairings[n])
            cert.fits[f"normalized_pairing:{n}"] = fit(cert.pairings[n] / lp)
    return cert


@dataclass
class EndpointDiagnostic:
    p0: float
    d: int
    k: float
    j_a: np.ndarray
    a: np.ndarray
    a_tail: np.ndarray  # sum_{j' > j} a_j'
    R: np.ndarray
    j_b: np.ndarray
    b: np.ndarray  # shape (len(R), len(j_b)); nan where the shell passes Lambda
    zero_term: np.ndarray  # ||E_0 u||^2 per R (before the R^{k-d} factor)
    scaled_energy: np.ndarray  # R^{k-d} ||P_R u||^2 over full shells
    dyadic_bound: np.ndarray  # R^{k-d} zero_term + sum_j a_j b_j(R)
    lambda_max: float

    def tail_after(self, j):
        idx = np.searchsorted(self.j_a, j)
        return float(self.a_tail[idx])

    def b_sup(self):
        return float(np.nanmax(self.b))


def dyadic_sup_weights(window, d, k, j_range, samples=2001):
    """a_j = sup over tau in (2^j, 2^{j+1}] of 2^{j (d - k)} |psi(tau)|^2."""
    out = []
    for j in j_range:
        tau = np.linspace(2.0**j, 2.0 ** (j + 1), samples)[1:]
        out.append(2.0 ** (j * (d - k)) * float(np.max(window(tau) ** 2)))
    return np.array(out)


def endpoint_dyadic(source, R_grid, window=None, lambda_max=None, j_a_range=(-12, 10), nominal_dim=None):
    """Tables a_j and b_j(R) from the dyadic decomposition of ||P_R u||^2.

    ``source`` is a ThinMeasure or a CoefficientSet (then ``nominal_dim`` is required).
    """
    window = window or make_window()
    R_grid = np.asarray(sorted(R_grid), dtype=float)
    if lambda_max is None:
        lambda_max = 4.0 * R_grid[-1]
    if isinstance(source, ThinMeasure):
        man, k = source.manifold, source.nominal_dim
        coeffs = source.coefficients(enumerate_spectrum(man, lambda_max))
    else:
        if nominal_dim is None:
            raise ArgumentError("nominal_dim is required for raw coefficients")
        coeffs, k = source.truncate(lambda_max), nominal_dim
        man = coeffs.table.manifold
    d = man.dim
    p0 = 2 * d / k if k > 0 else math.inf
    j_a = np.arange(j_a_range[0], j_a_range[1] + 1)
    a = dyadic_sup_weights(window, d, k, j_a)
    a_tail = np.concatenate([np.cumsum(a[::-1])[::-1][1:], [0.0]])

    lam = coeffs.table.lambdas
    sq = coeffs.line_norms() ** 2
    top = float(lam[-1]) if len(lam) else 0.0
    positive = lam[lam > 0]
    j_lo = int(math.floor(math.log2(positive[0] / R_grid[-1]))) - 1 if len(positive) else 0
    j_hi = int(math.floor(math.log2(max(top, 1e-300) / R_grid[0]))) if top > 0 else 0
    j_b = np.arange(j_lo, j_hi + 1)
    b = np.full((len(R_grid), len(j_b)), np.nan)
    zero = np.zeros(len(R_grid))
    scaled, bound = np.zeros(len(R_grid)), np.zeros(len(R_grid))
    a_of = dict(zip(j_a.tolist(), a.tolist()))
    for r, R in enumerate(R_grid):
        zero[r] = float(np.sum(sq[lam == 0])) * float(window(0.0)) ** 2
        psi2 = window(lam / R) ** 2
        energy = 0.0
        total = 0.0
        for c, j in enumerate(j_b):
            lo, hi = 2.0**j * R, 2.0 ** (j + 1) * R
            if hi > top * (1 + CUTOFF_EPS):
                continue
            shell = (lam > lo * (1 + CUTOFF_EPS)) & (lam <= hi * (1 + CUTOFF_EPS))
            b[r, c] = (2.0**j * R) ** (k - d) * float(np.sum(sq[shell]))
            energy += float(np.sum(psi2[shell] * sq[shell]))
            aj = a_of.get(int(j))
            if aj is None:
                aj = float(dyadic_sup_weights(window, d, k, [int(j)])[0])
            total += aj * b[r, c]
        scaled[r] = R ** (k - d) * (zero[r] + energy)
        bound[r] = R ** (k - d) * zero[r] + total
    return EndpointDiagnostic(p0, d, k, j_a, a, a_tail, R_grid, j_b, b, zero, scaled, bound, float(lambda_max))
