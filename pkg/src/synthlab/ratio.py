"""Fourier ratios, randomized sparse spectral approximation, and the
certificates that bound the localized ratio from both sides.

Everything here works on line norms ``||E_lambda f||``: a line is one
eigenspace, not one eigenfunction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng as rngmod
from .core import CUTOFF_EPS, CoefficientSet, enumerate_spectrum
from .errors import ArgumentError, HypothesisViolationError, UndefinedRatioError
from .measures import ThinMeasure, fit_power_law
from .synthesis import SLACK_TOL, lowpass_apply, make_window

# relative size below which a line norm counts as zero
ZERO_TOL = 1e-14


@dataclass
class RatioReport:
    l1: float
    l2: float
    fr: float
    lambda_max: float
    n_lines: int
    R: float = float("nan")
    num: float = float("nan")
    den: float = float("nan")
    fr_R: float = float("nan")

    def as_dict(self):
        return {k: v for k, v in self.__dict__.items()}


def fourier_ratio(coeffs: CoefficientSet) -> RatioReport:
    """FR(f) = sum ||E_lambda f|| / ||f||_2 over the truncated table."""
    norms = coeffs.line_norms()
    l2 = float(np.sqrt(np.sum(norms**2)))
    if l2 == 0.0:
        raise UndefinedRatioError("Fourier ratio of the zero function is undefined")
    l1 = float(np.sum(norms))
    return RatioReport(l1, l2, l1 / l2, coeffs.table.lambda_max, int(np.count_nonzero(norms)))


def local_fr(coeffs: CoefficientSet, R: float, window=None) -> RatioReport:
    """FR_R(f) = Num_R / D_R with the weights |psi(lambda / R)|."""
    window = window or make_window()
    base = fourier_ratio(coeffs)
    low = lowpass_apply(coeffs, R, window)
    if low.den == 0.0:
        raise UndefinedRatioError(f"no windowed mass at R={R}")
    base.R, base.num, base.den, base.fr_R = float(R), low.num, low.den, low.num / low.den
    return base


# ---------------------------------------------------------------------------
# randomized k-term approximation


@dataclass
class SparseApproxResult:
    best: CoefficientSet
    best_trial: int
    errors: np.ndarray  # ||P - f||_2^2 per trial
    k: int
    alphabet: np.ndarray  # line indices with nonzero norm
    probabilities: np.ndarray
    count_mean: np.ndarray  # average number of draws per alphabet line
    count_var: np.ndarray
    predicted_mean: float  # (1/k) ||f||^2 (FR^2 - 1)
    fr: float
    l2: float

    @property
    def trials(self):
        return len(self.errors)

    @property
    def mean_error(self):
        return float(np.mean(self.errors))

    @property
    def stderr(self):
        n = len(self.errors)
        return float(np.std(self.errors, ddof=1) / math.sqrt(n)) if n > 1 else float("nan")

    def bias_zscores(self):
        """(mean P - f) on each alphabet line in units of its standard error.

        On line i the trial average of P is (count_mean_i / (k p_i)) E_i f, so the
        bias is zero exactly when count_mean_i = k p_i.
        """
        n = len(self.errors)
        se = np.sqrt(self.count_var / n)
        with np.errstate(divide="ignore", invalid="ignore"):
            z = (self.count_mean - self.k * self.probabilities) / se
        return np.where(se > 0, z, 0.0)


def _alphabet(coeffs):
    norms = coeffs.line_norms()
    l1 = float(np.sum(norms))
    if l1 == 0.0:
        raise UndefinedRatioError("cannot approximate the zero function")
    keep = np.flatnonzero(norms > ZERO_TOL * np.max(norms))
    return norms, keep, norms[keep] / np.sum(norms[keep])


def _draw_counts(gen, cdf, k):
    idx = np.searchsorted(cdf, gen.random(k), side="right")
    return np.bincount(np.minimum(idx, len(cdf) - 1), minlength=len(cdf))


def sparse_approx(f: CoefficientSet, k: int, trials: int, seed=rngmod.DEFAULT_SEED, threads=1) -> SparseApproxResult:
    """Best of ``trials`` empirical averages of k sampled spectral lines.

    A draw picks line lambda with probability ||E_lambda f|| / ||f||_l1-hat and
    contributes (||f||_l1-hat / ||E_lambda f||) E_lambda f; P is the average of k
    draws. Trial t uses the counter stream (seed, t).
    """
    if int(trials) < 1:
        raise ArgumentError(f"trials must be at least 1, got {trials}")
    if int(k) < 1:
        raise ArgumentError(f"k must be at least 1, got {k}")
    k, trials = int(k), int(trials)
    norms, keep, prob = _alphabet(f)
    a = norms[keep]
    F = float(np.sum(a))
    cdf = np.cumsum(prob)
    cdf[-1] = 1.0

    def sq_error(counts):
        # line i of P - f is (counts_i F / (k a_i) - 1) E_i f
        return float(np.sum(((counts * F / (k * a)) - 1.0) ** 2 * a**2))

    def trial(t):
        counts = _draw_counts(rngmod.stream(seed, t), cdf, k)
        return counts, sq_error(counts)

    results = rngmod.ordered_map(trial, range(trials), threads)
    counts = np.array([c for c, _ in results], dtype=float)
    errors = np.array([e for _, e in results])
    best_trial = int(np.argmin(errors))
    factors = np.zeros(len(f.table))
    factors[keep] = counts[best_trial] * F / (k * a)
    rep = fourier_ratio(f)
    return SparseApproxResult(
        best=f.scale_lines(factors), best_trial=best_trial, errors=errors, k=k, alphabet=keep,
        probabilities=prob, count_mean=counts.mean(axis=0),
        count_var=counts.var(axis=0, ddof=1) if trials > 1 else np.zeros(len(keep)),
        predicted_mean=rep.l2**2 * (rep.fr**2 - 1.0) / k, fr=rep.fr, l2=rep.l2,
    )


def expected_error_closed_form(f: CoefficientSet, k: int) -> float:
    """(1/k) ||f||_2^2 (FR(f)^2 - 1)."""
    rep = fourier_ratio(f)
    return rep.l2**2 * (rep.fr**2 - 1.0) / k


def expected_error_exact(f: CoefficientSet, k: int) -> float:
    """E||P - f||^2 by summing over the sampling law, one draw at a time.

    For one draw X, E||X - f||^2 = sum_l p_l ||(F / a_l) E_l f - f||^2 and the k
    i.i.d. draws divide it by k.
    """
    norms, keep, prob = _alphabet(f)
    a = norms[keep]
    F = float(np.sum(a))
    total = float(np.sum(norms**2))
    one = np.sum(prob * (((F / a) - 1.0) ** 2 * a**2 + (total - a**2)))
    return float(one) / k


# ---------------------------------------------------------------------------
# converse


@dataclass
class ConverseResult:
    eta: float
    k: int
    n_lambda: int
    fr: float
    bound: float
    slack: float

    @property
    def ok(self):
        return self.slack >= -SLACK_TOL * max(1.0, self.bound)


def converse_check(f: CoefficientSet, P: CoefficientSet) -> ConverseResult:
    """FR(f) <= (1 + eta) sqrt(k) + eta sqrt(N(Lambda)) for a k-term P.

    k counts the eigenfunction labels where P is nonzero and N(Lambda) is the
    number of eigenfunctions in the table of ``f``.
    """
    if P.table.weyl_count != f.table.weyl_count or P.table.manifold_id != f.table.manifold_id:
        raise ArgumentError("f and P must share one band-limited table")
    l2 = f.l2_norm()
    if l2 == 0.0:
        raise UndefinedRatioError("f is zero")
    eta = (f - P).l2_norm() / l2
    if not eta < 1.0:
        raise HypothesisViolationError(f"eta = {eta:.6g} must be below 1")
    k = int(np.count_nonzero(P.values))
    n = f.table.weyl_count
    fr = fourier_ratio(f).fr
    bound = (1.0 + eta) * math.sqrt(k) + eta * math.sqrt(n)
    return ConverseResult(float(eta), k, n, fr, bound, bound - fr)


# ---------------------------------------------------------------------------
# eigenfunction growth


@dataclass
class GrowthTable:
    keys: np.ndarray
    lambdas: np.ndarray
    A: np.ndarray  # closed form sup_x Pi_lambda(x, x)^(1/2)
    envelope: np.ndarray  # running max of A
    grid_A: np.ndarray  # max over a sample grid
    radius: float
    A_R: float

    @property
    def cross_check_error(self):
        return float(np.max(np.abs(self.A**2 - self.grid_A**2))) if len(self.A) else 0.0


def _probe_points(manifold, n=97):
    gen = rngmod.stream(0, 0)
    pts = manifold.sample_uniform(gen, n)
    if manifold.manifold_id == "sphere2":
        pts = np.vstack([pts, [[0.0, 0.0], [math.pi, 0.0], [math.pi / 2, 0.0]]])
    return pts


def growth_table(manifold, lambda_max: float, radius=None) -> GrowthTable:
    """A(lambda) per line up to ``lambda_max`` and A_R = max over lambda <= radius."""
    table = enumerate_spectrum(manifold, lambda_max)
    A = np.sqrt(manifold.growth_squared(table))
    grid_A = np.sqrt(np.max(manifold.diag_kernel(table, _probe_points(manifold)), axis=0))
    radius = float(lambda_max if radius is None else radius)
    inside = table.lambdas <= radius * (1 + CUTOFF_EPS) + CUTOFF_EPS
    A_R = float(np.max(A[inside])) if np.any(inside) else float(A[0])
    return GrowthTable(table.keys, table.lambdas, A, np.maximum.accumulate(A), grid_A, radius, A_R)


# ---------------------------------------------------------------------------
# two-sided localized ratio certificates


@dataclass
class StepCheck:
    name: str
    lhs: float
    rhs: float

    @property
    def slack(self):
        return self.rhs - self.lhs

    @property
    def ok(self):
        return self.slack >= -SLACK_TOL * max(abs(self.lhs), abs(self.rhs), 1e-300)


@dataclass
class FRLowerCertificate:
    R: float
    num: float
    den: float
    l2: float
    grid_sup: float
    A_R: float
    C3: float
    c_psi: float
    C_psi: float
    c0: float
    support_volume: float
    fr_R: float
    lower_bound: float
    steps: list = field(default_factory=list)

    @property
    def ok(self):
        return all(s.ok for s in self.steps)

    def min_slack(self):
        return min(s.slack for s in self.steps)


def _support_volume(support_volume, manifold, R):
    if support_volume is None:
        return float(manifold.volume)
    if callable(support_volume):
        return float(support_volume(1.0 / R))
    if hasattr(support_volume, "volume_at"):
        return float(support_volume.volume_at(1.0 / R))
    if isinstance(support_volume, ThinMeasure):
        v = support_volume.neighborhood_volume(1.0 / R)
        if v is None:
            raise ArgumentError("measure has no exact neighborhood volume; pass a VolumeEstimate")
        return float(v)
    return float(support_volume)


def fr_lower_certificate(f: CoefficientSet, R: float, window=None, support_volume=None,
                         grid_oversample=2) -> FRLowerCertificate:
    """Check every step of the lower bound FR_R >= c0 / (A_R R^(d/2) |E^(1/R)|^(1/2)).

    ``support_volume`` is |E^(1/R)| itself, a VolumeEstimate, a measure with an
    exact neighborhood volume, or None for the whole manifold.
    """
    window = window or make_window()
    man = f.table.manifold
    d = man.dim
    C_psi, c_psi = window.C_psi, window.c_psi
    cut = C_psi * R
    norms = f.line_norms()
    l2 = float(np.sqrt(np.sum(norms**2)))
    if l2 == 0.0:
        raise UndefinedRatioError("f is zero")
    outside = f.table.lambdas > cut * (1 + CUTOFF_EPS) + CUTOFF_EPS
    if np.any(norms[outside] > ZERO_TOL * l2):
        raise HypothesisViolationError(f"f has mass above C_psi R = {cut:.6g}")
    f = f.truncate(cut)
    low = lowpass_apply(f, R, window)
    gt = growth_table(man, cut)
    grid = man.grid_for_band(max(float(f.table.lambdas[-1]), 1.0), oversample=grid_oversample)
    grid_sup = float(np.max(np.abs(man.synthesize(low.coeffs, grid))))
    C3 = float(np.sqrt(np.sum(low.factors**2))) / R ** (d / 2)
    c0 = c_psi / C3
    vol = _support_volume(support_volume, man, R)
    fr_R = low.num / low.den
    lower = c0 / (gt.A_R * R ** (d / 2) * math.sqrt(vol))
    steps = [
        StepCheck("sup_bound", grid_sup, gt.A_R * low.num),
        StepCheck("num_upper", low.num, C3 * R ** (d / 2) * l2),
        StepCheck("num_lower", c_psi * l2, low.num),
        StepCheck("l2_vs_sup", low.den, math.sqrt(vol) * grid_sup),
        StepCheck("fr_lower", lower, fr_R),
    ]
    return FRLowerCertificate(float(R), low.num, low.den, l2, grid_sup, gt.A_R, C3, c_psi, C_psi, c0,
                              vol, fr_R, lower, steps)


@dataclass
class UncertaintyCertificate:
    R: float
    selected: np.ndarray  # spectral parameters in Sigma_R
    eta: float
    M_R: int
    support_volume: float
    product: float  # M_R |E^(1/R)|
    rhs: float  # c0^2 (1 - eta)^2 / (A_R^2 R^d)
    fr_R: float
    upper_bound: float  # sqrt(M_R) / (1 - eta)
    lower: FRLowerCertificate
    steps: list = field(default_factory=list)

    @property
    def ok(self):
        return all(s.ok for s in self.steps)


def select_lines(weights, lambdas, eta_target):
    """Greedy Sigma_R: heaviest windowed lines first until the rest is <= eta * total.

    Ties go to the smaller spectral parameter.
    """
    total = float(np.sum(weights))
    order = np.lexsort((lambdas, -weights))
    chosen, mass = [], 0.0
    for i in order:
        if weights[i] <= 0 or total - mass <= eta_target * total * (1 + 1e-15):
            break
        chosen.append(i)
        mass += float(weights[i])
    return np.array(sorted(chosen), dtype=np.int64)


def uncertainty_product(f: CoefficientSet, R: float, window=None, support_volume=None, eta_target=0.1,
                        selection=None) -> UncertaintyCertificate:
    """Upper bound FR_R <= sqrt(M_R) / (1 - eta) and the product bound on M_R |E^(1/R)|.

    ``selection`` is None for the greedy rule, "all" for every line carrying
    windowed mass, or an explicit array of line indices.
    """
    window = window or make_window()
    lower = fr_lower_certificate(f, R, window, support_volume)
    f = f.truncate(window.C_psi * R)
    low = lowpass_apply(f, R, window)
    weights = np.abs(low.factors) * f.line_norms()
    if selection is None:
        idx = select_lines(weights, f.table.lambdas, eta_target)
    elif isinstance(selection, str) and selection == "all":
        idx = np.flatnonzero(weights > 0)
    else:
        idx = np.asarray(selection, dtype=np.int64)
    outside = np.ones(len(weights), dtype=bool)
    outside[idx] = False
    eta = float(np.sum(weights[outside & (low.factors != 0)]) / low.num)
    if not eta < 1.0:
        raise HypothesisViolationError(f"selection leaves eta = {eta:.6g} >= 1")
    M = int(np.count_nonzero(low.factors[idx] != 0))
    d = f.table.manifold.dim
    upper = math.sqrt(M) / (1.0 - eta)
    rhs = lower.c0**2 * (1.0 - eta) ** 2 / (lower.A_R**2 * R**d)
    product = M * lower.support_volume
    steps = list(lower.steps) + [
        StepCheck("concentration", (1.0 - eta) * low.num, float(np.sum(weights[idx]))),
        StepCheck("fr_upper", lower.fr_R, upper),
        StepCheck("product", rhs, product),
    ]
    return UncertaintyCertificate(float(R), f.table.lambdas[idx], eta, M, lower.support_volume, product, rhs,
                                  lower.fr_R, upper, lower, steps)


# ---------------------------------------------------------------------------
# randomized instances


def random_band_limited(manifold, lambda_max, gen, n_lines=None, scale_decay=0.0) -> CoefficientSet:
    """Complex Gaussian coefficients on a random subset of lines up to ``lambda_max``."""
    table = enumerate_spectrum(manifold, lambda_max)
    nl = len(table)
    if n_lines is None:
        n_lines = int(gen.integers(1, nl + 1))
    lines = np.sort(gen.choice(nl, size=min(n_lines, nl), replace=False))
    active = np.zeros(nl, dtype=bool)
    active[lines] = True
    mask = np.repeat(active, table.multiplicities)
    z = gen.standard_normal(table.weyl_count) + 1j * gen.standard_normal(table.weyl_count)
    z *= np.repeat((1.0 + table.lambdas) ** (-scale_decay), table.multiplicities)
    return CoefficientSet(table, np.where(mask, z, 0.0))


def random_k_term(f: CoefficientSet, gen, k=None, noise=0.3) -> CoefficientSet:
    """A k-label perturbation of the k largest coefficients of ``f``, with eta < 1."""
    nz = np.flatnonzero(f.values)
    if k is None:
        k = int(gen.integers(1, len(nz) + 1))
    top = nz[np.argsort(-np.abs(f.values[nz]), kind="stable")[:k]]
    vals = np.zeros_like(f.values)
    pert = 1.0 + noise * (gen.standard_normal(len(top)) + 1j * gen.standard_normal(len(top))) / 2
    vals[top] = f.values[top] * pert
    P = CoefficientSet(f.table, vals)
    if (f - P).l2_norm() >= f.l2_norm():
        return CoefficientSet(f.table, np.where(np.isin(np.arange(len(vals)), top), f.values, 0.0))
    return P


# ---------------------------------------------------------------------------
# cumulative coefficient growth


@dataclass
class KuznecovFit:
    lambdas: np.ndarray
    cumulative: np.ndarray  # sum_{lambda_j <= lambda} |<u, e_j>|^2
    line_norms: np.ndarray
    exponent: float
    exponent_se: float
    predicted: float  # d - k
    fit_range: tuple
    hypersurface: bool  # k == d - 1
    bounded: bool  # measured: sup ||E_lambda u|| does not grow
    norm_growth: float  # fitted exponent of the running max of ||E_lambda u||


def kuznecov_fit(measure: ThinMeasure, lambda_max: float, fit_from=0.25) -> KuznecovFit:
    """Cumulative coefficient energy against lambda with a log-log slope fit.

    The slope is fitted on lines with lambda in [fit_from * lambda_max, lambda_max].
    The boundedness verdict uses the running max of the line norms over the same
    range: an exponent below 1/4 counts as bounded (hypersurfaces give 0, points
    on S^2 give 1/2).
    """
    man = measure.manifold
    if man.manifold_id != "sphere2":
        raise ArgumentError("kuznecov_fit runs on the sphere model")
    table = enumerate_spectrum(man, lambda_max)
    coeffs = measure.coefficients(table)
    norms = coeffs.line_norms()
    cum = np.cumsum(norms**2)
    lam = table.lambdas
    sel = (lam >= fit_from * lambda_max) & (cum > 0)
    if np.count_nonzero(sel) < 3:
        raise ArgumentError("lambda_max too small for a fit")
    slope, _, se, _ = fit_power_law(lam[sel], cum[sel])
    env = np.maximum.accumulate(norms)
    gsel = sel & (env > 0)
    g, *_ = fit_power_law(lam[gsel], env[gsel])
    d, k = man.dim, measure.nominal_dim
    return KuznecovFit(lam, cum, norms, slope, se, float(d - k),
                       (float(fit_from * lambda_max), float(lambda_max)),
                       bool(abs(k - (d - 1)) < 1e-12), bool(g < 0.25), float(g))
