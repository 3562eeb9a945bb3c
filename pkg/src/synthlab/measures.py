"""Thinly supported measures, their spectral coefficients, and neighborhood volumes.

Every measure can discretize itself into weighted nodes (``quadrature``) from
which coefficients ``<u, e_j> = sum_i w_i conj(e_j(x_i))`` follow.  Presets with
an explicit integral also expose ``closed_form``; both routes are kept so they
can be checked against each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng as rngmod
from .core import CoefficientSet, SpectrumTable
from .errors import ArgumentError, NotThinError, ResolutionError
from .sphere import FOUR_PI, SphereModel, zonal_harmonic
from .torus import TWO_PI, TorusModel

QUAD_TOL = 1e-9
MAX_NODES = 1 << 21
_BLOCK = 1 << 22  # complex entries per basis block


def _quadrature_coefficients(manifold, labels, points, weights):
    labels = np.asarray(labels)
    out = np.zeros(len(labels), dtype=complex)
    if len(labels) == 0 or len(points) == 0:
        return out
    if isinstance(manifold, SphereModel):
        width = (int(labels[:, 0].max()) + 1) ** 2
        step = max(1, _BLOCK // width)
        for s in range(0, len(points), step):
            b = manifold.basis(labels, points[s : s + step])
            out += np.conj(b).T @ weights[s : s + step]
        return out
    step = max(1, _BLOCK // max(len(points), 1))
    for s in range(0, len(labels), step):
        b = manifold.basis(labels[s : s + step], points)
        out[s : s + step] = np.conj(b).T @ weights
    return out


class ThinMeasure:
    """A finite measure carried by a set of dimension ``nominal_dim`` < d."""

    kind = "measure"
    smooth = True

    def __init__(self, manifold, nominal_dim, density=None):
        if not nominal_dim < manifold.dim:
            raise NotThinError(
                f"support not thin: dimension {nominal_dim} is not below ambient dimension {manifold.dim}"
            )
        self.manifold = manifold
        self.nominal_dim = nominal_dim
        self.density = density

    def __repr__(self):
        return f"{type(self).__name__}({self.describe()})"

    def describe(self) -> dict:
        return {"manifold": self.manifold.manifold_id, "kind": self.kind}

    # discretization -------------------------------------------------------

    def nodes(self, n):
        """Weighted nodes of the n-point rule (points, weights)."""
        raise NotImplementedError

    def initial_nodes(self, lambda_max):
        return 16

    def quadrature(self, lambda_max, labels=None):
        """Nodes doubled until the coefficients up to ``lambda_max`` settle to QUAD_TOL."""
        if labels is None:
            labels = self.manifold.spectrum(lambda_max).labels
        n = self.initial_nodes(lambda_max)
        pts, w = self.nodes(n)
        prev = _quadrature_coefficients(self.manifold, labels, pts, w)
        while True:
            if 2 * n > MAX_NODES:
                raise ResolutionError(
                    f"{self.kind}: curve quadrature did not settle below {MAX_NODES} nodes "
                    f"for lambda_max={lambda_max:g}",
                    required_order=2 * n,
                )
            n *= 2
            pts, w = self.nodes(n)
            cur = _quadrature_coefficients(self.manifold, labels, pts, w)
            scale = max(1.0, float(np.max(np.abs(cur))) if cur.size else 1.0)
            if cur.size == 0 or np.max(np.abs(cur - prev)) <= QUAD_TOL * scale:
                return pts, w, cur
            prev = cur

    @property
    def has_closed_form(self):
        return self.density is None and type(self).closed_form is not ThinMeasure.closed_form

    def closed_form(self, labels):
        return None

    def provenance(self, method="auto"):
        if method == "quadrature" or not self.has_closed_form:
            return "quadrature"
        return "closed-form"

    def label_coefficients(self, labels, lam, method="auto"):
        labels = np.asarray(labels, dtype=np.int64)
        if method not in ("auto", "closed", "quadrature"):
            raise ArgumentError(f"unknown coefficient method {method!r}")
        if method != "quadrature" and self.has_closed_form:
            return self.closed_form(labels)
        if method == "closed":
            raise ArgumentError(f"{self.kind} has no closed-form coefficients")
        return self.quadrature(max(lam, 0.0), labels=labels)[2]

    def coefficients(self, table: SpectrumTable, method="auto") -> CoefficientSet:
        if table.manifold_id != self.manifold.manifold_id:
            raise ArgumentError("spectrum table belongs to another manifold")
        return CoefficientSet(table, self.label_coefficients(table.labels, table.lambda_max, method))

    @property
    def total_mass(self) -> float:
        _, w = self.nodes(4096)
        return float(np.sum(w))

    # support --------------------------------------------------------------

    def support_points(self, spacing):
        raise NotImplementedError

    def sample_support(self, gen, n):
        raise NotImplementedError

    def neighborhood_volume(self, delta):
        """Exact |E^delta| when a formula is known, else None."""
        return None


# ---------------------------------------------------------------------------
# curves


class CurveMeasure(ThinMeasure):
    """Arclength measure (times optional density) on a parametrized curve, t in [0, 1]."""

    closed = False

    def __init__(self, manifold, density=None):
        super().__init__(manifold, 1, density)

    def param(self, t):
        raise NotImplementedError

    def speed(self, t):
        raise NotImplementedError

    @property
    def length(self):
        x, w = np.polynomial.legendre.leggauss(256)
        return float(np.sum(w / 2 * self.speed((x + 1) / 2)))

    def _rule(self, n):
        if self.closed:
            return np.arange(n) / n, np.full(n, 1.0 / n)
        x, w = np.polynomial.legendre.leggauss(n)
        return (x + 1) / 2, w / 2

    def nodes(self, n):
        t, w = self._rule(n)
        w = w * self.speed(t)
        if self.density is not None:
            w = w * self.density(t)
        return self.param(t), w

    def initial_nodes(self, lambda_max):
        return max(16, math.ceil(8 * lambda_max * self.length / TWO_PI))

    def _arclength_params(self, n):
        """n parameters equally spaced in arclength (midpoints)."""
        fine = np.linspace(0.0, 1.0, 20001)
        sp = self.speed(fine)
        s = np.concatenate([[0.0], np.cumsum((sp[1:] + sp[:-1]) / 2 * np.diff(fine))])
        target = (np.arange(n) + 0.5) / n * s[-1]
        return np.interp(target, s, fine)

    def support_points(self, spacing):
        n = max(16, math.ceil(self.length / spacing))
        return self.param(self._arclength_params(n))

    def sample_support(self, gen, n):
        u = gen.uniform(0.0, 1.0, size=n)
        fine = np.linspace(0.0, 1.0, 20001)
        sp = self.speed(fine)
        s = np.concatenate([[0.0], np.cumsum((sp[1:] + sp[:-1]) / 2 * np.diff(fine))])
        return self.param(np.interp(u * s[-1], s, fine))


class Segment(CurveMeasure):
    """Straight segment from ``start`` to ``end`` in the torus, arclength measure."""

    kind = "segment"

    def __init__(self, manifold, start, end, density=None):
        if not isinstance(manifold, TorusModel):
            raise ArgumentError("segments are defined on the torus")
        super().__init__(manifold, density)
        self.start = np.asarray(start, dtype=float).reshape(manifold.dim)
        self.end = np.asarray(end, dtype=float).reshape(manifold.dim)
        if np.allclose(self.start, self.end):
            raise ArgumentError("segment endpoints coincide: empty support")

    def describe(self):
        return {**super().describe(), "start": self.start.tolist(), "end": self.end.tolist()}

    @property
    def length(self):
        return float(np.linalg.norm(self.end - self.start))

    def param(self, t):
        t = np.asarray(t, dtype=float)
        return np.mod(self.start + np.outer(t, self.end - self.start), TWO_PI)

    def speed(self, t):
        return np.full(np.shape(t), self.length)

    def closed_form(self, labels):
        # length * e^{-i j.a} * int_0^1 e^{-i (j.v) t} dt, v = end - start
        labels = np.asarray(labels, dtype=float)
        v = self.end - self.start
        jv = labels @ v
        ja = labels @ self.start
        small = np.abs(jv) < 1e-12
        safe = np.where(small, 1.0, jv)
        integral = np.where(small, 1.0 + 0j, (1.0 - np.exp(-1j * safe)) / (1j * safe))
        return self.manifold.norm_const * self.length * np.exp(-1j * ja) * integral

    @property
    def total_mass(self):
        return self.length if self.density is None else super().total_mass

    def neighborhood_volume(self, delta):
        if self.manifold.dim == 2 and self.length + 2 * delta < TWO_PI and delta < math.pi / 2:
            return 2.0 * delta * self.length + math.pi * delta * delta
        return None


class MomentCurve(CurveMeasure):
    """``scale * (t, t^2, ..., t^d)`` for t in [0, 1] in T^d."""

    kind = "moment-curve"

    def __init__(self, manifold, scale=1.0, density=None):
        if not isinstance(manifold, TorusModel) or manifold.dim < 2:
            raise ArgumentError("the moment curve lives in T^d with d >= 2")
        super().__init__(manifold, density)
        self.scale = float(scale)

    def describe(self):
        return {**super().describe(), "scale": self.scale}

    def param(self, t):
        t = np.asarray(t, dtype=float)
        return np.mod(self.scale * np.stack([t ** (k + 1) for k in range(self.manifold.dim)], axis=-1), TWO_PI)

    def speed(self, t):
        t = np.asarray(t, dtype=float)
        return self.scale * np.sqrt(sum(((k + 1) * t**k) ** 2 for k in range(self.manifold.dim)))


class Latitude(CurveMeasure):
    """Unnormalized arclength on the circle theta = theta0 of S^2 (mass 2 pi sin theta0)."""

    kind = "latitude"
    closed = True

    def __init__(self, manifold, theta0, density=None):
        if not isinstance(manifold, SphereModel):
            raise ArgumentError("latitude circles live on the sphere")
        if not 0.0 < theta0 < math.pi:
            raise ArgumentError("theta0 must lie strictly between 0 and pi")
        super().__init__(manifold, density)
        self.theta0 = float(theta0)

    def describe(self):
        return {**super().describe(), "theta0": self.theta0}

    @property
    def length(self):
        return TWO_PI * math.sin(self.theta0)

    def param(self, t):
        t = np.asarray(t, dtype=float)
        return np.stack([np.full(t.shape, self.theta0), TWO_PI * t], axis=-1)

    def speed(self, t):
        return np.full(np.shape(t), self.length)

    def closed_form(self, labels):
        labels = np.asarray(labels, dtype=np.int64).reshape(-1, 2)
        out = np.zeros(len(labels), dtype=complex)
        if len(labels) == 0:
            return out
        zonal = zonal_harmonic(int(labels[:, 0].max()), self.theta0)
        m0 = labels[:, 1] == 0
        out[m0] = self.length * zonal[labels[m0, 0]]
        return out

    @property
    def total_mass(self):
        return self.length if self.density is None else super().total_mass

    def neighborhood_volume(self, delta):
        lo, hi = max(self.theta0 - delta, 0.0), min(self.theta0 + delta, math.pi)
        return TWO_PI * (math.cos(lo) - math.cos(hi))


class Equator(Latitude):
    kind = "equator"

    def __init__(self, manifold, density=None):
        super().__init__(manifold, math.pi / 2, density)

    def describe(self):
        return {"manifold": self.manifold.manifold_id, "kind": self.kind}


# ---------------------------------------------------------------------------
# flat subtori


class Subtorus(ThinMeasure):
    """Lebesgue measure on {x : x_i = offset_i for i >= k}, mass (2 pi)^k."""

    kind = "subtorus"

    def __init__(self, manifold, k, offset=None, density=None):
        if not isinstance(manifold, TorusModel):
            raise ArgumentError("subtori live on the torus")
        if k < 1:
            raise ArgumentError("subtorus dimension must be at least 1")
        super().__init__(manifold, k, density)
        self.k = int(k)
        off = np.zeros(manifold.dim - self.k) if offset is None else np.asarray(offset, dtype=float)
        self.offset = off.reshape(manifold.dim - self.k)

    def describe(self):
        return {**super().describe(), "k": self.k, "offset": self.offset.tolist()}

    def nodes(self, n):
        axis = TWO_PI * np.arange(n) / n
        free = np.stack(np.meshgrid(*([axis] * self.k), indexing="ij"), axis=-1).reshape(-1, self.k)
        pts = np.concatenate([free, np.tile(self.offset, (len(free), 1))], axis=1)
        w = np.full(len(free), (TWO_PI / n) ** self.k)
        if self.density is not None:
            w = w * self.density(free)
        return pts, w

    def initial_nodes(self, lambda_max):
        return max(8, math.ceil(lambda_max) + 1)

    def quadrature(self, lambda_max, labels=None):
        # the trapezoid rule with n > 2 * |j|_inf is exact for these integrands
        if self.density is not None:
            return super().quadrature(lambda_max, labels)
        if labels is None:
            labels = self.manifold.spectrum(lambda_max).labels
        n = 2 * (int(np.max(np.abs(labels))) if len(labels) else 0) + 2
        pts, w = self.nodes(n)
        return pts, w, _quadrature_coefficients(self.manifold, labels, pts, w)

    def closed_form(self, labels):
        labels = np.asarray(labels, dtype=np.int64)
        free_zero = np.all(labels[:, : self.k] == 0, axis=1)
        phase = np.exp(-1j * (labels[:, self.k :] @ self.offset))
        return np.where(free_zero, self.manifold.norm_const * TWO_PI**self.k * phase, 0.0)

    @property
    def total_mass(self):
        return TWO_PI**self.k if self.density is None else super().total_mass

    def support_points(self, spacing):
        n = max(16, math.ceil(TWO_PI / spacing))
        return self.nodes(n)[0]

    def sample_support(self, gen, n):
        free = gen.uniform(0.0, TWO_PI, size=(n, self.k))
        return np.concatenate([free, np.tile(self.offset, (n, 1))], axis=1)

    def neighborhood_volume(self, delta):
        c = self.manifold.dim - self.k
        if delta >= math.pi:
            return None
        ball = math.pi ** (c / 2) / math.gamma(c / 2 + 1)
        return TWO_PI**self.k * ball * delta**c


# ---------------------------------------------------------------------------
# atoms


class AtomSet(ThinMeasure):
    """Finite sum of weighted point masses."""

    kind = "atom-set"

    def __init__(self, manifold, points, weights=None, nominal_dim=0.0):
        super().__init__(manifold, nominal_dim)
        pts = np.asarray(points, dtype=float).reshape(-1, manifold.dim)
        if len(pts) == 0:
            raise ArgumentError("atom set is empty")
        self.points = manifold.wrap(pts) if isinstance(manifold, TorusModel) else pts
        self.weights = np.ones(len(pts)) if weights is None else np.asarray(weights, dtype=float).reshape(len(pts))

    def describe(self):
        return {**super().describe(), "points": self.points.tolist(), "weights": self.weights.tolist()}

    def nodes(self, n=None):
        return self.points, self.weights

    def quadrature(self, lambda_max, labels=None):
        if labels is None:
            labels = self.manifold.spectrum(lambda_max).labels
        return self.points, self.weights, _quadrature_coefficients(self.manifold, labels, self.points, self.weights)

    def closed_form(self, labels):
        # pairing with a point mass is conj(e_j(x0)); exact, no discretization error
        return _quadrature_coefficients(self.manifold, np.asarray(labels), self.points, self.weights)

    @property
    def total_mass(self):
        return float(np.sum(self.weights))

    def support_points(self, spacing=None):
        return self.points

    def sample_support(self, gen, n):
        idx = gen.integers(0, len(self.points), size=n)
        return self.points[idx]


class ProductCantor(AtomSet):
    """Level-``level`` approximation of C x C in T^2, C the ratio-r Cantor set on [0, side]."""

    kind = "product-cantor"
    smooth = False

    def __init__(self, manifold, level, ratio=1.0 / 3.0, side=math.pi, origin=(0.0, 0.0)):
        if not isinstance(manifold, TorusModel) or manifold.dim != 2:
            raise ArgumentError("the product Cantor preset lives in T^2")
        if not 0.0 < ratio < 0.5:
            raise ArgumentError("Cantor ratio must lie in (0, 1/2)")
        self.level, self.ratio, self.side = int(level), float(ratio), float(side)
        line = self.cantor_points(self.level, self.ratio, self.side)
        xx, yy = np.meshgrid(line, line, indexing="ij")
        pts = np.stack([xx.reshape(-1), yy.reshape(-1)], axis=1) + np.asarray(origin, dtype=float)
        dim = 2.0 * math.log(2.0) / math.log(1.0 / ratio)
        super().__init__(manifold, pts, np.full(len(pts), 1.0 / len(pts)), nominal_dim=dim)

    def describe(self):
        return {"manifold": self.manifold.manifold_id, "kind": self.kind, "level": self.level,
                "ratio": self.ratio, "side": self.side}

    @staticmethod
    def cantor_points(level, ratio, side):
        """Centers of the 2^level intervals of length side * ratio^level."""
        left = np.zeros(1)
        length = side
        for _ in range(level):
            step = length * (1.0 - ratio)
            left = np.concatenate([left, left + step])
            length *= ratio
        return np.sort(left) + length / 2.0

    def resolution(self):
        return self.side * self.ratio**self.level


# ---------------------------------------------------------------------------
# construction from descriptors


def _density_from(desc):
    name = desc.get("density")
    if name in (None, "none", "uniform"):
        return None
    amp = float(desc.get("density_amplitude", 0.5))
    freq = int(desc.get("density_frequency", 1))
    if name == "cosine":
        return lambda t: 1.0 + amp * np.cos(TWO_PI * freq * np.asarray(t, dtype=float).reshape(len(t), -1)[:, 0])
    raise ArgumentError(f"unknown density {name!r}")


def manifold_from_id(name):
    name = str(name).lower().replace("-", "")
    if name in ("sphere", "sphere2", "s2"):
        return SphereModel()
    for d in (1, 2, 3):
        if name in (f"torus{d}", f"t{d}"):
            return TorusModel(d)
    if name.startswith("torus") and name[5:].isdigit():
        return TorusModel(int(name[5:]))
    raise ArgumentError(f"unknown manifold {name!r}")


def make_measure(desc: dict, manifold=None) -> ThinMeasure:
    """Build a preset from a descriptor such as ``{"manifold": "torus2", "kind": "segment", ...}``."""
    if manifold is None:
        manifold = manifold_from_id(desc.get("manifold", "torus2"))
    kind = str(desc.get("kind", "")).lower()
    density = _density_from(desc)
    if kind == "subtorus":
        return Subtorus(manifold, int(desc.get("k", 1)), desc.get("offset"), density=density)
    if kind == "segment":
        d = manifold.dim
        start = desc.get("start", [0.0] * d)
        end = desc.get("end", [math.pi] + [0.0] * (d - 1))
        return Segment(manifold, start, end, density=density)
    if kind == "moment-curve":
        return MomentCurve(manifold, float(desc.get("scale", 1.0)), density=density)
    if kind == "equator":
        return Equator(manifold, density=density)
    if kind == "latitude":
        return Latitude(manifold, float(desc.get("theta0", math.pi / 2)), density=density)
    if kind == "atom-set":
        pts = desc.get("points")
        if pts is None:
            raise ArgumentError("atom-set needs points")
        return AtomSet(manifold, pts, desc.get("weights"))
    if kind == "product-cantor":
        return ProductCantor(
            manifold, int(desc.get("level", 6)), float(desc.get("ratio", 1.0 / 3.0)), float(desc.get("side", math.pi))
        )
    if "k" in desc and manifold.dim <= int(desc["k"]):
        raise NotThinError(f"support not thin: k={desc['k']} >= d={manifold.dim}")
    raise ArgumentError(f"unknown measure kind {kind!r}")


def coefficients(measure: ThinMeasure, table: SpectrumTable, method="auto") -> CoefficientSet:
    return measure.coefficients(table, method=method)


# ---------------------------------------------------------------------------
# neighborhood volumes


@dataclass
class VolumeEstimate:
    deltas: np.ndarray
    volumes: np.ndarray
    hits: np.ndarray
    n_samples: int
    exponent: float
    constant: float
    half_width: float
    residual: float
    spacing: float
    exact: np.ndarray = field(default=None)

    def volume_at(self, delta):
        """Measured volume at a grid radius, else the fitted power law."""
        hit = np.isclose(self.deltas, delta, rtol=1e-12, atol=0.0)
        if np.any(hit):
            return float(self.volumes[np.argmax(hit)])
        return float(self.constant * delta**self.exponent)


def fit_power_law(x, y, var_log_y=None):
    """Least squares for log y = a log x + b; returns slope, constant, slope std error, rms residual."""
    lx, ly = np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float))
    A = np.stack([lx, np.ones_like(lx)], axis=1)
    (slope, icpt), *_ = np.linalg.lstsq(A, ly, rcond=None)
    res = ly - (slope * lx + icpt)
    m = len(lx)
    sxx = float(np.sum((lx - lx.mean()) ** 2))
    var = 0.0
    if m > 2 and sxx > 0:
        var += float(np.sum(res**2)) / (m - 2) / sxx
    if var_log_y is not None and sxx > 0:
        wts = 1.0 / np.maximum(np.asarray(var_log_y, dtype=float), 1e-300)
        xm = np.sum(wts * lx) / np.sum(wts)
        var += 1.0 / float(np.sum(wts * (lx - xm) ** 2))
    return float(slope), float(math.exp(icpt)), math.sqrt(var), float(np.sqrt(np.mean(res**2)))


def minkowski_volume(measure, deltas, n_samples=200_000, seed=rngmod.DEFAULT_SEED, threads=1,
                     spacing=None, chunk=1 << 16) -> VolumeEstimate:
    """Monte Carlo |E^delta|: uniform ambient samples within delta of a dense support sample."""
    deltas = np.sort(np.asarray(deltas, dtype=float))
    man = measure.manifold
    if len(deltas) == 0 or deltas[0] <= 0 or deltas[-1] >= man.injectivity_radius():
        raise ArgumentError("radii must lie in (0, injectivity radius)")
    if n_samples < 10_000:
        raise ArgumentError("n_samples must be at least 1e4")
    if spacing is None:
        spacing = deltas[0] / 50.0
        if measure.nominal_dim >= 2:
            spacing = max(spacing, TWO_PI / 1500.0)
    support = measure.support_points(spacing)
    if len(support) == 0:
        raise ArgumentError("empty support")

    n_chunks = math.ceil(n_samples / chunk)

    def work(i):
        size = min(chunk, n_samples - i * chunk)
        pts = man.sample_uniform(rngmod.stream(seed, i), size)
        dist = man.distance_to_set(support, pts)
        return np.array([np.count_nonzero(dist <= d) for d in deltas], dtype=np.int64)

    hits = np.sum(rngmod.ordered_map(work, range(n_chunks), threads), axis=0)
    frac = hits / n_samples
    volumes = man.volume * frac
    exact = np.array([measure.neighborhood_volume(d) if measure.neighborhood_volume(d) is not None else np.nan
                      for d in deltas])
    if np.any(hits == 0):
        raise ArgumentError("some radii caught no samples; increase n_samples or the radii")
    var_log = (1.0 - frac) / (n_samples * frac)
    slope, const, se, resid = fit_power_law(deltas, volumes, var_log)
    return VolumeEstimate(deltas, volumes, hits, int(n_samples), slope, const, 1.96 * se, resid, float(spacing), exact)


def box_counting_dimension(points, side, levels, ratio=1.0 / 3.0, origin=0.0):
    """Slope of log N(box) vs log(1/size) over boxes of size side * ratio^m."""
    pts = np.asarray(points, dtype=float) - origin
    sizes, counts = [], []
    for m in levels:
        size = side * ratio**m
        cells = np.floor(pts / size).astype(np.int64)
        counts.append(len({tuple(c) for c in cells}))
        sizes.append(size)
    slope, *_ = fit_power_law(1.0 / np.asarray(sizes), np.asarray(counts, dtype=float))
    return slope
