"""Unit sphere S^2: Legendre recurrences, spherical harmonics, product quadrature.

Points are ``(theta, phi)`` pairs (colatitude, longitude).  Harmonics are the
complex, orthonormal, Condon-Shortley ``Y_l^m`` on the area-4 pi sphere.
Associated Legendre functions are evaluated in fully normalized form, so
degrees in the thousands neither overflow nor lose the leading digits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.spatial import cKDTree

from .core import CUTOFF_EPS, CoefficientSet, Grid, SpectrumTable
from .errors import ArgumentError, DomainError

FOUR_PI = 4.0 * math.pi
_CHUNK = 2048


def legendre_p(l: int, x):
    """P_l(x) by the three-term recurrence (scalar or array ``x``)."""
    if l < 0:
        raise ArgumentError(f"degree must be nonnegative, got {l}")
    xa = np.asarray(x, dtype=float)
    if np.any(np.abs(xa) > 1.0):
        raise DomainError("legendre_p needs |x| <= 1")
    p_prev, p = np.ones_like(xa), xa.copy()
    if l == 0:
        out = p_prev
    else:
        for n in range(1, l):
            p_prev, p = p, ((2 * n + 1) * xa * p - n * p_prev) / (n + 1)
        out = p
    return float(out) if np.ndim(out) == 0 else out


def legendre_at_zero_exact(l: int) -> float:
    """P_l(0) from (-1)^(l/2) C(l, l/2) / 2^l, correctly rounded."""
    if l % 2:
        return 0.0
    val = Fraction(math.comb(l, l // 2), 2**l)
    return float(-val if (l // 2) % 2 else val)


def legendre_at_zero_recurrence(l_max: int) -> np.ndarray:
    """P_l(0) for l = 0..l_max using (l+1) P_{l+1}(0) = -l P_{l-1}(0)."""
    out = np.zeros(l_max + 1)
    out[0] = 1.0
    for n in range(1, l_max):
        out[n + 1] = -n * out[n - 1] / (n + 1)
    return out


def _alp_from(pmm, m, l_max, x):
    """Normalized P_l^m(x) for l = m..l_max given the starting value at l = m."""
    rows = np.empty((l_max - m + 1,) + np.shape(x))
    rows[0] = pmm
    if l_max > m:
        rows[1] = math.sqrt(2 * m + 3) * x * pmm
    for l in range(m + 2, l_max + 1):
        a = math.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
        b = math.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
        rows[l - m] = a * (x * rows[l - m - 1] - b * rows[l - m - 2])
    return rows


def _alp_blocks(l_max, x, s=None):
    """Yield ``(m, rows)`` with rows[l - m] = normalized P_l^m(x), m = 0..l_max.

    Normalization: Y_l^m(theta, phi) = rows[l - m](cos theta) * exp(i m phi).
    Pass ``s = sin(theta)`` when theta is known; 1 - x^2 loses it near the poles.
    """
    x = np.asarray(x, dtype=float)
    if s is None:
        s = np.sqrt(np.clip((1.0 - x) * (1.0 + x), 0.0, None))
    pmm = np.full(x.shape, 1.0 / math.sqrt(FOUR_PI))
    for m in range(l_max + 1):
        if m > 0:
            pmm = -math.sqrt((2.0 * m + 1.0) / (2.0 * m)) * s * pmm
        yield m, _alp_from(pmm, m, l_max, x)


def harmonic_index(l, m):
    return l * l + l + m


def sph_harm_table(l_max: int, theta, phi) -> np.ndarray:
    """All Y_l^m with l <= l_max at the given points, shape (points, (l_max+1)^2).

    Column ``l*l + l + m`` holds Y_l^m.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    out = np.empty((theta.size, (l_max + 1) ** 2), dtype=complex)
    for m, rows in _alp_blocks(l_max, np.cos(theta), np.sin(theta)):
        ls = np.arange(m, l_max + 1)
        phase = np.exp(1j * m * phi)
        vals = rows.T * phase[:, None]
        out[:, harmonic_index(ls, m)] = vals
        if m:
            out[:, harmonic_index(ls, -m)] = (-1) ** m * np.conj(vals)
    return out


def zonal_harmonic(l_max: int, theta) -> np.ndarray:
    """Y_l^0(theta) for l = 0..l_max, shape (l_max+1,) + shape(theta)."""
    x = np.cos(np.asarray(theta, dtype=float))
    pmm = np.full(x.shape, 1.0 / math.sqrt(FOUR_PI))
    return _alp_from(pmm, 0, l_max, x)


def sph_harm(l: int, m: int, theta, phi):
    if l < abs(m):
        raise ArgumentError(f"need l >= |m|, got l={l}, m={m}")
    theta = np.asarray(theta, dtype=float)
    if np.any((theta < 0) | (theta > math.pi)):
        raise DomainError("colatitude must lie in [0, pi]")
    am = abs(m)
    x = np.cos(theta)
    pmm = np.full(x.shape, 1.0 / math.sqrt(FOUR_PI))
    s = np.sin(theta)
    for k in range(1, am + 1):
        pmm = -math.sqrt((2.0 * k + 1.0) / (2.0 * k)) * s * pmm
    val = _alp_from(pmm, am, l, x)[l - am] * np.exp(1j * am * np.asarray(phi, dtype=float))
    if m < 0:
        val = (-1) ** am * np.conj(val)
    return complex(val) if np.ndim(val) == 0 else val


@dataclass
class SphereQuadrature(Grid):
    """Gauss-Legendre in cos(theta) times a uniform longitude grid.

    With exactness degree L it integrates Y_l^m conj(Y_l'^m') exactly for
    l, l' <= L.
    """

    degree: int = 0
    cos_nodes: np.ndarray = None
    cos_weights: np.ndarray = None
    longitudes: np.ndarray = None


def sphere_quadrature(L: int) -> SphereQuadrature:
    if L < 0:
        raise ArgumentError("exactness degree must be nonnegative")
    n_theta = L + 1
    n_phi = 2 * L + 2
    x, wx = np.polynomial.legendre.leggauss(n_theta)
    theta = np.arccos(x)
    phi = 2.0 * math.pi * np.arange(n_phi) / n_phi
    tt, pp = np.meshgrid(theta, phi, indexing="ij")
    points = np.stack([tt.reshape(-1), pp.reshape(-1)], axis=1)
    weights = np.outer(wx, np.full(n_phi, 2.0 * math.pi / n_phi)).reshape(-1)
    return SphereQuadrature(
        points, weights, axes=(theta, phi), band=math.sqrt(L * (L + 1)),
        degree=L, cos_nodes=x, cos_weights=wx, longitudes=phi,
    )


def _lam(l):
    return np.sqrt(np.asarray(l, dtype=float) * (np.asarray(l, dtype=float) + 1.0))


def degree_for(lambda_max: float) -> int:
    """Largest l with l(l+1) <= lambda_max^2 (-1 when lambda_max < 0)."""
    if lambda_max < 0:
        return -1
    target = lambda_max * lambda_max + CUTOFF_EPS
    l = int(math.floor((-1.0 + math.sqrt(1.0 + 4.0 * target)) / 2.0))
    while (l + 1) * (l + 2) <= target:
        l += 1
    while l > 0 and l * (l + 1) > target:
        l -= 1
    return l


def lambda_of_degree(l: int) -> float:
    return math.sqrt(l * (l + 1))


class SphereModel:
    dim = 2
    manifold_id = "sphere2"
    radius = 1.0
    volume = FOUR_PI

    def __repr__(self):
        return "SphereModel()"

    def spectrum(self, lambda_max: float) -> SpectrumTable:
        L = degree_for(lambda_max)
        ls = np.arange(L + 1)
        labels = np.array([(l, m) for l in ls for m in range(-l, l + 1)], dtype=np.int64).reshape(-1, 2)
        offsets = np.concatenate([[0], np.cumsum(2 * ls + 1)]).astype(np.int64)
        return SpectrumTable(self, float(lambda_max), ls.astype(np.int64), _lam(ls), offsets, labels)

    def weyl_leading_term(self, lambda_max):
        # (2 pi)^-2 * 4 pi * pi * L^2
        return lambda_max**2

    @staticmethod
    def degree(table: SpectrumTable) -> int:
        return int(table.keys[-1]) if len(table) else -1

    # evaluation -----------------------------------------------------------

    def basis(self, labels, points) -> np.ndarray:
        labels = np.asarray(labels, dtype=np.int64).reshape(-1, 2)
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        l_max = int(labels[:, 0].max()) if len(labels) else 0
        full = sph_harm_table(l_max, points[:, 0], points[:, 1])
        return full[:, harmonic_index(labels[:, 0], labels[:, 1])]

    def _full_index(self, table):
        return harmonic_index(table.labels[:, 0], table.labels[:, 1])

    def synthesize(self, coeffs: CoefficientSet, grid: Grid) -> np.ndarray:
        table = coeffs.table
        L = self.degree(table)
        if L < 0:
            return np.zeros(len(grid), dtype=complex)
        full = np.zeros((L + 1) ** 2, dtype=complex)
        full[self._full_index(table)] = coeffs.values
        if grid.axes is not None:
            theta, phi = grid.axes
            x = np.cos(theta)
            out = np.zeros((len(theta), len(phi)), dtype=complex)
            for m, rows in _alp_blocks(L, x):
                ls = np.arange(m, L + 1)
                g = full[harmonic_index(ls, m)] @ rows
                out += np.outer(g, np.exp(1j * m * phi))
                if m:
                    gneg = ((-1) ** m * full[harmonic_index(ls, -m)]) @ rows
                    out += np.outer(gneg, np.exp(-1j * m * phi))
            return out.reshape(-1)
        pts = np.asarray(grid.points, dtype=float)
        out = np.empty(len(pts), dtype=complex)
        for s in range(0, len(pts), _CHUNK):
            chunk = pts[s : s + _CHUNK]
            out[s : s + _CHUNK] = sph_harm_table(L, chunk[:, 0], chunk[:, 1]) @ full
        return out

    def analyze(self, values, grid: Grid, table: SpectrumTable) -> CoefficientSet:
        L = self.degree(table)
        values = np.asarray(values, dtype=complex)
        full = np.zeros((L + 1) ** 2, dtype=complex)
        if grid.axes is not None:
            theta, phi = grid.axes
            x = np.cos(theta)
            fw = (values * grid.weights).reshape(len(theta), len(phi))
            for m, rows in _alp_blocks(L, x):
                ls = np.arange(m, L + 1)
                fm = fw @ np.exp(-1j * m * phi)
                full[harmonic_index(ls, m)] = rows @ fm
                if m:
                    fmn = fw @ np.exp(1j * m * phi)
                    full[harmonic_index(ls, -m)] = (-1) ** m * (rows @ fmn)
        else:
            pts = np.asarray(grid.points, dtype=float)
            for s in range(0, len(pts), _CHUNK):
                chunk = pts[s : s + _CHUNK]
                b = sph_harm_table(L, chunk[:, 0], chunk[:, 1])
                full += np.conj(b).T @ (values[s : s + _CHUNK] * grid.weights[s : s + _CHUNK])
        return CoefficientSet(table, full[self._full_index(table)])

    def grid_for_band(self, band: float, oversample: int = 1) -> SphereQuadrature:
        return sphere_quadrature(max(oversample * degree_for(band), 0))

    def diag_kernel(self, table: SpectrumTable, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        sq = np.abs(self.basis(table.labels, pts)) ** 2
        return np.add.reduceat(sq, table.offsets[:-1], axis=1)

    def growth_squared(self, table: SpectrumTable) -> np.ndarray:
        """A(lambda_l)^2 = (2l + 1) / (4 pi), attained at the poles."""
        return (2.0 * table.keys + 1.0) / FOUR_PI

    # geometry -------------------------------------------------------------

    @staticmethod
    def to_cartesian(points) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        st = np.sin(pts[:, 0])
        return np.stack([st * np.cos(pts[:, 1]), st * np.sin(pts[:, 1]), np.cos(pts[:, 0])], axis=1)

    def sample_uniform(self, rng, n: int) -> np.ndarray:
        z = rng.uniform(-1.0, 1.0, size=n)
        phi = rng.uniform(0.0, 2.0 * math.pi, size=n)
        return np.stack([np.arccos(z), phi], axis=1)

    def distance_to_set(self, support, points) -> np.ndarray:
        """Great-circle distance from each point to the finite set ``support``."""
        tree = cKDTree(self.to_cartesian(support))
        chord, _ = tree.query(self.to_cartesian(points))
        return 2.0 * np.arcsin(np.clip(chord / 2.0, 0.0, 1.0))

    def injectivity_radius(self):
        return math.pi
