"""Flat torus T^d = R^d / (2 pi Z)^d with orthonormal exponentials.

The eigenfunctions are ``e_j(x) = (2 pi)^(-d/2) exp(i j.x)`` for ``j`` in Z^d,
with spectral parameter ``|j|``.  Lines are keyed by the integer ``|j|^2``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.spatial import cKDTree

from .core import CUTOFF_EPS, CoefficientSet, Grid, SpectrumTable
from .errors import UnsupportedDimensionError

TWO_PI = 2.0 * math.pi
_CHUNK = 4096


def _check_dim(d):
    if d not in (1, 2, 3):
        raise UnsupportedDimensionError(f"torus dimension must be 1, 2 or 3, got {d}")


def _lattice_ball(d, n_max):
    m = math.isqrt(max(n_max, 0))
    rng = np.arange(-m, m + 1, dtype=np.int64)
    mesh = np.stack(np.meshgrid(*([rng] * d), indexing="ij"), axis=-1).reshape(-1, d)
    sq = np.sum(mesh * mesh, axis=1)
    keep = sq <= n_max
    mesh, sq = mesh[keep], sq[keep]
    # order by |j|^2, then lexicographically in j
    order = np.lexsort(tuple(mesh[:, k] for k in reversed(range(d))) + (sq,))
    return mesh[order], sq[order]


def sum_of_squares_lines(d: int, lambda_max: float):
    """All lattice vectors with |j| <= lambda_max grouped by n = |j|^2.

    Returns a list of ``(n, vectors)`` for the nonempty shells only.
    """
    _check_dim(d)
    n_max = math.floor(lambda_max * lambda_max + CUTOFF_EPS)
    vecs, sq = _lattice_ball(d, n_max)
    keys, starts = np.unique(sq, return_index=True)
    bounds = list(starts) + [len(sq)]
    return [(int(k), vecs[bounds[i] : bounds[i + 1]]) for i, k in enumerate(keys)]


def lattice_vectors(d: int, n: int) -> np.ndarray:
    """Lattice vectors with |j|^2 = n (possibly none)."""
    _check_dim(d)
    vecs, sq = _lattice_ball(d, n)
    return vecs[sq == n]


def count_representations(d: int, n: int) -> int:
    """r_d(n): number of j in Z^d with |j|^2 = n."""
    return len(lattice_vectors(d, n))


def eval_exponential(j, x) -> complex:
    j = np.atleast_1d(np.asarray(j, dtype=np.int64))
    x = np.mod(np.atleast_1d(np.asarray(x, dtype=float)), TWO_PI)
    d = len(j)
    return complex(TWO_PI ** (-d / 2) * np.exp(1j * float(np.dot(j, x))))


class TorusModel:
    def __init__(self, d: int):
        _check_dim(d)
        self.d = d

    def __repr__(self):
        return f"TorusModel(d={self.d})"

    @property
    def manifold_id(self):
        return f"torus{self.d}"

    @property
    def dim(self):
        return self.d

    @property
    def period(self):
        return TWO_PI

    @property
    def volume(self):
        return TWO_PI**self.d

    @property
    def norm_const(self):
        return TWO_PI ** (-self.d / 2)

    def spectrum(self, lambda_max: float) -> SpectrumTable:
        n_max = math.floor(lambda_max * lambda_max + CUTOFF_EPS)
        vecs, sq = _lattice_ball(self.d, n_max)
        keys, starts = np.unique(sq, return_index=True)
        offsets = np.append(starts, len(sq)).astype(np.int64)
        return SpectrumTable(self, float(lambda_max), keys, np.sqrt(keys.astype(float)), offsets, vecs)

    def weyl_leading_term(self, lambda_max):
        # (2 pi)^-d |T^d| |B_d| L^d with |T^d| = (2 pi)^d
        ball = math.pi ** (self.d / 2) / math.gamma(self.d / 2 + 1)
        return ball * lambda_max**self.d

    # evaluation -----------------------------------------------------------

    def basis(self, labels, points) -> np.ndarray:
        """Matrix ``B[p, i] = e_{labels[i]}(points[p])``."""
        labels = np.asarray(labels, dtype=float).reshape(-1, self.d)
        points = np.asarray(points, dtype=float).reshape(-1, self.d)
        return self.norm_const * np.exp(1j * (points @ labels.T))

    def uniform_grid(self, n: int) -> Grid:
        axis = TWO_PI * np.arange(n) / n
        mesh = np.stack(np.meshgrid(*([axis] * self.d), indexing="ij"), axis=-1).reshape(-1, self.d)
        w = np.full(len(mesh), (TWO_PI / n) ** self.d)
        # exact for trigonometric polynomials of degree < n in each coordinate
        return Grid(mesh, w, axes=(axis,) * self.d, band=(n - 1) / 2)

    def grid_for_band(self, band: float, oversample: int = 1) -> Grid:
        """Uniform grid integrating products of two band-``band`` functions exactly."""
        n = oversample * (2 * math.floor(band + CUTOFF_EPS) + 1)
        return self.uniform_grid(max(n, 1))

    def _dense(self, coeffs: CoefficientSet):
        labels = coeffs.table.labels
        m = int(np.max(np.abs(labels))) if len(labels) else 0
        dense = np.zeros((2 * m + 1,) * self.d, dtype=complex)
        dense[tuple((labels + m).T)] = coeffs.values
        return dense, m

    def synthesize(self, coeffs: CoefficientSet, grid: Grid) -> np.ndarray:
        """Values of sum_j c_j e_j on the grid points."""
        if grid.axes is not None:
            dense, m = self._dense(coeffs)
            freqs = np.arange(-m, m + 1)
            out = dense
            for k, axis in enumerate(grid.axes):
                mat = np.exp(1j * np.outer(axis, freqs))
                out = np.moveaxis(np.tensordot(mat, out, axes=([1], [k])), 0, k)
            return self.norm_const * out.reshape(-1)
        pts = np.asarray(grid.points, dtype=float)
        out = np.empty(len(pts), dtype=complex)
        for s in range(0, len(pts), _CHUNK):
            out[s : s + _CHUNK] = self.basis(coeffs.table.labels, pts[s : s + _CHUNK]) @ coeffs.values
        return out

    def analyze(self, values, grid: Grid, table: SpectrumTable) -> CoefficientSet:
        """Quadrature of ``values * conj(e_j)`` for every label of ``table``."""
        values = np.asarray(values, dtype=complex)
        if grid.axes is not None:
            labels = table.labels
            m = int(np.max(np.abs(labels))) if len(labels) else 0
            freqs = np.arange(-m, m + 1)
            out = values.reshape(tuple(len(a) for a in grid.axes)) * grid.weights.reshape(
                tuple(len(a) for a in grid.axes)
            )
            for k, axis in enumerate(grid.axes):
                mat = np.exp(-1j * np.outer(freqs, axis))
                out = np.moveaxis(np.tensordot(mat, out, axes=([1], [k])), 0, k)
            return CoefficientSet(table, self.norm_const * out[tuple((labels + m).T)])
        acc = np.zeros(table.weyl_count, dtype=complex)
        pts = np.asarray(grid.points, dtype=float)
        for s in range(0, len(pts), _CHUNK):
            b = self.basis(table.labels, pts[s : s + _CHUNK])
            acc += np.conj(b).T @ (values[s : s + _CHUNK] * grid.weights[s : s + _CHUNK])
        return CoefficientSet(table, acc)

    def diag_kernel(self, table: SpectrumTable, points) -> np.ndarray:
        """Pi_lambda(x, x) = sum_{|j| = lambda} |e_j(x)|^2, shape (points, lines)."""
        pts = np.asarray(points, dtype=float).reshape(-1, self.d)
        sq = np.abs(self.basis(table.labels, pts)) ** 2
        return np.add.reduceat(sq, table.offsets[:-1], axis=1)

    def growth_squared(self, table: SpectrumTable) -> np.ndarray:
        """A(lambda)^2 = r_d(lambda^2) / (2 pi)^d."""
        return table.multiplicities / self.volume

    # geometry -------------------------------------------------------------

    def wrap(self, points):
        return np.mod(np.asarray(points, dtype=float), TWO_PI)

    def sample_uniform(self, rng, n: int) -> np.ndarray:
        return rng.uniform(0.0, TWO_PI, size=(n, self.d))

    def distance_to_set(self, support, points) -> np.ndarray:
        """Flat minimum-image distance from each point to the finite set ``support``."""
        tree = cKDTree(self.wrap(support) % TWO_PI, boxsize=TWO_PI)
        dist, _ = tree.query(self.wrap(points) % TWO_PI)
        return dist

    def injectivity_radius(self):
        return math.pi
