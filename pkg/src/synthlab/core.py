"""Manifold-agnostic spectral bookkeeping.

A spectrum is stored flat: every eigenfunction label of every line sits in one
array, and ``offsets[i]:offsets[i + 1]`` slices out line ``i``.  Lines are keyed
by an exact integer (``|j|^2`` on the torus, the degree ``l`` on the sphere),
never by comparing floating eigenvalues.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError

# Slack added to lambda_max**2 so that cutoffs like sqrt(5) keep the line |j|^2 = 5.
CUTOFF_EPS = 1e-9


@dataclass(frozen=True)
class SpectralLine:
    key: int
    lam: float
    basis_ids: tuple

    @property
    def multiplicity(self) -> int:
        return len(self.basis_ids)


@dataclass(eq=False)
class SpectrumTable:
    """Distinct spectral parameters up to ``lambda_max`` with full eigenspace bases."""

    manifold: object
    lambda_max: float
    keys: np.ndarray
    lambdas: np.ndarray
    offsets: np.ndarray
    labels: np.ndarray

    @property
    def manifold_id(self) -> str:
        return self.manifold.manifold_id

    def __len__(self):
        return len(self.keys)

    @property
    def multiplicities(self) -> np.ndarray:
        return np.diff(self.offsets)

    @property
    def weyl_count(self) -> int:
        return int(self.offsets[-1])

    def line(self, i: int) -> SpectralLine:
        lo, hi = self.offsets[i], self.offsets[i + 1]
        ids = tuple(tuple(int(v) for v in row) for row in self.labels[lo:hi])
        return SpectralLine(int(self.keys[i]), float(self.lambdas[i]), ids)

    @property
    def lines(self) -> list:
        return [self.line(i) for i in range(len(self))]

    def index_of_key(self, key: int) -> int:
        i = int(np.searchsorted(self.keys, key))
        if i == len(self.keys) or self.keys[i] != key:
            raise KeyError(f"no spectral line with key {key} in {self.manifold_id} table")
        return i

    def line_index(self) -> np.ndarray:
        """Line number of every flat label."""
        return np.repeat(np.arange(len(self)), self.multiplicities)

    def truncate(self, lambda_max: float) -> "SpectrumTable":
        n = int(np.searchsorted(self.lambdas, lambda_max * (1 + CUTOFF_EPS) + CUTOFF_EPS, side="right"))
        return SpectrumTable(
            self.manifold,
            float(lambda_max),
            self.keys[:n],
            self.lambdas[:n],
            self.offsets[: n + 1],
            self.labels[: self.offsets[n]],
        )

    def check(self):
        if np.any(np.diff(self.lambdas) <= 0):
            raise AssertionError("spectral lines are not strictly increasing")
        if np.any(self.multiplicities < 1):
            raise AssertionError("empty spectral line")


@dataclass(eq=False)
class CoefficientSet:
    """Coefficients <u, e_j> for every label of a table, stored flat."""

    table: SpectrumTable
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.table.weyl_count,):
            raise ArgumentError(
                f"expected {self.table.weyl_count} coefficients, got {self.values.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ArgumentError("coefficients must be finite")

    @classmethod
    def zeros(cls, table):
        return cls(table, np.zeros(table.weyl_count, dtype=complex))

    @classmethod
    def from_lines(cls, table, line_values: dict):
        """Build from ``{line_index: vector}``; missing lines are zero."""
        out = np.zeros(table.weyl_count, dtype=complex)
        for i, vec in line_values.items():
            lo, hi = table.offsets[i], table.offsets[i + 1]
            out[lo:hi] = vec
        return cls(table, out)

    def line_values(self, i: int) -> np.ndarray:
        return self.values[self.table.offsets[i] : self.table.offsets[i + 1]]

    def line_norms(self) -> np.ndarray:
        sq = np.abs(self.values) ** 2
        if sq.size == 0:
            return np.zeros(len(self.table))
        return np.sqrt(np.add.reduceat(sq, self.table.offsets[:-1]))

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2)))

    def truncate(self, lambda_max: float) -> "CoefficientSet":
        sub = self.table.truncate(lambda_max)
        return CoefficientSet(sub, self.values[: sub.weyl_count].copy())

    def scale_lines(self, factors) -> "CoefficientSet":
        return CoefficientSet(self.table, self.values * np.repeat(factors, self.table.multiplicities))

    def _check_same(self, other):
        if other.table.weyl_count != self.table.weyl_count or other.table.manifold_id != self.table.manifold_id:
            raise ArgumentError("coefficient sets live on different tables")

    def __add__(self, other):
        self._check_same(other)
        return CoefficientSet(self.table, self.values + other.values)

    def __sub__(self, other):
        self._check_same(other)
        return CoefficientSet(self.table, self.values - other.values)

    def __mul__(self, scalar):
        return CoefficientSet(self.table, self.values * scalar)

    __rmul__ = __mul__

    def profile(self, provenance="closed-form") -> "SpectralProfile":
        return SpectralProfile(self.table.keys.copy(), self.table.lambdas.copy(), self.line_norms(), provenance)


@dataclass(eq=False)
class SpectralProfile:
    keys: np.ndarray
    lambdas: np.ndarray
    norms: np.ndarray
    provenance: str = "closed-form"

    def __post_init__(self):
        if np.any(self.norms < 0) or not np.all(np.isfinite(self.norms)):
            raise ArgumentError("profile norms must be finite and nonnegative")

    def __len__(self):
        return len(self.lambdas)

    def truncate(self, lambda_max):
        n = int(np.searchsorted(self.lambdas, lambda_max * (1 + CUTOFF_EPS) + CUTOFF_EPS, side="right"))
        return SpectralProfile(self.keys[:n], self.lambdas[:n], self.norms[:n], self.provenance)


@dataclass
class LpHatNorm:
    p: float
    value: float
    cutoffs: np.ndarray
    partial_sums: np.ndarray  # sum of norm**p over lines with lambda <= cutoff


@dataclass
class WeylCheck:
    count: int
    predicted: float
    relative_deviation: float
    lambda_max: float


@dataclass
class Grid:
    """Points with quadrature weights; ``axes`` is set for tensor-product grids."""

    points: np.ndarray
    weights: np.ndarray
    axes: tuple = field(default=None)
    band: float = math.inf

    def __len__(self):
        return len(self.weights)


def enumerate_spectrum(manifold, lambda_max: float) -> SpectrumTable:
    if lambda_max < 0 or not math.isfinite(lambda_max):
        raise ArgumentError(f"lambda_max must be a finite nonnegative number, got {lambda_max}")
    table = manifold.spectrum(float(lambda_max))
    table.check()
    return table


def project(manifold, measure, line: SpectralLine, method="auto"):
    """Coefficient vector of ``measure`` on one line and the line norm."""
    if measure.manifold.manifold_id != manifold.manifold_id:
        raise ArgumentError("measure and manifold do not match")
    labels = np.array(line.basis_ids, dtype=np.int64).reshape(line.multiplicity, -1)
    vec = measure.label_coefficients(labels, line.lam, method=method)
    return vec, float(np.sqrt(np.sum(np.abs(vec) ** 2)))


def spectral_profile(manifold, measure, lambda_max: float, method="auto") -> SpectralProfile:
    """One (lambda, ||E_lambda u||) pair per line up to ``lambda_max``."""
    table = enumerate_spectrum(manifold, lambda_max)
    coeffs = measure.coefficients(table, method=method)
    return coeffs.profile(measure.provenance(method))


def lp_hat_norm(profile: SpectralProfile, p: float) -> LpHatNorm:
    """Truncated (sum_lambda ||E_lambda u||^p)^(1/p) with dyadic partial sums.

    Cutoffs are ``lambda_max / 2**i`` down to the first nonzero line, so a
    divergent series shows up as partial sums that keep growing with the cutoff.
    """
    if not p >= 1:
        raise ArgumentError(f"p must be at least 1, got {p}")
    powered = profile.norms.astype(float) ** p
    total = float(np.sum(powered))
    top = float(profile.lambdas[-1]) if len(profile) else 0.0
    cutoffs = []
    c = top
    while c >= 1.0 and len(cutoffs) < 64:
        cutoffs.append(c)
        c /= 2.0
    cutoffs = np.array(cutoffs[::-1] or [top])
    csum = np.cumsum(powered)
    idx = np.searchsorted(profile.lambdas, cutoffs * (1 + CUTOFF_EPS) + CUTOFF_EPS, side="right")
    partial = np.concatenate([[0.0], csum])[idx]
    return LpHatNorm(float(p), total ** (1.0 / p), cutoffs, partial)


def lp_partial_sum(profile: SpectralProfile, p: float, cutoff: float) -> float:
    """sum of ||E_lambda u||^p over lines with lambda <= cutoff."""
    return float(np.sum(profile.truncate(cutoff).norms ** p))


def weyl_check(table: SpectrumTable) -> WeylCheck:
    if len(table) == 0:
        raise ArgumentError("empty spectrum table")
    n = table.weyl_count
    predicted = table.manifold.weyl_leading_term(table.lambda_max)
    dev = (n - predicted) / predicted if predicted > 0 else math.inf
    return WeylCheck(n, float(predicted), float(dev), table.lambda_max)
