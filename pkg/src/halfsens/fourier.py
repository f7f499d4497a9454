"""Exact Walsh-Hadamard analysis of {0,1}-valued truth tables.

Coefficients are kept as integers ``W(S) = 2^n * fhat(S) = sum_x f(x) chi_S(x)``
with ``chi_S(x) = prod_{i in S} x_i``; all derived quantities are exact
``Fraction`` values.
"""
import csv
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._bits import check_table_n, popcount
from .boolfn import TruthTable

MAX_WHT_N = 26

# rational brackets around 1 - 1/e = 0.63212055...
ONE_MINUS_INV_E_LOWER = Fraction(6321205, 10**7)
ONE_MINUS_INV_E_UPPER = Fraction(6321206, 10**7)


@dataclass(frozen=True)
class FourierSpectrum:
    n: int
    coeffs: np.ndarray

    def __getitem__(self, mask):
        return int(self.coeffs[mask])

    @property
    def degrees(self):
        return popcount(np.arange(1 << self.n))

    def fhat(self, mask):
        return Fraction(int(self.coeffs[mask]), 1 << self.n)


def _hadamard_inplace(a):
    """Unnormalized Sylvester butterfly: a[S] <- sum_x (-1)^{|S & x|} a[x]."""
    h = 1
    while h < a.size:
        v = a.reshape(-1, 2, h)
        s = v[:, 0, :] + v[:, 1, :]
        v[:, 1, :] = v[:, 0, :] - v[:, 1, :]
        v[:, 0, :] = s
        h *= 2
    return a


def wht(tt: TruthTable) -> FourierSpectrum:
    """Integer Walsh-Hadamard spectrum in O(n 2^n).

    With bit i set meaning x_i = +1 we have chi_S(x) = (-1)^{|S|} (-1)^{|S & x|},
    so the result is the Sylvester transform followed by a degree-parity sign.
    """
    check_table_n(tt.n, cap=MAX_WHT_N, what="spectrum")
    a = _hadamard_inplace(tt.values.astype(np.int64))
    a[(popcount(np.arange(a.size)) & 1) == 1] *= -1
    return FourierSpectrum(tt.n, a)


def inverse_wht(spec: FourierSpectrum) -> np.ndarray:
    """``sum_S W(S) chi_S(x)`` for every x, which equals ``2^n f(x)``."""
    a = spec.coeffs.astype(np.int64).copy()
    a[(spec.degrees & 1) == 1] *= -1
    return _hadamard_inplace(a)


def character_sum(coeffs, n):
    """``sum_S c_S chi_S(x)`` at every x for a dense coefficient vector (any dtype)."""
    a = np.array(coeffs, copy=True)
    a[(popcount(np.arange(1 << n)) & 1) == 1] *= -1
    return _hadamard_inplace(a)


def character_coefficients(values, n):
    """``sum_x v(x) chi_S(x)`` for every S, for a real-valued cube function."""
    a = _hadamard_inplace(np.array(values, dtype=np.float64, copy=True))
    a[(popcount(np.arange(1 << n)) & 1) == 1] *= -1
    return a


def direct_coefficient(tt: TruthTable, mask: int) -> int:
    """W(S) by direct summation over the cube (oracle for the butterfly)."""
    x = np.arange(1 << tt.n)
    chi = np.where(popcount(mask & ~x) % 2 == 0, 1, -1)
    return int(np.sum(chi[tt.values]))


@dataclass(frozen=True)
class DegreeWeightProfile:
    n: int
    weights: tuple

    @property
    def total(self):
        return sum(self.weights, Fraction(0))


def degree_sums(spec: FourierSpectrum):
    """Integer sums of W(S)^2 grouped by |S| (exact: the total is 2^n * ones <= 4^n)."""
    sq = spec.coeffs.astype(np.int64) ** 2
    deg = spec.degrees
    return [int(sq[deg == d].sum()) for d in range(spec.n + 1)]


def degree_profile(spec: FourierSpectrum) -> DegreeWeightProfile:
    """Per-degree spectral weight sum_{|S|=d} fhat(S)^2 as exact rationals."""
    scale = 1 << (2 * spec.n)
    return DegreeWeightProfile(spec.n, tuple(Fraction(s, scale) for s in degree_sums(spec)))


def tail_weight(profile: DegreeWeightProfile, d: int) -> Fraction:
    """sum_{|S| > d} fhat(S)^2."""
    if not 0 <= d <= profile.n:
        raise ValueError(f"degree cutoff must lie in [0, {profile.n}], got {d}")
    return sum(profile.weights[d + 1:], Fraction(0))


def parseval_holds(spec: FourierSpectrum) -> bool:
    sq = int(np.sum(spec.coeffs.astype(np.int64) ** 2))
    return sq == (1 << spec.n) * int(spec.coeffs[0])


def _check_rho(rho):
    if not 0 < rho < 1:
        raise ValueError(f"noise rate must lie in (0, 1), got {rho}")


def ns_from_spectrum(spec: FourierSpectrum, rho) -> Fraction:
    """Noise sensitivity 2 * sum_S (1 - (1 - 2 rho)^{|S|}) fhat(S)^2.

    Exact when ``rho`` is a Fraction/int-ratio; a float ``rho`` takes the
    floating-point path and returns a float.
    """
    _check_rho(rho)
    sums = degree_sums(spec)
    if isinstance(rho, float):
        r = 1.0 - 2.0 * rho
        total = sum((1.0 - r**d) * s for d, s in enumerate(sums))
        return 2.0 * total / 4.0**spec.n
    rho = Fraction(rho)
    r = 1 - 2 * rho
    total = sum(((1 - r**d) * s for d, s in enumerate(sums)), Fraction(0))
    return 2 * total / (1 << (2 * spec.n))


def tail_bound_from_ns(ns_value, d):
    """Upper bound on tail_weight(f, d) given ns_rho(f) at rho = 1/(2d).

    For |S| > d, 1 - (1 - 1/d)^{|S|} >= 1 - 1/e, hence
    tail <= ns / (2 (1 - 1/e)).  A rational lower bound on 1 - 1/e keeps the
    returned value a valid upper bound.
    """
    if d < 1:
        raise ValueError("degree cutoff must be at least 1")
    return Fraction(ns_value) / (2 * ONE_MINUS_INV_E_LOWER)


def tail_ns_certified(tail, ns_value):
    """Exact certificate that tail <= ns / (2 (1 - 1/e))."""
    return 2 * ONE_MINUS_INV_E_UPPER * Fraction(tail) <= Fraction(ns_value)


def smallest_passing_degree(profile: DegreeWeightProfile, eps) -> int:
    """Smallest d with tail_weight(profile, d) < eps."""
    eps = Fraction(eps)
    tail = Fraction(0)
    # walk down from the top degree accumulating the tail
    for d in range(profile.n, -1, -1):
        if tail >= eps:
            return d + 1
        tail += profile.weights[d]
    return 0


def write_spectrum_csv(spec: FourierSpectrum, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["mask", "degree", "W"])
    for mask, (deg, c) in enumerate(zip(spec.degrees.tolist(), spec.coeffs.tolist())):
        w.writerow([mask, deg, c])
