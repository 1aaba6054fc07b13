"""Bessel functions J0, J1, Y0, Y1 and first-kind Hankel functions H0, H1.

Real nonnegative arguments only, which is all the radial reference
solutions need.  Two implementations live here:

* scalar ``bessel_j`` / ``bessel_y`` / ``hankel1``: the ascending power
  series summed in exact rational arithmetic for x <= 17, so the heavy
  cancellation around x ~ 10 costs no precision, and Hankel's asymptotic
  expansion beyond 17, where its optimally truncated error is ~1e-15 of
  the oscillation envelope;
* array ``j0_j1`` / ``y0_y1``: plain float64 series/expansion with the
  crossover at 12 (the float64 sweet spot).  Absolute accuracy ~1e-10,
  intended for bulk evaluation at quadrature points where machine-exact
  values would be wasted effort.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

_EULER_GAMMA = 0.5772156649015328606065121
_SERIES_CUTOFF = 17.0   # scalar path; exact summation makes the series safe this far
_ARRAY_CUTOFF = 12.0    # float64 path; series roundoff ~ expansion error here
_TINY = Fraction(1, 10**40)


def _check_order(order: int) -> None:
    if order not in (0, 1):
        raise ValueError(f"unsupported order {order!r}: only orders 0 and 1 are implemented")


def _check_x(x: float, positive: bool) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"argument must be finite, got {x!r}")
    if positive:
        if x <= 0.0:
            raise ValueError(f"argument must be > 0 (logarithmic singularity at 0), got {x!r}")
    elif x < 0.0:
        raise ValueError(f"argument must be >= 0, got {x!r}")
    return x


# ----------------------------------------------------------------------
# scalar path: exact-rational ascending series (x <= 17)
# ----------------------------------------------------------------------

def _j0_series(q: Fraction) -> Fraction:
    # sum_m (-q)^m / (m!)^2
    term = Fraction(1)
    total = Fraction(1)
    m = 1
    while True:
        term *= -q / (m * m)
        total += term
        if -_TINY < term < _TINY:
            return total
        m += 1


def _j1_series(q: Fraction) -> Fraction:
    # sum_m (-q)^m / (m! (m+1)!); J1 = (x/2) * sum
    term = Fraction(1)
    total = Fraction(1)
    m = 1
    while True:
        term *= -q / (m * (m + 1))
        total += term
        if -_TINY < term < _TINY:
            return total
        m += 1


def _y0_correction(q: Fraction) -> Fraction:
    # sum_{m>=1} (-1)^(m+1) H_m q^m / (m!)^2
    u = Fraction(1)
    h = Fraction(0)
    total = Fraction(0)
    sign = 1
    m = 1
    while True:
        u *= q / (m * m)
        h += Fraction(1, m)
        term = sign * h * u
        total += term
        if -_TINY < term < _TINY:
            return total
        sign = -sign
        m += 1


def _y1_correction(q: Fraction) -> Fraction:
    # sum_{m>=0} (-1)^m (H_m + H_{m+1}) q^m / (m! (m+1)!)
    u = Fraction(1)
    hm = Fraction(0)
    hm1 = Fraction(1)
    total = hm + hm1
    sign = -1
    m = 1
    while True:
        u *= q / (m * (m + 1))
        hm = hm1
        hm1 = hm + Fraction(1, m + 1)
        term = sign * (hm + hm1) * u
        total += term
        if -_TINY < term < _TINY:
            return total
        sign = -sign
        m += 1


def _quarter_square(x: float) -> Fraction:
    fx = Fraction(x)
    return fx * fx / 4


# ----------------------------------------------------------------------
# scalar path: Hankel asymptotic expansion (x > 17)
# ----------------------------------------------------------------------

def _hankel_asymptotic(order: int, x: float) -> complex:
    """H_order^(1)(x) = sqrt(2/(pi x)) e^{i(x - order*pi/2 - pi/4)} sum_m a_m (i/x)^m."""
    four_nu2 = 4.0 * order * order
    z = 1j / x
    term = complex(1.0)
    total = complex(1.0)
    last = 1.0
    m = 1
    while True:
        term *= (four_nu2 - (2 * m - 1) ** 2) / (8.0 * m) * z
        mag = abs(term)
        if mag >= last:          # expansion turned divergent: stop at its minimum
            break
        total += term
        if mag < 1e-18 * abs(total):
            break
        last = mag
        m += 1
    c, s = math.cos(x), math.sin(x)
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    if order == 0:               # omega = x - pi/4
        phase = complex((c + s) * inv_sqrt2, (s - c) * inv_sqrt2)
    else:                        # omega = x - 3 pi/4
        phase = complex((s - c) * inv_sqrt2, -(s + c) * inv_sqrt2)
    return math.sqrt(2.0 / (math.pi * x)) * phase * total


def bessel_j(order: int, x: float) -> float:
    """Bessel function of the first kind, order 0 or 1, for x >= 0."""
    _check_order(order)
    x = _check_x(x, positive=False)
    if x <= _SERIES_CUTOFF:
        q = _quarter_square(x)
        if order == 0:
            return float(_j0_series(q))
        return float(Fraction(x) / 2 * _j1_series(q))
    return _hankel_asymptotic(order, x).real


def bessel_y(order: int, x: float) -> float:
    """Bessel function of the second kind, order 0 or 1, for x > 0."""
    _check_order(order)
    x = _check_x(x, positive=True)
    if x <= _SERIES_CUTOFF:
        q = _quarter_square(x)
        log_term = math.log(0.5 * x) + _EULER_GAMMA
        if order == 0:
            j = float(_j0_series(q))
            return (2.0 / math.pi) * (log_term * j + float(_y0_correction(q)))
        j = float(Fraction(x) / 2 * _j1_series(q))
        return (2.0 / math.pi) * (log_term * j - 1.0 / x - 0.25 * x * float(_y1_correction(q)))
    return _hankel_asymptotic(order, x).imag


def hankel1(order: int, x: float) -> complex:
    """First-kind Hankel function: bessel_j(order, x) + 1j * bessel_y(order, x)."""
    _check_order(order)
    x = _check_x(x, positive=True)
    if x > _SERIES_CUTOFF:
        return _hankel_asymptotic(order, x)
    return complex(bessel_j(order, x), bessel_y(order, x))


# ----------------------------------------------------------------------
# array path (float64, bulk quadrature evaluation)
# ----------------------------------------------------------------------

_N_SERIES = 44  # past the last term that matters in float64 at x = 12


def _series_arrays(x: np.ndarray):
    """J0, J1 and the Y-correction sums on x <= _ARRAY_CUTOFF."""
    q = 0.25 * x * x
    j0 = np.ones_like(x)
    t0 = np.ones_like(x)
    s1 = np.ones_like(x)
    t1 = np.ones_like(x)
    c0 = np.zeros_like(x)
    u0 = np.ones_like(x)
    c1 = np.ones_like(x)          # m = 0 term of the Y1 sum: H_0 + H_1 = 1
    u1 = np.ones_like(x)
    h = 0.0
    hm = 0.0
    hm1 = 1.0
    sign0 = 1.0
    sign1 = -1.0
    for m in range(1, _N_SERIES + 1):
        t0 *= -q / (m * m)
        j0 += t0
        t1 *= -q / (m * (m + 1))
        s1 += t1
        u0 *= q / (m * m)
        h += 1.0 / m
        c0 += sign0 * h * u0
        sign0 = -sign0
        u1 *= q / (m * (m + 1))
        hm = hm1
        hm1 = hm + 1.0 / (m + 1)
        c1 += sign1 * (hm + hm1) * u1
        sign1 = -sign1
    j1 = 0.5 * x * s1
    return j0, j1, c0, c1


def _asymptotic_arrays(order: int, x: np.ndarray):
    """(J_order, Y_order) on x > _ARRAY_CUTOFF via 20 expansion terms."""
    four_nu2 = 4.0 * order * order
    inv = 1.0 / x
    term = np.ones(x.shape, dtype=complex)
    total = np.ones(x.shape, dtype=complex)
    for m in range(1, 21):
        term *= (four_nu2 - (2 * m - 1) ** 2) / (8.0 * m) * (1j * inv)
        total += term
    c, s = np.cos(x), np.sin(x)
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    if order == 0:
        phase = (c + s) * inv_sqrt2 + 1j * ((s - c) * inv_sqrt2)
    else:
        phase = (s - c) * inv_sqrt2 - 1j * ((s + c) * inv_sqrt2)
    h = np.sqrt(2.0 / (math.pi * x)) * phase * total
    return h.real, h.imag


def j0_j1(x: np.ndarray):
    """Vectorized (J0(x), J1(x)) for x >= 0. Absolute accuracy ~1e-10."""
    x = np.asarray(x, dtype=float)
    if x.size and (np.any(x < 0) or not np.all(np.isfinite(x))):
        raise ValueError("arguments must be finite and >= 0")
    j0 = np.empty_like(x)
    j1 = np.empty_like(x)
    small = x <= _ARRAY_CUTOFF
    if np.any(small):
        a, b, _, _ = _series_arrays(x[small])
        j0[small] = a
        j1[small] = b
    large = ~small
    if np.any(large):
        j0[large] = _asymptotic_arrays(0, x[large])[0]
        j1[large] = _asymptotic_arrays(1, x[large])[0]
    return j0, j1


def y0_y1(x: np.ndarray):
    """Vectorized (Y0(x), Y1(x)) for x > 0. Absolute accuracy ~1e-10."""
    x = np.asarray(x, dtype=float)
    if x.size and (np.any(x <= 0) or not np.all(np.isfinite(x))):
        raise ValueError("arguments must be finite and > 0")
    y0 = np.empty_like(x)
    y1 = np.empty_like(x)
    small = x <= _ARRAY_CUTOFF
    if np.any(small):
        xs = x[small]
        j0, j1, c0, c1 = _series_arrays(xs)
        log_term = np.log(0.5 * xs) + _EULER_GAMMA
        y0[small] = (2.0 / math.pi) * (log_term * j0 + c0)
        y1[small] = (2.0 / math.pi) * (log_term * j1 - 1.0 / xs - 0.25 * xs * c1)
    large = ~small
    if np.any(large):
        y0[large] = _asymptotic_arrays(0, x[large])[1]
        y1[large] = _asymptotic_arrays(1, x[large])[1]
    return y0, y1
