"""Bessel functions J0, J1 without external special-function dependencies.

Two regimes joined at ``SPLIT``: the ascending power series (accumulated in
extended precision to absorb cancellation) and the Hankel asymptotic
expansion sqrt(2/(pi x)) [P cos(chi) - Q sin(chi)].  The split point is the
smallest x where both regimes deliver <= 1e-10 absolute error; a truncated
Hankel expansion bottoms out near 2e-8 at x = 8, so the split sits at 13
with the series carried in long double up to there.

Accuracy is oracle-tested against mpmath in the test suite.
"""

from __future__ import annotations

import numpy as np

SPLIT = 13.0
_SERIES_TERMS = 48
_ASYMP_TERMS = 17  # k = 0..16, optimal truncation region for x >= 13


def _hankel_symbol(nu: int, k: int) -> float:
    # (nu, k) = prod_{j=1..k} (4 nu^2 - (2j-1)^2) / (k! 8^k)
    num = 1.0
    den = 1.0
    for j in range(1, k + 1):
        num *= 4.0 * nu * nu - (2.0 * j - 1.0) ** 2
        den *= j * 8.0
    return num / den


def _asymp_pq(nu: int):
    p = [(-1.0) ** m * _hankel_symbol(nu, 2 * m)
         for m in range((_ASYMP_TERMS + 1) // 2)]
    q = [(-1.0) ** m * _hankel_symbol(nu, 2 * m + 1)
         for m in range(_ASYMP_TERMS // 2)]
    return np.array(p), np.array(q)


_P0, _Q0 = _asymp_pq(0)
_P1, _Q1 = _asymp_pq(1)


def _series_j0(x):
    # J0(x) = sum_m (-1)^m (x/2)^{2m} / (m!)^2, long-double accumulation
    z = np.asarray(x, dtype=np.longdouble)
    q = -(z * z) / np.longdouble(4.0)
    term = np.ones_like(q)
    acc = np.ones_like(q)
    for m in range(1, _SERIES_TERMS):
        term = term * q / np.longdouble(m * m)
        acc = acc + term
    return acc.astype(np.float64)


def _series_j1(x):
    # J1(x) = (x/2) sum_m (-1)^m (x/2)^{2m} / (m! (m+1)!)
    z = np.asarray(x, dtype=np.longdouble)
    q = -(z * z) / np.longdouble(4.0)
    term = np.ones_like(q)
    acc = np.ones_like(q)
    for m in range(1, _SERIES_TERMS):
        term = term * q / np.longdouble(m * (m + 1))
        acc = acc + term
    return (z / np.longdouble(2.0) * acc).astype(np.float64)


def _poly_inv_even(coef, x):
    # sum_m coef[m] * x^(-2m)
    ix2 = 1.0 / (x * x)
    acc = np.zeros_like(x)
    for c in coef[::-1]:
        acc = acc * ix2 + c
    return acc


def _asymp(x, pcoef, qcoef, chi_shift):
    amp = np.sqrt(2.0 / (np.pi * x))
    chi = x - chi_shift
    p = _poly_inv_even(pcoef, x)
    q = _poly_inv_even(qcoef, x) / x
    return amp * (p * np.cos(chi) - q * np.sin(chi))


def _eval(x, series_fn, pcoef, qcoef, chi_shift, odd: bool):
    x = np.asarray(x, dtype=np.float64)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    ax = np.abs(x)
    out = np.empty_like(ax)
    small = ax < SPLIT
    if small.any():
        out[small] = series_fn(ax[small])
    big = ~small
    if big.any():
        out[big] = _asymp(ax[big], pcoef, qcoef, chi_shift)
    if odd:
        out = np.where(x < 0, -out, out)
    return out[0] if scalar else out


def j0(x):
    """Bessel function of the first kind, order zero."""
    return _eval(x, _series_j0, _P0, _Q0, 0.25 * np.pi, odd=False)


def j1(x):
    """Bessel function of the first kind, order one."""
    return _eval(x, _series_j1, _P1, _Q1, 0.75 * np.pi, odd=True)


def j0_first_zero() -> float:
    """First positive zero of J0, by bisection on the series evaluation."""
    lo, hi = 2.0, 3.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if j0(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
