"""Error function, its inverses and the incomplete gamma functions.

Everything here is vectorised over numpy arrays and returns a Python float
for scalar input.  The implementations are self-contained (no scipy) so the
quantile toolkit has no hidden dependency on a particular special-function
library; the test-suite checks them against quadrature and mpmath.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DomainError",
    "Tolerance",
    "DEFAULT_TOL",
    "erf",
    "erfc",
    "erfcx",
    "erf_inv",
    "erfc_inv",
    "lower_incomplete_gamma",
    "upper_incomplete_gamma",
]

_SQRT_PI = math.sqrt(math.pi)
_TWO_OVER_SQRT_PI = 2.0 / _SQRT_PI
_EPS = np.finfo(float).eps
_TINY = 1e-300

# |x| below this: power series for erf; above: continued fraction for erfc.
_SERIES_CUTOFF = 1.0


class DomainError(ValueError):
    """Argument outside the domain of a special function or quantile."""


@dataclass(frozen=True)
class Tolerance:
    """Stopping rule for the iterative kernels.

    Root refinement (erf_inv, erfc_inv) stops once
    ``|step| <= abs_tol + rel_tol * |value|``.  Series and continued
    fractions always run to machine precision; ``max_iter`` caps every loop.
    """

    abs_tol: float = 1e-300
    rel_tol: float = 1e-13
    max_iter: int = 500

    def __post_init__(self):
        if not self.abs_tol > 0 or not self.rel_tol > 0:
            raise ValueError("abs_tol and rel_tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


DEFAULT_TOL = Tolerance()


def _out(a):
    a = np.asarray(a, dtype=float)
    return float(a) if a.ndim == 0 else a


def _erf_series(x, tol):
    # erf(x) = 2/sqrt(pi) exp(-x^2) sum 2^n x^(2n+1) / (2n+1)!!  (all terms positive)
    x2 = 2.0 * x * x
    term = x.copy()
    total = x.copy()
    done = np.zeros(x.shape, dtype=bool)
    for n in range(tol.max_iter):
        term = term * x2 / (2 * n + 3)
        # converged elements are frozen so each value depends only on its input
        total += np.where(done, 0.0, term)
        done |= np.abs(term) <= _EPS * np.abs(total) + _TINY
        if done.all():
            break
    return _TWO_OVER_SQRT_PI * np.exp(-x * x) * total


def _erfcx_cf(x, tol):
    """exp(x^2) erfc(x) for x >= 1 by modified Lentz on the even contraction."""
    huge = x > 1e8
    if np.any(huge):
        # 1/(x sqrt(pi)) has relative error 1/(2x^2), below an ulp here
        out = np.empty_like(x)
        out[huge] = 0.5 * _TWO_OVER_SQRT_PI / x[huge]
        if not huge.all():
            out[~huge] = _erfcx_cf(x[~huge], tol)
        return out
    xx = x * x
    b = 2.0 * xx + 1.0
    f = b.copy()
    c = b.copy()
    d = np.zeros_like(x)
    done = np.zeros(x.shape, dtype=bool)
    for n in range(1, tol.max_iter + 1):
        a = -(2.0 * n - 1.0) * (2.0 * n)
        b = 2.0 * xx + 4.0 * n + 1.0
        d = b + a * d
        d = np.where(d == 0.0, _TINY, d)
        c = b + a / c
        c = np.where(c == 0.0, _TINY, c)
        d = 1.0 / d
        delta = c * d
        f = np.where(done, f, f * delta)
        # an element may wobble by an ulp after converging; freeze it instead
        done |= np.abs(delta - 1.0) <= 2 * _EPS
        if done.all():
            break
    return _TWO_OVER_SQRT_PI * x / f


def erf(x, tol: Tolerance = DEFAULT_TOL):
    """Error function, absolute error below 1e-15 on the real line."""
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    out = np.empty_like(ax)
    small = ax < _SERIES_CUTOFF
    if np.any(small):
        out[small] = _erf_series(ax[small], tol)
    big = ~small
    if np.any(big):
        xb = ax[big]
        with np.errstate(over="ignore", under="ignore"):
            out[big] = 1.0 - np.exp(-xb * xb) * _erfcx_cf(xb, tol)
    return _out(np.copysign(out, x))


def erfcx(x, tol: Tolerance = DEFAULT_TOL):
    """Scaled complementary error function ``exp(x**2) * erfc(x)``.

    Finite for large positive x where erfc itself underflows; overflows to
    inf for large negative x.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    big = x >= _SERIES_CUTOFF
    if np.any(big):
        out[big] = _erfcx_cf(x[big], tol)
    mid = (x > -_SERIES_CUTOFF) & ~big
    if np.any(mid):
        xm = x[mid]
        out[mid] = np.exp(xm * xm) * (1.0 - _erf_series(xm, tol))
    neg = x <= -_SERIES_CUTOFF
    if np.any(neg):
        xn = x[neg]
        with np.errstate(over="ignore"):
            e = np.exp(xn * xn)
        out[neg] = 2.0 * e - _erfcx_cf(-xn, tol)
    return _out(out)


def erfc(x, tol: Tolerance = DEFAULT_TOL):
    """Complementary error function with relative accuracy in the right tail."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    big = np.abs(x) >= _SERIES_CUTOFF
    if np.any(big):
        xb = x[big]
        ax = np.abs(xb)
        with np.errstate(over="ignore", under="ignore"):
            tail = np.exp(-ax * ax) * _erfcx_cf(ax, tol)
        out[big] = np.where(xb > 0, tail, 2.0 - tail)
    small = ~big
    if np.any(small):
        out[small] = 1.0 - np.copysign(_erf_series(np.abs(x[small]), tol), x[small])
    return _out(out)



_GILES_CENTRAL = (3.43273939e-07, -3.5233877e-06, -4.39150654e-06, 0.00021858087,
                  -0.00125372503, -0.00417768164, 0.246640727, 1.50140941)
_GILES_TAIL = (0.000100950558, 0.00134934322, -0.00367342844, 0.00573950773,
               -0.0076224613, 0.00943887047, 1.00167406, 2.83297682)


def _giles(w, x):
    # single-precision erfinv fit (M. Giles, 2010); w = -log(1 - x^2)
    central = w < 5.0
    wc = np.where(central, w - 2.5, np.sqrt(w) - 3.0)
    p = np.where(central, 2.81022636e-08, -0.000200214257)
    for c, t in zip(_GILES_CENTRAL, _GILES_TAIL):
        p = np.where(central, c, t) + p * wc
    return p * x


def _initial_erfc_inv(y):
    """Starting point for erfc_inv on 0 < y < 0.5 (so the root is > 0)."""
    w = -np.log(y * (2.0 - y))
    guess = _giles(np.minimum(w, 36.0), 1.0 - y)
    far = w >= 36.0
    if np.any(far):
        big_l = -np.log(y[far])
        guess[far] = np.sqrt(big_l - 0.5 * np.log(big_l) - math.log(_SQRT_PI))
    return guess


def _erfc_inv_small(y, tol):
    """Root of log erfc(x) = log y for 0 < y < 0.5 by Halley iteration."""
    x = _initial_erfc_inv(y)
    target = np.log(y)
    active = np.ones(x.shape, dtype=bool)
    for _ in range(tol.max_iter):
        xa = x[active]
        scaled = erfcx(xa, tol)
        g = -xa * xa + np.log(scaled) - target[active]
        r = _TWO_OVER_SQRT_PI / scaled  # -g'
        curv = 2.0 * xa * r - r * r  # g''
        newton = -g / r
        step = newton / (1.0 - 0.5 * newton * curv / -r)
        x[active] = xa - step
        done = np.abs(step) <= tol.abs_tol + tol.rel_tol * np.abs(x[active])
        active[np.flatnonzero(active)[done]] = False
        if not active.any():
            break
    return x


def _erf_inv_small(y, tol):
    """Root of erf(x) = y for |y| <= 0.5 by Newton iteration."""
    x = _giles(-np.log((1.0 - y) * (1.0 + y)), y)
    active = y != 0.0
    x[~active] = 0.0
    for _ in range(tol.max_iter):
        if not active.any():
            break
        xa = x[active]
        step = (erf(xa, tol) - y[active]) / (_TWO_OVER_SQRT_PI * np.exp(-xa * xa))
        x[active] = xa - step
        done = np.abs(step) <= tol.abs_tol + tol.rel_tol * np.abs(x[active])
        active[np.flatnonzero(active)[done]] = False
    return x


def erf_inv(y, tol: Tolerance = DEFAULT_TOL):
    """Inverse error function on (-1, 1).

    Raises DomainError for ``|y| >= 1``; a quantile evaluated at p = 0 or
    p = 1 ends up here.
    """
    y = np.array(y, dtype=float)
    if np.any(~(np.abs(y) < 1.0)):
        raise DomainError(f"erf_inv needs |y| < 1, got {y[~(np.abs(y) < 1.0)].ravel()[0]!r}")
    ay = np.abs(y).reshape(-1)
    out = np.empty_like(ay)
    small = ay <= 0.5
    if np.any(small):
        out[small] = _erf_inv_small(ay[small], tol)
    if np.any(~small):
        # 1 - |y| is exact here
        out[~small] = _erfc_inv_small(1.0 - ay[~small], tol)
    return _out(np.copysign(out.reshape(y.shape), y))


def erfc_inv(y, tol: Tolerance = DEFAULT_TOL):
    """Inverse complementary error function on (0, 2).

    Accurate for arguments down to the subnormal range, which is what the
    log-normal quantile needs far out in either tail.
    """
    y = np.array(y, dtype=float)
    if np.any(~((y > 0.0) & (y < 2.0))):
        raise DomainError("erfc_inv needs 0 < y < 2")
    flat = y.reshape(-1)
    upper = flat > 1.0
    v = np.where(upper, 2.0 - flat, flat)  # exact for y in [1, 2)
    out = np.empty_like(v)
    small = v < 0.5
    if np.any(small):
        out[small] = _erfc_inv_small(v[small], tol)
    if np.any(~small):
        out[~small] = _erf_inv_small(1.0 - v[~small], tol)
    out = np.where(upper, -out, out)
    return _out(out.reshape(y.shape))


def _check_gamma_args(z, x):
    z = float(z)
    x = np.asarray(x, dtype=float)
    if not z > 0:
        raise DomainError(f"incomplete gamma needs z > 0, got {z!r}")
    if np.any(~(x >= 0)):
        raise DomainError("incomplete gamma needs x >= 0")
    return z, x


def _gamma_series(z, x, tol):
    # gamma(z, x) = x^z e^-x sum_n x^n / (z (z+1) ... (z+n)), used for x < z + 1
    term = np.full_like(x, 1.0 / z)
    total = term.copy()
    done = np.zeros(x.shape, dtype=bool)
    for n in range(1, tol.max_iter + 1):
        term = term * x / (z + n)
        total += np.where(done, 0.0, term)
        done |= term <= _EPS * total
        if done.all():
            break
    with np.errstate(divide="ignore"):
        pref = np.exp(z * np.log(x) - x)
    return pref * total


def _gamma_cf(z, x, tol):
    # Gamma(z, x) by Lentz on the Legendre continued fraction, used for x >= z + 1
    b = x + 1.0 - z
    c = np.full_like(x, 1.0 / _TINY)
    d = 1.0 / b
    h = d.copy()
    done = np.zeros(x.shape, dtype=bool)
    for i in range(1, tol.max_iter + 1):
        an = -i * (i - z)
        b = b + 2.0
        d = an * d + b
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = b + an / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        delta = d * c
        h = np.where(done, h, h * delta)
        done |= np.abs(delta - 1.0) <= 2 * _EPS
        if done.all():
            break
    with np.errstate(under="ignore"):
        return np.exp(z * np.log(x) - x) * h


def _incomplete_gamma_pair(z, x, tol, want_lower):
    out = np.empty_like(x)
    full = math.gamma(z)
    low = x < z + 1.0
    finite = np.isfinite(x)
    if np.any(low):
        g = _gamma_series(z, x[low], tol)
        out[low] = g if want_lower else full - g
    high = ~low & finite
    if np.any(high):
        g = _gamma_cf(z, x[high], tol)
        out[high] = full - g if want_lower else g
    inf = ~finite
    if np.any(inf):
        out[inf] = full if want_lower else 0.0
    return out


def lower_incomplete_gamma(z, x, tol: Tolerance = DEFAULT_TOL):
    """Non-regularised lower incomplete gamma ``int_0^x t^(z-1) e^-t dt``."""
    z, x = _check_gamma_args(z, x)
    return _out(_incomplete_gamma_pair(z, np.atleast_1d(x), tol, True).reshape(x.shape))


def upper_incomplete_gamma(z, x, tol: Tolerance = DEFAULT_TOL):
    """Non-regularised upper incomplete gamma ``int_x^inf t^(z-1) e^-t dt``."""
    z, x = _check_gamma_args(z, x)
    return _out(_incomplete_gamma_pair(z, np.atleast_1d(x), tol, False).reshape(x.shape))
