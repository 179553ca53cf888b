"""Complex gamma, incomplete gamma and Pochhammer kernels.

All multivalued powers go through :func:`principal_power`, so the branch
policy (principal logarithm, ``arg`` in ``(-pi, pi]``) lives in one place.

Upper incomplete gamma region selection:

* positive integer ``a`` with ``|z| >= a + 1``: exact finite sum;
* ``|z| < |a| + 1`` or ``z`` hugging the negative real axis: power series
  for the lower function, upper obtained by complement (with the pole of
  ``Gamma(a)`` cancelled analytically when ``a`` is near ``0, -1, -2, ...``);
* everywhere else: Legendre continued fraction (modified Lentz).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import KernelConvergenceError, PoleError
from .series import EvalResult

EULER_GAMMA = 0.57721566490153286061
CF_MAX_ITER = 500
CF_TOL = 1e-15
SERIES_MAX_ITER = 5000
_TINY = 1e-300
# lnGamma(1+e) = -gamma*e + sum_{k>=2} (-1)^k zeta(k) e^k / k
_ZETA = [float(special.zeta(k, 1)) for k in range(2, 80)]


def as_complex(v) -> complex:
    z = complex(v)
    if z.imag == 0.0:
        # signed zero would put the principal argument on -pi
        z = complex(z.real, 0.0)
    return z


def is_integer(z: complex) -> bool:
    return z.imag == 0.0 and math.isfinite(z.real) and z.real == math.floor(z.real)


def is_nonpositive_integer(z: complex) -> bool:
    return is_integer(z) and z.real <= 0


def is_positive_integer(z: complex) -> bool:
    return is_integer(z) and z.real >= 1


def principal_log(z) -> complex:
    """Log with ``arg`` in ``(-pi, pi]`` (negative reals map to ``+i*pi``)."""
    z = as_complex(z)
    if z == 0:
        raise PoleError("log(0)")
    return cmath.log(z)


def principal_power(base, expo) -> complex:
    """``base**expo`` as ``exp(expo * Log(base))``.

    Integer exponents are single-valued and use repeated multiplication.
    """
    base = as_complex(base)
    expo = as_complex(expo)
    if is_integer(expo) and abs(expo.real) <= 64:
        n = int(expo.real)
        if base == 0:
            if n < 0:
                raise PoleError("0 raised to a negative power")
            return 1.0 + 0j if n == 0 else 0j
        return base**n
    if base == 0:
        if expo.real > 0:
            return 0j
        raise PoleError(f"0 raised to power {expo}")
    return cmath.exp(expo * principal_log(base))


def expm1c(z: complex) -> complex:
    """``exp(z) - 1`` without cancellation for small ``|z|``."""
    x, y = z.real, z.imag
    if y == 0.0:
        return complex(math.expm1(x), 0.0)
    s = math.sin(0.5 * y)
    re = math.expm1(x) * math.cos(y) - 2.0 * s * s
    im = math.exp(x) * math.sin(y)
    return complex(re, im)


def log1pc(z: complex) -> complex:
    """``log(1 + z)`` accurate for small ``|z|``."""
    w = 1.0 + z
    if w == 1.0:
        return z
    return cmath.log(w) * z / (w - 1.0)


def _lngamma1p_over(e: complex) -> complex:
    """``lnGamma(1 + e) / e`` for ``|e| <= 0.5``; equals ``-gamma`` at 0."""
    acc = 0j
    p = 1.0 + 0j
    terms = []
    for k, zk in enumerate(_ZETA, start=2):
        p = p * e
        t = (-1) ** k * zk * p / k
        terms.append(t)
        if abs(t) < 1e-18:
            break
    for t in reversed(terms):
        acc += t
    return -EULER_GAMMA + acc


def ln_gamma(z) -> complex:
    """Principal branch of log-gamma (continuous off the negative real axis)."""
    z = as_complex(z)
    if is_nonpositive_integer(z):
        raise PoleError(f"Gamma has a pole at {z.real:g}")
    return complex(special.loggamma(z))


def gamma(z) -> complex:
    z = as_complex(z)
    if is_nonpositive_integer(z):
        raise PoleError(f"Gamma has a pole at {z.real:g}")
    if z.imag == 0.0 and z.real < 171.6:
        return complex(math.gamma(z.real), 0.0)
    return cmath.exp(ln_gamma(z))


def pochhammer(a, n: int) -> complex:
    """Rising factorial ``(a)_n`` as a literal product.

    Negative ``n`` follows ``(a)_{-p} = 1 / ((a-1)(a-2)...(a-p))``.  Integer
    offsets that hit zero give an exact ``0`` for ``n > 0``.
    """
    a = as_complex(a)
    n = int(n)
    r = 1.0 + 0j
    if n >= 0:
        for i in range(n):
            r *= a + i
        return r
    for i in range(1, -n + 1):
        r *= a - i
    if r == 0:
        raise PoleError(f"({a})_{n} divides by zero")
    return 1.0 / r


@dataclass(frozen=True)
class GammaPair:
    lower: complex
    upper: complex
    total: complex


# ---------------------------------------------------------------- regions


def _near_negative_axis(z: complex) -> bool:
    # power series loses about exp(|z| + Re z); keep that below exp(8)
    return z.real < 0 and abs(z) + z.real < 8.0


def _region(a: complex, z: complex) -> str:
    if is_positive_integer(a) and a.real <= 60 and abs(z) >= a.real + 1:
        return "finite_sum"
    if abs(z) < abs(a) + 1 or _near_negative_axis(z):
        if a.real < -0.5 and abs(z) >= 1.0 and not _near_negative_axis(z):
            return "continued_fraction"
        return "series"
    return "continued_fraction"


# ------------------------------------------------------------ primitives


def _series_sum_kummer(a: complex, z: complex) -> complex:
    """``sum z^n / (a)_{n+1}``; used for ``Re z >= 0``."""
    t = 1.0 / a
    acc = t
    for n in range(1, SERIES_MAX_ITER):
        t = t * z / (a + n)
        acc += t
        if abs(t) <= 1e-17 * abs(acc) and n > abs(z):
            return acc
    raise KernelConvergenceError(f"lower series did not converge for a={a}, z={z}")


def _series_sum_alt(a: complex, z: complex, skip: int = -1) -> complex:
    """``sum (-z)^n / (n! (a+n))`` omitting index ``skip``."""
    u = 1.0 + 0j
    acc = 0j
    for n in range(0, SERIES_MAX_ITER):
        if n > 0:
            u = u * (-z) / n
        if n != skip:
            t = u / (a + n)
            acc += t
            if n > abs(z) and abs(t) <= 1e-17 * abs(acc):
                return acc
        elif n > abs(z) and abs(u) <= 1e-17 * abs(acc):
            return acc
    raise KernelConvergenceError(f"lower series did not converge for a={a}, z={z}")


def _lower_series(a: complex, z: complex) -> complex:
    if z.real >= 0:
        return principal_power(z, a) * cmath.exp(-z) * _series_sum_kummer(a, z)
    return principal_power(z, a) * _series_sum_alt(a, z)


def _upper_series(a: complex, z: complex) -> complex:
    """Upper function from the lower series, pole of Gamma(a) cancelled."""
    if a.real > 0.5 or abs(a.imag) > 2.0:
        return gamma(a) - _lower_series(a, z)
    m = int(round(-a.real))
    m = max(m, 0)
    e = a + m
    lz = principal_log(z)
    # Gamma(a) - z^a (-z)^m / (m! e)
    #   = (-1)^m/m! * [G(e) - z^e] / e,  G(e) = Gamma(1+e) / prod_{i<=m} (1 - e/i)
    if abs(e) <= 0.5:
        g_over = _lngamma1p_over(e)
    else:
        g_over = ln_gamma(1 + e) / e
    for i in range(1, m + 1):
        u = -e / i
        g_over += log1pc(u) / (u * i) if u != 0 else 1.0 / i
    d = e * (g_over - lz)
    ratio = expm1c(d) / d if d != 0 else 1.0
    head = (g_over - lz) * ratio * cmath.exp(e * lz)
    head *= (-1) ** m / math.factorial(m)
    rest = _series_sum_alt(a, z, skip=m)
    return head - principal_power(z, a) * rest


def _upper_cf_scaled(a: complex, z: complex) -> complex:
    """``exp(z) * Gamma(a, z)`` from the Legendre continued fraction."""
    b = z + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b if b != 0 else 1.0 / _TINY
    h = d
    for i in range(1, CF_MAX_ITER + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) <= CF_TOL:
            return principal_power(z, a) * h
    raise KernelConvergenceError(
        f"continued fraction for Gamma({a}, {z}) did not converge in {CF_MAX_ITER} iterations"
    )


def _upper_finite_scaled(a: complex, z: complex) -> complex:
    """``exp(z) * Gamma(n, z) = (n-1)! sum_{s<n} z^s / s!`` for integer ``n``."""
    n = int(a.real)
    t = 1.0 + 0j
    acc = t
    for s in range(1, n):
        t = t * z / s
        acc += t
    return math.factorial(n - 1) * acc


# -------------------------------------------------------------- public


def upper_incomplete_result(a, z) -> EvalResult:
    """``Gamma(a, z)`` together with the region that produced it."""
    a = as_complex(a)
    z = as_complex(z)
    if z == 0:
        if a.real > 0:
            return EvalResult(gamma(a), method="complete")
        raise PoleError(f"Gamma({a}, 0) is infinite")
    region = _region(a, z)
    if region == "finite_sum":
        v = cmath.exp(-z) * _upper_finite_scaled(a, z)
    elif region == "series":
        v = _upper_series(a, z)
    else:
        v = cmath.exp(-z) * _upper_cf_scaled(a, z)
    return EvalResult(v, method=region)


def upper_incomplete(a, z) -> complex:
    """Upper incomplete gamma ``Gamma(a, z)`` on the principal sheet."""
    return upper_incomplete_result(a, z).value


def upper_incomplete_scaled(a, z) -> complex:
    """``exp(z) * Gamma(a, z)``, avoiding overflow of the two factors."""
    a = as_complex(a)
    z = as_complex(z)
    if z == 0:
        return upper_incomplete(a, z)
    region = _region(a, z)
    if region == "finite_sum":
        return _upper_finite_scaled(a, z)
    if region == "continued_fraction":
        return _upper_cf_scaled(a, z)
    return cmath.exp(z) * _upper_series(a, z)


def lower_incomplete(a, z) -> complex:
    """Lower incomplete gamma ``gamma(a, z)``.

    Raises :class:`PoleError` at ``a = 0, -1, -2, ...`` (simple poles).
    """
    a = as_complex(a)
    z = as_complex(z)
    if is_nonpositive_integer(a):
        raise PoleError(f"gamma(a, z) has a pole at a={a.real:g}")
    if z == 0:
        if a.real > 0:
            return 0j
        raise PoleError(f"gamma({a}, 0) diverges")
    if _region(a, z) == "series":
        return _lower_series(a, z)
    return gamma(a) - upper_incomplete(a, z)


def incomplete_pair(a, z) -> GammaPair:
    a = as_complex(a)
    total = gamma(a)
    upper = upper_incomplete(a, z)
    return GammaPair(lower_incomplete(a, z), upper, total)


def continue_upper(a, z, m: int) -> complex:
    """``Gamma(a, z * exp(2 pi i m))`` from the principal-sheet value."""
    a = as_complex(a)
    z = as_complex(z)
    m = int(m)
    if z == 0:
        raise PoleError("continuation needs z != 0")
    base = upper_incomplete(a, z)
    if m == 0:
        return base
    if is_integer(a):
        if a.real >= 1:
            return base
        # limit of (1 - e^{2 pi i m a}) Gamma(a) at a = -n
        n = int(-a.real)
        return base - 2j * math.pi * m * (-1) ** n / math.factorial(n)
    phase = cmath.exp(2j * math.pi * m * a)
    return phase * base + (1.0 - phase) * gamma(a)


def continue_lower(a, z, m: int) -> complex:
    """``gamma(a, z * exp(2 pi i m)) = exp(2 pi i m a) gamma(a, z)``."""
    a = as_complex(a)
    z = as_complex(z)
    m = int(m)
    if z == 0:
        raise PoleError("continuation needs z != 0")
    base = lower_incomplete(a, z)
    if m == 0 or is_integer(a):
        return base
    return cmath.exp(2j * math.pi * m * a) * base


def gamma_many(values) -> np.ndarray:
    """Vectorised complex gamma for quadrature weights and tables."""
    return np.exp(special.loggamma(np.asarray(values, dtype=complex)))
