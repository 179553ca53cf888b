"""Dickson polynomials of the first and second kind and their generating functions.

``D_n(x, a)`` and ``E_n(x, a)`` share the recurrence
``P_n = x P_{n-1} - a P_{n-2}`` and differ only in the seeds
(``D_0 = 2, D_1 = x`` and ``E_0 = 1, E_1 = x``).  The recurrence is the
evaluator used everywhere else; the explicit binomial sums are kept so the
summand shape used by the double-series identities can be tested against it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Tuple

from .complex_gamma import as_complex
from .errors import DomainError, PoleError, SingularConfigurationError
from .series import CompensatedSum, EvalResult


class DicksonKind(str, Enum):
    first = "first"
    second = "second"


def _kind(kind) -> DicksonKind:
    try:
        return DicksonKind(kind)
    except ValueError:
        raise DomainError(f"unknown Dickson kind {kind!r}") from None


@dataclass(frozen=True)
class GFParams:
    """Arguments of the classical generating functions.

    Besides ``|Re x|, |Re a|, |Re z| < 1`` we require ``|z| (|x| + 2) < 1``,
    since the real-part conditions alone allow e.g. ``x = 0.5 + 10i`` where
    the series diverges.
    """

    x: complex
    a: complex
    z: complex

    def __post_init__(self):
        for name in ("x", "a", "z"):
            object.__setattr__(self, name, as_complex(getattr(self, name)))
        for name in ("x", "a", "z"):
            if not abs(getattr(self, name).real) < 1:
                raise DomainError(f"|Re {name}| must be < 1")
        if not abs(self.z) * (abs(self.x) + 2) < 1:
            raise DomainError("generating-function series needs |z|(|x|+2) < 1")

    @property
    def rho(self) -> float:
        """Geometric rate bounding the partial-sum tail."""
        return abs(self.z) * (abs(self.x) + 2 * abs(self.a) + 1)


def dickson_eval(kind, n: int, x, a) -> complex:
    """``D_n(x, a)`` or ``E_n(x, a)`` by the three-term recurrence."""
    kind = _kind(kind)
    if n < 0:
        raise DomainError("degree must be nonnegative")
    x = as_complex(x)
    a = as_complex(a)
    p0 = 2.0 + 0j if kind is DicksonKind.first else 1.0 + 0j
    if n == 0:
        return p0
    p1 = x
    for _ in range(n - 1):
        p0, p1 = p1, x * p1 - a * p0
    return p1


def explicit_sum(kind, n: int, x, a) -> complex:
    """The binomial form ``sum_j c_{n,j} (-a)^j x^(n-2j)``.

    First kind uses ``c = n/(n-j) C(n-j, j)``; at ``n = 0`` this gives 2 to
    match the recurrence seed.
    """
    kind = _kind(kind)
    if n < 0:
        raise DomainError("degree must be nonnegative")
    x = as_complex(x)
    a = as_complex(a)
    if n == 0:
        return 2.0 + 0j if kind is DicksonKind.first else 1.0 + 0j
    acc = CompensatedSum()
    for j in range(n // 2 + 1):
        c = math.comb(n - j, j)
        if kind is DicksonKind.first:
            c = c * n / (n - j)
        acc.add(c * (-a) ** j * x ** (n - 2 * j))
    return acc.value


def gf_rational(kind, x, a, z) -> complex:
    """Closed form of ``sum_{n>=0} c_n P_n(x, a) z^n``.

    The first-kind series drops its ``n = 0`` term (its weight ``n/(n-j)``
    vanishes), giving ``z (x - 2 a z) / (a z^2 - x z + 1)``; the second kind
    gives ``1 / (a z^2 - x z + 1)``.
    """
    kind = _kind(kind)
    x = as_complex(x)
    a = as_complex(a)
    z = as_complex(z)
    den = a * z * z - x * z + 1
    if den == 0:
        raise PoleError("a z^2 - x z + 1 vanishes")
    if kind is DicksonKind.first:
        return z * (x - 2 * a * z) / den
    return 1.0 / den


def gf_partial(kind, p: GFParams, N: int) -> EvalResult:
    """Partial sum ``n = 0..N`` of the generating function series.

    Every root of ``w^2 - x w + a`` is bounded by ``|x| + 2|a| + 1``, so
    ``|P_n z^n| <= (n + 2) rho^n`` and the tail is at most
    ``(N + 3) rho^(N+1) / (1 - rho)^2`` when ``rho < 1``.
    """
    kind = _kind(kind)
    acc = CompensatedSum()
    zn = 1.0 + 0j
    smallest = math.inf
    for n in range(N + 1):
        if n == 0 and kind is DicksonKind.first:
            t = 0j
        else:
            t = dickson_eval(kind, n, p.x, p.a) * zn
        acc.add(t)
        if t != 0:
            smallest = min(smallest, abs(t))
        zn *= p.z
    rho = p.rho
    err = (N + 3) * rho ** (N + 1) / (1 - rho) ** 2 if rho < 1 else math.inf
    return EvalResult(acc.value, err, N + 1, False, smallest, "gf_partial", N)


def _check_functional(kind: DicksonKind, u: complex, b: complex):
    if u == 0:
        raise SingularConfigurationError("functional equation needs u != 0")
    if kind is DicksonKind.second and u * u == b:
        raise SingularConfigurationError("second kind needs u^2 != b")


def functional_check(kind, n: int, u, b) -> Tuple[complex, complex]:
    """``(P_n(u + b/u, b), closed form in u)`` for the Dickson functional equation."""
    kind = _kind(kind)
    u = as_complex(u)
    b = as_complex(b)
    _check_functional(kind, u, b)
    v = b / u
    lhs = dickson_eval(kind, n, u + v, b)
    if kind is DicksonKind.first:
        rhs = u**n + v**n
    else:
        rhs = (u ** (n + 1) - v ** (n + 1)) / (u - v)
    return lhs, rhs


def functional_gf_rational(kind, u, b, z) -> complex:
    """Generating function of ``P_n(u + b/u, b)`` in closed form.

    First kind (``n = 0`` term dropped):
    ``(2 b u z^2 - b z - u^2 z) / ((u z - 1)(u - b z))``.
    Second kind: ``-u / ((u z - 1)(u - b z))``.
    """
    kind = _kind(kind)
    u = as_complex(u)
    b = as_complex(b)
    z = as_complex(z)
    _check_functional(kind, u, b)
    den = (u * z - 1) * (u - b * z)
    if den == 0:
        raise PoleError("(u z - 1)(u - b z) vanishes")
    if kind is DicksonKind.first:
        return (2 * b * u * z * z - b * z - u * u * z) / den
    return -u / den


def functional_gf_partial(kind, u, b, z, N: int) -> EvalResult:
    """Partial sum ``n = 0..N`` of ``sum c_n P_n(u + b/u, b) z^n``."""
    kind = _kind(kind)
    u = as_complex(u)
    b = as_complex(b)
    z = as_complex(z)
    _check_functional(kind, u, b)
    x = u + b / u
    acc = CompensatedSum()
    zn = 1.0 + 0j
    for n in range(N + 1):
        if not (n == 0 and kind is DicksonKind.first):
            acc.add(dickson_eval(kind, n, x, b) * zn)
        zn *= z
    rho = abs(z) * max(abs(u), abs(b / u))
    err = 2 * (N + 2) * rho ** (N + 1) / (1 - rho) ** 2 if rho < 1 else math.inf
    return EvalResult(acc.value, err, N + 1, False, math.inf, "gf_partial", N)
