"""Contour-integral oracle for the power and incomplete-gamma kernels.

The integrals here never call the incomplete gamma code, so agreement
between :func:`incomplete_contour` and :func:`incomplete_closed_form` is an
independent check of that kernel.

Contours
--------
``hankel_loop``
    For integer ``k`` a circle about the origin.  Otherwise the parabola
    ``w(u) = mu (1 + i u)^2``, which wraps the negative real axis (the cut of
    ``w^(-k-1)``) from below to above; its integrand decays like
    ``exp(-mu u^2)`` so the trapezoid rule converges geometrically.  When
    the pole ``w = -x`` sits on or near that axis (real ``x > 0``) the loop
    and the cut are turned together by a small angle.
``vertical_line``
    The Bromwich line ``Re w = offset > 0`` truncated at
    ``|Im w| = 40 (1 + |k|)``.  The pole at ``w = -x`` lies left of the line
    and is removed by its residue.  Only algebraic decay is available, so
    the truncation tail is bounded explicitly.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .complex_gamma import (
    as_complex,
    continue_upper,
    gamma,
    is_integer,
    principal_log,
    principal_power,
)
from .errors import DiscretizationError, DomainError, PoleProximityError

KINDS = ("hankel_loop", "vertical_line")


@dataclass(frozen=True)
class ContourSpec:
    kind: str = "hankel_loop"
    radius: float = 1.0
    offset: float = 0.5
    node_count: int = 64

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown contour kind {self.kind!r}")
        if not self.radius > 0:
            raise DomainError("contour radius must be positive")
        if self.node_count < 16 or self.node_count % 2:
            raise DomainError("node_count must be even and at least 16")


DEFAULT_CONTOUR = ContourSpec()


def _np_power(w: np.ndarray, p: complex) -> np.ndarray:
    # numpy's complex log has the same principal branch as cmath
    return np.exp(p * np.log(w))


def _doubling(estimate, n0: int, tol: float, max_doublings: int, what: str):
    prev = estimate(n0)
    n = n0
    for _ in range(max_doublings):
        n *= 2
        cur = estimate(n)
        if abs(cur - prev) <= tol * max(abs(cur), 1e-300):
            return cur
        prev = cur
    raise DiscretizationError(
        f"{what}: node doubling still moves the result by {abs(cur - prev):.3e} at {n} nodes"
    )


# ------------------------------------------------------------ power kernel


def _circle_nodes(radius: float, n: int) -> np.ndarray:
    theta = 2.0 * np.pi * np.arange(n) / n
    return radius * np.exp(1j * theta)


def _hankel_nodes(mu: float, n: int, umax: float):
    u = np.linspace(-umax, umax, n + 1)
    h = u[1] - u[0]
    w = mu * (1.0 + 1j * u) ** 2
    dw = 2j * mu * (1.0 + 1j * u)
    weights = np.full(u.shape, h)
    weights[0] = weights[-1] = 0.5 * h
    return w, dw * weights


def cauchy_kernel_estimate(k, y, c: ContourSpec, n: int) -> complex:
    """One trapezoid estimate of ``(1/2 pi i) int exp(w y) w^(-k-1) dw``."""
    k = as_complex(k)
    y = as_complex(y)
    if is_integer(k):
        w = _circle_nodes(c.radius, n)
        vals = np.exp(w * y) * w ** (-int(k.real))
        return complex(np.mean(vals))
    # t = w y maps the loop onto the standard Hankel parabola in t
    mu = c.radius
    umax = math.sqrt(1.0 + 46.0 / mu)
    t, dt = _hankel_nodes(mu, n, umax)
    vals = np.exp(t) * _np_power(t, -k - 1.0) * dt
    return principal_power(y, k) * complex(np.sum(vals)) / (2j * math.pi)


def cauchy_kernel(k, y, c: Optional[ContourSpec] = None, tol: float = 1e-11, max_doublings: int = 10) -> complex:
    """Quadrature value of ``y^k / Gamma(k+1)``."""
    c = c or DEFAULT_CONTOUR
    k = as_complex(k)
    y = as_complex(y)
    if y == 0 and not is_integer(k):
        if k.real > 0:
            return 0j
        raise DomainError("y = 0 needs Re(k) > 0 or integer k")
    return _doubling(lambda n: cauchy_kernel_estimate(k, y, c, n), c.node_count, tol, max_doublings, "cauchy_kernel")


# ---------------------------------------------------- incomplete gamma kernel


def incomplete_closed_form(a, x, k) -> complex:
    """``a^(-x) (-x)^(-k-1) Gamma(k+1, -x log a) / Gamma(k+1)`` from the kernels.

    The incomplete gamma is taken on the sheet where
    ``arg(-x log a) = arg(-x) + arg(log a)``, so the only cut is the one of
    ``(-x)^(-k-1)``.  This agrees with the all-principal expression unless
    that sum leaves ``(-pi, pi]``.
    """
    a = as_complex(a)
    x = as_complex(x)
    k = as_complex(k)
    log_a = principal_log(a)
    z = -x * log_a
    if z == 0:
        g = 1.0 + 0j
    else:
        turn = cmath.phase(as_complex(-x)) + cmath.phase(log_a) - cmath.phase(as_complex(z))
        g = continue_upper(k + 1, z, round(turn / (2 * math.pi))) / gamma(k + 1)
    return cmath.exp(-x * log_a) * principal_power(-x, -k - 1) * g


def _hankel_mu(x: complex, c: ContourSpec) -> float:
    # parabola w = mu (1+iu)^2 leaves -x outside iff mu < (|x| - Re x) / 2
    limit = 0.5 * (abs(x) - x.real)
    if limit <= 0:
        raise PoleProximityError(f"pole at w={-x} lies on the branch cut of w^(-k-1)")
    return min(c.radius, 0.5 * limit)


def _hankel_umax(mu: float, log_a: complex) -> float:
    re, im = log_a.real, abs(log_a.imag)
    if re <= 0:
        raise DomainError("Hankel loop needs |a| > 1 so that a^w decays along the cut")
    # mu re u^2 - 2 mu im u - (mu re + 46) >= 0
    A = mu * re
    B = mu * im
    return (B + math.sqrt(B * B + A * (A + 46.0))) / A


_ROTATIONS = (0.0, math.pi / 6, -math.pi / 6, math.pi / 4, -math.pi / 4, math.pi / 3, -math.pi / 3)


def _hankel_rotation(x: complex, log_a: complex) -> float:
    """Angle by which the loop (and the cut of w^(-k-1)) is turned.

    The cut then runs along ``arg w = pi + phi``.  A turn is usable when the
    principal argument of ``-x`` still lies inside ``(-pi + phi, pi + phi)``,
    so the rotated power agrees with the principal one at the pole, and when
    ``a^w`` still decays along the new cut.  Among usable turns the one that
    leaves the pole furthest from the loop wins.
    """
    arg_p = cmath.phase(as_complex(-x))
    best, best_gap = None, 0.0
    for phi in _ROTATIONS:
        if not (-math.pi + phi < arg_p < math.pi + phi):
            continue
        if (cmath.exp(1j * phi) * log_a).real <= 0.25 * abs(log_a):
            continue
        gap = abs(x) - (x * cmath.exp(-1j * phi)).real
        if gap > best_gap + 1e-12:
            best, best_gap = phi, gap
    if best is None:
        if log_a.real <= 0:
            raise DomainError("Hankel loop needs |a| > 1 so that a^w decays along the cut")
        raise PoleProximityError(f"no loop orientation separates the pole at w={-x} from the cut")
    return best


def incomplete_contour_estimate(a, x, k, c: ContourSpec, n: int) -> complex:
    """One trapezoid estimate of ``-(1/2 pi i) int a^w w^(-k-1) / (w + x) dw``."""
    a = as_complex(a)
    x = as_complex(x)
    k = as_complex(k)
    log_a = principal_log(a)
    if c.kind == "vertical_line":
        return _vertical_estimate(log_a, x, k, c, n)
    if is_integer(k):
        r = min(c.radius, 0.5 * abs(x))
        if abs(abs(x) - r) < r / 10:
            raise PoleProximityError("circle passes within radius/10 of the pole")
        w = _circle_nodes(r, n)
        vals = np.exp(w * log_a) * w ** (-int(k.real)) / (w + x)
        return -complex(np.mean(vals))
    phi = _hankel_rotation(x, log_a)
    rot = cmath.exp(1j * phi)
    # work in the frame w' = w / rot, where the loop wraps the negative axis
    xr = x / rot
    lr = log_a * rot
    mu = _hankel_mu(xr, c)
    umax = _hankel_umax(mu, lr)
    wr, dwr = _hankel_nodes(mu, n, umax)
    if np.min(np.abs(wr + xr)) < mu / 10:
        raise PoleProximityError("Hankel loop passes within radius/10 of the pole")
    # w^(-k-1) with the cut along arg w = pi + phi
    power = np.exp((-k - 1.0) * (np.log(wr) + 1j * phi))
    vals = np.exp(wr * lr) * power / (wr + xr) * dwr
    return -complex(np.sum(vals)) / (2j * math.pi)


def _vertical_estimate(log_a, x, k, c, n):
    if log_a.imag != 0 or log_a.real < 0:
        raise DomainError("vertical line needs real a >= 1")
    if not c.offset > 0:
        raise DomainError("vertical line must pass right of the origin")
    if abs(c.offset + x.real) < c.radius / 10:
        raise PoleProximityError("vertical line passes within radius/10 of the pole")
    if k.real <= -1:
        raise DomainError("vertical line needs Re(k) > -1 for the integrand to decay")
    vmax = 40.0 * (1.0 + abs(k))
    # |integrand| <= a^c |v|^(-Re k - 2) beyond vmax
    tail = 2.0 * math.exp(c.offset * log_a.real) * vmax ** (-k.real - 1.0) / ((k.real + 1.0) * 2 * math.pi)
    v = np.linspace(-vmax, vmax, n + 1)
    h = v[1] - v[0]
    w = c.offset + 1j * v
    vals = np.exp(w * log_a) * _np_power(w, -k - 1.0) / (w + x) * 1j
    vals[0] *= 0.5
    vals[-1] *= 0.5
    line = -complex(np.sum(vals)) * h / (2j * math.pi)
    residue = 0j
    if -x.real < c.offset:
        residue = cmath.exp(-x * log_a) * principal_power(-x, -k - 1)
    return complex(line + residue), tail


def incomplete_contour(a, x, k, c: Optional[ContourSpec] = None, tol: float = 1e-10, max_doublings: int = 10) -> complex:
    """Quadrature value of ``-(1/2 pi i) int_C a^w w^(-k-1) / (w + x) dw``.

    ``C`` encircles the origin and keeps the pole at ``w = -x`` outside; the
    result should match :func:`incomplete_closed_form`.
    """
    c = c or DEFAULT_CONTOUR
    if c.kind == "vertical_line":
        def est(n):
            val, tail = incomplete_contour_estimate(a, x, k, c, n)
            if tail > tol * max(abs(val), 1e-300):
                raise DiscretizationError(
                    f"vertical line truncation tail {tail:.2e} exceeds the requested tolerance"
                )
            return val
        return _doubling(est, c.node_count, tol, max_doublings, "incomplete_contour")
    return _doubling(
        lambda n: incomplete_contour_estimate(a, x, k, c, n), c.node_count, tol, max_doublings, "incomplete_contour"
    )


def doubling_deltas(estimate, n0: int = 64, steps: int = 6) -> list:
    """``|I(2N) - I(N)|`` for ``N = n0, 2 n0, ...``; used to study convergence."""
    out = []
    prev = estimate(n0)
    n = n0
    for _ in range(steps):
        n *= 2
        cur = estimate(n)
        if isinstance(cur, tuple):
            cur = cur[0]
        if isinstance(prev, tuple):
            prev = prev[0]
        out.append(abs(cur - prev))
        prev = cur
    return out
