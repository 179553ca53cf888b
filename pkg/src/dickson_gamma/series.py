"""Truncation policies, evaluation records and compensated summation.

Every double series in the package is summed through :func:`sum_outer`,
which consumes outer terms (each already an inner sum) in ascending order
and applies one of four truncation modes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from .errors import IncompatiblePolicyError, KernelConvergenceError, SeriesDivergenceError

MODES = ("terminating", "fixed_n", "tail_tolerance", "optimal_truncation")


@dataclass(frozen=True)
class TruncationPolicy:
    """How an infinite double series is cut off.

    ``max_n`` bounds the outer index.  ``tol`` is the relative tail target in
    ``tail_tolerance`` mode and the negligibility threshold in
    ``optimal_truncation`` mode (a term below ``tol * |partial sum|`` can no
    longer change the double-precision result).
    """

    mode: str = "tail_tolerance"
    max_n: int = 2000
    tol: float = 1e-16

    def __post_init__(self):
        if self.mode not in MODES:
            raise IncompatiblePolicyError(f"unknown truncation mode {self.mode!r}")
        if self.max_n < 1:
            raise IncompatiblePolicyError("max_n must be >= 1")
        if not self.tol > 0:
            raise IncompatiblePolicyError("tol must be positive")

    @classmethod
    def terminating(cls, max_n: int = 2000) -> "TruncationPolicy":
        return cls("terminating", max_n, 1e-16)

    @classmethod
    def fixed(cls, n: int) -> "TruncationPolicy":
        return cls("fixed_n", n, 1e-16)

    @classmethod
    def tail(cls, tol: float = 1e-16, max_n: int = 2000) -> "TruncationPolicy":
        return cls("tail_tolerance", max_n, tol)

    @classmethod
    def optimal(cls, max_n: int = 400, tol: float = 2.0**-60) -> "TruncationPolicy":
        return cls("optimal_truncation", max_n, tol)

    def to_dict(self) -> dict:
        return {"mode": self.mode, "max_n": self.max_n, "tol": self.tol}

    @classmethod
    def from_dict(cls, d: dict) -> "TruncationPolicy":
        return cls(d.get("mode", "tail_tolerance"), int(d.get("max_n", 2000)), float(d.get("tol", 1e-16)))


@dataclass
class EvalResult:
    """Value of a series (or kernel) evaluation plus its diagnostics."""

    value: complex
    abs_err_estimate: float = 0.0
    terms_used: int = 0
    terminated: bool = False
    smallest_term: float = math.inf
    method: str = ""
    stop_index: Optional[int] = None
    diagnostics: dict = field(default_factory=dict)


class CompensatedSum:
    """Neumaier-compensated running sum of complex values.

    Real and imaginary parts carry independent correction terms, so the
    result does not depend on how terms were grouped beyond their order.
    """

    __slots__ = ("_re", "_im", "_cre", "_cim")

    def __init__(self):
        self._re = 0.0
        self._im = 0.0
        self._cre = 0.0
        self._cim = 0.0

    @staticmethod
    def _step(s, c, x):
        t = s + x
        if abs(s) >= abs(x):
            c += (s - t) + x
        else:
            c += (x - t) + s
        return t, c

    def add(self, z):
        z = complex(z)
        self._re, self._cre = self._step(self._re, self._cre, z.real)
        self._im, self._cim = self._step(self._im, self._cim, z.imag)

    @property
    def value(self) -> complex:
        return complex(self._re + self._cre, self._im + self._cim)


def csum(values: Iterable[complex]) -> complex:
    acc = CompensatedSum()
    for v in values:
        acc.add(v)
    return acc.value


def sum_outer(
    term: Callable[[int], complex],
    policy: TruncationPolicy,
    support: Optional[int] = None,
    divergence_check: bool = True,
) -> EvalResult:
    """Sum ``term(0) + term(1) + ...`` under ``policy``.

    ``support`` is the last outer index with a nonzero term when the series
    terminates; it is required for ``terminating`` mode.

    In ``optimal_truncation`` mode the sum stops *before* the smallest outer
    term found within ``max_n`` (leading structural zeros are skipped) and
    that term's magnitude becomes the error estimate.  Scanning also stops
    once a term is negligible against the partial sum, or once terms stop
    being finite.

    ``divergence_check`` makes ``tail_tolerance`` raise once terms grow three
    times in a row past their minimum.  Turn it off for series known to
    converge whose terms rise before they decay.
    """
    mode = policy.mode
    if mode == "terminating":
        if support is None:
            raise IncompatiblePolicyError("terminating mode needs a series with finite support")
        acc = CompensatedSum()
        smallest = math.inf
        for n in range(support + 1):
            t = term(n)
            acc.add(t)
            if t != 0:
                smallest = min(smallest, abs(t))
        return EvalResult(acc.value, 0.0, support + 1, True, smallest, "terminating", support)

    if mode == "fixed_n":
        acc = CompensatedSum()
        smallest = math.inf
        last = 0.0
        for n in range(policy.max_n + 1):
            t = term(n)
            acc.add(t)
            last = abs(t)
            if t != 0:
                smallest = min(smallest, last)
        done = support is not None and support <= policy.max_n
        err = 0.0 if done else last
        return EvalResult(acc.value, err, policy.max_n + 1, done, smallest, "fixed_n", policy.max_n)

    if mode == "tail_tolerance":
        return _sum_tail(term, policy, support, divergence_check)
    return _sum_optimal(term, policy, support)


def _sum_tail(term, policy, support, divergence_check=True):
    acc = CompensatedSum()
    smallest = math.inf
    quiet = 0
    growth = 0
    prev = None
    last_n = policy.max_n if support is None else min(policy.max_n, support)
    for n in range(last_n + 1):
        t = term(n)
        mag = abs(t)
        if not math.isfinite(mag):
            raise SeriesDivergenceError(f"outer term {n} is not finite")
        acc.add(t)
        if mag != 0:
            if prev is not None and mag > prev and mag > smallest:
                growth += 1
            else:
                growth = 0
            smallest = min(smallest, mag)
            prev = mag
        s = abs(acc.value)
        if mag <= policy.tol * s:
            quiet += 1
        else:
            quiet = 0
        if divergence_check and growth >= 3 and smallest > policy.tol * s:
            raise SeriesDivergenceError(
                f"outer terms grew three times in a row after the smallest term "
                f"({smallest:.3e}) at n={n}; use optimal_truncation for this regime"
            )
        if quiet >= 3:
            return EvalResult(acc.value, mag, n + 1, False, smallest, "tail_tolerance", n)
    if support is not None and support <= policy.max_n:
        return EvalResult(acc.value, 0.0, support + 1, True, smallest, "tail_tolerance", support)
    raise KernelConvergenceError(
        f"tail tolerance {policy.tol:g} not reached within max_n={policy.max_n}"
    )


def _sum_optimal(term, policy, support):
    terms = []
    mags = []
    first = None
    best = None
    stop = None
    acc = CompensatedSum()
    last_n = policy.max_n if support is None else min(policy.max_n, support + 1)
    for n in range(last_n + 1):
        t = term(n)
        mag = abs(t)
        if not math.isfinite(mag):
            break
        terms.append(t)
        mags.append(mag)
        if first is None:
            if mag == 0:
                continue
            first = n
        elif mag <= policy.tol * abs(acc.value):
            stop = n
            break
        if best is None or mag < mags[best]:
            best = n
        # factorial growth never returns below a minimum it has left this far behind
        if mag > 1e40 * mags[best] and n > best + 3:
            break
        acc.add(t)
    if first is None:
        return EvalResult(0j, 0.0, len(mags), True, 0.0, "optimal_truncation", len(mags))
    if stop is None:
        stop = best
    total = csum(terms[:stop])
    smallest = mags[stop] if stop < len(mags) else 0.0
    done = support is not None and stop > support
    return EvalResult(total, smallest, stop, done, smallest, "optimal_truncation", stop)
