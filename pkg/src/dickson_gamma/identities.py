"""Both sides of the Dickson / incomplete-gamma double-series identities.

Every left-hand side is a double sum over ``n >= 0`` (outer) and
``0 <= j <= n // 2`` (inner).  Writing ``m = n - 2j`` each summand factors as

    weight(n, j) * A[m] * B[j]     or     weight(n, j) * A[m] * P[n]

where ``A``, ``B``, ``P`` are sequences built by one multiplication per
index (Pochhammer and gamma factors times the matching powers).  Building
them that way keeps every factor on the scale of the final term, so
``Gamma(n - k)`` growth never overflows on its own.

Regimes
-------
``terminating``
    T1, T4, T7, T8 at integer ``k >= 1``: ``(1-k)_{n-1}`` vanishes for
    ``n > k``, leaving a finite sum.
``convergent``
    T2, T5 (geometric in ``j`` with ratio ``|alpha z^2|``), T3, T6
    (geometric in ``n`` with ratio ``|x z|``) at integer ``k >= 1``, and EX2.
``asymptotic``
    Everything else.  Terms eventually grow factorially, so only
    optimal truncation gives a meaningful value.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

from .complex_gamma import (
    as_complex,
    continue_upper,
    gamma,
    is_integer,
    is_nonpositive_integer,
    principal_power,
    upper_incomplete_scaled,
)
from .errors import (
    BranchAmbiguityError,
    DicksonGammaError,
    DomainError,
    IncompatiblePolicyError,
    PoleError,
    SingularConfigurationError,
)
from .series import CompensatedSum, EvalResult, TruncationPolicy, sum_outer

SIGNATURES: Dict[str, Tuple[str, ...]] = {
    "T1": ("k", "a", "alpha", "x"),
    "T2": ("k", "a", "alpha", "z"),
    "T3": ("k", "a", "x", "z"),
    "T4": ("k", "a", "alpha", "x"),
    "T5": ("k", "a", "alpha", "z"),
    "T6": ("k", "a", "x", "z"),
    "T7": ("k", "a", "b", "u"),
    "T8": ("k", "a", "beta", "y"),
    "P1": ("k", "a", "x"),
    "P2": ("k", "a", "alpha", "z"),
    "P3": ("k", "a", "x", "z"),
    "GQ": ("k", "a", "x", "z"),
    "EX1": ("k", "a", "x", "z"),
    "EX2": ("a", "alpha", "z"),
}
CASE_IDS = tuple(SIGNATURES)

# T7: exponent of (b/u + u) in the summand.  "-2j" with the (-w/a)^n factor
# is the form that reproduces the closed form; the others are kept as
# negative controls.
# T8: "negated" flips the overall sign of the printed closed form.
VARIANTS = {"T7": ("-2j", "2-j", "n-2j"), "T8": ("negated", "printed")}
DEFAULT_VARIANT = {"T7": "-2j", "T8": "negated"}

EX1_PARAMS = {"k": 0.5, "a": 2.0, "x": 0.5, "z": 1.0 / 3.0}

REL_EPS = 1e-30


@dataclass(frozen=True)
class IdentityCase:
    id: str
    params: Dict[str, complex]
    variant: Optional[str] = None

    def __post_init__(self):
        if self.id not in SIGNATURES:
            raise DomainError(f"unknown case id {self.id!r}")
        params = dict(self.params)
        if self.id == "EX1":
            params = {**EX1_PARAMS, **params}
        need = set(SIGNATURES[self.id])
        got = set(params)
        if got != need:
            missing = sorted(need - got)
            extra = sorted(got - need)
            raise DomainError(f"{self.id} takes {SIGNATURES[self.id]}; missing {missing}, unexpected {extra}")
        object.__setattr__(self, "params", {k: as_complex(v) for k, v in params.items()})
        if self.variant is None:
            object.__setattr__(self, "variant", DEFAULT_VARIANT.get(self.id))
        elif self.variant not in VARIANTS.get(self.id, ()):
            raise DomainError(f"{self.id} has no variant {self.variant!r}")

    def __getitem__(self, name: str) -> complex:
        return self.params[name]

    def to_dict(self) -> dict:
        d = {"id": self.id, "params": dict(self.params)}
        if self.variant is not None:
            d["variant"] = self.variant
        return d


def make_case(case_id: str, variant: Optional[str] = None, **params) -> IdentityCase:
    return IdentityCase(case_id, params, variant)


# ------------------------------------------------------------------ regimes


def _positive_int(k: complex) -> Optional[int]:
    if is_integer(k) and k.real >= 1:
        return int(k.real)
    return None


def regime(case: IdentityCase) -> str:
    """``terminating``, ``convergent`` or ``asymptotic``."""
    if case.id == "EX2":
        return "convergent"
    if case.id in ("P1", "P2", "P3", "GQ", "EX1"):
        return "asymptotic"
    if _positive_int(case["k"]) is None:
        return "asymptotic"
    if case.id in ("T1", "T4", "T7", "T8"):
        return "terminating"
    return "convergent"


def support(case: IdentityCase) -> Optional[int]:
    """Last outer index with a nonzero term, or ``None`` for infinite series."""
    if regime(case) == "terminating":
        return _positive_int(case["k"])
    return None


def check_policy(case: IdentityCase, policy: TruncationPolicy):
    if policy.mode == "terminating" and regime(case) != "terminating":
        raise IncompatiblePolicyError(
            f"{case.id} with k={case.params.get('k')} is {regime(case)}; terminating mode needs "
            "a vanishing Pochhammer family (integer k >= 1 in T1/T4/T7/T8)"
        )


def default_policy(case: IdentityCase) -> TruncationPolicy:
    r = regime(case)
    if r == "terminating":
        return TruncationPolicy.terminating()
    if r == "convergent":
        return TruncationPolicy.tail(1e-17, 2000)
    return TruncationPolicy.optimal()


# ------------------------------------------------------------- sequences


class _Seq:
    """``s[0] = first``, ``s[i+1] = s[i] * step(i)``, grown on demand.

    Once an entry is exactly zero every later entry is zero as well, which
    is what makes the terminating series end exactly.
    """

    __slots__ = ("_v", "_step")

    def __init__(self, first: complex, step: Callable[[int], complex]):
        self._v = [complex(first)]
        self._step = step

    def __getitem__(self, i: int) -> complex:
        v = self._v
        while len(v) <= i:
            prev = v[-1]
            v.append(0j if prev == 0 else prev * self._step(len(v) - 1))
        return v[i]


def _pow_seq(base: complex) -> _Seq:
    return _Seq(1.0, lambda i: base)


def _poch_seq(c: complex, scale: complex) -> _Seq:
    """``(c)_{i-1} * scale^i`` for ``i >= 0``."""
    if c - 1 == 0:
        raise PoleError(f"({c})_(-1) = 1/({c}-1) is infinite")
    return _Seq(1.0 / (c - 1), lambda i: (c + i - 1) * scale)


def _gamma_seq(c: complex, scale: complex) -> _Seq:
    """``Gamma(c + i) * scale^i`` for ``i >= 0``."""
    if is_nonpositive_integer(c):
        raise SingularConfigurationError(f"Gamma({c.real:g}) pole in the series coefficients")
    return _Seq(gamma(c), lambda i: (c + i) * scale)


def _binom(n: int, j: int) -> float:
    try:
        return float(math.comb(n - j, j))
    except OverflowError:
        return math.inf


def _ratio(n: int, j: int) -> float:
    # n/(n-j) with the n = 0 summand taken as 0 (the removable 0/0)
    return 0.0 if n == 0 else n / (n - j)


def _inner(n: int, f: Callable[[int], complex]) -> complex:
    acc = CompensatedSum()
    for j in range(n // 2 + 1):
        acc.add(f(j))
    return acc.value


def _nonzero(name: str, v: complex, why: str):
    if v == 0:
        raise SingularConfigurationError(f"{why}: {name} must be nonzero")


# ------------------------------------------------------------ LHS terms


def _term_function(case: IdentityCase) -> Callable[[int], complex]:
    """Outer term ``n -> sum_j summand(n, j)`` for the left-hand side."""
    p = case.params
    cid = case.id
    a = p.get("a")
    if a is not None and cid != "EX2":
        _nonzero("a", a, cid)
    k = p.get("k")

    if cid in ("T1", "T4", "T7", "T8"):
        # P[n] = (1-k)_{n-1} (-1/a)^n
        P = _poch_seq(1 - k, -1.0 / a)
        if cid in ("T1", "T4"):
            base, s = -p["alpha"], p["x"]
        elif cid == "T7":
            _nonzero("u", p["u"], "T7")
            base, s = -p["b"], p["b"] / p["u"] + p["u"]
        else:
            _nonzero("y", p["y"], "T8")
            base, s = -p["beta"], p["beta"] / p["y"] + p["y"]
        B = _pow_seq(base)
        A = _pow_seq(s)
        if cid in ("T1",):
            return lambda n: P[n] * _inner(n, lambda j: _ratio(n, j) * _binom(n, j) * B[j] * A[n - 2 * j])
        if cid in ("T4", "T8"):
            return lambda n: P[n] * _inner(n, lambda j: _binom(n, j) * B[j] * A[n - 2 * j])
        if case.variant == "-2j":
            return lambda n: P[n] * _inner(n, lambda j: _ratio(n, j) * _binom(n, j) * B[j] * A[n - 2 * j])
        W = _pow_seq(s)
        if case.variant == "n-2j":
            return lambda n: P[n] * W[n] * _inner(n, lambda j: _ratio(n, j) * _binom(n, j) * B[j] * A[n - 2 * j])
        # "2-j"
        _nonzero("b/u + u", s, "T7 variant 2-j")
        return lambda n: P[n] * W[n] * _inner(
            n, lambda j: _ratio(n, j) * _binom(n, j) * B[j] * principal_power(s, 2 - j)
        )

    if cid in ("T2", "T5"):
        al, z = p["alpha"], p["z"]
        Q = _poch_seq(1 - k, -z / a)  # (1-k)_{m-1} (-z/a)^m
        B = _pow_seq(-al * z * z)
        if cid == "T2":
            return lambda n: _inner(n, lambda j: _ratio(n, j) * _binom(n, j) * B[j] * Q[n - 2 * j])
        return lambda n: _inner(n, lambda j: _binom(n, j) * B[j] * Q[n - 2 * j])

    if cid in ("T3", "T6", "P3"):
        x, z = p["x"], p["z"]
        R = _poch_seq(1 - k, z * z / a)  # (1-k)_{j-1} (z^2/a)^j
        S = _pow_seq(x * z)
        if cid == "T6":
            return lambda n: _inner(n, lambda j: _binom(n, j) * R[j] * S[n - 2 * j])
        return lambda n: _inner(n, lambda j: _ratio(n, j) * _binom(n, j) * R[j] * S[n - 2 * j])

    if cid == "P1":
        x = p["x"]
        G = _gamma_seq(-k, -x / a)  # Gamma(n-k) (-x/a)^n
        q = (x / a) ** 2
        c2 = 2 * a - k * x

        def p1(n):
            c1 = a * (k - n) * q
            return G[n] * _inner(n, lambda j: (-0.25) ** j * (c1 + _ratio(n, j) * c2) * _binom(n, j))

        return p1

    if cid == "P2":
        al, z = p["alpha"], p["z"]
        H = _gamma_seq(-k, -z / a)  # Gamma(m-k) (-z/a)^m
        B = _pow_seq(-al * z * z)
        u1 = z * (1 - z * z * al)
        u2 = a * (1 + z * z * al)

        def p2(n):
            return _inner(
                n,
                lambda j: B[j] * H[n - 2 * j] * _binom(n, j) * (-(2 * j + k - n) * u1 + _ratio(n, j) * u2),
            )

        return p2

    if cid == "EX2":
        al, z = p["alpha"], p["z"]
        ea = cmath.exp(-a)
        B = _pow_seq(-al * z * z)  # (-e^{2a} alpha)^j (e^{-a} z)^{2j}
        c = -ea * z
        # (0)_{m-1} (-e^{-a} z)^m is -1, c, 0, 0, ... for m = 0, 1, 2, ...
        A = [-1.0 + 0j, c]

        def ex2(n):
            if n == 0:
                return 0j
            w = (1.0 - 2.0 ** (-n - 1)) * n * z / (n + 1)
            acc = CompensatedSum()
            for j in range((n - 1) // 2, n // 2 + 1):
                m = n - 2 * j
                if 0 <= m <= 1:
                    acc.add(w * B[j] * A[m] * _binom(n, j) / (n - j))
            return acc.value

        return ex2

    raise DomainError(f"{cid} has no single left-hand series; see gamma_quotient")


def outer_terms(case: IdentityCase, N: int) -> List[complex]:
    """Outer terms ``0..N`` of the left-hand side (or GQ numerator/denominator pairs)."""
    if case.id in ("GQ", "EX1"):
        num, den = _gq_term_functions(case)
        return [(num(n), den(n)) for n in range(N + 1)]
    t = _term_function(case)
    return [t(n) for n in range(N + 1)]


def lhs_series(case: IdentityCase, policy: Optional[TruncationPolicy] = None) -> EvalResult:
    """Left-hand double series under ``policy``.

    GQ and EX1 return the gamma quotient.
    """
    policy = policy or default_policy(case)
    check_policy(case, policy)
    if case.id in ("GQ", "EX1"):
        p = case.params
        return gamma_quotient(p["k"], p["a"], p["x"], p["z"], policy)
    reg = regime(case)
    res = sum_outer(_term_function(case), policy, support(case), divergence_check=reg == "asymptotic")
    res.diagnostics["regime"] = reg
    return res


# ------------------------------------------------------ gamma quotient


def _gq_term_functions(case: IdentityCase):
    p = case.params
    k, a, x, z = p["k"], p["a"], p["x"], p["z"]
    _nonzero("a", a, case.id)
    _nonzero("x", x, case.id)
    if is_integer(k) and k.real <= 1:
        raise SingularConfigurationError("Gamma(k - 1) pole: k must not be an integer <= 1")
    s = z * z / a
    G = _gamma_seq(k - 1, s)  # Gamma(j-1+k) (z^2/a)^j
    K = _poch_seq(k, s)  # (k)_{j-1} (z^2/a)^j
    S = _pow_seq(x * z)
    ax = a * x

    def num(n):
        return _inner(n, lambda j: _binom(n, j) * G[j] * S[n - 2 * j] * (ax + 2 * (j - 1 + k) * z))

    def den(n):
        return _inner(n, lambda j: _ratio(n, j) * _binom(n, j) * K[j] * S[n - 2 * j])

    return num, den


def gamma_quotient(k, a, x, z, policy: Optional[TruncationPolicy] = None) -> EvalResult:
    """``Gamma(k)`` as ``(z/a) * N / D`` with both double series truncated separately.

    The relative errors of numerator and denominator (their smallest-term
    records under optimal truncation) are added.  At ``z = 0`` every term
    of ``D`` vanishes; the limit is then the ratio of the leading terms of
    ``N`` and ``D/z``, which is ``Gamma(k)`` exactly.
    """
    case = IdentityCase("GQ", {"k": k, "a": a, "x": x, "z": z})
    policy = policy or TruncationPolicy.optimal()
    num, den = _gq_term_functions(case)
    k, a, x, z = (case[s] for s in ("k", "a", "x", "z"))
    if z == 0:
        lead_num = a * x * gamma(k - 1)
        lead_den = x / (k - 1)
        return EvalResult(lead_num / (a * lead_den), 0.0, 2, True, 0.0, "gamma_quotient", 1)
    rn = sum_outer(num, policy)
    rd = sum_outer(den, policy)
    if rd.value == 0:
        raise PoleError("gamma quotient denominator sums to zero")
    q = (z / a) * rn.value / rd.value
    err = abs(q) * (rn.abs_err_estimate / max(abs(rn.value), 1e-300) + rd.abs_err_estimate / abs(rd.value))
    return EvalResult(
        q,
        err,
        max(rn.terms_used, rd.terms_used),
        rn.terminated and rd.terminated,
        max(rn.smallest_term, rd.smallest_term),
        "gamma_quotient",
        rn.stop_index,
        {"numerator": rn, "denominator": rd},
    )


def gamma_quotient_partials(k, a, x, z, N: int) -> List[Tuple[complex, complex, complex]]:
    """``(num_N, den_N, quotient_N)`` partial sums for ``N = 0..N``.

    The quotient is ``nan`` while the denominator partial sum is zero.
    """
    case = IdentityCase("GQ", {"k": k, "a": a, "x": x, "z": z})
    num, den = _gq_term_functions(case)
    pre = case["z"] / case["a"]
    sn, sd = CompensatedSum(), CompensatedSum()
    out = []
    for n in range(N + 1):
        sn.add(num(n))
        sd.add(den(n))
        d = sd.value
        q = pre * sn.value / d if d != 0 else complex(math.nan, math.nan)
        out.append((sn.value, d, q))
    return out


# ------------------------------------------------------------ RHS forms


def _upper_scaled(s, z, winding: int) -> complex:
    """``exp(z) Gamma(s, z)``, optionally after ``z`` winds ``winding`` times."""
    if winding == 0:
        return upper_incomplete_scaled(s, z)
    return cmath.exp(z) * continue_upper(s, z, winding)


def _pw(b, e) -> complex:
    return principal_power(b, e)


def _rhs_T14(case: IdentityCase, winding: int) -> complex:
    k, a, al, x = case["k"], case["a"], case["alpha"], case["x"]
    _nonzero("alpha", al, case.id)
    d = x * x - 4 * al
    if abs(d) <= 1e-8:
        raise SingularConfigurationError(f"{case.id} needs |x^2 - 4 alpha| > 1e-8 (double root)")
    r = cmath.sqrt(d)
    # both closed forms are symmetric under r -> -r; pick the sign that avoids cancellation in x - r
    if (x.conjugate() * r).real < 0:
        r = -r
    P = (x + r) / al
    m = 4.0 / (x + r)
    pre = _pw(2.0 / a, k)
    if case.id == "T1":
        t1 = _upper_scaled(k, a * m / 2, winding) / _pw(m, k)
        t2 = _upper_scaled(k, a * P / 2, winding) / _pw(P, k)
        return -pre * (t1 + t2)
    t1 = _upper_scaled(k + 1, a * m / 2, winding) / _pw(m, k + 1)
    t2 = _upper_scaled(k + 1, a * P / 2, winding) / _pw(P, k + 1)
    return -pre * 2.0 / (r * k) * (t1 - t2)


def _rhs_T25(case: IdentityCase, winding: int) -> complex:
    k, a, al, z = case["k"], case["a"], case["alpha"], case["z"]
    _nonzero("z", z, case.id)
    c = 1 + z * z * al
    if c == 0:
        raise SingularConfigurationError(f"{case.id} needs 1 + z^2 alpha != 0")
    q = 1.0 / z + z * al
    _nonzero("1/z + z alpha", q, case.id)
    if case.id == "T2":
        num = k * (z * z * al - 1) * _upper_scaled(k, q * a, winding) + 2 * z * z * al * _pw(q * a, k)
        return num / (_pw(a, k) * _pw(q, k) * c * k)
    return -_upper_scaled(1 + k, q * a, winding) / (_pw(a, k) * _pw(q, k) * c * k)


def _rhs_T36(case: IdentityCase, winding: int) -> complex:
    k, a, x, z = case["k"], case["a"], case["x"], case["z"]
    _nonzero("z", z, case.id)
    if x * z == 1:
        raise SingularConfigurationError(f"{case.id} needs x z != 1")
    q = (x * z - 1) / (z * z)
    den = _pw(a, k) * _pw(q, k + 1) * k * z * z
    if case.id == "T3":
        num = x * z * _upper_scaled(1 + k, a * q, winding) - 2 * k * (x * z - 1) * _upper_scaled(k, a * q, winding)
        return num / den
    return _upper_scaled(1 + k, a * q, winding) / den


def _rhs_T7(case: IdentityCase, winding: int) -> complex:
    k, a, b, u = case["k"], case["a"], case["b"], case["u"]
    _nonzero("u", u, "T7")
    _nonzero("b", b, "T7")
    t0 = 2 * _pw(a / b, k)
    t1 = _pw(u / b, k) * _upper_scaled(1 + k, a / u, winding)
    t2 = _pw(u, -k) * _upper_scaled(1 + k, a * u / b, winding)
    return _pw(b / a, k) * (t0 - t1 - t2) / k


def _rhs_T8(case: IdentityCase, winding: int) -> complex:
    k, a, be, y = case["k"], case["a"], case["beta"], case["y"]
    _nonzero("beta", be, "T8")
    _nonzero("y", y, "T8")
    if y * y == be:
        raise SingularConfigurationError("T8 needs y^2 != beta")
    t1 = _pw(y, k + 2) * _upper_scaled(1 + k, a / y, winding)
    t2 = _pw(be / y, k) * be * _upper_scaled(1 + k, y * a / be, winding)
    v = (t1 - t2) / (_pw(a, k) * k * (y * y - be))
    return -v if case.variant == "negated" else v


def _p3_rhs_terms(case: IdentityCase) -> Callable[[int], complex]:
    k, a, x, z = case["k"], case["a"], case["x"], case["z"]
    if is_integer(k) and k.real >= 0:
        raise SingularConfigurationError("Gamma(j - k) pole: k must not be a nonnegative integer")
    G = _gamma_seq(-k, z * z / a)  # Gamma(j-k) (z^2/a)^j
    S = _pow_seq(x * z)
    pre = z / (a * gamma(1 - k))
    ax = a * x

    def t(n):
        return pre * _inner(n, lambda j: _binom(n, j) * G[j] * S[n - 2 * j] * (ax + 2 * (j - k) * z))

    return t


def ex2_rhs(a, alpha, z) -> complex:
    """Closed form of the exponential double product (principal branches)."""
    a, al, z = as_complex(a), as_complex(alpha), as_complex(z)
    _nonzero("alpha", al, "EX2")
    c = cmath.exp(-a) / al
    s = cmath.sqrt(al)
    num = al * z * z + 1j * s * z + 2
    den = al * z * z - 1j * s * z + 2
    if den == 0 or num == 0:
        raise SingularConfigurationError("EX2 needs alpha z^2 +- i sqrt(alpha) z + 2 != 0")
    ratio = num / den
    if abs(cmath.phase(ratio)) > math.pi / 2:
        raise BranchAmbiguityError(
            f"arg of the quotient raised to i/sqrt(alpha) is {cmath.phase(ratio):.3f}, beyond the pi/2 guard"
        )
    q = al * z * z + 4
    _nonzero("alpha z^2 + 4", q, "EX2")
    e = z - 3 * cmath.exp(-a) * z * z / (al * al * z**4 + 5 * al * z * z + 4)
    return cmath.exp(c * math.log(2.0)) * _pw(ratio, 1j / s) * cmath.exp(e) * _pw(1 - 3 / q, c / 2)


def _check_common(case: IdentityCase):
    if "k" in case.params and case.id not in ("GQ", "EX1", "P3"):
        if case.id in ("P1",):
            if is_integer(case["k"]) and case["k"].real >= 1:
                raise SingularConfigurationError("Gamma(1 - k) pole: k must not be a positive integer")
        elif case.id == "P2":
            if is_integer(case["k"]) and case["k"].real >= 0:
                raise SingularConfigurationError("Gamma(-k) pole: k must not be a nonnegative integer")
        else:
            _nonzero("k", case["k"], case.id)
    if "a" in case.params and case.id != "EX2":
        _nonzero("a", case["a"], case.id)


def rhs_closed(case: IdentityCase, winding: int = 0) -> complex:
    """Right-hand side assembled from the kernels.

    ``winding`` re-evaluates every upper incomplete gamma after its argument
    circles the origin that many times (used for branch diagnosis).  For P3
    the right side is itself a series and is optimally truncated.
    """
    _check_common(case)
    cid = case.id
    if cid in ("T1", "T4"):
        return _rhs_T14(case, winding)
    if cid in ("T2", "T5"):
        return _rhs_T25(case, winding)
    if cid in ("T3", "T6"):
        return _rhs_T36(case, winding)
    if cid == "T7":
        return _rhs_T7(case, winding)
    if cid == "T8":
        return _rhs_T8(case, winding)
    if cid == "P1":
        return -2 * case["x"] * gamma(1 - case["k"])
    if cid == "P2":
        return -2 * case["a"] * case["z"] ** 2 * case["alpha"] * gamma(-case["k"])
    if cid == "P3":
        return rhs_series(case).value
    if cid in ("GQ", "EX1"):
        k = case["k"]
        if is_nonpositive_integer(k):
            raise SingularConfigurationError("Gamma(k) pole")
        return gamma(k)
    return ex2_rhs(case["a"], case["alpha"], case["z"])


def rhs_series(case: IdentityCase, policy: Optional[TruncationPolicy] = None) -> EvalResult:
    """P3's right-hand double series."""
    if case.id != "P3":
        raise DomainError("only P3 has a series on the right-hand side")
    _nonzero("a", case["a"], "P3")
    return sum_outer(_p3_rhs_terms(case), policy or TruncationPolicy.optimal())


def double_product(a, alpha, z, policy: Optional[TruncationPolicy] = None) -> Tuple[complex, complex]:
    """``(exp(LHS log-sum), RHS)`` of the exponential double product."""
    case = IdentityCase("EX2", {"a": a, "alpha": alpha, "z": z})
    al, zz = case["alpha"], case["z"]
    _nonzero("alpha", al, "EX2")
    if not abs(zz) ** 2 * abs(al) < 1:
        raise DomainError("double product needs |z|^2 |alpha| < 1")
    rhs = ex2_rhs(a, alpha, z)
    res = sum_outer(_term_function(case), policy or default_policy(case), divergence_check=False)
    return cmath.exp(res.value), rhs


# ------------------------------------------------------------ residuals


@dataclass
class ResidualReport:
    case: IdentityCase
    lhs: Optional[EvalResult]
    rhs: Optional[complex]
    abs_residual: float
    rel_residual: float
    passed: bool
    branch_flag: bool = False
    regime: str = ""
    threshold: float = 0.0
    error: Optional[str] = None
    extra: dict = field(default_factory=dict)

    @property
    def errored(self) -> bool:
        return self.error is not None


@dataclass(frozen=True)
class Tolerances:
    terminating: float = 1e-9
    convergent: float = 1e-9
    asymptotic_factor: float = 10.0
    asymptotic_floor: float = 1e-8

    def __post_init__(self):
        for name in ("terminating", "convergent", "asymptotic_factor", "asymptotic_floor"):
            if not getattr(self, name) > 0:
                raise DomainError(f"tolerance {name} must be positive")


def _threshold(reg: str, tol: Tolerances, err: float, scale: float) -> float:
    if reg == "terminating":
        return tol.terminating
    if reg == "convergent":
        return tol.convergent
    return max(tol.asymptotic_floor, tol.asymptotic_factor * err / max(scale, REL_EPS))


def residual(
    case: IdentityCase,
    policy: Optional[TruncationPolicy] = None,
    tolerances: Optional[Tolerances] = None,
) -> ResidualReport:
    """Evaluate both sides and compare them.

    Errors raised by either side are caught and returned as an errored
    report, so a batch keeps going.
    """
    tol = tolerances or Tolerances()
    reg = ""
    try:
        reg = regime(case)
        policy = policy or default_policy(case)
        check_policy(case, policy)
        _check_common(case)
        if case.id == "EX2":
            lhs = sum_outer(_term_function(case), policy, divergence_check=False)
            lhs = EvalResult(
                cmath.exp(lhs.value), abs(cmath.exp(lhs.value)) * lhs.abs_err_estimate, lhs.terms_used,
                lhs.terminated, lhs.smallest_term, lhs.method, lhs.stop_index, {"log_sum": lhs.value},
            )
            rhs = rhs_closed(case)
            err_rhs = 0.0
        elif case.id == "P3":
            lhs = lhs_series(case, policy)
            rr = rhs_series(case, policy)
            rhs, err_rhs = rr.value, rr.abs_err_estimate
        else:
            # closed-form preconditions are cheap; check them before summing
            rhs = rhs_closed(case)
            lhs = lhs_series(case, policy)
            err_rhs = 0.0
    except DicksonGammaError as exc:
        return ResidualReport(case, None, None, math.nan, math.nan, False, False, reg, 0.0, f"{type(exc).__name__}: {exc}")
    ab = abs(lhs.value - rhs)
    scale = max(abs(lhs.value), abs(rhs), REL_EPS)
    rel = ab / scale
    thr = _threshold(reg, tol, lhs.abs_err_estimate + err_rhs, scale)
    passed = bool(rel <= thr)
    flag = False
    extra = {}
    if not passed and case.id.startswith("T"):
        for m in (1, -1):
            try:
                alt = rhs_closed(case, winding=m)
            except DicksonGammaError:
                continue
            alt_res = abs(lhs.value - alt)
            if alt_res * 1e6 <= ab:
                flag = True
                extra["winding"] = m
                extra["winding_rel_residual"] = alt_res / max(abs(lhs.value), abs(alt), REL_EPS)
                break
    return ResidualReport(case, lhs, rhs, ab, rel, passed, flag, reg, thr, None, extra)


def select_variant(case_id: str, draws: List[Dict[str, complex]], policy: Optional[TruncationPolicy] = None) -> Dict[str, dict]:
    """Run every variant of ``case_id`` on ``draws`` and report pass counts.

    The variant passing the most draws is returned under ``"selected"``.
    """
    if case_id not in VARIANTS:
        raise DomainError(f"{case_id} has no variants")
    out: Dict[str, dict] = {}
    for v in VARIANTS[case_id]:
        reports = [residual(IdentityCase(case_id, d, v), policy) for d in draws]
        out[v] = {
            "passed": sum(r.passed for r in reports),
            "total": len(reports),
            "worst_rel": max((r.rel_residual for r in reports if not r.errored), default=math.nan),
        }
    out["selected"] = max(VARIANTS[case_id], key=lambda v: out[v]["passed"])
    return out
