import cmath
import math

import numpy as np
import pytest

import oracle as O
from dickson_gamma import complex_gamma as cg
from dickson_gamma.errors import BranchAmbiguityError, DomainError, IncompatiblePolicyError
from dickson_gamma.identities import (
    VARIANTS,
    IdentityCase,
    default_policy,
    double_product,
    ex2_rhs,
    gamma_quotient,
    gamma_quotient_partials,
    lhs_series,
    make_case,
    outer_terms,
    regime,
    residual,
    rhs_closed,
    select_variant,
    support,
)
from dickson_gamma.series import TruncationPolicy

# 50-digit values, frozen
T1_K3 = complex(-0.040703999999999988, -0.066128000000000013)  # k=3, a=2+i, alpha=0.2, x=0.3
T8_PRINTED = complex(2.1926627218934911, 0.0113905325443787)  # k=2, a=1, beta=0.25, y=0.5+0.1i
EX2_VALUES = {0.1: 0.99877324458366841, 0.2: 0.99575210094396381, 0.3: 0.9920061599708142}


class TestCase:
    def test_signature(self):
        with pytest.raises(DomainError):
            make_case("T1", k=1, a=1, x=0.3)
        with pytest.raises(DomainError):
            make_case("T1", k=1, a=1, alpha=0.2, x=0.3, z=1)
        with pytest.raises(DomainError):
            make_case("T9", k=1)

    def test_variants(self):
        assert make_case("T7", k=2, a=1, b=0.3, u=0.6).variant == "-2j"
        assert make_case("T8", k=2, a=1, beta=0.3, y=0.6).variant == "negated"
        with pytest.raises(DomainError):
            make_case("T1", "printed", k=1, a=1, alpha=0.2, x=0.3)

    def test_ex1_defaults(self):
        c = IdentityCase("EX1", {})
        assert c["k"] == 0.5 and c["z"] == pytest.approx(1 / 3)

    def test_regimes(self):
        assert regime(make_case("T1", k=3, a=1, alpha=0.2, x=0.3)) == "terminating"
        assert regime(make_case("T3", k=3, a=1, x=0.3, z=0.2)) == "convergent"
        assert regime(make_case("T3", k=0.5, a=1, x=0.3, z=0.2)) == "asymptotic"
        assert regime(make_case("P1", k=2, a=1, x=0.3)) == "asymptotic"


class TestLhs:
    def test_t4_k1(self):
        for a, al, x in [(1, 0.2, 0.3), (2 - 1j, 0.5j, 1.3), (-0.7, 3, 0.1 + 0.4j)]:
            v = lhs_series(make_case("T4", k=1, a=a, alpha=al, x=x)).value
            assert abs(v - (-1 - x / a)) < 1e-15

    def test_t1_k3(self):
        c = make_case("T1", k=3, a=2 + 1j, alpha=0.2, x=0.3)
        res = lhs_series(c)
        assert abs(res.value - T1_K3) < 1e-15
        assert res.terminated and res.abs_err_estimate == 0
        # (1-k)_{n-1} vanishes from n = 4 on, so the support is n <= 3
        assert support(c) == 3

    @pytest.mark.parametrize("cid", ["T1", "T4", "T7", "T8"])
    def test_support_exact(self, cid):
        rng = np.random.default_rng(3)
        names = {"T1": ("alpha", "x"), "T4": ("alpha", "x"), "T7": ("b", "u"), "T8": ("beta", "y")}[cid]
        for k in range(1, 6):
            p = {"k": k, "a": complex(*rng.uniform(0.5, 2, 2))}
            for n in names:
                p[n] = complex(*rng.uniform(0.2, 0.9, 2))
            c = IdentityCase(cid, p)
            s = support(c)
            terms = outer_terms(c, s + 10)
            assert all(t == 0 for t in terms[s + 1:])
            assert terms[s] != 0
            longer = lhs_series(c, TruncationPolicy.fixed(s + 10)).value
            assert longer == lhs_series(c).value

    def test_terminating_policy_rejected(self):
        c = make_case("T3", k=2, a=1, x=0.3, z=0.2)
        with pytest.raises(IncompatiblePolicyError):
            lhs_series(c, TruncationPolicy.terminating())

    def test_p1_asymptotic(self):
        c = make_case("P1", k=0.3, a=10, x=0.05)
        res = lhs_series(c, TruncationPolicy.optimal())
        ref = -2 * 0.05 * cg.gamma(0.7)
        assert abs(res.value - ref) <= max(res.smallest_term, 1e-15 * abs(ref))
        assert res.smallest_term < 1e-8

    @pytest.mark.parametrize("cid", ["T3", "T6"])
    def test_policy_monotone(self, cid):
        rng = np.random.default_rng(5)
        for _ in range(20):
            k = int(rng.integers(1, 6))
            x = complex(*rng.uniform(-0.6, 0.6, 2))
            z = cmath.rect(rng.uniform(0.05, 0.3) / max(abs(x), 0.3), rng.uniform(-3, 3))
            c = make_case(cid, k=k, a=complex(*rng.uniform(0.5, 2, 2)), x=x, z=z)
            for tol in (1e-8, 1e-11, 1e-14):
                v1 = lhs_series(c, TruncationPolicy.tail(tol)).value
                v2 = lhs_series(c, TruncationPolicy.tail(tol / 10)).value
                assert abs(v1 - v2) <= tol * abs(v2)


class TestRhs:
    def test_t4_k1(self):
        assert abs(rhs_closed(make_case("T4", k=1, a=1, alpha=0.2, x=0.3)) - (-1.3)) < 1e-14
        assert residual(make_case("T4", k=1, a=1, alpha=0.2, x=0.3)).rel_residual < 1e-12

    def test_p1_literal(self):
        for a in (1, 3 + 2j):
            v = rhs_closed(make_case("P1", k=0.5, a=a, x=0.2))
            assert abs(v + 0.4 * math.sqrt(math.pi)) < 1e-15

    def test_t8_sign(self):
        printed = make_case("T8", "printed", k=2, a=1, beta=0.25, y=0.5 + 0.1j)
        negated = make_case("T8", k=2, a=1, beta=0.25, y=0.5 + 0.1j)
        assert abs(rhs_closed(printed) - T8_PRINTED) < 1e-14
        assert abs(rhs_closed(negated) + T8_PRINTED) < 1e-14
        assert residual(negated).passed
        bad = residual(printed)
        assert not bad.passed and bad.rel_residual == pytest.approx(2.0, rel=1e-9)

    def test_p2_pole(self):
        r = residual(make_case("P2", k=2, a=1, alpha=0.2, z=0.01))
        assert r.errored and "SingularConfigurationError" in r.error and not r.passed

    @pytest.mark.parametrize(
        "cid,p",
        [
            ("T1", dict(k=2, a=1, alpha=0.25, x=1.0)),
            ("T3", dict(k=2, a=1, x=2.0, z=0.5)),
            ("T7", dict(k=2, a=1, b=0.0, u=0.5)),
            ("T8", dict(k=2, a=1, beta=0.25, y=0.5)),
            ("P1", dict(k=2, a=1, x=0.01)),
        ],
    )
    def test_singular(self, cid, p):
        r = residual(IdentityCase(cid, p))
        assert r.errored


class TestVariants:
    def test_t7_example(self):
        rels = {v: residual(make_case("T7", v, k=2, a=1, b=0.3, u=0.6)).rel_residual for v in VARIANTS["T7"]}
        assert rels["-2j"] < 1e-12
        assert rels["2-j"] > 0.1 and rels["n-2j"] > 0.1

    def test_select(self):
        rng = np.random.default_rng(9)
        draws = [
            {"k": int(rng.integers(1, 6)), "a": complex(*rng.uniform(0.5, 2, 2)),
             "b": complex(*rng.uniform(0.2, 0.8, 2)), "u": complex(*rng.uniform(0.3, 1, 2))}
            for _ in range(15)
        ]
        out = select_variant("T7", draws)
        assert out["selected"] == "-2j"
        assert out["-2j"]["passed"] == 15
        assert out["2-j"]["passed"] < 15


class TestGammaQuotient:
    def test_example1(self):
        res = gamma_quotient(0.5, 2, 0.5, 1 / 3)
        assert abs(res.value - math.sqrt(math.pi)) < 1e-2
        assert abs(res.value - math.sqrt(math.pi)) <= res.abs_err_estimate

    def test_z_zero(self):
        for k in (0.5, 2.5 + 0.5j, -0.3):
            res = gamma_quotient(k, 2, 0.5, 0)
            assert abs(res.value - cg.gamma(k)) < 1e-14 * abs(cg.gamma(k))

    def test_partials_oracle(self):
        p = {"k": 0.5, "a": 2, "x": 0.5, "z": 1 / 3}
        num, den = O.gq_outer(25, p)
        rows = gamma_quotient_partials(0.5, 2, 0.5, 1 / 3, 25)
        for N, (n_, d_, _) in enumerate(rows):
            assert O.rel(n_, O.mp.fsum(num[: N + 1])) < 1e-10
            assert O.rel(d_, O.mp.fsum(den[: N + 1])) < 1e-10


class TestDoubleProduct:
    def test_z_zero(self):
        assert double_product(1, 0.25, 0) == (1, 1)

    @pytest.mark.parametrize("z", [0.1, 0.2, 0.3])
    def test_example(self, z):
        lhs, rhs = double_product(1, 0.25, z)
        assert abs(rhs - EX2_VALUES[z]) < 1e-14
        assert abs(lhs - rhs) < 1e-8 * abs(rhs)
        assert abs(lhs.imag) < 1e-14 and abs(rhs.imag) < 1e-14

    def test_oracle_rhs(self):
        for z in (0.1, 0.25j, 0.2 - 0.1j):
            ref = O.rhs("EX2", {"a": 1, "alpha": 0.25, "z": z})
            assert O.rel(ex2_rhs(1, 0.25, z), ref) < 1e-13

    def test_branch_guard(self):
        with pytest.raises(BranchAmbiguityError):
            ex2_rhs(1, 0.25, 2.5j)

    def test_region(self):
        with pytest.raises(DomainError):
            double_product(1, 0.25, 3)


# ------------------------------------------------ oracle equivalence

ORACLE_CASES = [
    ("T1", dict(k=0.5 + 0.2j, a=2, alpha=0.3 + 0.1j, x=0.2)),
    ("T2", dict(k=3, a=1.5, alpha=0.2, z=0.3 + 0.1j)),
    ("T3", dict(k=2.5, a=1 + 0.5j, x=0.4, z=0.5)),
    ("T4", dict(k=4, a=1 - 1j, alpha=0.3, x=0.7j)),
    ("T5", dict(k=-0.4, a=3, alpha=0.1j, z=0.2)),
    ("T6", dict(k=3, a=0.8, x=0.6 - 0.2j, z=0.4)),
    ("T7", dict(k=0.3, a=2, b=0.4, u=0.7 + 0.1j)),
    ("T8", dict(k=5, a=1.2, beta=0.3 - 0.1j, y=0.6)),
    ("P1", dict(k=0.3, a=10, x=0.05)),
    ("P2", dict(k=-0.4, a=5, alpha=0.5, z=0.05)),
    ("P3", dict(k=0.5, a=2, x=0.5, z=1 / 3)),
    ("EX2", dict(a=1, alpha=0.25, z=0.3)),
]


@pytest.mark.parametrize("cid,p", ORACLE_CASES, ids=[c for c, _ in ORACLE_CASES])
def test_outer_terms_oracle(cid, p):
    c = IdentityCase(cid, p)
    N = 30
    ours = outer_terms(c, N)
    ref = O.outer(cid, N, p, c.variant)
    for n, (t, r) in enumerate(zip(ours, ref)):
        # an inner sum may cancel; double precision can only promise accuracy against its terms
        size = O.mp.fsum(abs(O.summand(cid, n, j, p, c.variant)) for j in range(n // 2 + 1))
        assert abs(O.mp.mpc(complex(t)) - r) <= 1e-13 * max(size, 1e-300)


@pytest.mark.parametrize("variant", ["2-j", "n-2j"])
def test_t7_control_oracle(variant):
    p = dict(k=2, a=1, b=0.3, u=0.6)
    ours = outer_terms(IdentityCase("T7", p, variant), 6)
    ref = O.outer("T7", 6, p, variant)
    assert all(O.rel(t, r) < 1e-13 for t, r in zip(ours, ref) if r != 0)


@pytest.mark.parametrize("cid", ["T1", "T2", "T3", "T4", "T5", "T6", "T7", "T8"])
def test_rhs_oracle(cid):
    p = dict(ORACLE_CASES)[cid]
    c = IdentityCase(cid, p)
    assert O.rel(rhs_closed(c), O.rhs(cid, p, c.variant)) < 1e-12


def test_default_policies():
    assert default_policy(make_case("T1", k=2, a=1, alpha=0.2, x=0.3)).mode == "terminating"
    assert default_policy(make_case("T2", k=2, a=1, alpha=0.2, z=0.3)).mode == "tail_tolerance"
    assert default_policy(make_case("P1", k=0.3, a=1, x=0.3)).mode == "optimal_truncation"
