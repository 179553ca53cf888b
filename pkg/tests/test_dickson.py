import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dickson_gamma.dickson import (
    DicksonKind,
    GFParams,
    dickson_eval,
    explicit_sum,
    functional_check,
    functional_gf_partial,
    functional_gf_rational,
    gf_partial,
    gf_rational,
)
from dickson_gamma.errors import DomainError, PoleError, SingularConfigurationError

D7 = complex(-0.77743559999999955, -0.53484510000000017)  # D_7(1.2+0.3i, 0.4), 50 digits


def test_examples():
    assert dickson_eval("first", 2, 3, 1) == 7
    assert dickson_eval(DicksonKind.second, 2, 3, 1) == 8
    assert dickson_eval("first", 0, 5, 5) == 2
    assert dickson_eval("second", 0, 5, 5) == 1


def test_derived_d7():
    assert abs(dickson_eval("first", 7, 1.2 + 0.3j, 0.4) - D7) < 1e-14
    assert abs(explicit_sum("first", 7, 1.2 + 0.3j, 0.4) - D7) < 1e-14


def test_errors():
    with pytest.raises(DomainError):
        dickson_eval("first", -1, 1, 1)
    with pytest.raises(DomainError):
        dickson_eval("third", 1, 1, 1)


c_small = st.builds(cmath.rect, st.floats(0, 2), st.floats(-math.pi, math.pi))


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(["first", "second"]), st.integers(0, 30), c_small, c_small)
def test_explicit_matches_recurrence(kind, n, x, a):
    rec = dickson_eval(kind, n, x, a)
    exp = explicit_sum(kind, n, x, a)
    # near a zero of P_n both forms cancel, so measure against the size of the terms
    scale = sum(math.comb(n - j, j) * abs(a) ** j * abs(x) ** (n - 2 * j) for j in range(n // 2 + 1))
    assert abs(rec - exp) <= 1e-12 * max(scale, 1e-300)


@pytest.mark.parametrize("n", range(0, 21))
def test_chebyshev_reduction(n):
    for th in np.linspace(0.05, math.pi - 0.05, 13):
        x = 2 * math.cos(th)
        assert abs(dickson_eval("first", n, x, 1) - 2 * math.cos(n * th)) < 1e-10
        ref = math.sin((n + 1) * th) / math.sin(th)
        assert abs(dickson_eval("second", n, x, 1) - ref) < 1e-10


class TestGeneratingFunction:
    def test_trivial(self):
        assert gf_rational("second", 0, 0, 0) == 1
        assert gf_rational("first", 0.7, -0.3, 0) == 0

    def test_derived(self):
        p = GFParams(0.4, 0.2, 0.25)
        ref = 0.25 * (0.4 - 2 * 0.2 * 0.25) / (0.2 * 0.0625 - 0.4 * 0.25 + 1)
        assert abs(gf_rational("first", 0.4, 0.2, 0.25) - ref) < 1e-16
        assert abs(gf_partial("first", p, 80).value - ref) < 1e-10

    def test_pole(self):
        with pytest.raises(PoleError):
            gf_rational("second", 2, 1, 1)

    def test_region(self):
        with pytest.raises(DomainError):
            GFParams(0.5 + 10j, 0.1, 0.1)
        with pytest.raises(DomainError):
            GFParams(1.5, 0.1, 0.1)

    def test_tail_bound(self):
        p = GFParams(0.3 - 0.2j, 0.4 + 0.1j, 0.2 + 0.1j)
        ref = gf_rational("second", p.x, p.a, p.z)
        for N in (5, 10, 20, 40):
            res = gf_partial("second", p, N)
            assert abs(res.value - ref) <= res.abs_err_estimate


class TestFunctional:
    def test_first_example(self):
        lhs, rhs = functional_check("first", 3, 2, 1)
        assert lhs == pytest.approx(8.125, abs=1e-14) and rhs == 8.125

    def test_degree_zero(self):
        assert functional_check("first", 0, 0.3 + 1j, 2) == (2, 2)

    def test_second(self):
        lhs, rhs = functional_check("second", 5, 1.3, 0.2)
        assert abs(lhs - rhs) < 1e-13 * abs(rhs)

    def test_degenerate(self):
        with pytest.raises(SingularConfigurationError):
            functional_check("second", 3, 2, 4)
        with pytest.raises(SingularConfigurationError):
            functional_check("first", 3, 0, 4)

    @pytest.mark.parametrize("kind", ["first", "second"])
    def test_gf(self, kind):
        u, b, z = 1.1 + 0.2j, 0.3 - 0.1j, 0.3
        ref = functional_gf_rational(kind, u, b, z)
        res = functional_gf_partial(kind, u, b, z, 80)
        assert abs(res.value - ref) <= 1e-10 * abs(ref)
        assert abs(res.value - ref) <= res.abs_err_estimate + 1e-15


def test_unit_circle_functional():
    # u on the unit circle with b = 1 is the Chebyshev case again
    for th in (0.3, 1.1, 2.9):
        u = cmath.exp(1j * th)
        lhs, rhs = functional_check("first", 9, u, 1)
        assert abs(lhs - 2 * math.cos(9 * th)) < 1e-12 and abs(rhs - lhs) < 1e-12
