"""Dickson-polynomial double series in terms of the incomplete gamma function.

Kernels (:mod:`.complex_gamma`), an independent contour-integral oracle
(:mod:`.quadrature`), Dickson polynomials (:mod:`.dickson`), both sides of
the identities (:mod:`.identities`) and a batch harness (:mod:`.harness`).
"""

from .complex_gamma import (
    continue_lower,
    continue_upper,
    gamma,
    incomplete_pair,
    ln_gamma,
    lower_incomplete,
    pochhammer,
    principal_power,
    upper_incomplete,
    upper_incomplete_scaled,
)
from .dickson import DicksonKind, GFParams, dickson_eval, explicit_sum, functional_check, gf_partial, gf_rational
from .errors import *  # noqa: F401,F403
from .identities import (
    IdentityCase,
    ResidualReport,
    double_product,
    gamma_quotient,
    lhs_series,
    make_case,
    regime,
    residual,
    rhs_closed,
)
from .quadrature import ContourSpec, cauchy_kernel, incomplete_closed_form, incomplete_contour
from .series import EvalResult, TruncationPolicy

__version__ = "0.1.0"
