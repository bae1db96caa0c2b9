"""Real-valued quadrature and special-function kernels for the analytical engine.

The closed-form interference expressions need two nonstandard pieces: the
restricted Gauss hypergeometric value 2F1(1, 1-d; 2-d; -x) that appears in
single-antenna interference exponents, and a binomial sum of incomplete-beta
integrals from the multi-antenna tier.  Both are evaluated from integral
representations that stay smooth and real for every admissible argument, so
one code path covers the whole parameter range.  No complex arithmetic is
used anywhere: the alternating-sign beta terms are folded into a single
positive integrand before evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import integrate as _si

DEFAULT_RELATIVE_TOL = 1e-9
DEFAULT_ABSOLUTE_TOL = 1e-12
# The scalar kernels below are cheap smooth 1-D integrals; they run much
# tighter than the nested network integrals built on top of them.
KERNEL_RELATIVE_TOL = 1e-12
KERNEL_ABSOLUTE_TOL = 1e-15


class QuadratureError(ArithmeticError):
    """An integral did not reach the requested accuracy."""


@dataclass(frozen=True)
class QuadratureSettings:
    """Accuracy request for `integrate`."""

    relative_tolerance: float = DEFAULT_RELATIVE_TOL
    absolute_tolerance: float = DEFAULT_ABSOLUTE_TOL
    max_subdivisions: int = 200

    def __post_init__(self):
        if not self.relative_tolerance > 0.0:
            raise ValueError("relative_tolerance: must be positive")
        if self.absolute_tolerance < 0.0:
            raise ValueError("absolute_tolerance: must be nonnegative")
        if self.max_subdivisions < 16:
            raise ValueError("max_subdivisions: must be at least 16")


DEFAULT_SETTINGS = QuadratureSettings()
KERNEL_SETTINGS = QuadratureSettings(KERNEL_RELATIVE_TOL, KERNEL_ABSOLUTE_TOL)

# Accept the result as long as QUADPACK's own error estimate is within this
# factor of the requested budget; beyond that the routine has genuinely
# failed to converge and the caller must see an error, not a wrong number.
_ERROR_SLACK = 50.0


def integrate(f, a, b, settings=DEFAULT_SETTINGS, *, scale=None, points=None):
    """Adaptive quadrature of ``f`` over [a, b]; ``b`` may be ``math.inf``.

    Semi-infinite ranges are mapped onto [0, 1) through r = a + L*t/(1-t)
    with L a characteristic length of the integrand (``scale``), so the tail
    is resolved by the change of variable instead of being truncated.

    Returns the integral estimate, or raises QuadratureError when the
    requested accuracy is not reached.
    """
    if math.isinf(b):
        L = float(scale) if scale else 1.0

        def mapped(t):
            rem = 1.0 - t
            r = a + L * t / rem
            return f(r) * L / (rem * rem)

        return _quad_checked(mapped, 0.0, 1.0, settings, None)
    return _quad_checked(f, a, b, settings, points)


def _quad_checked(f, a, b, settings, points):
    out = _si.quad(
        f,
        a,
        b,
        epsabs=settings.absolute_tolerance,
        epsrel=settings.relative_tolerance,
        limit=settings.max_subdivisions,
        points=points,
        full_output=True,
    )
    value, abserr = out[0], out[1]
    if math.isnan(value):
        raise QuadratureError("integrand produced NaN")
    budget = max(
        settings.absolute_tolerance, settings.relative_tolerance * abs(value)
    )
    if abserr > _ERROR_SLACK * budget:
        raise QuadratureError(
            "accuracy not reached: error estimate %.3e on value %.6e"
            % (abserr, value)
        )
    return value


def hyp2f1_coverage(delta, x):
    """2F1(1, 1-d; 2-d; -x) for d in (0, 1) and x >= 0.

    For moderate x this is int_0^1 dw / (1 + x * w**(1/(1-d))): the Euler
    integral with the t**(-d) endpoint weight absorbed into the variable,
    smooth for every x >= 0.  For large x the integrand collapses into a
    spike of width x**(d-1) that no subdivision can resolve, so the integral
    is split at the upper limit instead: the complete part is the exact
    x**(d-1) * pi/sin(pi*d) moment and only the smooth t > 1 remainder is
    quadratured.  Equals 1 at x = 0 and decreases strictly in x.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError("delta: must lie in (0, 1)")
    if x < 0.0:
        raise ValueError("x: must be nonnegative")
    if x == 0.0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if delta == 0.5:
        # Exponent 4 fast path: 2F1(1, 1/2; 3/2; -x) = atan(sqrt(x))/sqrt(x).
        root = math.sqrt(x)
        return math.atan(root) / root
    if x > 10.0:
        complete = math.pi / math.sin(math.pi * delta) * x ** (delta - 1.0)
        # int_1^inf t**-d/(1+xt) dt == int_0^1 u**(d-1)/(u+x) du, with the
        # endpoint weight absorbed through u = w**(1/d).
        tail = integrate(
            lambda w: 1.0 / (w ** (1.0 / delta) + x), 0.0, 1.0, KERNEL_SETTINGS
        )
        return (1.0 - delta) * (complete - tail / delta)
    power = 1.0 / (1.0 - delta)

    def integrand(w):
        return 1.0 / (1.0 + x * w**power)

    points = None
    if x > 1.0:
        # x * w**(1/(1-d)) = 1 marks the knee between the flat head and the
        # 1/(x w**p) tail; hint the subdivision there.
        points = [x ** (delta - 1.0)]
    return integrate(integrand, 0.0, 1.0, KERNEL_SETTINGS, points=points)


def real_branch_beta(u, p, delta, n_users):
    """int_0^u v**(p-d-1) * (1+v)**(-N) dv for integer 1 <= p <= N.

    This is the real value of the incomplete-beta term B(-u; p-d, 1-N) after
    substituting t = -v; the (-1) powers cancel against the prefactor of the
    macro interference sum, so only this positive integral is ever needed.
    """
    _check_beta_args(delta, n_users)
    if not (isinstance(p, int) or float(p).is_integer()):
        raise ValueError("p: must be an integer")
    p = int(p)
    if not 1 <= p <= n_users:
        raise ValueError("p: must satisfy 1 <= p <= n_users")
    if u < 0.0:
        raise ValueError("u: must be nonnegative")
    if u == 0.0:
        return 0.0
    q = p - delta
    head = min(u, 1.0)
    # v = head * w**(1/q) removes the v**(q-1) endpoint behaviour.
    value = (head**q / q) * integrate(
        lambda w: (1.0 + head * w ** (1.0 / q)) ** (-n_users),
        0.0,
        1.0,
        KERNEL_SETTINGS,
    )
    if u > 1.0:
        # Smooth remainder on log scale: v = exp(y).  exp(q*y) alone can
        # overflow, so the whole integrand is assembled inside one exp.
        value += integrate(
            lambda y: math.exp(q * y - n_users * _log1p_exp(y)),
            0.0,
            math.log(u),
            KERNEL_SETTINGS,
        )
    return value


def _log1p_exp(y):
    """log(1 + exp(y)) without overflow."""
    if y > 36.0:
        return y + math.log1p(math.exp(-y))
    return math.log1p(math.exp(y))


def binomial_beta_mass(u, delta, n_users):
    """int_0^u v**(-d-1) * (1 - (1+v)**(-N)) dv.

    Equals sum_p C(N,p) * real_branch_beta(u, p, d, N) by the binomial
    theorem, collapsed into one integral so the cost does not grow with N.
    Finite for every u including u = inf (the tail decays like v**(-d-1)).
    """
    _check_beta_args(delta, n_users)
    if u < 0.0:
        raise ValueError("u: must be nonnegative")
    if u == 0.0:
        return 0.0

    def ratio(v):
        # (1 - (1+v)**(-N)) / v, smooth with limit N at v = 0.
        if v < 1e-12:
            return n_users * (1.0 - 0.5 * (n_users + 1.0) * v)
        return -math.expm1(-n_users * math.log1p(v)) / v

    head = min(u, 1.0)
    q = 1.0 - delta
    # v = head * w**(1/q) turns the integrable v**(-d) head into a smooth
    # integrand on [0, 1].
    value = (head**q / q) * integrate(
        lambda w: ratio(head * w ** (1.0 / q)),
        0.0,
        1.0,
        KERNEL_SETTINGS,
    )
    if u > 1.0:
        top = math.inf if math.isinf(u) else math.log(u)
        value += integrate(
            lambda y: math.exp(-delta * y)
            * -math.expm1(-n_users * _log1p_exp(y)),
            0.0,
            top,
            KERNEL_SETTINGS,
            scale=1.0,
        )
    return value


def macro_laplace_sum(s_scaled, omega, delta1, n_users):
    """Exponent kernel of the multi-antenna interference Laplace transform.

    Arguments: ``s_scaled`` = s*P1*eta/N (the per-stream scaled transform
    variable), ``omega`` the interferer exclusion radius, ``delta1`` = 2/alpha1,
    ``n_users`` = N.  Returns R such that the Laplace transform equals
    exp(-lambda1*pi*delta1 * R); R = s_scaled**delta1 * binomial_beta_mass(u)
    with u = s_scaled * omega**(-alpha1).
    """
    _check_beta_args(delta1, n_users)
    if s_scaled < 0.0:
        raise ValueError("s_scaled: must be nonnegative")
    if not omega > 0.0:
        raise ValueError("omega: must be positive")
    if s_scaled == 0.0:
        return 0.0
    alpha1 = 2.0 / delta1
    # u may overflow to inf for vanishing omega; the mass integral converges
    # there, so the value stays finite and only the result is guarded.
    try:
        u = s_scaled * omega ** (-alpha1)
    except OverflowError:
        u = math.inf
    value = s_scaled**delta1 * binomial_beta_mass(u, delta1, n_users)
    if not math.isfinite(value):
        raise OverflowError("macro_laplace_sum: result exceeds the floating-point range")
    return value


def _check_beta_args(delta, n_users):
    if not 0.0 < delta < 1.0:
        raise ValueError("delta: must lie in (0, 1)")
    if not (isinstance(n_users, int) or float(n_users).is_integer()):
        raise ValueError("n_users: must be an integer")
    if n_users < 1:
        raise ValueError("n_users: must be at least 1")
