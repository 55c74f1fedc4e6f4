"""Special functions: regularized incomplete beta, its inverse, a closed-form
lower bound for it, spherical cap bounds, Bernoulli entropy/divergence and the
covering-density factor h(x).

Everything is scalar and pure. Quantities that under/overflow in double
precision (tiny incomplete beta values at large shape parameters, cap areas in
high dimension) have ``log_`` companions returning natural logarithms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from scipy.special import betaln

from .errors import ConvergenceError, DomainError

__all__ = [
    "BetaParams",
    "CapBounds",
    "bernoulli_entropy",
    "bernoulli_kl",
    "beta_lower_bound",
    "beta_pdf",
    "cap_bounds_frankl",
    "covering_h",
    "dasgupta_tail",
    "half_cap_area",
    "log_beta_lower_bound",
    "log_reg_inc_beta",
    "log_reg_inc_beta_upper",
    "reg_inc_beta",
    "reg_inc_beta_inv",
    "reg_inc_beta_upper",
]

CF_MAX_ITER = 500
CF_EPS = 1e-15
_FPMIN = 1e-300
_LOG_HALF = math.log(0.5)


@dataclass(frozen=True)
class BetaParams:
    """Shape parameters ``a, b`` and evaluation point ``x`` of I_x(a, b)."""

    a: float
    b: float
    x: float

    def __post_init__(self):
        _check_shapes(self.a, self.b)
        if not 0.0 <= self.x <= 1.0:
            raise DomainError(f"x must lie in [0, 1], got {self.x!r}")


def _check_shapes(a, b):
    if not (a > 0 and math.isfinite(a)):
        raise DomainError(f"shape a must be positive and finite, got {a!r}")
    if not (b > 0 and math.isfinite(b)):
        raise DomainError(f"shape b must be positive and finite, got {b!r}")


def _check_unit(x, name="x"):
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"{name} must lie in [0, 1], got {x!r}")


def _betacf(a, b, x):
    """Continued fraction for I_x(a, b) (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < CF_EPS:
            return h
    raise ConvergenceError(
        f"incomplete beta continued fraction did not converge for a={a}, b={b}, x={x}"
    )


def _log_direct(a, b, x):
    # log I_x(a, b), valid on the fast-converging side x < (a+1)/(a+b+2)
    front = a * math.log(x) + b * math.log1p(-x) - float(betaln(a, b)) - math.log(a)
    return front + math.log(_betacf(a, b, x))


def _use_direct(a, b, x):
    return x < (a + 1.0) / (a + b + 2.0)


def _log1mexp(t):
    """log(1 - exp(t)) for t <= 0."""
    if t > _LOG_HALF:
        return math.log(-math.expm1(t))
    return math.log1p(-math.exp(t))


def log_reg_inc_beta(a, b, x):
    """Natural log of I_x(a, b); ``-inf`` at x = 0."""
    _check_shapes(a, b)
    _check_unit(x)
    if x == 0.0:
        return -math.inf
    if x == 1.0:
        return 0.0
    if _use_direct(a, b, x):
        return _log_direct(a, b, x)
    return _log1mexp(_log_direct(b, a, 1.0 - x))


def log_reg_inc_beta_upper(a, b, x):
    """Natural log of the upper tail 1 - I_x(a, b) = I_{1-x}(b, a)."""
    return log_reg_inc_beta(b, a, 1.0 - x)


def reg_inc_beta(a, b=None, x=None):
    """Regularized incomplete beta I_x(a, b) = P(Beta(a, b) <= x).

    Accepts either ``(a, b, x)`` or a single :class:`BetaParams`.
    """
    if isinstance(a, BetaParams):
        a, b, x = a.a, a.b, a.x
    _check_shapes(a, b)
    _check_unit(x)
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    if _use_direct(a, b, x):
        return math.exp(_log_direct(a, b, x))
    return 1.0 - math.exp(_log_direct(b, a, 1.0 - x))


def reg_inc_beta_upper(a, b, x):
    """Upper tail 1 - I_x(a, b), accurate when I_x(a, b) is close to one."""
    return reg_inc_beta(b, a, 1.0 - x)


def beta_pdf(a, b, x):
    _check_shapes(a, b)
    _check_unit(x)
    if x == 0.0 or x == 1.0:
        shape = a if x == 0.0 else b
        if shape < 1:
            return math.inf
        return math.exp(-float(betaln(a, b))) if shape == 1 else 0.0
    return math.exp((a - 1.0) * math.log(x) + (b - 1.0) * math.log1p(-x) - float(betaln(a, b)))


def reg_inc_beta_inv(a, b, p, tol=1e-13, max_iter=2000):
    """Inverse of ``x -> I_x(a, b)``.

    Bisection keeps a guaranteed bracket; Newton steps are taken whenever
    they land strictly inside it.
    """
    _check_shapes(a, b)
    _check_unit(p, "p")
    if p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0
    lo, hi = 0.0, 1.0
    # coarse bisection to get into the basin of Newton
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if reg_inc_beta(a, b, mid) < p:
            lo = mid
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    for _ in range(max_iter):
        f = reg_inc_beta(a, b, x) - p
        if abs(f) <= tol:
            return x
        if f < 0:
            lo = x
        else:
            hi = x
        dens = beta_pdf(a, b, x)
        step_ok = False
        if dens > 0 and math.isfinite(dens):
            xn = x - f / dens
            if lo < xn < hi:
                x = xn
                step_ok = True
        if not step_ok:
            xn = 0.5 * (lo + hi)
            if xn == lo or xn == hi:
                return x
            x = xn
    return x


def log_beta_lower_bound(a, b, x):
    """Natural log of :func:`beta_lower_bound`."""
    _check_shapes(a, b)
    _check_unit(x)
    if b > 1:
        raise DomainError(f"the incomplete beta lower bound requires 0 < b <= 1, got b={b!r}")
    if x == 0.0:
        return -math.inf
    base = (a + b) * (1.0 - x * a / (a + 1.0))
    return a * math.log(x) - math.lgamma(b) - (1.0 - b) * math.log(base)


def beta_lower_bound(a, b=None, x=None):
    """Closed-form lower bound on I_x(a, b) valid for a > 0, 0 < b <= 1:

        I_x(a, b) >= x**a / (Gamma(b) * ((a + b) * (1 - x*a/(a+1)))**(1 - b))

    Exact when b = 1.
    """
    if isinstance(a, BetaParams):
        a, b, x = a.a, a.b, a.x
    return math.exp(log_beta_lower_bound(a, b, x))


class CapBounds(NamedTuple):
    lower: float
    our_lower: float
    upper: float


def _check_cap(d, eps):
    if int(d) != d or d < 2:
        raise DomainError(f"dimension d must be an integer >= 2, got {d!r}")
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0, 1), got {eps!r}")


def half_cap_area(d, eps, log=False):
    """Relative area of a spherical cap with half chord ``eps`` on S^{d-1}:
    0.5 * I_{eps^2}((d-1)/2, 1/2)."""
    _check_cap(d, eps)
    val = math.log(0.5) + log_reg_inc_beta((d - 1) / 2.0, 0.5, eps * eps)
    return val if log else math.exp(val)


def cap_bounds_frankl(d, eps, log=False):
    """Bounds on the half-cap area ``half_cap_area(d, eps)``.

    Returns ``(lower, our_lower, upper)``: the Frankl-Maehara lower bound, the
    bound implied by :func:`beta_lower_bound` with b = 1/2, and the
    Frankl-Maehara upper bound. With ``log=True`` natural logs are returned,
    which is necessary for large ``d`` where eps**(d-1) underflows.
    """
    _check_cap(d, eps)
    e2 = eps * eps
    log_pow = (d - 1) * math.log(eps)
    if d == 2:
        log_lower = -math.inf
    else:
        r = 1.0 - 1.0 / math.sqrt(d)
        num = _log1mexp((d - 1) / 2.0 * math.log(r))
        den = 0.5 * math.log(2 * math.pi * (d - 1) ** 2 / (d - 2) * (1.0 - e2 * r))
        log_lower = num - den + log_pow
    log_ours = log_pow - 0.5 * math.log(2 * math.pi * d * (1.0 - e2 * (d - 1) / (d + 1)))
    log_upper = log_pow - 0.5 * math.log(2 * math.pi * (d - 1) * (1.0 - e2))
    if log:
        return CapBounds(log_lower, log_ours, log_upper)
    return CapBounds(math.exp(log_lower), math.exp(log_ours), math.exp(log_upper))


def bernoulli_entropy(alpha):
    """Entropy of Bernoulli(alpha) in nats, with H(0) = H(1) = 0."""
    _check_unit(alpha, "alpha")
    if alpha == 0.0 or alpha == 1.0:
        return 0.0
    return -alpha * math.log(alpha) - (1.0 - alpha) * math.log1p(-alpha)


def _xlogy_ratio(p, q):
    # p * log(p / q) with 0 * log(0 / q) = 0
    if p == 0.0:
        return 0.0
    if q == 0.0:
        raise DomainError("Bernoulli KL divergence is infinite (support mismatch)")
    return p * math.log(p / q)


def bernoulli_kl(alpha, beta):
    """KL divergence D(Bernoulli(alpha) || Bernoulli(beta)) in nats."""
    _check_unit(alpha, "alpha")
    _check_unit(beta, "beta")
    return _xlogy_ratio(alpha, beta) + _xlogy_ratio(1.0 - alpha, 1.0 - beta)


def covering_h(x):
    """Covering-density factor

        h(x) = (1 + 2/log x) * (1 + log(log x)/log x + sqrt(e)/(x log x)),

    defined for x >= 3.
    """
    if not x >= 3:
        raise DomainError(f"h(x) is only used for x >= 3, got {x!r}")
    lx = math.log(x)
    return (1.0 + 2.0 / lx) * (1.0 + math.log(lx) / lx + math.sqrt(math.e) / (x * lx))


def dasgupta_tail(d, k, beta, log=False):
    """Tail bound for L ~ Beta(k/2, (d-k)/2):

        P(L >= beta*k/d) <= beta**(k/2) * (1 + (1-beta)*k/(d-k))**((d-k)/2)
    """
    if int(d) != d or int(k) != k or not 1 <= k < d:
        raise DomainError(f"need integers 1 <= k < d, got d={d!r}, k={k!r}")
    if not beta > 1:
        raise DomainError(f"beta must exceed 1, got {beta!r}")
    if beta * k / d > 1.0 + 1e-15:
        raise DomainError(f"beta*k/d must not exceed 1, got {beta * k / d!r}")
    base = (d - beta * k) / (d - k)
    if base <= 0.0:
        return -math.inf if log else 0.0
    val = 0.5 * k * math.log(beta) + 0.5 * (d - k) * math.log(base)
    return val if log else math.exp(val)
