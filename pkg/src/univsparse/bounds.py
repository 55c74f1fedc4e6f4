"""Bounds on the minimal overcompleteness n/d that lets every (or almost every)
signal in R^d be approximated k-sparsely with normalized error at most eps.

All bounds are evaluated in the log domain and returned as :class:`BoundReport`
objects; the linear value saturates to ``inf`` beyond 1e300.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from . import specfun
from .errors import DomainError, HypothesisError

__all__ = [
    "BoundId",
    "BoundReport",
    "LogBinomialBounds",
    "RegimeParams",
    "ac_lower",
    "ac_overcomp_exact",
    "ac_success_upper",
    "ac_upper_closed",
    "cantelli_success_lower",
    "cantelli_success_lower_closed",
    "eps_to_snr_db",
    "log_binomial_bounds",
    "overlap_pmf",
    "overlap_pmf_exact",
    "snr_db_to_eps",
    "subspace_coverage",
    "wc_lower",
    "wc_upper_closed",
    "wc_upper_exact",
]

LOG10 = math.log(10.0)
LOG_SATURATION = 300 * LOG10
ONE_THIRD_TOL = 1e-12
CANTELLI_TOL = 1e-8


class BoundId(str, enum.Enum):
    WC_LOWER = "wc_lower"
    WC_UPPER_CLOSED = "wc_upper_closed"
    WC_UPPER_EXACT = "wc_upper_exact"
    AC_LOWER = "ac_lower"
    AC_SUCCESS_UPPER = "ac_success_upper"
    AC_UPPER_CLOSED = "ac_upper_closed"
    AC_OVERCOMP_EXACT = "ac_overcomp_exact"
    CANTELLI_CLOSED = "cantelli_success_lower_closed"


@dataclass(frozen=True)
class RegimeParams:
    """Sparsity factor ``s = k/d`` and allowed normalized error ``eps``."""

    s: float
    eps: float

    def __post_init__(self):
        if not 0.0 < self.s < 1.0:
            raise DomainError(f"sparsity factor s must lie in (0, 1), got {self.s!r}")
        if not 0.0 < self.eps < 1.0:
            raise DomainError(f"eps must lie in (0, 1), got {self.eps!r}")

    @classmethod
    def from_snr_db(cls, s, snr_db):
        return cls(s, snr_db_to_eps(snr_db))

    @property
    def eps2(self):
        return self.eps * self.eps

    @property
    def s_inv(self):
        return 1.0 / self.s


@dataclass(frozen=True)
class BoundReport:
    bound_id: BoundId
    value: float
    log10_value: float
    valid: bool = True
    violated_condition: str | None = None
    constants: dict = field(default_factory=dict)
    flags: tuple = ()

    @classmethod
    def from_log(cls, bound_id, log_value, constants=None, flags=()):
        """Build a valid report from a natural-log value."""
        value = math.inf if log_value > LOG_SATURATION else math.exp(log_value)
        return cls(bound_id, value, log_value / LOG10, True, None, dict(constants or {}), tuple(flags))

    @classmethod
    def invalid(cls, bound_id, reason, constants=None, flags=()):
        return cls(bound_id, math.nan, math.nan, False, reason, dict(constants or {}), tuple(flags))


def _is_integer(x, tol=1e-9):
    return abs(x - round(x)) <= tol * max(1.0, abs(x))


def _effective_inverse_sparsity(s):
    """Return (s^-1 to use, flags). Non-integer s^-1 is rounded up."""
    inv = 1.0 / s
    if _is_integer(inv):
        return float(round(inv)), ()
    return float(math.ceil(inv)), ("s_inv_ceiled",)


def _lower_log(r):
    # log of c1 * s^{3/2} * (1/eps)^{1/s - 1}
    s, eps = r.s, r.eps
    log_c1 = -1.0 + 0.5 * ((1.0 / s - 1.0) * math.log1p(-s) - math.log1p(-r.eps2))
    return log_c1, log_c1 + 1.5 * math.log(s) - (1.0 / s - 1.0) * math.log(eps)


def wc_lower(r: RegimeParams) -> BoundReport:
    """Necessary overcompleteness for universal (worst-case) representation.

    Below the threshold eps < sqrt(1 - s) the value is c1 * s^{3/2} * (1/eps)^{1/s-1}.
    Above it a square identity dictionary already suffices and the value is 1.
    """
    if r.eps2 < 1.0 - r.s:
        log_c1, log_v = _lower_log(r)
        return BoundReport.from_log(BoundId.WC_LOWER, log_v, {"c1": math.exp(log_c1)})
    return BoundReport.from_log(BoundId.WC_LOWER, 0.0, flags=("o_dagger_equals_1",))


def ac_lower(r: RegimeParams) -> BoundReport:
    """Necessary overcompleteness for success with probability -> 1 (d -> inf)."""
    if not r.eps2 < 1.0 - r.s:
        return BoundReport.invalid(BoundId.AC_LOWER, "eps < sqrt(1 - s) violated")
    log_c1, log_v = _lower_log(r)
    return BoundReport.from_log(BoundId.AC_LOWER, log_v, {"c1": math.exp(log_c1)})


def _h_short_form(x):
    lx = math.log(x)
    return (1.0 + 2.0 / lx) * (1.0 + math.log(lx) / lx + math.sqrt(math.e) / x)


def wc_upper_closed(r: RegimeParams, variant: str = "derivation") -> BoundReport:
    """Sufficient overcompleteness for universal representation (closed form).

    ``variant="derivation"`` uses h(x) with the sqrt(e)/(x log x) term;
    ``variant="short"`` uses the shorter sqrt(e)/x term.
    """
    if variant not in ("derivation", "short"):
        raise ValueError(f"unknown variant {variant!r}")
    if r.s > 1.0 / 3.0 + ONE_THIRD_TOL:
        return BoundReport.invalid(BoundId.WC_UPPER_CLOSED, "s <= 1/3 violated")
    inv, flags = _effective_inverse_sparsity(r.s)
    s = 1.0 / inv
    h = specfun.covering_h(inv) if variant == "derivation" else _h_short_form(inv)
    c2 = math.sqrt(2.0 * math.pi * (1.0 - r.eps2 * (1.0 - s) / (1.0 + s))) * h
    log_v = (
        math.log(c2)
        + math.log(math.log(inv))
        + 0.5 * math.log(inv)
        - (inv - 1.0) * math.log(r.eps)
    )
    return BoundReport.from_log(
        BoundId.WC_UPPER_CLOSED, log_v, {"c2": c2, "h": h, "s_inv": inv}, flags + (variant,)
    )


def wc_upper_exact(r: RegimeParams) -> BoundReport:
    """Sufficient overcompleteness 2 h(1/s) log(1/s) / I_{eps^2}((1-s)/(2s), 1/2)."""
    if r.s > 1.0 / 3.0 + ONE_THIRD_TOL:
        return BoundReport.invalid(BoundId.WC_UPPER_EXACT, "s^-1 >= 3 violated")
    inv, flags = _effective_inverse_sparsity(r.s)
    h = specfun.covering_h(inv)
    log_i = specfun.log_reg_inc_beta((inv - 1.0) / 2.0, 0.5, r.eps2)
    log_v = math.log(2.0 * h * math.log(inv)) - log_i
    return BoundReport.from_log(
        BoundId.WC_UPPER_EXACT, log_v, {"h": h, "s_inv": inv, "log_I": log_i}, flags
    )


def ac_upper_closed(r: RegimeParams) -> BoundReport:
    """Sufficient overcompleteness c4 * s^{1/2} * (1/eps)^{1/s-1} for success w.p. -> 1."""
    flags = () if _is_integer(r.s_inv) else ("s_inv_not_integer",)
    c4 = math.sqrt(math.pi / 2.0 * (1.0 - r.eps2 * (1.0 - r.s) / (1.0 + r.s)))
    log_v = math.log(c4) + 0.5 * math.log(r.s) - (r.s_inv - 1.0) * math.log(r.eps)
    return BoundReport.from_log(BoundId.AC_UPPER_CLOSED, log_v, {"c4": c4}, flags)


def ac_overcomp_exact(r: RegimeParams, delta: float | None = None) -> BoundReport:
    """Overcompleteness s / I_{delta^2}((1-s)/(2s), 1/2) guaranteeing E[Z] >= 1 - delta^2.

    ``constants["m"]`` is the implied number of atoms per block.
    """
    if delta is None:
        delta = r.eps
    if not 0.0 < delta <= r.eps:
        raise DomainError(f"delta must lie in (0, eps], got {delta!r}")
    log_i = specfun.log_reg_inc_beta((1.0 - r.s) / (2.0 * r.s), 0.5, delta * delta)
    log_v = math.log(r.s) - log_i
    m = math.ceil(math.exp(-log_i)) if -log_i < LOG_SATURATION else math.inf
    return BoundReport.from_log(BoundId.AC_OVERCOMP_EXACT, log_v, {"m": m, "delta": delta})


def ac_success_upper(r: RegimeParams, o: float, d: int) -> BoundReport:
    """Upper bound on the optimal success probability in dimension ``d``:

        P* <= (2 pi s (1 - s/o))^{-1/2} d^{-1/2} exp(-c3 d),
        c3 = D(1-s || eps^2)/2 - o H(s/o).
    """
    if not o > r.s:
        raise DomainError(f"overcompleteness o must exceed s, got o={o!r}, s={r.s!r}")
    if not d >= 1:
        raise DomainError(f"dimension d must be positive, got {d!r}")
    c3 = 0.5 * specfun.bernoulli_kl(1.0 - r.s, r.eps2) - o * specfun.bernoulli_entropy(r.s / o)
    log_p = -0.5 * math.log(2.0 * math.pi * r.s * (1.0 - r.s / o)) - 0.5 * math.log(d) - c3 * d
    flags = ("decays",) if c3 > 0 else ("no_decay",)
    return BoundReport.from_log(BoundId.AC_SUCCESS_UPPER, min(0.0, log_p), {"c3": c3}, flags)


def cantelli_success_lower(mu: float, sigma2: float, r: RegimeParams, d: int) -> float:
    """Cantelli lower bound on the success probability from the moments of Z.

        P* >= (1 + (1+2s) sigma2 / ((mu - 1 + eps^2)^2 s d))^{-1}
    """
    gap = mu - 1.0 + r.eps2
    if not gap > CANTELLI_TOL:
        raise HypothesisError(
            f"mu > 1 - eps^2 violated (mu - 1 + eps^2 = {gap:.3g}, tolerance {CANTELLI_TOL})"
        )
    if sigma2 < 0:
        raise DomainError(f"variance must be nonnegative, got {sigma2!r}")
    if not d >= 1:
        raise DomainError(f"dimension d must be positive, got {d!r}")
    return 1.0 / (1.0 + (1.0 + 2.0 * r.s) * sigma2 / (gap * gap * r.s * d))


def cantelli_success_lower_closed(r: RegimeParams, delta: float, o: float, d: int) -> BoundReport:
    """Closed-form finite-dimension success lower bound 1 - c5/(c5 + d)."""
    bid = BoundId.CANTELLI_CLOSED
    if r.eps2 > 0.5:
        return BoundReport.invalid(bid, "eps^2 <= 1/2 violated")
    if not 0.0 < delta < r.eps:
        return BoundReport.invalid(bid, "0 < delta < eps violated")
    a = (1.0 - r.s) / (2.0 * r.s)
    o_needed = r.s / specfun.reg_inc_beta(a, 0.5, delta * delta)
    if o < o_needed * (1.0 - 1e-12):
        return BoundReport.invalid(bid, f"o >= s / I_(delta^2)(a, 1/2) = {o_needed:.6g} violated")
    if not d >= 1:
        return BoundReport.invalid(bid, "d >= 1 violated")
    x = 1.0 - 2.0 * r.eps2
    if x > 0.0:
        term = x * math.exp((o / r.s) * specfun.log_reg_inc_beta(0.5, a, x))
    else:
        term = 0.0
    c5 = (term + r.eps2 * r.eps2) / (r.eps2 - delta * delta) ** 2 * (1.0 + 2.0 * r.s) / r.s
    p = 1.0 - c5 / (c5 + d)
    return BoundReport.from_log(bid, math.log(p), {"c5": c5, "o_needed": o_needed})


def subspace_coverage(d: int, k: int, eps: float) -> float:
    """Fraction of the unit sphere within distance eps of a fixed k-dim subspace:
    I_{eps^2}((d-k)/2, k/2)."""
    if int(d) != d or int(k) != k or not 1 <= k < d:
        raise DomainError(f"need integers 1 <= k < d, got d={d!r}, k={k!r}")
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0, 1), got {eps!r}")
    return specfun.reg_inc_beta((d - k) / 2.0, k / 2.0, eps * eps)


def _check_overlap(n, k):
    if int(n) != n or int(k) != k or not 1 <= k <= n:
        raise DomainError(f"need integers 1 <= k <= n, got n={n!r}, k={k!r}")


def overlap_pmf_exact(n: int, k: int) -> list:
    """Hypergeometric(n, k, k) pmf of the overlap of two random k-subsets, as Fractions."""
    _check_overlap(n, k)
    total = math.comb(n, k)
    return [Fraction(math.comb(k, l) * math.comb(n - k, k - l), total) for l in range(k + 1)]


def overlap_pmf(n: int, k: int) -> np.ndarray:
    _check_overlap(n, k)
    total = math.comb(n, k)
    return np.array([math.comb(k, l) * math.comb(n - k, k - l) / total for l in range(k + 1)])


class LogBinomialBounds(NamedTuple):
    lower: float
    exact: float
    upper: float


def log_binomial_bounds(n: int, k: int) -> LogBinomialBounds:
    """Entropy sandwich on log C(n, k), in nats."""
    if int(n) != n or int(k) != k or not 0 < k < n:
        raise DomainError(f"need integers 0 < k < n, got n={n!r}, k={k!r}")
    alpha = k / n
    nh = n * specfun.bernoulli_entropy(alpha)
    exact = math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
    lower = nh - 0.5 * math.log(8.0 * k * (1.0 - alpha))
    upper = nh - 0.5 * math.log(2.0 * math.pi * k * (1.0 - alpha))
    return LogBinomialBounds(lower, exact, upper)


def snr_db_to_eps(snr_db: float) -> float:
    """eps = 10^(-SNR_dB / 20)."""
    if not snr_db > 0:
        raise DomainError(f"SNR must be positive in dB (eps < 1), got {snr_db!r}")
    return 10.0 ** (-snr_db / 20.0)


def eps_to_snr_db(eps: float) -> float:
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0, 1), got {eps!r}")
    return -20.0 * math.log10(eps)
