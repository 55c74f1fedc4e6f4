"""Monte Carlo experiments: success probabilities of concrete sparse coding
schemes, minimal-overcompleteness scans, and the moments of the per-block
maximum Z of m independent Beta(1/2, (1-s)/(2s)) variables.

Determinism contract: trial ``t`` draws its signal (and, in fresh-dictionary
mode, its dictionary) from ``derive_stream(seed, t)``; the shared dictionary
comes from the reserved stream :data:`~univsparse.randmodel.DICT_STREAM`.
Trials are processed in fixed chunks of :data:`CHUNK`, so the numbers are the
same for any worker count.
"""
from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import integrate

from . import specfun
from .coder import _rescale_rows, block_exact_batch, greedy_supports
from .errors import ConfigurationError, DomainError, HypothesisError, ScanLimitError
from .randmodel import (
    DICT_STREAM,
    ProblemInstance,
    derive_stream,
    gen_blockdiag_dict,
    gen_gaussian_dict,
)

__all__ = [
    "CHUNK",
    "OrderStatCheck",
    "ScanResult",
    "SuccessEstimate",
    "ZMoments",
    "config_digest",
    "estimate_success",
    "order_stat_check",
    "scan_min_overcompleteness",
    "trial_errors",
    "variance_bound_check",
    "wilson_interval",
    "z_moments_mc",
    "z_moments_quadrature",
]

CHUNK = 32
DICT_KINDS = ("dense", "block")
CODER_KINDS = ("omp", "group_omp", "block_exact")
Z95 = 1.959963984540054
QUAD_TOL = 1e-10
# quantile levels of Z used as quadrature breakpoints
_BREAK_LEVELS = (1e-8, 1e-3, 0.05, 0.25, 0.5, 0.75, 0.95, 0.999, 1 - 1e-8)
_MC_BLOCK = 1 << 21


def wilson_interval(successes: int, trials: int, z: float = Z95) -> tuple:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise DomainError("trials must be positive")
    if not 0 <= successes <= trials:
        raise DomainError(f"need 0 <= successes <= trials, got {successes}/{trials}")
    p = successes / trials
    z2 = z * z
    den = 1.0 + z2 / trials
    centre = (p + z2 / (2 * trials)) / den
    half = z * math.sqrt(p * (1.0 - p) / trials + z2 / (4 * trials * trials)) / den
    # clamp so that rounding never pushes p_hat outside its own interval
    return min(p, max(0.0, centre - half)), max(p, min(1.0, centre + half))


def config_digest(inst: ProblemInstance, eps: float, coder_kind: str, dict_kind: str,
                  fresh_dict_per_trial: bool = False) -> str:
    payload = json.dumps(
        {"d": inst.d, "k": inst.k, "n": inst.n, "eps": float(eps).hex(), "coder": coder_kind,
         "dict": dict_kind, "fresh": bool(fresh_dict_per_trial)},
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class SuccessEstimate:
    trials: int
    successes: int
    p_hat: float
    ci_low: float
    ci_high: float
    master_seed: int
    config_digest: str

    @property
    def std_error(self) -> float:
        return math.sqrt(self.p_hat * (1.0 - self.p_hat) / self.trials)


@dataclass(frozen=True)
class ZMoments:
    mu: float
    sigma2: float
    method: str
    error_estimate: float
    sigma2_error: float | None = None


def _check_kinds(inst, dict_kind, coder_kind):
    if dict_kind not in DICT_KINDS:
        raise ConfigurationError(f"unknown dictionary kind {dict_kind!r}; choose from {DICT_KINDS}")
    if coder_kind not in CODER_KINDS:
        raise ConfigurationError(f"unknown coder {coder_kind!r}; choose from {CODER_KINDS}")
    if dict_kind == "block":
        inst.check_blocks()
    if coder_kind == "block_exact" and dict_kind != "block":
        raise ConfigurationError("block_exact requires a block-diagonal dictionary")
    if coder_kind == "group_omp" and inst.n % inst.k:
        raise ConfigurationError(f"group_omp needs k | n (k={inst.k}, n={inst.n})")


def _make_dict(inst, dict_kind, gen, provenance):
    if dict_kind == "block":
        return gen_blockdiag_dict(inst, gen, provenance)
    return gen_gaussian_dict(inst, gen, provenance)


def _code_errors(X, dic, inst, coder_kind, eps_target):
    if coder_kind == "block_exact":
        return block_exact_batch(X, dic.blocks)[2]
    phi = dic.entries
    X = _rescale_rows(X)
    group = inst.n // inst.k if coder_kind == "group_omp" else None
    supports = greedy_supports(X, phi, inst.k, eps_target, group_size=group)
    xnorm = np.linalg.norm(X, axis=1)
    errs = np.empty(X.shape[0])
    for b, sup in enumerate(supports):
        if not sup:
            errs[b] = 1.0
            continue
        sub = phi[:, sup]
        coef, *_ = np.linalg.lstsq(sub, X[b], rcond=None)
        errs[b] = min(1.0, np.linalg.norm(X[b] - sub @ coef) / xnorm[b])
    return errs


def trial_errors(inst: ProblemInstance, dict_kind: str, coder_kind: str, trials: int, seed: int,
                 fresh_dict_per_trial: bool = False, threads: int = 1,
                 eps_target: float = 0.0) -> np.ndarray:
    """Relative representation error of each trial, in trial order.

    Greedy coders stop early once the error reaches ``eps_target``; that does
    not change whether a trial meets ``eps_target``, only how much work it takes.
    """
    _check_kinds(inst, dict_kind, coder_kind)
    if trials < 1:
        raise DomainError(f"trials must be positive, got {trials!r}")
    if threads < 1:
        raise DomainError(f"threads must be positive, got {threads!r}")
    shared = None
    if not fresh_dict_per_trial:
        shared = _make_dict(inst, dict_kind, derive_stream(seed, DICT_STREAM), (seed, DICT_STREAM))

    def run_chunk(start):
        stop = min(start + CHUNK, trials)
        if shared is not None:
            X = np.stack([derive_stream(seed, t).standard_normal(inst.d) for t in range(start, stop)])
            return _code_errors(X, shared, inst, coder_kind, eps_target)
        out = np.empty(stop - start)
        for t in range(start, stop):
            gen = derive_stream(seed, t)
            x = gen.standard_normal(inst.d)
            dic = _make_dict(inst, dict_kind, gen, (seed, t))
            out[t - start] = _code_errors(x[None, :], dic, inst, coder_kind, eps_target)[0]
        return out

    starts = range(0, trials, CHUNK)
    if threads == 1:
        parts = [run_chunk(s0) for s0 in starts]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run_chunk, starts))
    return np.concatenate(parts)


def estimate_success(inst: ProblemInstance, eps: float, dict_kind: str = "dense",
                     coder_kind: str = "omp", trials: int = 1000, seed: int = 0,
                     fresh_dict_per_trial: bool = False, threads: int = 1) -> SuccessEstimate:
    """Estimate P(relative error <= eps) for one coder/dictionary pair."""
    if not 0.0 <= eps <= 1.0:
        raise DomainError(f"eps must lie in [0, 1], got {eps!r}")
    errs = trial_errors(inst, dict_kind, coder_kind, trials, seed, fresh_dict_per_trial,
                        threads, eps_target=eps)
    successes = int(np.count_nonzero(errs <= eps))
    lo, hi = wilson_interval(successes, trials)
    return SuccessEstimate(trials, successes, successes / trials, lo, hi, int(seed),
                           config_digest(inst, eps, coder_kind, dict_kind, fresh_dict_per_trial))


def _z_shapes(s, m):
    if not 0.0 < s < 1.0:
        raise DomainError(f"sparsity factor s must lie in (0, 1), got {s!r}")
    if int(m) != m or m < 1:
        raise DomainError(f"m must be a positive integer, got {m!r}")
    return 0.5, (1.0 - s) / (2.0 * s)


def _z_survival(alpha, a, b, m):
    # 1 - I_alpha(a, b)^m without cancellation when the power is close to one
    if alpha <= 0.0:
        return 1.0
    if alpha >= 1.0:
        return 0.0
    return -math.expm1(m * specfun.log_reg_inc_beta(a, b, alpha))


def z_cdf(alpha: float, s: float, m: int) -> float:
    """CDF of the maximum of m i.i.d. Beta(1/2, (1-s)/(2s)) variables."""
    a, b = _z_shapes(s, m)
    return 1.0 - _z_survival(alpha, a, b, m)


def z_moments_quadrature(s: float, m: int) -> ZMoments:
    """Mean and variance of Z from its survival function by adaptive quadrature."""
    a, b = _z_shapes(s, m)
    pts = sorted({specfun.reg_inc_beta_inv(a, b, q ** (1.0 / m)) for q in _BREAK_LEVELS} | {0.0, 1.0})
    mu = ez2 = err1 = err2 = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        if hi <= lo:
            continue
        v1, e1 = integrate.quad(_z_survival, lo, hi, args=(a, b, m), epsabs=QUAD_TOL / 10,
                                epsrel=QUAD_TOL, limit=200)
        v2, e2 = integrate.quad(lambda t: 2.0 * t * _z_survival(t, a, b, m), lo, hi,
                                epsabs=QUAD_TOL / 10, epsrel=QUAD_TOL, limit=200)
        mu += v1
        ez2 += v2
        err1 += e1
        err2 += e2
    sigma2 = max(0.0, ez2 - mu * mu)
    return ZMoments(mu, sigma2, "quadrature", err1, err2 + 2.0 * mu * err1)


def z_samples(s: float, m: int, samples: int, seed: int) -> np.ndarray:
    """Draws of Z, generated block by block from per-block streams."""
    a, b = _z_shapes(s, m)
    rows = max(1, _MC_BLOCK // int(m))
    out = np.empty(samples)
    for i, start in enumerate(range(0, samples, rows)):
        stop = min(start + rows, samples)
        gen = derive_stream(seed, i)
        out[start:stop] = gen.beta(a, b, size=(stop - start, int(m))).max(axis=1)
    return out


def z_moments_mc(s: float, m: int, samples: int = 100_000, seed: int = 0) -> ZMoments:
    """Sample mean and variance of Z with their standard errors."""
    if samples < 100:
        raise DomainError(f"need at least 100 samples, got {samples!r}")
    z = z_samples(s, m, samples, seed)
    mu = float(np.mean(z))
    dev = z - mu
    sigma2 = float(np.mean(dev * dev)) * samples / (samples - 1)
    m4 = float(np.mean(dev ** 4))
    se_mu = math.sqrt(sigma2 / samples)
    se_var = math.sqrt(max(m4 - sigma2 * sigma2, 0.0) / samples)
    return ZMoments(mu, sigma2, "monte_carlo", se_mu, se_var)


def variance_bound_check(s: float, m: int, rho: float) -> tuple:
    """Bound Var(Z) <= (1 - 2 rho) F_Z(1 - 2 rho) + rho^2 and whether the
    quadrature variance satisfies it. Returns ``(bound, holds)``."""
    if not 0.0 <= rho <= 0.5:
        raise DomainError(f"rho must lie in [0, 1/2], got {rho!r}")
    x = 1.0 - 2.0 * rho
    bound = x * z_cdf(x, s, m) + rho * rho
    mom = z_moments_quadrature(s, m)
    return bound, bool(mom.sigma2 <= bound + mom.sigma2_error)


class OrderStatCheck(NamedTuple):
    empirical_mean: float
    quantile_bound: float
    holds: bool


def order_stat_check(s: float, m: int, samples: int = 100_000, seed: int = 0) -> OrderStatCheck:
    """Compare the simulated mean of Z against F^{-1}(m/(m+1)).

    The lower bound needs a concave CDF, which for Beta(1/2, b) means b >= 1,
    i.e. s <= 1/3.
    """
    a, b = _z_shapes(s, m)
    if b < 1.0 - 1e-12:
        raise HypothesisError(f"concave CDF needs s <= 1/3, got s={s!r}")
    mom = z_moments_mc(s, m, samples, seed)
    bound = specfun.reg_inc_beta_inv(a, b, m / (m + 1.0))
    return OrderStatCheck(mom.mu, bound, bool(mom.mu + 3.0 * mom.error_estimate >= bound))


class ScanPoint(NamedTuple):
    o: float
    n: int
    p_hat: float
    ci_low: float
    ci_high: float


@dataclass(frozen=True)
class ScanResult:
    d: int
    o_min: float
    trace: list = field(default_factory=list)


def scan_min_overcompleteness(d: int, s: float, eps: float, target_p: float = 0.99,
                              coder_kind: str = "omp", dict_kind: str = "dense",
                              trials: int = 200, o_step: float = 0.5, seed: int = 0,
                              o_cap: float = 200.0, threads: int = 1) -> ScanResult:
    """Smallest scanned o = n/d whose estimated success probability reaches
    ``target_p``.

    n starts at k and grows by round(o_step * d), rounded up to a multiple of k
    for block dictionaries and group coders. Raises :class:`ScanLimitError`
    (carrying the trace) once o exceeds ``o_cap``.
    """
    if not 0.0 < target_p < 1.0:
        raise DomainError(f"target_p must lie in (0, 1), got {target_p!r}")
    if not o_step > 0:
        raise DomainError(f"o_step must be positive, got {o_step!r}")
    inst0 = ProblemInstance.from_ratios(d, s, 1.0)
    k = inst0.k
    step = max(1, round(o_step * d))
    if dict_kind == "block" or coder_kind == "group_omp":
        step = k * max(1, math.ceil(step / k))
    trace = []
    n = k
    while n / d <= o_cap:
        inst = ProblemInstance(d, k, n)
        est = estimate_success(inst, eps, dict_kind, coder_kind, trials, seed, threads=threads)
        trace.append(ScanPoint(n / d, n, est.p_hat, est.ci_low, est.ci_high))
        if est.p_hat >= target_p:
            return ScanResult(d, n / d, trace)
        n += step
    err = ScanLimitError(f"success probability {target_p} not reached for o <= {o_cap} (d={d})")
    err.trace = trace
    raise err
