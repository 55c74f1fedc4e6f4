"""Built-in property suites, run by ``univsparse selftest``.

Each suite returns a :class:`SuiteResult`; the test-suite exercises the same
checks with tighter bookkeeping.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import stats

from . import bounds, specfun
from .coder import block_exact, eval_error, omp
from .montecarlo import order_stat_check, variance_bound_check
from .randmodel import ProblemInstance, derive_stream, gen_blockdiag_dict

__all__ = ["SUITES", "SuiteResult", "closed_form_cases", "beta_bound_grid", "sort_oracle_error"]


@dataclass
class SuiteResult:
    ok: bool
    details: list = field(default_factory=list)


def closed_form_cases():
    """(a, b, closed-form CDF) triples with elementary expressions."""
    return [
        (0.5, 0.5, lambda x: 2.0 / math.pi * math.asin(math.sqrt(x))),
        (1.0, 0.5, lambda x: 1.0 - math.sqrt(1.0 - x)),
        (1.0, 1.0, lambda x: x),
        (1.0, 4.0, lambda x: 1.0 - (1.0 - x) ** 4),
        (2.0, 0.5, lambda x: 1.0 - math.sqrt(1.0 - x) * (1.0 + x / 2.0)),
        (2.0, 1.0, lambda x: x * x),
        (2.0, 4.0, lambda x: 1.0 - (1.0 - x) ** 4 * (1.0 + 4.0 * x)),
    ]


def _specfun(args):
    xs = np.linspace(0.0, 1.0, 201)
    worst = worst_inv = 0.0
    for a, b, f in closed_form_cases():
        for x in xs:
            worst = max(worst, abs(specfun.reg_inc_beta(a, b, float(x)) - f(float(x))))
        for p in np.linspace(0.01, 0.99, 25):
            x = specfun.reg_inc_beta_inv(a, b, float(p))
            worst_inv = max(worst_inv, abs(specfun.reg_inc_beta(a, b, x) - p))
    return SuiteResult(worst <= 1e-10 and worst_inv <= 1e-9,
                       [f"max closed-form error {worst:.3g}", f"max inverse round-trip error {worst_inv:.3g}"])


def beta_bound_grid():
    a_vals = np.geomspace(0.05, 50.0, 20)
    b_vals = np.linspace(0.1, 1.0, 10)
    x_vals = np.linspace(0.0, 1.0, 52)[1:-1]
    return a_vals, b_vals, x_vals


def _beta_lower_bound(args):
    a_vals, b_vals, x_vals = beta_bound_grid()
    violations = 0
    for a, b, x in itertools.product(a_vals, b_vals, x_vals):
        a, b, x = float(a), float(b), float(x)
        lb = specfun.log_beta_lower_bound(a, b, x)
        exact = specfun.log_reg_inc_beta(a, b, x)
        if lb > exact + 1e-12 * max(1.0, abs(exact)):
            violations += 1
    ratio = math.exp(specfun.cap_bounds_frankl(10_000, 0.5, log=True).our_lower
                     - specfun.cap_bounds_frankl(10_000, 0.5, log=True).upper)
    return SuiteResult(violations == 0 and ratio >= 0.999,
                       [f"{violations} violations on {len(a_vals) * len(b_vals) * len(x_vals)} points",
                        f"our_lower/upper at d=1e4, eps=0.5: {ratio:.6f}"])


def _constants(args):
    bad = []
    for s in np.round(np.arange(0.01, 1.0, 0.01), 2):
        for eps in np.round(np.arange(0.01, 1.0, 0.01), 2):
            r = bounds.RegimeParams(float(s), float(eps))
            lo = bounds.wc_lower(r)
            if "c1" in lo.constants and lo.constants["c1"] < math.exp(-1.5):
                bad.append(("c1", s, eps))
            if bounds.ac_upper_closed(r).constants["c4"] > math.sqrt(math.pi / 2):
                bad.append(("c4", s, eps))
            up = bounds.wc_upper_closed(r)
            if up.valid and up.constants["c2"] > 12:
                bad.append(("c2", s, eps))
    return SuiteResult(not bad, [f"{len(bad)} constant violations"] + [str(b) for b in bad[:5]])


def _projection(args):
    d, k, samples = 40, 8, 10_000
    gen = derive_stream(args.seed, 0)
    x = gen.standard_normal((samples, d))
    t = np.sum(x[:, :k] ** 2, axis=1) / np.sum(x * x, axis=1)
    ks = stats.kstest(t, stats.beta(k / 2, (d - k) / 2).cdf)
    return SuiteResult(ks.pvalue > 0.01, [f"KS statistic {ks.statistic:.4f}, p-value {ks.pvalue:.4f}"])


def _overlap(args):
    n, k = args.n, args.k
    pmf = bounds.overlap_pmf_exact(n, k)
    total = math.comb(n, k)
    text = "[" + ", ".join(f"{int(p * total)}/{total}" for p in pmf) + "]"
    mean = sum(l * p for l, p in enumerate(pmf))
    var = sum(l * l * p for l, p in enumerate(pmf)) - mean * mean
    want_var = k * Fraction(k, n) * (1 - Fraction(k, n)) * Fraction(n - k, n - 1)
    ok = sum(pmf) == 1 and mean == Fraction(k * k, n) and var == want_var
    return SuiteResult(ok, [f"overlap pmf (n={n}, k={k}): {text}",
                            f"mean {mean} (k^2/n = {Fraction(k * k, n)}), sd {math.sqrt(var):.6g}"])


def _order_stat(args):
    lines, ok = [], True
    for m in (2, 10, 50):
        res = order_stat_check(0.2, m, 20_000, args.seed)
        ok &= res.holds
        lines.append(f"m={m}: mean {res.empirical_mean:.5f} >= bound {res.quantile_bound:.5f}: {res.holds}")
    return SuiteResult(ok, lines)


def _variance_bound(args):
    ok, lines = True, []
    for s, m, rho in itertools.product((0.1, 0.2, 1 / 3), (1, 10, 100, 1000), (0.05, 0.1, 0.25)):
        bound, holds = variance_bound_check(s, m, rho)
        ok &= holds
        if not holds:
            lines.append(f"violated at s={s:.4g}, m={m}, rho={rho}: bound {bound:.4g}")
    popov, _ = variance_bound_check(0.2, 10, 0.5)
    ok &= popov == 0.25
    lines.append(f"rho=1/2 bound: {popov}")
    return SuiteResult(ok, lines)


def brute_force_block_error(x, dic):
    """Enumerate every one-atom-per-block support and return the smallest error."""
    k = dic.n_blocks
    m = dic.n // k
    best = 1.0
    for choice in itertools.product(range(m), repeat=k):
        support = [i * m + j for i, j in enumerate(choice)]
        best = min(best, eval_error(x, dic, support)[0])
    return best


def _block_equivalence(args):
    inst = ProblemInstance(8, 4, 12)
    worst = 0.0
    for t in range(5):
        gen = derive_stream(args.seed, t)
        dic = gen_blockdiag_dict(inst, gen)
        x = gen.standard_normal(inst.d)
        worst = max(worst, abs(block_exact(x, dic).relative_error - brute_force_block_error(x, dic)))
    return SuiteResult(worst <= 1e-10, [f"max deviation from enumeration {worst:.3g}"])


def sort_oracle_error(x, k):
    """Best k-term error in the standard basis: drop the d-k smallest squares."""
    x = np.asarray(x, dtype=float)
    sq = np.sort((x / np.max(np.abs(x))) ** 2)
    return math.sqrt(sq[: len(sq) - k].sum() / sq.sum())


def _identity_omp(args):
    d, k = 50, 10
    eye = np.eye(d)
    worst = 0.0
    gen = derive_stream(args.seed, 0)
    for _ in range(100):
        x = gen.standard_normal(d)
        worst = max(worst, abs(omp(x, eye, k).relative_error - sort_oracle_error(x, k)))
    uniform = omp(np.ones(d), eye, k).relative_error ** 2
    ok = worst <= 1e-10 and abs(uniform - (1 - k / d)) <= 1e-12
    return SuiteResult(ok, [f"max deviation from sort oracle {worst:.3g}", f"uniform signal error^2 {uniform!r}"])


SUITES = {
    "specfun": _specfun,
    "beta_lower_bound": _beta_lower_bound,
    "constants": _constants,
    "projection": _projection,
    "overlap": _overlap,
    "order_stat": _order_stat,
    "variance_bound": _variance_bound,
    "block_equivalence": _block_equivalence,
    "identity_omp": _identity_omp,
}
