"""Secrecy bounds, message-set selection, and exact leakage evaluation.

Implements the non-asymptotic random-coding achievability and converse
for the semi-deterministic binary-erasure wiretap channel, both built
from two binomial expectations

    g_n(gamma) = 1 - E[2^(-max(n - B - log2(gamma), 0))]
    h_n(gamma) = E[2^(-|n - B - log2(gamma)|)]      B ~ Binom(n, p),

the second-order normal approximation p - sqrt(p(1-p)/n) Qinv(delta),
the closed-form average TVD of coset codes with MDS outer structure,
the greedy leakage-budget selection of message positions, and an exact
exhaustive leakage computation for small blocklengths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import IO, Optional, Sequence

import numpy as np
from scipy.stats import binom as _binom

from . import _accel
from ._config import resolve_enum_cap
from .bitchannel import (
    BitChannelEstimate,
    Conditioning,
    ErasureTrialPlan,
    exact_erasure_probs,
    mc_erasure_probs,
)
from .codes import (
    CodeSpec,
    WiretapCode,
    build_generator,
    inner_generator,
    rm_profile_order,
    spec_to_dict,
)

__all__ = [
    "BoundResult",
    "SelectionResult",
    "g_n",
    "h_n",
    "achievability_delta",
    "achievability_detail",
    "k_achiev",
    "converse_max_k",
    "second_order_rate",
    "q_inv",
    "mds_avg_tvd",
    "select_message_set",
    "leakage_bound_sum",
    "exact_leakage",
    "code_rate_curve",
    "write_rates_csv",
]

DEFAULT_LEAKAGE_CAP = 12

_GRID_STEP = 0.01
_REFINE_TOL = 1e-6
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@lru_cache(maxsize=128)
def _binom_weights(n: int, p: float) -> np.ndarray:
    w = _binom.pmf(np.arange(n + 1), n, p)
    w.setflags(write=False)
    return w


def _check_gamma(gamma: float) -> float:
    if not gamma > 0.0:
        raise ValueError(f"gamma must be positive: {gamma}")
    return math.log2(gamma)


def g_n(gamma: float, n: int, p: float) -> float:
    lg = _check_gamma(gamma)
    w = _binom_weights(n, p)
    terms = (w[b] * 2.0 ** (-max(n - b - lg, 0.0)) for b in range(n + 1))
    # the sum of weights can land a hair above 1.0 in floats
    return max(0.0, 1.0 - math.fsum(terms))


def h_n(gamma: float, n: int, p: float) -> float:
    lg = _check_gamma(gamma)
    w = _binom_weights(n, p)
    terms = (w[b] * 2.0 ** (-abs(n - b - lg)) for b in range(n + 1))
    return math.fsum(terms)


def _g_of_log2gamma(lg: float, n: int, p: float) -> float:
    w = _binom_weights(n, p)
    total = math.fsum(w[b] * 2.0 ** (-max(n - b - lg, 0.0)) for b in range(n + 1))
    return max(0.0, 1.0 - total)


def _h_of_log2gamma(lg: float, n: int, p: float) -> float:
    w = _binom_weights(n, p)
    return math.fsum(w[b] * 2.0 ** (-abs(n - b - lg)) for b in range(n + 1))


@lru_cache(maxsize=32)
def _gh_grid(n: int, p: float):
    """g and h tabulated over log2(gamma) in [-n, 2n] with step 0.01."""
    npts = int(round(3 * n / _GRID_STEP)) + 1
    lg = -n + _GRID_STEP * np.arange(npts)
    w = _binom_weights(n, p)
    b = np.arange(n + 1, dtype=np.float64)
    g = np.empty(npts)
    h = np.empty(npts)
    block = 4096
    for lo in range(0, npts, block):
        hi = min(lo + block, npts)
        expo = n - b[:, None] - lg[None, lo:hi]
        g[lo:hi] = 1.0 - (w[:, None] * np.exp2(-np.maximum(expo, 0.0))).sum(axis=0)
        h[lo:hi] = (w[:, None] * np.exp2(-np.abs(expo))).sum(axis=0)
    lg.setflags(write=False)
    g.setflags(write=False)
    h.setflags(write=False)
    return lg, g, h


def _objective(lg: float, n: int, k: int, p: float) -> float:
    g = _g_of_log2gamma(lg, n, p)
    h = _h_of_log2gamma(lg, n, p)
    return g + math.sqrt(g * g + 2.0 ** (lg - (n - k)) * h)


def _golden_min(f, a: float, b: float, tol: float):
    """Golden-section minimum of f on [a, b] to absolute tolerance tol in x."""
    x1 = b - _INVPHI * (b - a)
    x2 = a + _INVPHI * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INVPHI * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INVPHI * (b - a)
            f2 = f(x2)
    return (x1, f1) if f1 <= f2 else (x2, f2)


def achievability_detail(n: int, k: int, p: float):
    """Random-coding achievable leakage for 2^k messages, with the minimizer.

    Returns (delta, gamma_star, bracket): the certified minimum of
    (1/2)(g + sqrt(g^2 + gamma 2^(k-n) h)) over gamma > 0, found on a
    coarse log2(gamma) grid and refined by golden section, the argmin,
    and the grid bracket that was refined.
    """
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, n]: k={k}, n={n}")
    lg, g, h = _gh_grid(n, p)
    phi = g + np.sqrt(g * g + np.exp2(lg - (n - k)) * h)
    j = int(np.argmin(phi))
    a = lg[max(j - 1, 0)]
    b = lg[min(j + 1, len(lg) - 1)]
    x, fx = _golden_min(lambda t: _objective(t, n, k, p), a, b, _REFINE_TOL)
    best_grid = float(phi[j])
    if fx <= best_grid:
        best, arg = float(fx), float(x)
    else:
        best, arg = best_grid, float(lg[j])
    return 0.5 * best, 2.0**arg, (float(a), float(b))


def achievability_delta(n: int, k: int, p: float) -> float:
    return achievability_detail(n, k, p)[0]


def k_achiev(n: int, p: float, delta: float) -> int:
    """Largest k whose random-coding achievable leakage stays within delta."""
    if achievability_delta(n, 1, p) > delta:
        return 0
    lo, hi = 1, n
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if achievability_delta(n, mid, p) <= delta:
            lo = mid
        else:
            hi = mid - 1
    return lo


def _g_at_k(n: int, k: int, p: float) -> float:
    # gamma = 2^(n-k) turns the exponent into max(k - B, 0)
    w = _binom_weights(n, p)
    return 1.0 - math.fsum(w[b] * 2.0 ** (-max(k - b, 0)) for b in range(n + 1))


def converse_max_k(n: int, p: float, delta: float) -> int:
    """Largest k allowed by the converse g_n(2^n / M) <= delta; k=0 always is."""
    if not 0.0 <= delta < 1.0:
        raise ValueError(f"delta must be in [0, 1): {delta}")
    lo, hi = 0, n
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if _g_at_k(n, mid, p) <= delta:
            lo = mid
        else:
            hi = mid - 1
    return lo


def q_inv(delta: float) -> float:
    """Inverse of Q(x) = erfc(x / sqrt(2)) / 2 by bisection to 1e-10 in x."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must be in (0, 1): {delta}")
    lo, hi = -40.0, 40.0
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        if 0.5 * math.erfc(mid / math.sqrt(2.0)) > delta:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def second_order_rate(n: int, p: float, delta: float) -> float:
    """Normal approximation p - sqrt(p(1-p)/n) Qinv(delta); may be negative."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must be in (0, 1): {delta}")
    return p - math.sqrt(p * (1.0 - p) / n) * q_inv(delta)


def mds_avg_tvd(n: int, k: int, p: float) -> float:
    """Closed-form average TVD of a coset code whose outer code is (n, n-k) MDS."""
    if not 0 <= k <= n:
        raise ValueError(f"k must be in [0, n]: k={k}, n={n}")
    terms = (
        (1.0 - 2.0 ** (-(k - e))) * math.comb(n, e) * p**e * (1.0 - p) ** (n - e)
        for e in range(k)
    )
    return math.fsum(terms)


@dataclass(frozen=True)
class SelectionResult:
    message_set: tuple[int, ...]
    k: int
    leakage_bound: float


def select_message_set(
    estimates: Sequence[BitChannelEstimate],
    delta: float,
    order: Optional[Sequence[int]] = None,
) -> SelectionResult:
    """Greedy message-set choice under the budget (1/2) sum (1 - p_i) <= delta.

    Default order is descending erasure probability (worst eavesdropper
    bit-channels first), ties broken by ascending index; pass an explicit
    order (e.g. a row-weight rate profile) to override.  The longest
    prefix whose cumulative bound stays within delta is returned.
    """
    if delta < 0.0:
        raise ValueError(f"delta must be >= 0: {delta}")
    by_index = {est.index: est for est in estimates}
    if order is None:
        ranked = sorted(estimates, key=lambda est: (-est.erasure_prob, est.index))
    else:
        missing = [i for i in order if i not in by_index]
        if missing:
            raise ValueError(f"order refers to indices without estimates: {missing}")
        ranked = [by_index[i] for i in order]
    chosen: list[int] = []
    partial: list[float] = []
    for est in ranked:
        partial.append(est.tvd)
        if math.fsum(partial) > delta:
            partial.pop()
            break
        chosen.append(est.index)
    bound = math.fsum(partial)
    return SelectionResult(tuple(sorted(chosen)), len(chosen), bound)


def leakage_bound_sum(estimates: Sequence[BitChannelEstimate], message_set) -> float:
    """(1/2) sum over the message set of (1 - p_i), for given estimates."""
    by_index = {est.index: est for est in estimates}
    try:
        return math.fsum(by_index[i].tvd for i in message_set)
    except KeyError as exc:
        raise ValueError(f"no estimate for index {exc}") from None


def exact_leakage(code: WiretapCode, p: float, cap: Optional[int] = None) -> float:
    """Exact average TVD between (message, observation) and independence.

    Enumerates eavesdropper outputs grouped by erasure pattern: for a
    pattern with e erasures, one elimination of the randomness rows on
    the unerased columns yields the coset-consistency counts for all
    2^k messages and all unerased values at once, and the group's total
    contribution is p^e (1-p)^(n-e) (1 - 2^(rho - (n-e))) with rho the
    rank of that submatrix.
    """
    if not 0.0 <= p < 1.0:
        raise ValueError(f"erasure probability must be in [0, 1): {p}")
    n = code.n
    limit = resolve_enum_cap(DEFAULT_LEAKAGE_CAP, cap)
    if n > limit:
        raise ValueError(f"n={n} exceeds enumeration cap {limit} (2^n patterns)")
    rows = code.generator.words[list(code.randomness_set)]
    rows = np.ascontiguousarray(rows.reshape(len(code.randomness_set), -1))
    weights = np.array([p**e * (1.0 - p) ** (n - e) for e in range(n + 1)])
    return float(_accel.leakage_sum(rows, n, weights))


@dataclass(frozen=True)
class BoundResult:
    """All bound families evaluated at one (n, p, delta) point."""

    n: int
    p: float
    delta: float
    k_converse: int
    k_achiev_rc: int
    rate_second_order: float
    k_code: Optional[int] = None
    leakage_bound: Optional[float] = None
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not 0 <= self.k_achiev_rc <= self.k_converse <= self.n:
            raise ValueError(
                f"bound ordering violated: 0 <= {self.k_achiev_rc} <= "
                f"{self.k_converse} <= {self.n}"
            )
        if self.k_code is not None and not 0 <= self.k_code <= self.n:
            raise ValueError(f"k_code out of range: {self.k_code}")

    @property
    def rate_converse(self) -> float:
        return self.k_converse / self.n

    @property
    def rate_achiev_rc(self) -> float:
        return self.k_achiev_rc / self.n

    @property
    def rate_code(self) -> Optional[float]:
        return None if self.k_code is None else self.k_code / self.n


def code_rate_curve(
    spec: CodeSpec,
    p: float,
    delta: float,
    plan: Optional[ErasureTrialPlan] = None,
    profile: str = "tvd",
    exact: bool = False,
    estimates: Optional[Sequence[BitChannelEstimate]] = None,
    enum_cap: Optional[int] = None,
) -> BoundResult:
    """Evaluate one code against every bound family at (n, p, delta).

    Bit-channel estimates come from the supplied list, exhaustive
    enumeration (exact=True), or a Monte-Carlo plan.  profile='tvd'
    selects message positions by worst erasure probability; 'rm' uses
    the row-weight order of the inner transform.
    """
    n = spec.n
    meta: dict = {"spec": spec_to_dict(spec), "profile": profile}
    if estimates is not None:
        meta["estimator"] = "supplied"
    elif exact:
        generator = build_generator(spec)
        cond = plan.conditioning if plan is not None else Conditioning.all_past()
        estimates = exact_erasure_probs(generator, p, cond, cap=enum_cap)
        meta["estimator"] = "exact"
    else:
        if plan is None:
            raise ValueError("need a trial plan, exact=True, or precomputed estimates")
        estimates = mc_erasure_probs(spec, plan)
        meta["estimator"] = "mc"
    if plan is not None:
        meta.update(trials=plan.trials, seed=plan.seed, conditioning=plan.conditioning.describe())
    order = None
    if profile == "rm":
        order = rm_profile_order(inner_generator(spec))
    elif profile != "tvd":
        raise ValueError(f"unknown profile {profile!r}")
    selection = select_message_set(estimates, delta, order=order)
    kc = converse_max_k(n, p, delta)
    d_at_kc, gamma_star, bracket = (None, None, None)
    ka = k_achiev(n, p, delta)
    if ka >= 1:
        d_at_kc, gamma_star, bracket = achievability_detail(n, ka, p)
    meta.update(gamma_star=gamma_star, gamma_bracket=bracket, achiev_delta_at_k=d_at_kc)
    return BoundResult(
        n=n,
        p=p,
        delta=delta,
        k_converse=kc,
        k_achiev_rc=ka,
        rate_second_order=second_order_rate(n, p, delta),
        k_code=selection.k,
        leakage_bound=selection.leakage_bound,
        metadata=meta,
    )


def write_rates_csv(fh: IO[str], results: Sequence[BoundResult], metadata: dict) -> None:
    for key, value in metadata.items():
        fh.write(f"# {key}: {value}\n")
    for i, res in enumerate(results):
        if res.metadata:
            fh.write(f"# row {i}: {res.metadata}\n")
    fh.write(
        "n,p,delta,rate_converse,rate_achiev_rc,rate_second_order,rate_code,"
        "k_converse,k_achiev_rc,k_code,leakage_bound\n"
    )
    for res in results:
        rate_code = "" if res.rate_code is None else repr(res.rate_code)
        k_code = "" if res.k_code is None else res.k_code
        leak = "" if res.leakage_bound is None else repr(res.leakage_bound)
        fh.write(
            f"{res.n},{res.p!r},{res.delta!r},{res.rate_converse!r},"
            f"{res.rate_achiev_rc!r},{res.rate_second_order!r},{rate_code},"
            f"{res.k_converse},{res.k_achiev_rc},{k_code},{leak}\n"
        )
