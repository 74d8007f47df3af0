"""Binomial kernels in log space, the AddBias acceptance rule, and the label-gap DP."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .combin import log_choose

NEG_INF = float("-inf")


@dataclass(frozen=True)
class BinomialSpec:
    n: int
    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        if self.n < 0:
            raise ValueError("n must be non-negative")


def log_pmf(spec: BinomialSpec, j: int) -> float:
    """ln Pr[B(n, p) = j]; -inf off the support of a degenerate p."""
    n, p = spec.n, spec.p
    if not 0 <= j <= n:
        raise ValueError(f"j={j} outside [0, {n}]")
    if p == 0.0:
        return 0.0 if j == 0 else NEG_INF
    if p == 1.0:
        return 0.0 if j == n else NEG_INF
    return log_choose(n, j) + j * math.log(p) + (n - j) * math.log1p(-p)


def _logsumexp(values) -> float:
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return NEG_INF
    top = values.max()
    if top == NEG_INF:
        return NEG_INF
    return float(top + math.log(np.exp(values - top).sum()))


def log_tail_gt(spec: BinomialSpec, threshold: int) -> float:
    """ln Pr[B(n, p) > threshold], summed exactly over the pmf terms."""
    lo = max(int(threshold) + 1, 0)
    if lo > spec.n:
        return NEG_INF
    return _logsumexp([log_pmf(spec, j) for j in range(lo, spec.n + 1)])


@dataclass(frozen=True)
class BiasParams:
    """Rejection parameters that turn uniform vectors into alpha-biased ones.

    Acceptance is decided by ``ones``, the number of +1 coordinates, inside the
    integer window [lo, hi].
    """

    n: int
    k: int
    alpha: float
    t: int
    log_r: float
    lo: int
    hi: int
    clamped: bool = False

    @property
    def r(self) -> float:
        return math.exp(self.log_r)

    def log_ratio(self, ones):
        """ln of Pr[B(n, 1/2 + alpha) = ones] / Pr[B(n, 1/2) = ones]."""
        ones = np.asarray(ones, dtype=np.float64)
        return ones * math.log1p(2 * self.alpha) + (self.n - ones) * math.log1p(-2 * self.alpha)


def bias_params(n: int, k: int, clamp: bool = False) -> BiasParams:
    """alpha = sqrt(k/n)/2, t = floor(sqrt(3 n k ln(n/k))), r = tail ratio at n/2 + t.

    When n/2 + t exceeds n the window is invalid; with ``clamp`` the window is
    widened to all of [0, n] instead and, since no tail is left above it, r
    becomes the largest constant that keeps every acceptance probability
    <= 1, namely (1 + 2 alpha)^-n.
    """
    if not 1 <= k < n:
        raise ValueError(f"need 1 <= k < n, got n={n}, k={k}")
    alpha = 0.5 * math.sqrt(k / n)
    t = int(math.floor(math.sqrt(3.0 * n * k * math.log(n / k))))
    lo = int(math.ceil(n / 2 - t))
    hi = int(math.floor(n / 2 + t))
    clamped = False
    if n / 2 + t > n:
        if not clamp:
            raise ValueError(
                f"acceptance window n/2 + t = {n / 2 + t:g} exceeds n = {n} (t={t})"
            )
        lo, hi, clamped = 0, n, True
    lo = max(lo, 0)
    top = BiasParams(n, k, alpha, t, 0.0, lo, hi, clamped).log_ratio(hi)
    if hi >= n:
        log_r = -float(top)
    else:
        log_r = log_tail_gt(BinomialSpec(n, 0.5), hi) - log_tail_gt(BinomialSpec(n, 0.5 + alpha), hi)
    params = BiasParams(n, k, alpha, t, log_r, lo, hi, clamped)
    # r * ratio is increasing in ones, so the window top is the worst case
    if log_r + float(top) > 1e-9:
        raise ArithmeticError("acceptance probability exceeds 1 at the window top")
    return params


def accept_probability(params: BiasParams, ones, n: int = None):
    """r * pmf_{1/2+alpha}(ones) / pmf_{1/2}(ones) inside the window, else 0.

    ``ones`` counts +1 coordinates (F2 zeros). Accepts scalars or arrays.
    """
    if n is not None and n != params.n:
        raise ValueError("params were built for a different n")
    ones_arr = np.asarray(ones)
    if np.any((ones_arr < 0) | (ones_arr > params.n)):
        raise ValueError("ones outside [0, n]")
    inside = (ones_arr >= params.lo) & (ones_arr <= params.hi)
    logp = params.log_r + params.log_ratio(ones_arr)
    prob = np.where(inside, np.exp(np.minimum(logp, 0.0)), 0.0)
    if prob.ndim == 0:
        return float(prob)
    return prob


def acceptance_table(params: BiasParams) -> np.ndarray:
    """accept_probability for every ones value 0..n."""
    return accept_probability(params, np.arange(params.n + 1))


def window_mass(params: BiasParams, p: float) -> float:
    """Pr[lo <= B(n, p) <= hi]."""
    spec = BinomialSpec(params.n, p)
    return math.exp(_logsumexp([log_pmf(spec, j) for j in range(params.lo, params.hi + 1)]))


def accepted_ones_pmf(params: BiasParams) -> np.ndarray:
    """Law of ``ones`` for a uniform vector conditioned on acceptance.

    Built from the acceptance rule itself (pmf_{1/2} * acceptance, renormalised),
    not from the biased binomial it is meant to reproduce.
    """
    spec = BinomialSpec(params.n, 0.5)
    logw = np.array([log_pmf(spec, j) for j in range(params.n + 1)])
    acc = acceptance_table(params)
    with np.errstate(divide="ignore"):
        logw = logw + np.log(acc)
    top = logw.max()
    w = np.exp(logw - top)
    return w / w.sum()


def truncated_pmf(n: int, p: float, lo: int, hi: int) -> np.ndarray:
    """pmf of B(n, p) restricted to [lo, hi] and renormalised, over 0..n."""
    spec = BinomialSpec(n, p)
    logw = np.full(n + 1, NEG_INF)
    for j in range(max(lo, 0), min(hi, n) + 1):
        logw[j] = log_pmf(spec, j)
    w = np.exp(logw - logw.max())
    return w / w.sum()


def log_accept_rate(params: BiasParams) -> float:
    """ln of the per-attempt acceptance probability for a uniform input."""
    spec = BinomialSpec(params.n, 0.5)
    acc = acceptance_table(params)
    terms = [log_pmf(spec, j) + math.log(a) for j, a in enumerate(acc) if a > 0]
    return _logsumexp(terms)


class GapTable:
    """Memoised p_{m,c,q}: chance that a uniform q-subset of m labels, c of
    them correct, contains an even number of wrong labels.

    The recursion steps (m, c, q) -> (m-1, c, q-1) and (m-1, c-1, q-1), so
    m - q is fixed along any chain; each diagonal d = m - q is filled as a
    (q, c) table the first time it is needed.
    """

    def __init__(self):
        self._diag = {}

    def _table(self, d: int, q: int, c: int) -> np.ndarray:
        tab = self._diag.get(d)
        if tab is not None and tab.shape[0] > q and tab.shape[1] > c:
            return tab
        qmax = max(q, tab.shape[0] - 1 if tab is not None else 0)
        cmax = max(c, tab.shape[1] - 1 if tab is not None else 0)
        tab = np.ones((qmax + 1, cmax + 1), dtype=np.float64)
        cc = np.arange(cmax + 1, dtype=np.float64)
        for qq in range(1, qmax + 1):
            mm = d + qq
            prev = tab[qq - 1]
            row = (mm - cc) / mm * (1.0 - prev)
            row[1:] += cc[1:] / mm * prev[:-1]
            # c = m is a boundary (every label correct); c > m is unused
            row[min(mm, cmax + 1):] = 1.0
            tab[qq] = row
        self._diag[d] = tab
        return tab

    def p(self, m: int, c: int, q: int) -> float:
        if not (0 <= c <= m and 0 <= q):
            raise ValueError(f"need 0 <= c <= m, got m={m}, c={c}")
        if q > m:
            raise ValueError(f"q={q} exceeds m={m}")
        if q == 0 or c == m:
            return 1.0
        if q == 1:
            return c / m
        return float(self._table(m - q, q, c)[q, c])


_GAPS = GapTable()


def label_agreement(m: int, c: int, q: int) -> float:
    """p_{m,c,q} (see :class:`GapTable`)."""
    return _GAPS.p(m, c, q)


def compute_gap(m: int, c: int, q: int) -> float:
    """Pr[XOR label correct] - Pr[incorrect] = 2 p_{m,c,q} - 1."""
    return 2.0 * label_agreement(m, c, q) - 1.0


def gap_lower_bound(m: int, p: float, q: int) -> float:
    """((2 m p - q + 1) / (m - q + 1))^q for (1/2 + p) m correct labels."""
    if q == 0:
        return 1.0
    num = 2 * m * p - q + 1
    if num <= 0 or m - q + 1 <= 0:
        raise ValueError("bound is vacuous: need 2mp - q + 1 > 0 and q <= m")
    return (num / (m - q + 1)) ** q


def tv_distance(P, Q) -> float:
    """Half the L1 distance between two distributions on the same support."""
    P = np.asarray(P, dtype=np.float64)
    Q = np.asarray(Q, dtype=np.float64)
    if P.shape != Q.shape:
        raise ValueError(f"support mismatch: {P.shape} vs {Q.shape}")
    return float(0.5 * np.abs(P - Q).sum())
