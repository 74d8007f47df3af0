"""Subset combinatorics: log-binomials, q-subset sampling, colex ranks, loop budgets."""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb
from typing import Sequence

import numpy as np

from . import _kernels

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
# above this size exact integer binomials get slow; the log formula takes over
_EXACT_LIMIT = 20000


def _stirlerr(x: float) -> float:
    """lgamma(x + 1) - [(x + 1/2) ln x - x + ln sqrt(2 pi)]."""
    if x <= 15.0:
        if x == 0.0:
            return 1.0 - _HALF_LOG_2PI
        return math.lgamma(x + 1.0) - (x + 0.5) * math.log(x) + x - _HALF_LOG_2PI
    x2 = x * x
    return (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0 - 1.0 / (1680.0 * x2)) / x2) / x2) / x


def log_choose(n: int, k: int) -> float:
    """ln C(n, k).

    Small cases are exact; otherwise the entropy form
    k ln(n/k) + (n-k) ln(n/(n-k)) + 1/2 ln(n / (2 pi k (n-k))) plus Stirling
    corrections is used, which avoids the cancellation of three lgamma terms.
    """
    if k < 0 or n < 0 or k > n:
        raise ValueError(f"log_choose needs 0 <= k <= n, got n={n}, k={k}")
    k = min(k, n - k)
    if k == 0:
        return 0.0
    if n <= 1000 or k <= 30:
        return math.log(comb(n, k))
    nk = n - k
    return (
        k * math.log(n / k)
        - nk * math.log1p(-k / n)
        + 0.5 * math.log(n / (k * nk))
        - _HALF_LOG_2PI
        + _stirlerr(n)
        - _stirlerr(k)
        - _stirlerr(nk)
    )


def random_subset(m: int, q: int, rng: np.random.Generator) -> tuple:
    """Uniform q-subset of range(m), sorted (Floyd's algorithm)."""
    if not 0 <= q <= m:
        raise ValueError(f"cannot draw {q} items from {m}")
    u = rng.random(q)
    chosen = set()
    for i, j in enumerate(range(m - q, m)):
        t = min(int(u[i] * (j + 1)), j)
        chosen.add(j if t in chosen else t)
    return tuple(sorted(chosen))


def random_subsets(m: int, q: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` independent uniform q-subsets as a (count, q) int64 array.

    Consumes the generator exactly like ``count`` calls to :func:`random_subset`.
    """
    if not 0 <= q <= m:
        raise ValueError(f"cannot draw {q} items from {m}")
    u = rng.random((count, q))
    out = np.empty((count, q), dtype=np.int64)
    if q:
        _kernels.floyd_subsets(u, m, out)
    return out


def rank_colex(S: Sequence[int]) -> int:
    """Colex rank: sum_j C(S[j], j + 1) over the sorted elements."""
    S = list(S)
    for a, b in zip(S, S[1:]):
        if a >= b:
            raise ValueError("subset must be strictly increasing")
    if S and S[0] < 0:
        raise ValueError("elements must be non-negative")
    return sum(comb(s, j + 1) for j, s in enumerate(S))


def unrank_colex(index: int, k: int) -> tuple:
    """Inverse of :func:`rank_colex` for k-subsets."""
    if index < 0 or k < 0:
        raise ValueError("index and k must be non-negative")
    out = []
    for i in range(k, 0, -1):
        # largest c with C(c, i) <= index
        c = i - 1
        hi = i
        while comb(hi, i) <= index:
            hi *= 2
        lo = c
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if comb(mid, i) <= index:
                lo = mid
            else:
                hi = mid
        out.append(lo)
        index -= comb(lo, i)
    return tuple(reversed(out))


def colex_subsets(n: int, k: int) -> np.ndarray:
    """All k-subsets of range(n) in colex order, shape (C(n, k), k)."""
    if k == 0:
        return np.zeros((1, 0), dtype=np.int64)
    if k > n:
        return np.zeros((0, k), dtype=np.int64)
    blocks = []
    # sets whose maximum is `top`, for top = k-1 .. n-1, each block in colex order
    for top in range(k - 1, n):
        head = colex_subsets(top, k - 1)
        blocks.append(np.concatenate([head, np.full((head.shape[0], 1), top, dtype=np.int64)], axis=1))
    return np.concatenate(blocks, axis=0)


@dataclass(frozen=True)
class SubsetCode:
    k: int
    index: int
    elements: tuple

    @classmethod
    def from_elements(cls, elements: Sequence[int]) -> "SubsetCode":
        elements = tuple(elements)
        return cls(len(elements), rank_colex(elements), elements)

    @classmethod
    def from_index(cls, index: int, k: int) -> "SubsetCode":
        return cls(k, index, unrank_colex(index, k))


@dataclass(frozen=True)
class IterationBudget:
    value: int
    log_value: float
    capped: bool


def _budget(log_ratio: float, num: tuple, den: tuple, cap: int) -> IterationBudget:
    log_value = math.log(10.0) + log_ratio
    if log_value > math.log(cap) + 1e-9:
        return IterationBudget(int(cap), log_value, True)
    if max(num[0], den[0]) <= _EXACT_LIMIT:
        a, b = comb(*num), comb(*den)
        value = -(-10 * a // b)
    else:
        value = math.ceil(math.exp(log_value))
    if value > cap:
        return IterationBudget(int(cap), log_value, True)
    return IterationBudget(int(value), log_value, False)


def budget_subset_learn(m: int, q: int, eta: float, cap: int = 10**9) -> IterationBudget:
    """ceil(10 * C(m, q) / C(floor((1 - 1.01 eta) m), q)), saturating at ``cap``."""
    clean = math.floor((1.0 - 1.01 * eta) * m)
    if not 0 <= q <= clean:
        raise ValueError(f"need q <= floor((1-1.01*eta)*m) = {clean}, got q={q}")
    return _budget(log_choose(m, q) - log_choose(clean, q), (m, q), (clean, q), cap)


def budget_learn(n: int, s: int, k: int, cap: int = 10**9) -> IterationBudget:
    """ceil(10 * C(n, s) / C(n - k, s - k)), saturating at ``cap``."""
    if not 0 <= k <= s <= n:
        raise ValueError(f"need k <= s <= n, got n={n}, s={s}, k={k}")
    return _budget(log_choose(n, s) - log_choose(n - k, s - k), (n, s), (n - k, s - k), cap)
