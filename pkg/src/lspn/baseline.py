"""Reference solvers: exhaustive search over sparse parities, and repeated
Gaussian elimination on fresh square systems."""

from __future__ import annotations

import time
from dataclasses import dataclass
from math import comb
from typing import Optional

import numpy as np

from .bitlin import BitVector, rank, solve
from .combin import colex_subsets
from .oracle import Oracle, SampleBatch, default_m2, make_verifier, midpoint_threshold
from .outcome import Outcome


@dataclass
class BaselineBudget:
    max_candidates: int = 10**8
    max_repetitions: int = 10**4
    wall_seconds: Optional[float] = None

    def __post_init__(self):
        if self.max_candidates < 0 or self.max_repetitions < 0:
            raise ValueError("budget entries must be non-negative")
        if self.wall_seconds is not None and self.wall_seconds <= 0:
            raise ValueError("wall-clock cap must be positive")


def count_candidates(n: int, k: int) -> int:
    return sum(comb(n, j) for j in range(k + 1))


def brute_force(batch: SampleBatch, k: int, budget: Optional[BaselineBudget] = None,
                chunk: int = 4096) -> Outcome:
    """Best-agreement parity over all sets of size <= k.

    Sizes are scanned upward and each size in colex order; only a strict
    improvement replaces the incumbent, so ties go to the smaller size and
    then the lower colex rank.
    """
    budget = budget or BaselineBudget()
    n = batch.n
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got k={k}, n={n}")
    total = count_candidates(n, k)
    if total > budget.max_candidates:
        raise ValueError(f"{total} candidates exceed the budget of {budget.max_candidates}")
    bits = batch.bits()
    y = batch.y
    best, best_score = (), int((y == 0).sum())
    for size in range(1, k + 1):
        codes = colex_subsets(n, size)
        for lo in range(0, codes.shape[0], chunk):
            block = codes[lo:lo + chunk]
            pred = np.zeros((batch.m, block.shape[0]), dtype=np.uint8)
            for t in range(size):
                pred ^= bits[:, block[:, t]]
            score = (pred == y[:, None]).sum(axis=0)
            i = int(np.argmax(score))
            if score[i] > best_score:
                best_score = int(score[i])
                best = tuple(int(v) for v in block[i])
    return Outcome(best, "ok", iterations=total, samples=batch.m,
                   detail={"agreement": best_score / batch.m if batch.m else float("nan")})


def gauss_repeat(oracle: Oracle, eta: float, budget: Optional[BaselineBudget] = None,
                 m2: Optional[int] = None) -> Outcome:
    """Solve n fresh samples at a time until a solution passes verification.

    The answer may have any weight: this is the whole-space reference that
    pays for every noisy row it happens to draw.
    """
    budget = budget or BaselineBudget()
    n = oracle.instance.n
    m2 = m2 if m2 is not None else default_m2(n, n)
    verifier = make_verifier(oracle.draw(m2), midpoint_threshold(eta))
    start = time.monotonic()
    samples = m2
    for rep in range(budget.max_repetitions):
        if budget.wall_seconds is not None and time.monotonic() - start > budget.wall_seconds:
            return Outcome(None, "capped", iterations=rep, samples=samples)
        b = oracle.draw(n)
        samples += n
        if rank(b.X) < n:
            continue
        cand = solve(b.X, BitVector.from_bits(b.y)).indices()
        if verifier(cand):
            return Outcome(tuple(cand), "ok", iterations=rep + 1, samples=samples)
    status = "capped" if budget.max_repetitions else "ok"
    return Outcome(None, status, iterations=budget.max_repetitions, samples=samples)
