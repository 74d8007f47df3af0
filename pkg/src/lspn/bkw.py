"""BKW block reduction restricted to a coordinate subset, and the subset-sampling
learner that uses it as its inner solver."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .combin import budget_learn, random_subset
from .oracle import Oracle, SampleBatch, default_m2, low_noise_threshold, make_verifier
from .outcome import Outcome

MAX_WIDTH = 64


@dataclass
class BkwConfig:
    a: Optional[int] = None
    b: Optional[int] = None
    samples: Optional[int] = None
    s: Optional[int] = None
    m2: Optional[int] = None
    outer_cap: int = 10**9


def subset_size(k: int) -> int:
    """ceil(k ln k), but never below 2k."""
    return max(2 * k, math.ceil(k * math.log(k))) if k > 1 else 2 * k


def reduced_noise(eta: float, a: int) -> float:
    """Flip rate of a label built from 2^(a-1) independent noisy labels."""
    return 0.5 - 0.5 * (1.0 - 2.0 * eta) ** (2 ** (a - 1))


def samples_needed(width: int, eta: float, a: int) -> int:
    """Rough sample count for a blocks: each unit vector should collect about
    8 ln(4|R|) / delta^2 votes, delta the reduced-label bias."""
    b = -(-width // a)
    delta = (1.0 - 2.0 * eta) ** (2 ** (a - 1))
    if delta < 1e-150:
        return 2**62
    votes = math.ceil(8.0 * math.log(4.0 * width) / delta**2)
    return 2 ** (a - 1 + b) * votes


def choose_blocks(width: int, eta: float) -> tuple:
    """(a, b) minimising :func:`samples_needed` over a = 1..width."""
    if width < 1:
        raise ValueError("empty coordinate set")
    best = min(range(1, width + 1), key=lambda a: (samples_needed(width, eta, a), a))
    return best, -(-width // best)


def _block_slices(width: int, a: int, b: int) -> list:
    if a < 1 or b < 1 or a * b < width:
        raise ValueError(f"need a >= 1 and a*b >= |R|, got a={a}, b={b}, |R|={width}")
    out = []
    for i in range(a):
        lo = i * b
        if lo >= width:
            break
        out.append((lo, min(b, width - lo)))
    return out


def pack_subset(batch: SampleBatch, R: Sequence[int]) -> np.ndarray:
    """One uint64 per sample: bit i holds X(:, R[i])."""
    R = np.asarray(R, dtype=np.int64)
    if R.size > MAX_WIDTH:
        raise ValueError(f"|R|={R.size} exceeds {MAX_WIDTH}")
    bits = batch.bits()[:, R].astype(np.uint64)
    weights = np.left_shift(np.uint64(1), np.arange(R.size, dtype=np.uint64))
    return (bits * weights[None, :]).sum(axis=1, dtype=np.uint64) if R.size else np.zeros(batch.m, np.uint64)


def reduce(rows: np.ndarray, labels: np.ndarray, blocks: list, target: int) -> tuple:
    """Zero every block except ``blocks[target]`` by collision rounds."""
    rows = np.ascontiguousarray(rows, dtype=np.uint64)
    labels = np.ascontiguousarray(labels, dtype=np.uint8)
    for i, (shift, width) in enumerate(blocks):
        if i == target:
            continue
        rows, labels = _kernels.bkw_round(rows, labels, shift, width)
    return rows, labels


def bkw_solve(R: Sequence[int], batch: SampleBatch, a: Optional[int] = None,
              b: Optional[int] = None, eta: float = 0.0) -> Outcome:
    """Recover secret bits on R by BKW, one reduction pass per target block.

    Reduced samples equal to a unit vector e_j vote on bit j; strict
    majority decides. A coordinate with no votes makes the run "starved";
    a tied vote leaves it unresolved. Either way no set is returned.
    """
    R = sorted(int(i) for i in R)
    width = len(R)
    if a is None or b is None:
        a0, b0 = choose_blocks(width, eta)
        a = a0 if a is None else a
        b = b if b is not None else -(-width // a)
    blocks = _block_slices(width, a, b)
    rows = pack_subset(batch, R)
    votes = np.zeros(width, dtype=np.int64)
    ones = np.zeros(width, dtype=np.int64)
    for t, (shift, w) in enumerate(blocks):
        red, lab = reduce(rows, batch.y, blocks, t)
        for j in range(shift, shift + w):
            hit = red == np.uint64(1 << j)
            votes[j] = int(hit.sum())
            ones[j] = int(lab[hit].sum())
    detail = {"a": a, "b": b, "min_votes": int(votes.min()) if width else 0}
    if width and votes.min() == 0:
        return Outcome(None, "starved", iterations=len(blocks), samples=batch.m, detail=detail)
    if np.any(2 * ones == votes):
        return Outcome(None, "ok", iterations=len(blocks), samples=batch.m, detail=detail)
    secret = tuple(R[j] for j in np.flatnonzero(2 * ones > votes))
    return Outcome(secret, "ok", iterations=len(blocks), samples=batch.m, detail=detail)


def resolve(n: int, k: int, eta: float, config: BkwConfig) -> dict:
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got n={n}, k={k}")
    if not 0 <= eta < 0.5:
        raise ValueError(f"eta must lie in [0, 1/2), got {eta}")
    s = config.s if config.s is not None else min(n, subset_size(k))
    if not k <= s <= min(n, MAX_WIDTH):
        raise ValueError(f"need k <= s <= min(n, {MAX_WIDTH}), got s={s}")
    a, b = config.a, config.b
    if a is None:
        a, b0 = choose_blocks(s, eta)
        b = b if b is not None else b0
    elif b is None:
        b = -(-s // a)
    _block_slices(s, a, b)
    m = config.samples if config.samples is not None else samples_needed(s, eta, a)
    m2 = config.m2 if config.m2 is not None else default_m2(n, k)
    return {"s": s, "a": a, "b": b, "m": m, "m2": m2}


def learn_from_batches(batch: SampleBatch, vbatch: SampleBatch, k: int, eta: float,
                       config: BkwConfig, rng: np.random.Generator) -> Outcome:
    """Random s-subsets R, BKW on each with the same samples, verify answers."""
    n = batch.n
    p = resolve(n, k, eta, config)
    verifier = make_verifier(vbatch, low_noise_threshold(eta))
    budget = budget_learn(n, p["s"], k, config.outer_cap)
    samples = batch.m + vbatch.m
    starved = 0
    for i in range(budget.value):
        R = random_subset(n, p["s"], rng)
        res = bkw_solve(R, batch, p["a"], p["b"], eta)
        starved += res.status == "starved"
        if res.found and len(res.secret) <= k and verifier(res.secret):
            return Outcome(res.secret, "ok", iterations=i + 1, samples=samples,
                           detail={"starved": starved, **p})
    if budget.capped:
        status = "capped"
    elif starved:
        status = "starved"
    else:
        status = "ok"
    return Outcome(None, status, iterations=budget.value, samples=samples,
                   detail={"starved": starved, **p})


def learn(oracle: Oracle, k: int, eta: float, config: Optional[BkwConfig] = None,
          rng: Optional[np.random.Generator] = None) -> Outcome:
    config = config or BkwConfig()
    rng = rng if rng is not None else np.random.default_rng()
    p = resolve(oracle.instance.n, k, eta, config)
    batch = oracle.draw(p["m"])
    vbatch = oracle.draw(p["m2"])
    return learn_from_batches(batch, vbatch, k, eta, config, rng)
