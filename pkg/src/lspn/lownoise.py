"""Low-noise solver: Gaussian elimination on random row subsets, restricted
to random coordinate subsets that hopefully cover the secret."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import _kernels
from .bitlin import pack_bits
from .combin import budget_learn, budget_subset_learn, random_subset, random_subsets
from .oracle import Oracle, SampleBatch, default_m2, low_noise_threshold, make_verifier
from .outcome import Outcome

EXTRA_ROWS = 17
SAMPLE_FACTOR = 100


@dataclass
class LowNoiseConfig:
    s: Optional[int] = None
    extra_rows: int = EXTRA_ROWS
    sample_factor: int = SAMPLE_FACTOR
    m2: Optional[int] = None
    outer_cap: int = 10**9
    inner_cap: int = 10**9
    eta_max: float = 0.05
    allow_high_eta: bool = False
    chunk: int = 256


def subset_size(n: int, k: int, eta: float) -> int:
    """s = min(n, max(k, ceil(k / eta))); eta = 0 gives the whole space."""
    if eta <= 0:
        return n
    # k/eta is often an integer up to rounding noise (4 / 0.04)
    return min(n, max(k, math.ceil(k / eta - 1e-9)))


def resolve(n: int, k: int, eta: float, config: LowNoiseConfig) -> dict:
    """Concrete (s, q, m, m2) for an instance, after the parameter guards."""
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got n={n}, k={k}")
    if eta > config.eta_max and not config.allow_high_eta:
        raise ValueError(f"eta={eta} above {config.eta_max}; set allow_high_eta to override")
    if eta > 0 and n <= k / eta:
        raise ValueError(f"need n > k/eta, got n={n}, k/eta={k / eta:g}")
    s = config.s if config.s is not None else subset_size(n, k, eta)
    if not k <= s <= n:
        raise ValueError(f"need k <= s <= n, got s={s}")
    q = s + config.extra_rows
    m = config.sample_factor * q
    m2 = config.m2 if config.m2 is not None else default_m2(n, k)
    return {"s": s, "q": q, "m": m, "m2": m2}


def restricted_rows(batch: SampleBatch, S: Sequence[int]) -> np.ndarray:
    """Pack X(:, S) with the label appended as bit |S|."""
    bits = batch.bits()[:, np.asarray(S, dtype=np.int64)]
    return pack_bits(np.concatenate([bits, batch.y[:, None]], axis=1))


def subset_learn(S: Sequence[int], batch: SampleBatch, k: int, eta: float,
                 verifier: Callable, rng: np.random.Generator, *,
                 extra_rows: int = EXTRA_ROWS, sample_factor: int = SAMPLE_FACTOR,
                 cap: int = 10**9, chunk: int = 256) -> Outcome:
    """Search for the secret assuming it lies inside S.

    Each round draws q = |S| + extra_rows sample rows; rank-deficient or
    self-contradictory systems are skipped, solutions heavier than k are
    dropped, and the rest go to ``verifier`` (which sees indices in [n]).
    """
    S = sorted(int(i) for i in S)
    s = len(S)
    if s < k:
        raise ValueError(f"|S|={s} smaller than k={k}")
    q = s + extra_rows
    m = batch.m
    if m < sample_factor * q:
        raise ValueError(f"batch has {m} rows, need at least {sample_factor * q}")
    budget = budget_subset_learn(m, q, eta, cap)
    rows = restricted_rows(batch, S)
    sol = np.zeros(s, dtype=np.uint8)
    done = 0
    proposals = 0
    while done < budget.value:
        count = min(chunk, budget.value - done)
        T = random_subsets(m, q, count, rng)
        start = 0
        while True:
            b = _kernels.scan_subset_systems(rows, T, start, s, k, sol)
            if b < 0:
                break
            proposals += 1
            cand = tuple(S[j] for j in np.flatnonzero(sol))
            if verifier(cand):
                return Outcome(cand, "ok", iterations=done + b + 1, detail={"proposals": proposals})
            start = b + 1
        done += count
    return Outcome(None, "capped" if budget.capped else "ok", iterations=done,
                   detail={"proposals": proposals})


def learn_from_batches(batch: SampleBatch, vbatch: SampleBatch, k: int, eta: float,
                       config: LowNoiseConfig, rng: np.random.Generator) -> Outcome:
    """Outer loop over random coordinate subsets, reusing one sample batch."""
    n = batch.n
    p = resolve(n, k, eta, config)
    if batch.m < p["m"]:
        raise ValueError(f"need {p['m']} learning samples, got {batch.m}")
    verifier = make_verifier(vbatch, low_noise_threshold(eta))
    budget = budget_learn(n, p["s"], k, config.outer_cap)
    inner = 0
    inner_capped = False
    samples = batch.m + vbatch.m
    for i in range(budget.value):
        S = random_subset(n, p["s"], rng)
        res = subset_learn(S, batch, k, eta, verifier, rng, extra_rows=config.extra_rows,
                           sample_factor=config.sample_factor, cap=config.inner_cap,
                           chunk=config.chunk)
        inner += res.iterations
        inner_capped |= res.status == "capped"
        if res.found:
            return Outcome(res.secret, "ok", iterations=i + 1, samples=samples,
                           detail={"inner_iterations": inner, **p})
    status = "capped" if (budget.capped or inner_capped) else "ok"
    return Outcome(None, status, iterations=budget.value, samples=samples,
                   detail={"inner_iterations": inner, **p})


def learn(oracle: Oracle, k: int, eta: float, config: Optional[LowNoiseConfig] = None,
          rng: Optional[np.random.Generator] = None) -> Outcome:
    """Draw m learning samples and m2 verification samples once, then search."""
    config = config or LowNoiseConfig()
    rng = rng if rng is not None else np.random.default_rng()
    p = resolve(oracle.instance.n, k, eta, config)
    batch = oracle.draw(p["m"])
    vbatch = oracle.draw(p["m2"])
    return learn_from_batches(batch, vbatch, k, eta, config, rng)
