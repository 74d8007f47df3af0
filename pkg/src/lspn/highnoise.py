"""High-noise solver: reweight samples toward an alpha-biased distribution by
rejection, then locate the secret from a correlation tester built over all
(k/3)-subsets of coordinates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import comb
from typing import Iterator, Optional, Union

import numpy as np

from .bitlin import BitMatrix, BitVector, correlation_gram, popcount
from .combin import colex_subsets, random_subsets
from .oracle import Oracle, SampleBatch, default_m2, make_verifier, midpoint_threshold
from .outcome import Outcome
from .probkit import (BiasParams, accept_probability, acceptance_table, accepted_ones_pmf,
                      bias_params, compute_gap, log_accept_rate)

COLUMN_CAP = 5000
MODES = ("argmax", "threshold")


@dataclass
class HighNoiseConfig:
    q: int = 1
    m: Optional[int] = None
    m_prime: Optional[int] = None
    m_prime_cap: int = 2_000_000
    epsilon: float = 0.1
    mode: str = "argmax"
    # "grid": estimate from eta plus a small grid; "true": the oracle's own
    # count (experiments only); an int: use that count
    c_policy: Union[str, int] = "grid"
    c_steps: int = 3
    col_cap: int = COLUMN_CAP
    m2: Optional[int] = None
    stream: bool = True
    clamp: bool = True
    attempt_factor: float = 100.0
    chunk: int = 1 << 22
    max_candidates: int = 64


@dataclass
class BiasStats:
    attempts: int = 0
    accepted: int = 0
    consumed: int = 0
    correct: int = 0

    @property
    def rate(self) -> float:
        return self.accepted / self.attempts if self.attempts else float("nan")


@dataclass
class TesterMatrix:
    C: np.ndarray
    m_pos: int
    m_neg: int
    codes: np.ndarray = field(repr=False)


def default_m_prime(n: int, k: int, eta: float, q: int) -> int:
    """ceil(8 (n/k)^(k/3) ((1 - 2 eta)/3)^-q k ln(n/k))."""
    return math.ceil(8.0 * (n / k) ** (k / 3) * (3.0 / (1.0 - 2.0 * eta)) ** q * k * math.log(n / k))


def default_base_m(n: int, k: int, epsilon: float, q: int = 1) -> int:
    """ceil(k ln(n/k)^(1 + eps) / eps), at least q."""
    return max(q, math.ceil(k * math.log(n / k) ** (1.0 + epsilon) / epsilon))


def ones_count(words: np.ndarray, n: int) -> np.ndarray:
    """Number of +1 coordinates (F2 zeros) in each packed row."""
    return n - popcount(words)


def add_bias(x: BitVector, params: BiasParams, rng: np.random.Generator) -> bool:
    """One rejection step: keep x with the acceptance probability of its Ones."""
    ones = x.n - x.ones()
    return bool(rng.random() < accept_probability(params, ones))


def attempt_cap(params: BiasParams, m_prime: int, factor: float) -> int:
    return int(math.ceil(factor * max(m_prime, 1) / params.r))


def _take(words, labels, ones, table, u, need):
    keep = np.flatnonzero(u < table[ones])
    if keep.size > need:
        used = int(keep[need - 1]) + 1
        keep = keep[:need]
    else:
        used = len(u)
    return words[keep], labels[keep], used


def more_samples(batch: SampleBatch, k: int, q: int, m_prime: int, rng: np.random.Generator,
                 params: Optional[BiasParams] = None, cap: Optional[int] = None,
                 chunk: int = 1 << 20) -> tuple:
    """Biased batch of m' rows built from XORs of q random rows of ``batch``.

    Each attempt draws a uniform q-subset T, forms the XOR of its rows and
    labels, and keeps it with the acceptance probability of its Ones count.
    Returns (SampleBatch, BiasStats).
    """
    n = batch.n
    if q < 1 or batch.m < q:
        raise ValueError(f"need 1 <= q <= m, got q={q}, m={batch.m}")
    params = params or bias_params(n, k)
    cap = cap if cap is not None else attempt_cap(params, m_prime, 100.0)
    table = acceptance_table(params)
    stats = BiasStats()
    out_w, out_y = [], []
    words, y = batch.X.words, batch.y
    while stats.accepted < m_prime:
        if stats.attempts >= cap:
            raise RuntimeError(
                f"attempt cap {cap} hit with {stats.accepted}/{m_prime} accepted "
                f"(rate {stats.rate:.3g}, expected {math.exp(log_accept_rate(params)):.3g})")
        size = int(min(chunk, cap - stats.attempts))
        T = random_subsets(batch.m, q, size, rng)
        xw = np.bitwise_xor.reduce(words[T], axis=1)
        xy = np.bitwise_xor.reduce(y[T], axis=1)
        u = rng.random(size)
        w, lab, used = _take(xw, xy, ones_count(xw, n), table, u, m_prime - stats.accepted)
        out_w.append(w)
        out_y.append(lab)
        stats.attempts += used
        stats.accepted += len(lab)
    stats.consumed = batch.m
    return _assemble(out_w, out_y, n, batch.provenance), stats


def stream_biased(oracle: Oracle, k: int, m_prime: int, rng: np.random.Generator,
                  params: Optional[BiasParams] = None, cap: Optional[int] = None,
                  chunk: int = 1 << 22) -> tuple:
    """q = 1 with every attempt on a fresh oracle sample, so no base row is
    ever reused. ``stats.correct`` is the oracle's count of unflipped labels
    among the consumed samples (ground truth, for experiments only)."""
    n = oracle.instance.n
    params = params or bias_params(n, k)
    cap = cap if cap is not None else attempt_cap(params, m_prime, 100.0)
    table = acceptance_table(params)
    rate = math.exp(log_accept_rate(params))
    stats = BiasStats()
    flips0 = oracle.flips
    out_w, out_y = [], []
    while stats.accepted < m_prime:
        if stats.attempts >= cap:
            raise RuntimeError(
                f"attempt cap {cap} hit with {stats.accepted}/{m_prime} accepted "
                f"(rate {stats.rate:.3g}, expected {rate:.3g})")
        want = math.ceil(1.2 * (m_prime - stats.accepted) / rate) + 1024
        size = int(min(chunk, want, cap - stats.attempts))
        b = oracle.draw(size)
        u = rng.random(size)
        w, lab, _ = _take(b.X.words, b.y, ones_count(b.X.words, n), table, u, m_prime - stats.accepted)
        out_w.append(w)
        out_y.append(lab)
        stats.attempts += size
        stats.accepted += len(lab)
    stats.consumed = stats.attempts
    stats.correct = stats.consumed - (oracle.flips - flips0)
    return _assemble(out_w, out_y, n, ("stream", oracle.stream_id)), stats


def _assemble(out_w, out_y, n, prov) -> SampleBatch:
    nw = -(-n // 64)
    words = np.concatenate(out_w) if out_w else np.zeros((0, nw), np.uint64)
    labels = np.concatenate(out_y) if out_y else np.zeros(0, np.uint8)
    return SampleBatch(BitMatrix(len(labels), n, words), labels, prov)


def exact_biased(params: BiasParams, count: int, rng: np.random.Generator) -> tuple:
    """Draw ``count`` rows from the exact law of accepted AddBias outputs.

    Equivalent in distribution to running the rejection loop on uniform
    inputs: the Ones count follows the accepted-Ones pmf and, given it, the
    +1 positions are a uniform subset. The attempt count the loop would have
    used is drawn from the matching negative binomial. Returns (BitMatrix,
    attempts). Useful where the acceptance rate is far too small to loop.
    """
    n = params.n
    pmf = accepted_ones_pmf(params)
    ones = rng.choice(n + 1, size=count, p=pmf)
    order = np.argsort(rng.random((count, n)), axis=1)
    ranks = np.empty_like(order)
    np.put_along_axis(ranks, order, np.arange(n)[None, :].repeat(count, axis=0), axis=1)
    bits = (ranks >= ones[:, None]).astype(np.uint8)
    rate = math.exp(log_accept_rate(params))
    attempts = count + int(rng.negative_binomial(count, rate)) if count else 0
    return BitMatrix.from_bits(bits, n_cols=n), attempts


def design_codes(n: int, k: int, col_cap: int = COLUMN_CAP) -> np.ndarray:
    if k % 3:
        raise ValueError(f"k={k} is not divisible by 3")
    j = k // 3
    N = comb(n, j)
    if N > col_cap:
        raise ValueError(f"C({n}, {j}) = {N} columns exceeds the cap of {col_cap}")
    return colex_subsets(n, j)


def build_design(batch: SampleBatch, k: int, col_cap: int = COLUMN_CAP) -> tuple:
    """(D, codes): column r of D is the parity of each row over codes[r]."""
    codes = design_codes(batch.n, k, col_cap)
    bits = batch.bits()
    D = np.zeros((batch.m, codes.shape[0]), dtype=np.uint8)
    for t in range(codes.shape[1]):
        D ^= bits[:, codes[:, t]]
    return BitMatrix.from_bits(D, n_cols=codes.shape[0]), codes


def tester(D: BitMatrix, labels, codes: Optional[np.ndarray] = None) -> TesterMatrix:
    """C = C_1 - C_-1: the Gram matrix of the +-1 design, rows signed by label."""
    labels = np.asarray(labels, dtype=np.uint8).reshape(-1)
    if labels.shape[0] != D.n_rows:
        raise ValueError(f"{D.n_rows} rows but {labels.shape[0]} labels")
    C = correlation_gram(D, 1 - 2 * labels.astype(np.int64))
    m_neg = int(labels.sum())
    return TesterMatrix(C, D.n_rows - m_neg, m_neg, codes if codes is not None else np.zeros((0, 0), np.int64))


def tester_threshold(m_prime: int, alpha: float, k: int, gap: float) -> float:
    """(3 m' / 4) (2 alpha)^(k/3) gap."""
    return 0.75 * m_prime * (2.0 * alpha) ** (k // 3) * gap


def _overlap(codes: np.ndarray, n: int) -> np.ndarray:
    inc = np.zeros((codes.shape[0], n), dtype=np.float32)
    np.put_along_axis(inc, codes, 1.0, axis=1)
    return (inc @ inc.T) > 0.5


def candidates(T: TesterMatrix, n: int, k: int, threshold: Optional[float] = None,
               mode: str = "argmax", limit: int = 64) -> Iterator[tuple]:
    """Candidate secrets E1 u E2 u E3 from pairwise disjoint column subsets.

    argmax: the largest entry over disjoint (E1, E2), then the largest entry
    in row E1 disjoint from both. threshold: every disjoint (E1, E2) at or
    above the threshold in row-major order, each completed by the first
    qualifying E3 in row E1.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    codes, C = T.codes, T.C
    if codes.size == 0 or C.shape[0] < 3:
        return
    over = _overlap(codes, n)
    if mode == "argmax":
        M = np.where(over, np.iinfo(np.int64).min, C)
        i, j = np.unravel_index(int(np.argmax(M)), M.shape)
        if over[i, j]:
            return
        free = ~(over[i] | over[j])
        if not free.any():
            return
        row = np.where(free, C[i], np.iinfo(np.int64).min)
        l = int(np.argmax(row))
        yield tuple(sorted(int(v) for v in set(codes[i]) | set(codes[j]) | set(codes[l])))
        return
    if threshold is None:
        raise ValueError("threshold mode needs a threshold")
    hits = (C >= threshold) & ~over
    seen = set()
    for i, j in zip(*np.nonzero(hits)):
        free = hits[i] & ~over[j]
        if not free.any():
            continue
        l = int(np.argmax(free))
        cand = tuple(sorted(int(v) for v in set(codes[i]) | set(codes[j]) | set(codes[l])))
        if cand in seen:
            continue
        seen.add(cand)
        yield cand
        if len(seen) >= limit:
            return


def extract_secret(T: TesterMatrix, n: int, k: int, threshold: Optional[float] = None,
                   mode: str = "argmax") -> Optional[tuple]:
    return next(candidates(T, n, k, threshold, mode, limit=1), None)


def c_grid(M: int, eta: float, steps: int = 3) -> list:
    """round((1 - eta) M), then +-1..steps offsets of ceil(M/100), nearest first."""
    c0 = int(round((1.0 - eta) * M))
    h = max(1, math.ceil(M / 100))
    out = [c0]
    for j in range(1, steps + 1):
        out += [c0 + j * h, c0 - j * h]
    return [c for c in out if 0 <= c <= M]


def _prepare(n: int, k: int, eta: float, config: HighNoiseConfig) -> tuple:
    if k % 3:
        raise ValueError(f"k={k} is not divisible by 3")
    if not 0 <= eta < 0.5:
        raise ValueError(f"eta must lie in [0, 1/2), got {eta}")
    if config.q < 1:
        raise ValueError("q must be at least 1")
    if config.mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    design_codes(n, k, config.col_cap)
    params = bias_params(n, k, clamp=config.clamp)
    mp = config.m_prime if config.m_prime is not None else default_m_prime(n, k, eta, config.q)
    capped = mp > config.m_prime_cap
    mp = min(mp, config.m_prime_cap)
    return params, mp, capped, attempt_cap(params, mp, config.attempt_factor)


def recover(biased: SampleBatch, stats: BiasStats, verifier, k: int, eta: float,
            params: BiasParams, config: HighNoiseConfig) -> Outcome:
    """Design, tester and extraction on an already biased batch; returns the
    first candidate accepted by ``verifier``."""
    n, mp, q = biased.n, biased.m, config.q
    M = stats.consumed
    D, codes = build_design(biased, k, config.col_cap)
    T = tester(D, biased.y, codes)
    detail = {"m_prime": mp, "attempts": stats.attempts, "base": M, "c_true": stats.correct,
              "alpha": params.alpha, "clamped": params.clamped}
    if config.mode == "argmax":
        plans = [(None, None)]
    else:
        if config.c_policy == "true":
            cs = [stats.correct]
        elif config.c_policy == "grid":
            cs = c_grid(M, eta, config.c_steps)
        else:
            cs = [int(config.c_policy)]
        plans = [(c, tester_threshold(mp, params.alpha, k, compute_gap(M, c, q))) for c in cs]
    tried = 0
    for c, thr in plans:
        for cand in candidates(T, n, k, thr, config.mode, config.max_candidates):
            tried += 1
            if verifier(cand):
                return Outcome(cand, "ok", iterations=tried, detail={**detail, "c": c, "threshold": thr})
    return Outcome(None, "ok", iterations=tried, detail=detail)


def learn_from_batches(base: SampleBatch, vbatch: SampleBatch, k: int, eta: float,
                       config: Optional[HighNoiseConfig] = None,
                       rng: Optional[np.random.Generator] = None) -> Outcome:
    """Biased samples drawn from a fixed base batch (the literal q-XOR rule).

    Without an oracle the true correct-label count is unknown, so the "true"
    c policy is not available here.
    """
    config = config or HighNoiseConfig()
    rng = rng if rng is not None else np.random.default_rng()
    if config.c_policy == "true":
        raise ValueError("c_policy='true' needs an oracle")
    params, mp, capped, cap = _prepare(base.n, k, eta, config)
    biased, stats = more_samples(base, k, config.q, mp, rng, params, cap, min(config.chunk, 1 << 20))
    res = recover(biased, stats, make_verifier(vbatch, midpoint_threshold(eta)), k, eta, params, config)
    res.samples = base.m + vbatch.m
    if capped and not res.found:
        res.status = "capped"
    return res


def learn(oracle: Oracle, k: int, eta: float, config: Optional[HighNoiseConfig] = None,
          rng: Optional[np.random.Generator] = None) -> Outcome:
    """Full pipeline: biased samples, design, tester, extraction, verification.

    With q = 1 and ``config.stream`` each rejection attempt consumes a fresh
    oracle sample; otherwise a base batch of m samples is drawn once and
    q-subsets of it are XORed.
    """
    config = config or HighNoiseConfig()
    rng = rng if rng is not None else np.random.default_rng()
    n = oracle.instance.n
    params, mp, capped, cap = _prepare(n, k, eta, config)
    q = config.q
    if q == 1 and config.stream:
        biased, stats = stream_biased(oracle, k, mp, rng, params, cap, config.chunk)
    else:
        m = config.m if config.m is not None else default_base_m(n, k, config.epsilon, q)
        flips0 = oracle.flips
        base = oracle.draw(m)
        biased, stats = more_samples(base, k, q, mp, rng, params, cap, min(config.chunk, 1 << 20))
        stats.correct = m - (oracle.flips - flips0)
    m2 = config.m2 if config.m2 is not None else default_m2(n, k)
    verifier = make_verifier(oracle.draw(m2), midpoint_threshold(eta))
    res = recover(biased, stats, verifier, k, eta, params, config)
    res.samples = stats.consumed + m2
    if capped and not res.found:
        res.status = "capped"
    return res
