"""Planted LSPN instances, seeded sample streams, verification and persistence."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .bitlin import BitMatrix, BitVector, n_words, popcount, unpack_bits

SECRET_STREAM = 0x5EC2E7
FORMAT_TAG = "LSPN1"


def stream_rng(*key: int) -> np.random.Generator:
    """Counter-based Philox generator keyed by a tuple of non-negative ints."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(k) for k in key])))


@dataclass(frozen=True)
class LspnInstance:
    n: int
    k: int
    eta: float
    secret: tuple
    master_seed: int

    def __post_init__(self):
        if not 0 <= self.eta < 0.5:
            raise ValueError(f"eta must lie in [0, 1/2), got {self.eta}")
        if len(self.secret) > self.k:
            raise ValueError(f"secret has {len(self.secret)} elements, k={self.k}")
        if any(not 0 <= s < self.n for s in self.secret):
            raise ValueError("secret index out of range")
        if tuple(sorted(set(self.secret))) != tuple(self.secret):
            raise ValueError("secret must be sorted and duplicate-free")

    @property
    def mask(self) -> BitVector:
        return BitVector.from_indices(self.secret, self.n)

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def to_dict(self, public: bool = False) -> dict:
        d = {"n": self.n, "k": self.k, "eta": self.eta, "master_seed": self.master_seed}
        if not public:
            d["secret"] = list(self.secret)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "LspnInstance":
        if "secret" not in d:
            raise ValueError("instance has no secret (public export); cannot simulate samples")
        return cls(int(d["n"]), int(d["k"]), float(d["eta"]), tuple(sorted(int(s) for s in d["secret"])),
                   int(d["master_seed"]))


def new_instance(n: int, k: int, eta: float, master_seed: int,
                 secret: Optional[Iterable[int]] = None) -> LspnInstance:
    """Instance with the given secret, or a uniform k-subset drawn from the seed."""
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got n={n}, k={k}")
    if secret is None:
        rng = stream_rng(master_seed, SECRET_STREAM)
        secret = rng.choice(n, size=k, replace=False)
    secret = tuple(sorted(int(s) for s in secret))
    if len(set(secret)) != len(secret):
        raise ValueError("secret has duplicate indices")
    return LspnInstance(n, k, float(eta), secret, int(master_seed))


def save_instance(inst: LspnInstance, path, public: bool = False) -> None:
    Path(path).write_text(json.dumps(inst.to_dict(public=public), indent=2, sort_keys=True) + "\n")


def load_instance(path) -> LspnInstance:
    return LspnInstance.from_dict(json.loads(Path(path).read_text()))


class SampleBatch:
    """Immutable labelled samples: X is m x n over F2, y holds m label bits."""

    __slots__ = ("X", "y", "provenance", "_bits")

    def __init__(self, X: BitMatrix, y, provenance: tuple = ("", 0)):
        y = np.array(y, dtype=np.uint8).reshape(-1)
        if y.shape[0] != X.n_rows:
            raise ValueError(f"{X.n_rows} rows but {y.shape[0]} labels")
        if np.any(y > 1):
            raise ValueError("labels must be bits")
        y.setflags(write=False)
        self.X = X
        self.y = y
        self.provenance = provenance
        self._bits = None

    @property
    def m(self) -> int:
        return self.X.n_rows

    @property
    def n(self) -> int:
        return self.X.n_cols

    def bits(self) -> np.ndarray:
        """Unpacked (m, n) uint8 view of X, computed once."""
        if self._bits is None:
            b = self.X.to_bits()
            b.setflags(write=False)
            self._bits = b
        return self._bits

    def head(self, count: int) -> "SampleBatch":
        return SampleBatch(BitMatrix(count, self.n, self.X.words[:count]), self.y[:count], self.provenance)

    def tail(self, count: int) -> "SampleBatch":
        start = self.m - count
        return SampleBatch(BitMatrix(count, self.n, self.X.words[start:]), self.y[start:], self.provenance)

    def __eq__(self, other):
        return isinstance(other, SampleBatch) and self.X == other.X and np.array_equal(self.y, other.y)

    def __repr__(self):
        return f"SampleBatch(m={self.m}, n={self.n})"


def _random_rows(rng: np.random.Generator, m: int, n: int) -> np.ndarray:
    w = n_words(n)
    words = rng.bit_generator.random_raw(m * w).astype(np.uint64).reshape(m, w)
    if w and n % 64:
        words[:, -1] &= np.uint64((1 << (n % 64)) - 1)
    return words


class Oracle:
    """Sample source for one instance.

    Every :meth:`draw` call uses a fresh generator keyed by
    (master_seed, stream_id, call counter), so batches never share randomness
    and a given (instance, stream, counter) always yields the same batch.
    The oracle also counts samples handed out and labels it flipped; the
    latter is ground truth for experiments only, never for solvers.
    """

    def __init__(self, instance: LspnInstance, stream_id: int = 0):
        self.instance = instance
        self.stream_id = int(stream_id)
        self.counter = 0
        self.samples_drawn = 0
        self.flips = 0

    def draw(self, m: int) -> SampleBatch:
        inst = self.instance
        if m < 0:
            raise ValueError("sample count must be non-negative")
        rng = stream_rng(inst.master_seed, self.stream_id, self.counter)
        X = _random_rows(rng, m, inst.n)
        mask = inst.mask.words
        labels = (popcount(X & mask[None, :]) & 1).astype(np.uint8)
        noise = (rng.random(m) < inst.eta).astype(np.uint8)
        prov = (inst.fingerprint(), self.counter)
        self.counter += 1
        self.samples_drawn += m
        self.flips += int(noise.sum())
        return SampleBatch(BitMatrix(m, inst.n, X), labels ^ noise, prov)

    def child(self, stream_id: int) -> "Oracle":
        """Independent stream over the same instance (for parallel workers)."""
        return Oracle(self.instance, stream_id)


def draw(oracle: Oracle, m: int) -> SampleBatch:
    return oracle.draw(m)


def agreement(candidate: Iterable[int], batch: SampleBatch) -> float:
    """Fraction of rows whose parity on ``candidate`` matches the label."""
    if batch.m == 0:
        raise ValueError("empty verification batch")
    mask = BitVector.from_indices(candidate, batch.n).words
    pred = (popcount(batch.X.words & mask[None, :]) & 1).astype(np.uint8)
    return float(np.mean(pred == batch.y))


def verify_candidate(candidate: Iterable[int], batch: SampleBatch, threshold: float) -> bool:
    """True iff the agreement fraction strictly exceeds ``threshold``."""
    return agreement(candidate, batch) > threshold


def default_m2(n: int, k: int) -> int:
    """Verification sample count ceil(50 k ln(e n / k)) + 200."""
    return int(math.ceil(50 * k * math.log(math.e * n / k))) + 200


def low_noise_threshold(eta: float) -> float:
    return 0.75


def midpoint_threshold(eta: float) -> float:
    """Halfway between chance agreement 1/2 and the true secret's 1 - eta."""
    return 0.5 + (1.0 - 2.0 * eta) / 4.0


def make_verifier(batch: SampleBatch, threshold: float):
    def verifier(candidate) -> bool:
        return verify_candidate(candidate, batch, threshold)
    return verifier


# -- sample file ------------------------------------------------------------

class SampleFormatError(ValueError):
    pass


def format_batch(batch: SampleBatch) -> str:
    nbytes = (batch.n + 7) // 8
    raw = batch.X.words.astype("<u8").view(np.uint8).reshape(batch.m, -1)[:, :nbytes]
    lines = [f"{FORMAT_TAG} n={batch.n} m={batch.m}"]
    for row, label in zip(raw, batch.y):
        lines.append(f"{row.tobytes().hex()} {int(label)}")
    return "\n".join(lines) + "\n"


def save_batch(batch: SampleBatch, path) -> None:
    Path(path).write_text(format_batch(batch))


def parse_batch(text: str) -> SampleBatch:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise SampleFormatError("line 1: empty file")
    head = lines[0].split()
    try:
        if len(head) != 3 or head[0] != FORMAT_TAG:
            raise ValueError
        n = int(head[1].removeprefix("n="))
        m = int(head[2].removeprefix("m="))
        if not (head[1].startswith("n=") and head[2].startswith("m=")) or n < 0 or m < 0:
            raise ValueError
    except ValueError:
        raise SampleFormatError(f"line 1: bad header {lines[0]!r}, expected '{FORMAT_TAG} n=<n> m=<m>'") from None
    found = len(lines) - 1
    if found < m:
        raise SampleFormatError(
            f"line {found + 2}: truncated, record {found} missing (header declares m={m})")
    if found > m:
        raise SampleFormatError(f"line {m + 2}: extra record beyond declared m={m}")
    nbytes = (n + 7) // 8
    w = n_words(n)
    raw = np.zeros((m, w * 8), dtype=np.uint8)
    y = np.zeros(m, dtype=np.uint8)
    for i, line in enumerate(lines[1:]):
        lineno = i + 2
        parts = line.split(" ")
        if len(parts) != 2 or parts[1] not in ("0", "1"):
            raise SampleFormatError(f"line {lineno}: record {i} is not '<hex> <bit>'")
        hx = parts[0]
        if len(hx) != 2 * nbytes:
            raise SampleFormatError(
                f"line {lineno}: record {i} has {len(hx) // 2} bytes, header n={n} needs {nbytes}")
        try:
            row = bytes.fromhex(hx)
        except ValueError:
            raise SampleFormatError(f"line {lineno}: record {i} has invalid hex") from None
        if hx != hx.lower():
            raise SampleFormatError(f"line {lineno}: record {i} hex must be lowercase")
        if n % 8 and row[-1] >> (n % 8):
            raise SampleFormatError(f"line {lineno}: record {i} sets bits beyond n={n}")
        raw[i, :nbytes] = np.frombuffer(row, dtype=np.uint8)
        y[i] = int(parts[1])
    words = raw.view("<u8").astype(np.uint64).reshape(m, w)
    return SampleBatch(BitMatrix(m, n, words), y, ("file", 0))


def load_batch(path) -> SampleBatch:
    return parse_batch(Path(path).read_text())
