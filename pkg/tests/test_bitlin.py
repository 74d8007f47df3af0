import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lspn.bitlin import (BitMatrix, BitVector, correlation_gram, from_signed, matvec, n_words,
                         pack_bits, parity, rank, row_parities, select, solve, to_signed,
                         transpose_bits, unpack_bits, xor_combine)


def naive_rank(bits):
    """Rank over F2 using Python ints as row bitsets."""
    rows = [int("".join(map(str, r[::-1])), 2) if len(r) else 0 for r in bits.tolist()]
    r = 0
    for bit in range(bits.shape[1] if bits.ndim == 2 else 0):
        piv = next((i for i in range(r, len(rows)) if rows[i] >> bit & 1), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        for i in range(len(rows)):
            if i != r and rows[i] >> bit & 1:
                rows[i] ^= rows[r]
        r += 1
    return r


bit_matrices = st.integers(0, 12).flatmap(
    lambda m: st.integers(0, 130).flatmap(
        lambda n: arrays(np.uint8, (m, n), elements=st.integers(0, 1))))


def test_signed_round_trip():
    b = np.array([0, 1, 1, 0], dtype=np.uint8)
    assert to_signed(b).tolist() == [1, -1, -1, 1]
    assert from_signed(to_signed(b)).tolist() == b.tolist()


def test_n_words():
    assert [n_words(n) for n in (0, 1, 64, 65, 128, 129)] == [0, 1, 1, 2, 2, 3]


@given(bit_matrices)
def test_pack_unpack_round_trip(bits):
    words = pack_bits(bits)
    assert words.shape == (bits.shape[0], n_words(bits.shape[1]))
    assert np.array_equal(unpack_bits(words, bits.shape[1]), bits)


def test_lsb_first_layout():
    v = BitVector.from_string("1" + "0" * 63 + "01")
    assert v.words.tolist() == [1, 2]
    assert v.indices() == (0, 65)


def test_padding_must_be_zero():
    with pytest.raises(ValueError):
        BitMatrix(1, 3, np.array([[8]], dtype=np.uint64))


@given(bit_matrices)
@settings(max_examples=60)
def test_rank_matches_naive(bits):
    M = BitMatrix.from_bits(bits, n_cols=bits.shape[1])
    assert rank(M) == naive_rank(bits)


def test_rank_identity_and_zero():
    assert rank(BitMatrix.identity(70)) == 70
    assert rank(BitMatrix(5, 9)) == 0


@given(bit_matrices, st.integers(0, 2**32 - 1))
@settings(max_examples=60)
def test_solve_satisfies_system(bits, seed):
    m, n = bits.shape
    M = BitMatrix.from_bits(bits, n_cols=n)
    rng = np.random.default_rng(seed)
    x0 = BitVector.from_bits(rng.integers(0, 2, n).astype(np.uint8))
    y = matvec(M, x0)
    x = solve(M, y)
    assert x is not None
    assert matvec(M, x) == y


def test_solve_inconsistent_and_dims():
    M = BitMatrix.from_strings(["11", "11"])
    assert solve(M, BitVector.from_string("10")) is None
    with pytest.raises(ValueError):
        solve(M, BitVector.from_string("1"))


def test_solve_free_variables_zero():
    M = BitMatrix.from_strings(["110", "001"])
    x = solve(M, BitVector.from_string("11"))
    assert x.to_bits().tolist() == [1, 0, 1]


def test_select_and_xor_combine():
    M = BitMatrix.from_strings(["1100", "0110", "0011"])
    assert select(M, [2, 0], [3, 0]).to_bits().tolist() == [[1, 0], [0, 1]]
    assert xor_combine(M, [0, 1, 2]).to_bits().tolist() == [1, 0, 0, 1]
    with pytest.raises(ValueError):
        xor_combine(M, [])
    with pytest.raises(IndexError):
        select(M, [3], [0])


def test_parity_helpers():
    M = BitMatrix.from_strings(["1011", "0110"])
    assert row_parities(M, [0, 2]).tolist() == [0, 1]
    assert parity(M.row(0), [0, 2, 3]) == 1
    assert parity(M.row(0), []) == 0
    assert np.array_equal(transpose_bits(M).to_bits(), M.to_bits().T)


@given(st.integers(0, 2**32 - 1), st.integers(1, 40), st.integers(1, 7))
@settings(max_examples=40)
def test_correlation_gram_matches_loop(seed, m, n):
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, (m, n)).astype(np.uint8)
    w = rng.choice([-1, 1], m)
    got = correlation_gram(BitMatrix.from_bits(bits), w)
    s = to_signed(bits).astype(np.int64)
    want = np.zeros((n, n), dtype=np.int64)
    for a in range(n):
        for b in range(n):
            want[a, b] = sum(w[i] * s[i, a] * s[i, b] for i in range(m))
    assert np.array_equal(got, want)


def test_correlation_gram_rejects_bad_weights():
    with pytest.raises(ValueError):
        correlation_gram(BitMatrix.identity(2), [1, 0])
