import math

import numpy as np
import pytest

from lspn import highnoise as hn
from lspn.bitlin import BitMatrix, BitVector, to_signed
from lspn.oracle import Oracle, SampleBatch, new_instance
from lspn.probkit import BiasParams, accepted_ones_pmf, bias_params, log_accept_rate, tv_distance


def test_m_prime_formula():
    # 8 * 4^2 * 5 * 6 * ln 4
    assert hn.default_m_prime(24, 6, 0.2, 1) == math.ceil(3840 * math.log(4))
    assert hn.default_base_m(24, 6, 0.1) == math.ceil(6 * math.log(4) ** 1.1 / 0.1)


def test_k_must_be_multiple_of_three():
    with pytest.raises(ValueError, match="divisible by 3"):
        hn.learn(Oracle(new_instance(20, 5, 0.1, 0)), 5, 0.1)
    with pytest.raises(ValueError, match="exceeds the cap"):
        hn.design_codes(200, 9, col_cap=1000)


def test_design_singletons_equal_rows():
    b = Oracle(new_instance(10, 3, 0.0, 1)).draw(20)
    D, codes = hn.build_design(b, 3)
    assert np.array_equal(D.to_bits(), b.X.to_bits())


def test_design_sign_algebra():
    b = SampleBatch(BitMatrix.from_strings(["1111"]), [0])
    D, _ = hn.build_design(b, 6)
    assert not D.to_bits().any()


def test_design_matches_product_oracle():
    rng = np.random.default_rng(4)
    bits = rng.integers(0, 2, (6, 5)).astype(np.uint8)
    D, codes = hn.build_design(SampleBatch(BitMatrix.from_bits(bits), np.zeros(6)), 6)
    s = to_signed(bits)
    for r, E in enumerate(codes.tolist()):
        want = np.prod(s[:, E], axis=1)
        assert np.array_equal(to_signed(D.to_bits()[:, r]), want)


def test_tester_matches_triple_loop():
    rng = np.random.default_rng(5)
    bits = rng.integers(0, 2, (10, 4)).astype(np.uint8)
    y = rng.integers(0, 2, 10).astype(np.uint8)
    T = hn.tester(BitMatrix.from_bits(bits), y)
    s, ys = to_signed(bits).astype(int), to_signed(y).astype(int)
    want = [[sum(s[i, a] * s[i, b] * ys[i] for i in range(10)) for b in range(4)] for a in range(4)]
    assert T.C.tolist() == want
    assert np.all(np.diag(T.C) == T.m_pos - T.m_neg)
    assert np.array_equal(T.C, T.C.T) and np.abs(T.C).max() <= 10


def test_tester_cancellation():
    D = BitMatrix.from_strings(["101", "101"])
    assert not hn.tester(D, [0, 1]).C.any()
    assert np.array_equal(hn.tester(D, [0, 0]).C, hn.tester(D, [0, 0]).C.T)


def planted_tester(n, secret_sets, big=100):
    codes = hn.design_codes(n, 6)
    index = {tuple(c): i for i, c in enumerate(codes.tolist())}
    C = np.zeros((len(codes), len(codes)), dtype=np.int64)
    a, b, c = (index[tuple(s)] for s in secret_sets)
    for i, j in [(a, b), (a, c), (b, c)]:
        C[i, j] = C[j, i] = big
    return hn.TesterMatrix(C, 0, 0, codes)


def test_extract_planted_triple():
    T = planted_tester(9, [(0, 4), (2, 7), (5, 8)])
    assert hn.extract_secret(T, 9, 6, mode="argmax") == (0, 2, 4, 5, 7, 8)
    assert hn.extract_secret(T, 9, 6, threshold=50, mode="threshold") == (0, 2, 4, 5, 7, 8)
    assert hn.extract_secret(T, 9, 6, threshold=101, mode="threshold") is None


def test_more_samples_alpha_zero_is_subsample():
    b = Oracle(new_instance(16, 3, 0.0, 2)).draw(40)
    p = BiasParams(16, 3, 0.0, 8, 0.0, 0, 16)
    out, stats = hn.more_samples(b, 3, 1, 500, np.random.default_rng(0), params=p)
    assert stats.attempts == stats.accepted == 500
    rows = {r.tobytes() + bytes([y]) for r, y in zip(b.X.words, b.y)}
    assert all(r.tobytes() + bytes([y]) in rows for r, y in zip(out.X.words, out.y))


def test_more_samples_empty():
    b = Oracle(new_instance(16, 3, 0.0, 2)).draw(5)
    out, stats = hn.more_samples(b, 3, 2, 0, np.random.default_rng(0), params=bias_params(16, 3, clamp=True))
    assert out.m == 0 and stats.attempts == 0


def test_more_samples_labels_are_xors():
    inst = new_instance(20, 3, 0.0, 3)
    b = Oracle(inst).draw(30)
    out, _ = hn.more_samples(b, 3, 3, 200, np.random.default_rng(1), params=bias_params(20, 3, clamp=True))
    mask = BitVector.from_indices(inst.secret, 20).words
    assert np.array_equal(out.y, np.bitwise_count(out.X.words & mask).sum(1) & 1)


def test_attempt_cap_raises():
    b = Oracle(new_instance(60, 1, 0.0, 0)).draw(50)
    with pytest.raises(RuntimeError, match="attempt cap"):
        hn.more_samples(b, 1, 1, 1000, np.random.default_rng(0), params=bias_params(60, 1), cap=10)


def test_literal_loop_matches_exact_law():
    # n=60, k=1 has a valid window and an acceptance rate high enough to loop
    params = bias_params(60, 1)
    rng = np.random.default_rng(11)
    bits = rng.integers(0, 2, (400000, 60)).astype(np.uint8)
    batch = SampleBatch(BitMatrix.from_bits(bits), np.zeros(len(bits), np.uint8))
    out, stats = hn.more_samples(batch, 1, 1, 20000, rng, params=params)
    hist = np.bincount(60 - out.X.to_bits().sum(1), minlength=61) / out.m
    assert tv_distance(hist, accepted_ones_pmf(params)) < 0.03
    X, attempts = hn.exact_biased(params, 20000, rng)
    hist2 = np.bincount(60 - X.to_bits().sum(1), minlength=61) / X.n_rows
    assert tv_distance(hist2, accepted_ones_pmf(params)) < 0.03
    # attempts per accept for the loop and the simulated count agree within 10%
    assert attempts / 20000 == pytest.approx(stats.attempts / stats.accepted, rel=0.1)


def test_single_vector_add_bias_rate():
    params = bias_params(60, 1)
    rng = np.random.default_rng(12)
    tries = 100000
    rows = rng.integers(0, 2, (tries, 60)).astype(np.uint8)
    hits = sum(hn.add_bias(BitVector.from_bits(r), params, rng) for r in rows)
    rate = math.exp(log_accept_rate(params))
    assert abs(hits - tries * rate) <= 4 * math.sqrt(tries * rate)


def test_exact_sampler_coordinate_means():
    params = bias_params(200, 4)
    X, _ = hn.exact_biased(params, 50000, np.random.default_rng(3))
    means = to_signed(X.to_bits()).mean(axis=0)
    se = math.sqrt((1 - (2 * params.alpha) ** 2) / 50000)
    assert np.mean(np.abs(means - 2 * params.alpha) <= 3 * se) > 0.97


def test_tester_expectation_separates():
    # synthetic U_alpha rows with noiseless labels, k = 6
    n, k = 12, 6
    params = bias_params(n, k, clamp=True)
    rng = np.random.default_rng(8)
    X, _ = hn.exact_biased(params, 20000, rng)
    secret = (0, 1, 2, 3, 4, 5)
    y = (X.to_bits()[:, list(secret)].sum(1) & 1).astype(np.uint8)
    D, codes = hn.build_design(SampleBatch(X, y), k)
    T = hn.tester(D, y, codes)
    index = {tuple(c): i for i, c in enumerate(codes.tolist())}
    m, a2 = X.n_rows, 2 * params.alpha
    inside = T.C[index[(0, 1)], index[(2, 3)]]
    outside = T.C[index[(0, 6)], index[(7, 8)]]
    assert abs(inside - m * a2 ** 2) <= 4 * math.sqrt(m)
    assert abs(outside - m * a2 ** 8) <= 4 * math.sqrt(m)


def test_c_grid():
    assert hn.c_grid(1000, 0.2, 3) == [800, 810, 790, 820, 780, 830, 770]


def test_noiseless_end_to_end():
    inst = new_instance(12, 3, 0.0, 4)
    res = hn.learn(Oracle(inst), 3, 0.0, rng=np.random.default_rng(0))
    assert res.secret == inst.secret


def test_noiseless_n24_k3():
    inst = new_instance(24, 3, 0.0, 5)
    for mode in hn.MODES:
        res = hn.learn(Oracle(inst), 3, 0.0, hn.HighNoiseConfig(mode=mode), np.random.default_rng(1))
        assert res.secret == inst.secret


def test_base_batch_path_with_q2():
    inst = new_instance(12, 3, 0.05, 6)
    o = Oracle(inst)
    cfg = hn.HighNoiseConfig(q=2, m=200, mode="threshold")
    res = hn.learn(o, 3, 0.05, cfg, np.random.default_rng(2))
    assert res.secret == inst.secret
    assert res.detail["base"] == 200


def test_candidates_are_disjoint_unions():
    rng = np.random.default_rng(9)
    codes = hn.design_codes(9, 6)
    C = rng.integers(-50, 50, (len(codes), len(codes)))
    C = C + C.T
    T = hn.TesterMatrix(C, 0, 0, codes)
    for cand in hn.candidates(T, 9, 6, threshold=40, mode="threshold"):
        assert len(cand) == 6
    assert len(hn.extract_secret(T, 9, 6)) == 6
