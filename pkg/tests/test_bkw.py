import numpy as np
import pytest

from lspn import bkw
from lspn.bitlin import BitMatrix
from lspn.bkw import (BkwConfig, _block_slices, bkw_solve, choose_blocks, pack_subset, reduce,
                      reduced_noise, subset_size)
from lspn.oracle import Oracle, SampleBatch, new_instance


def secret_word(inst, R):
    return sum(1 << i for i, r in enumerate(R) if r in inst.secret)


def parity64(rows, mask):
    return (np.bitwise_count(rows & np.uint64(mask)) & 1).astype(np.uint8)


def test_subset_size_clamp():
    assert subset_size(1) == 2
    assert subset_size(4) == 8
    assert subset_size(20) == 60


def test_block_choice():
    assert choose_blocks(16, 0.1) == (2, 8)
    assert _block_slices(10, 3, 4) == [(0, 4), (4, 4), (8, 2)]
    with pytest.raises(ValueError):
        _block_slices(10, 2, 4)


def test_pack_subset_bit_order():
    X = BitMatrix.from_strings(["1010", "0111"])
    b = SampleBatch(X, [0, 1])
    assert pack_subset(b, [2, 0]).tolist() == [0b11, 0b01]


def test_reduction_zeroes_blocks_and_keeps_labels_exact():
    inst = new_instance(40, 3, 0.0, 1)
    R = list(range(0, 40, 2))
    b = Oracle(inst).draw(20000)
    rows = pack_subset(b, R)
    mask = secret_word(inst, R)
    # noiseless labels of the restricted rows
    labels = parity64(rows, mask)
    blocks = _block_slices(len(R), 3, 7)
    for target in range(3):
        red, lab = reduce(rows, labels, blocks, target)
        for i, (shift, w) in enumerate(blocks):
            if i != target:
                assert not np.any(red & np.uint64(((1 << w) - 1) << shift))
        assert np.array_equal(lab, parity64(red, mask))


def test_reduced_flip_rate():
    eta, a = 0.1, 3
    inst = new_instance(24, 3, eta, 2)
    R = list(range(24))
    b = Oracle(inst).draw(200000)
    rows = pack_subset(b, R)
    red, lab = reduce(rows, b.y, _block_slices(24, a, 8), a - 1)
    flips = lab ^ parity64(red, secret_word(inst, R))
    p = reduced_noise(eta, a)
    assert abs(flips.mean() - p) <= 3 * np.sqrt(p * (1 - p) / len(flips))


def test_single_block_noiseless():
    inst = new_instance(12, 3, 0.0, 3)
    b = Oracle(inst).draw(100000)
    res = bkw_solve(range(12), b, a=1, b=12)
    assert res.secret == inst.secret


def test_starved_when_samples_scarce():
    inst = new_instance(30, 2, 0.1, 4)
    res = bkw_solve(range(30), Oracle(inst).draw(50), a=2, b=15)
    assert res.status == "starved" and res.secret is None


def test_tie_leaves_coordinate_unresolved():
    # e_0 appears twice with labels 0 and 1; e_1 once
    X = BitMatrix.from_strings(["10", "10", "01"])
    res = bkw_solve([0, 1], SampleBatch(X, [0, 1, 1]), a=1, b=2)
    assert res.status == "ok" and res.secret is None


def test_solve_on_secret_superset():
    inst = new_instance(64, 4, 0.1, 5)
    R = sorted(set(inst.secret) | set(range(0, 64, 5)))[:16]
    R = sorted(set(R) | set(inst.secret))
    res = bkw_solve(R, Oracle(inst).draw(1 << 16), eta=0.1)
    assert res.secret == inst.secret


def test_learn_end_to_end():
    inst = new_instance(32, 2, 0.05, 6)
    o = Oracle(inst)
    res = bkw.learn(o, 2, 0.05, rng=np.random.default_rng(6))
    assert res.secret == inst.secret
    assert o.samples_drawn == res.samples


def test_learn_cap():
    inst = new_instance(64, 4, 0.1, 7)
    res = bkw.learn(Oracle(inst), 4, 0.1, BkwConfig(s=16, outer_cap=1), np.random.default_rng(0))
    assert res.found or res.status == "capped"
