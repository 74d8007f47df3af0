import numpy as np
import pytest

from lspn.bitlin import row_parities
from lspn.oracle import (LspnInstance, Oracle, SampleFormatError, agreement, default_m2,
                         format_batch, load_batch, load_instance, midpoint_threshold, new_instance,
                         parse_batch, save_batch, save_instance, verify_candidate)


def test_instance_is_seeded():
    a = new_instance(64, 4, 0.1, 11)
    b = new_instance(64, 4, 0.1, 11)
    assert a == b and len(a.secret) == 4
    assert len({new_instance(64, 4, 0.1, s).secret for s in range(10)}) > 1
    assert a.fingerprint() == b.fingerprint()


def test_instance_validation():
    with pytest.raises(ValueError):
        new_instance(10, 11, 0.1, 0)
    with pytest.raises(ValueError):
        LspnInstance(10, 2, 0.5, (1, 2), 0)
    with pytest.raises(ValueError):
        new_instance(10, 2, 0.1, 0, secret=[3, 3])


def test_instance_json_round_trip(tmp_path):
    inst = new_instance(30, 3, 0.05, 4)
    save_instance(inst, tmp_path / "i.json")
    assert load_instance(tmp_path / "i.json") == inst
    save_instance(inst, tmp_path / "p.json", public=True)
    with pytest.raises(ValueError):
        load_instance(tmp_path / "p.json")


def test_draws_are_deterministic_and_fresh():
    inst = new_instance(70, 3, 0.2, 5)
    o1, o2 = Oracle(inst), Oracle(inst)
    a, b = o1.draw(100), o2.draw(100)
    assert a == b
    assert not o1.draw(100) == a
    assert o1.samples_drawn == 200
    assert not Oracle(inst, stream_id=1).draw(100) == a


def test_noiseless_labels_are_parities():
    inst = new_instance(130, 5, 0.0, 1)
    b = Oracle(inst).draw(500)
    assert np.array_equal(b.y, row_parities(b.X, inst.secret))


def test_noise_rate():
    inst = new_instance(20, 2, 0.3, 2)
    o = Oracle(inst)
    b = o.draw(40000)
    flips = b.y ^ row_parities(b.X, inst.secret)
    assert int(flips.sum()) == o.flips
    assert abs(flips.mean() - 0.3) < 4 * np.sqrt(0.21 / 40000)


def test_verification():
    inst = new_instance(40, 3, 0.1, 3)
    b = Oracle(inst).draw(2000)
    assert verify_candidate(inst.secret, b, 0.75)
    wrong = tuple(sorted(set(inst.secret) ^ {next(i for i in range(40) if i not in inst.secret)}))
    assert agreement(wrong, b) == pytest.approx(0.5, abs=0.06)
    assert not verify_candidate(wrong, b, 0.75)
    # strict inequality
    assert not verify_candidate(inst.secret, b, agreement(inst.secret, b))


def test_thresholds():
    assert midpoint_threshold(0.2) == pytest.approx(0.65)
    assert default_m2(256, 4) == 1232


@pytest.mark.parametrize("n", [1, 8, 9, 63, 64, 65, 200])
def test_file_round_trip(tmp_path, n):
    b = Oracle(new_instance(n, 1, 0.2, n)).draw(37)
    save_batch(b, tmp_path / "s.txt")
    assert load_batch(tmp_path / "s.txt") == b


def test_file_layout():
    inst = new_instance(12, 1, 0.0, 0, secret=[0])
    b = Oracle(inst).draw(1)
    text = format_batch(b)
    head, rec = text.splitlines()
    assert head == "LSPN1 n=12 m=1"
    hexpart, label = rec.split(" ")
    assert len(hexpart) == 4 and hexpart == hexpart.lower()
    assert int(label) == b.X.to_bits()[0, 0]


@pytest.mark.parametrize("text,msg", [
    ("", "line 1"),
    ("LSPN2 n=8 m=1\nff 1\n", "line 1: bad header"),
    ("LSPN1 n=8 m=2\nff 1\n", "line 3: truncated, record 1 missing"),
    ("LSPN1 n=8 m=1\nff 1\n00 0\n", "line 3: extra record"),
    ("LSPN1 n=8 m=1\nfff 1\n", "line 2: record 0 has"),
    ("LSPN1 n=8 m=1\nzz 1\n", "line 2: record 0 has invalid hex"),
    ("LSPN1 n=8 m=1\nFF 1\n", "lowercase"),
    ("LSPN1 n=4 m=1\nff 1\n", "sets bits beyond n=4"),
    ("LSPN1 n=8 m=1\nff 2\n", "line 2: record 0 is not"),
])
def test_parse_errors(text, msg):
    with pytest.raises(SampleFormatError, match=msg):
        parse_batch(text)
