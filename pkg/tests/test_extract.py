import itertools
import math

import numpy as np
import pytest

from qbsm import extract
from qbsm.extract import parse_bits


def test_bit_helpers():
    assert extract.bit(0b1010, 1, 4) == 1 and extract.bit(0b1010, 2, 4) == 0
    assert extract.bits_to_int([1, 0, 1, 0]) == 10
    assert parse_bits("0110") == 6


def test_ip_values():
    e = extract.ip_extractor(2)
    assert e.evaluate(parse_bits("11"), parse_bits("11")) == 0
    assert all(e.evaluate(x, 0) == 0 for x in range(4))
    assert extract.seeded_nonuniformity(e, np.full(4, 0.25)) == pytest.approx(1 / 8)


def test_pair_xor_values():
    e = extract.pair_xor(4)
    assert e.evaluate(parse_bits("1010"), (1, 3)) == 0
    assert e.evaluate(parse_bits("1100"), (1, 2)) == 0
    assert e.evaluate(parse_bits("1100"), (2, 3)) == 1
    assert len(e.seeds) == math.comb(4, 2)
    assert extract.seeded_nonuniformity(e, np.full(16, 1 / 16)) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        e.evaluate(3, (2, 2))
    with pytest.raises(ValueError):
        e.evaluate(3, (0, 5))


def test_pair_xor_tuples():
    e = extract.pair_xor_tuples(8, 2)
    assert all(len({i for p in y for i in p}) == 4 for y in e.seeds)
    assert len(e.seeds) == math.comb(8, 2) * math.comb(6, 2)
    assert e.evaluate(parse_bits("11000000"), ((1, 3), (2, 4))) == 0b11
    with pytest.raises(ValueError):
        e.evaluate(0, ((1, 2), (2, 3)))
    with pytest.raises(ValueError):
        extract.pair_xor_tuples(4, 3)


def test_hash_seeds():
    e = extract.two_universal_hash(4, 2)
    assert all(e.evaluate(x, 0) == 0 for x in range(16))
    assert all(e.evaluate(x, 1) == x >> 2 for x in range(16))


def test_gf2_field_axioms():
    n = 4
    for a in range(1, 16):
        # every nonzero element has an inverse
        assert any(extract.gf2_mul(a, b, n) == 1 for b in range(1, 16))
    for a, b, c in itertools.product(range(0, 16, 3), repeat=3):
        assert extract.gf2_mul(a, b ^ c, n) == extract.gf2_mul(a, b, n) ^ extract.gf2_mul(a, c, n)


def test_hash_collision_probability(rng):
    e = extract.two_universal_hash(4, 1)
    for _ in range(20):
        x1, x2 = rng.choice(16, size=2, replace=False)
        assert extract.collision_probability(e, int(x1), int(x2)) <= 0.5 + 1e-12


def test_multi_seed():
    e = extract.ip_extractor(2)
    assert extract.compose_multi_seed(e, 1) is e
    e2 = extract.compose_multi_seed(e, 2)
    assert e2.evaluate(parse_bits("11"), (parse_bits("01"), parse_bits("11"))) == 0b10
    c2 = extract.compose_multi_seed(extract.constant_extractor(3, value=1, num_seeds=2), 2)
    assert set(np.unique(c2.table())) == {0b11}


def test_blockwise():
    e = extract.ip_extractor(2)
    b1 = extract.compose_blockwise(e, 2, 1)
    np.testing.assert_array_equal(b1.table(), extract.compose_multi_seed(e, 2).table())
    bl = extract.compose_blockwise(e, 1, 2)
    assert bl.evaluate(parse_bits("1101"), parse_bits("11")) == 0b01
    b2 = extract.compose_blockwise(e, 2, 2)
    for xb in range(4):
        x = (xb << 2) | xb
        for y in b2.seeds:
            out = b2.evaluate(x, y)
            assert out >> 2 == out & 0b11


def test_descriptor_round_trip():
    for e in (extract.ip_extractor(3), extract.pair_xor(4), extract.pair_xor_tuples(6, 2),
              extract.two_universal_hash(4, 3), extract.constant_extractor(2, 1, 1, 3),
              extract.identity_extractor(2), extract.compose_multi_seed(extract.ip_extractor(2), 2),
              extract.compose_blockwise(extract.pair_xor(3), 1, 2)):
        again = extract.from_descriptor(e.descriptor())
        np.testing.assert_array_equal(again.table(), e.table())
        assert again.descriptor() == e.descriptor()


def test_locality_positions():
    e = extract.pair_xor_tuples(6, 2)
    y = e.seeds[5]
    assert len(e.positions(y)) == e.locality == 4
    bl = extract.compose_blockwise(extract.pair_xor(3), 1, 2)
    assert bl.positions(bl.seeds[0]) == (1, 2, 4, 5)


def test_epsilon_values():
    e = extract.ip_extractor(2)
    assert extract.worst_case_epsilon(e, 2).epsilon == pytest.approx(1 / 8)
    wit = extract.worst_case_epsilon(e, 1)
    assert wit.exhaustive and wit.epsilon == pytest.approx(1 / 4)
    # the witness really is a flat source achieving the error
    px = np.zeros(4)
    px[list(wit.support)] = 0.5
    assert extract.seeded_nonuniformity(e, px) == pytest.approx(1 / 4)
    for k in range(3):
        assert extract.worst_case_epsilon(extract.constant_extractor(2), k).epsilon == pytest.approx(0.5)
    # any extractor: a point source leaves the output fixed by the seed
    assert extract.worst_case_epsilon(extract.pair_xor(4), 0).epsilon == pytest.approx(0.5)


def test_epsilon_ip4_k2():
    wit = extract.worst_case_epsilon(extract.ip_extractor(4), 2)
    assert wit.exhaustive and wit.epsilon == pytest.approx(3 / 16)


def test_epsilon_non_integral_size():
    with pytest.raises(ValueError):
        extract.worst_case_epsilon(extract.ip_extractor(2), 0.5)


def test_epsilon_heuristic_is_lower_bound(rng):
    e = extract.ip_extractor(4)
    exact = extract.worst_case_epsilon(e, 2).epsilon
    heur = extract.worst_case_epsilon(e, 2, budget=10, rng=rng)
    assert heur.mode == "heuristic" and heur.epsilon <= exact + 1e-15
