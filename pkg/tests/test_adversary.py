import numpy as np
import pytest

from qbsm import adversary as adv
from qbsm import extract, opalg
from qbsm.cqstate import apply_extractor, nonuniformity_quantum

# frozen oracle values (exact rational arithmetic over all seeds and tables)
IP2_FIRST_BIT = 1 / 4
IP2_BEST_ONE_BIT = 5 / 16
IP2_ZERO_PLUS = 0.21338834764831843  # per-seed trace distances, plain numpy eigvalsh


def uniform(e):
    return np.full(e.num_sources, 1.0 / e.num_sources)


def test_classical_encoder_values():
    e = extract.ip_extractor(2)
    px = uniform(e)
    const = adv.ClassicalEncoder(np.zeros(4, dtype=int), 0)
    assert adv.classical_attack_eval(e, px, const).value == pytest.approx(extract.seeded_nonuniformity(e, px))
    ident = adv.ClassicalEncoder(np.arange(4), 2)
    assert adv.classical_attack_eval(e, px, ident).value == pytest.approx(0.5)
    first = adv.ClassicalEncoder(np.arange(4) >> 1, 1)
    assert adv.classical_attack_eval(e, px, first).value == pytest.approx(IP2_FIRST_BIT)


def test_best_classical():
    e = extract.ip_extractor(2)
    px = uniform(e)
    _, r0 = adv.best_classical_encoder(e, px, 0)
    assert r0.value == pytest.approx(1 / 8) and r0.exact
    _, r1 = adv.best_classical_encoder(e, px, 1)
    assert r1.value == pytest.approx(IP2_BEST_ONE_BIT) and r1.exact
    enc, r2 = adv.best_classical_encoder(e, px, 3)
    assert r2.value == pytest.approx(0.5)
    np.testing.assert_array_equal(enc.table, np.arange(4))


def test_hill_climb_finds_a_valid_lower_bound(rng):
    e = extract.pair_xor(4)
    px = uniform(e)
    enc, res = adv.best_classical_encoder(e, px, 1, budget=10, restarts=3, rng=rng)
    assert not res.exact
    assert adv.classical_attack_eval(e, px, enc).value == pytest.approx(res.value)
    _, exact = adv.best_classical_encoder(e, px, 1)
    assert res.value <= exact.value + 1e-12


def test_encoder_json_round_trip(rng):
    c = adv.ClassicalEncoder(rng.integers(0, 4, size=8), 2)
    c2 = adv.ClassicalEncoder.from_json(c.to_json())
    np.testing.assert_array_equal(c.table, c2.table)
    q = adv.random_pure_encoder(4, 1, rng)
    q2 = adv.QuantumEncoder.from_json(q.to_json())
    np.testing.assert_allclose(q.states, q2.states)
    m = adv.depolarize(q, 0.3)
    np.testing.assert_allclose(adv.QuantumEncoder.from_json(m.to_json()).states, m.states)


def test_quantum_encoder_validation():
    with pytest.raises(ValueError):
        adv.QuantumEncoder(np.stack([np.eye(2), np.eye(2)]))
    with pytest.raises(ValueError):
        adv.QuantumEncoder(np.stack([np.diag([1.5, -0.5])]))


def test_quantum_values():
    e = extract.ip_extractor(2)
    px = uniform(e)
    useless = adv.trivial_encoder(4, 2)
    assert adv.quantum_attack_eval(e, px, useless).value == pytest.approx(1 / 8)
    assert adv.quantum_attack_eval(e, px, adv.orthogonal_encoder(4, 2)).value == pytest.approx(0.5)
    zx = adv.bit_encoder(2, 1, "zx")
    assert adv.quantum_attack_eval(e, px, zx).value == pytest.approx(IP2_ZERO_PLUS, abs=1e-12)


def test_two_quantum_routes_agree(rng):
    for e in (extract.ip_extractor(3), extract.two_universal_hash(3, 2), extract.compose_multi_seed(
            extract.pair_xor(3), 2)):
        enc = adv.depolarize(adv.random_pure_encoder(e.num_sources, 2, rng), 0.8)
        px = rng.dirichlet(np.ones(e.num_sources))
        a = adv.quantum_attack_eval(e, px, enc).value
        b = adv.quantum_attack_eval_generic(e, px, enc)
        rho = apply_extractor(enc.cq_state(px), e)
        assert a == pytest.approx(b, abs=1e-12)
        assert a == pytest.approx(nonuniformity_quantum(rho, 0, (2,)), abs=1e-12)


def test_commuting_encoder_matches_classical(rng):
    e = extract.pair_xor(4)
    px = uniform(e)
    c = adv.ClassicalEncoder(rng.integers(0, 4, size=16), 2)
    q = adv.encoder_from_classical(c)
    assert adv.quantum_attack_eval(e, px, q).value == pytest.approx(adv.classical_attack_eval(e, px, c).value)


def test_full_storage_is_half_for_one_bit():
    for e in (extract.ip_extractor(3), extract.pair_xor(4)):
        assert adv.full_storage_value(e, uniform(e)) == pytest.approx(0.5)


def test_gkw_states():
    enc = adv.gkw_encoder(8)
    v0 = enc.states[0]
    np.testing.assert_allclose(v0, np.full((8, 8), 1 / 8), atol=1e-14)
    # x and its complement differ by a global phase
    np.testing.assert_allclose(enc.states[0b10110001], enc.states[0b01001110], atol=1e-14)
    rng = np.random.default_rng(5)
    for _ in range(30):
        a, b = (int(v) for v in rng.integers(0, 256, size=2))
        overlap = np.real(np.trace(enc.states[a] @ enc.states[b]))
        ham = bin(a ^ b).count("1")
        assert overlap == pytest.approx(((8 - 2 * ham) / 8) ** 2, abs=1e-12)


def test_seesaw_examples(rng):
    e = extract.ip_extractor(2)
    _, r0 = adv.seesaw_optimize_encoder(e, uniform(e), 0, rng=rng)
    assert r0.value == pytest.approx(1 / 8)
    _, r2 = adv.seesaw_optimize_encoder(e, uniform(e), 2, rng=rng)
    assert r2.value == pytest.approx(0.5, abs=1e-9)
    p = extract.pair_xor(4)
    _, rq = adv.seesaw_optimize_encoder(p, uniform(p), 1, rng=rng)
    _, rc = adv.best_classical_encoder(p, uniform(p), 1)
    assert rq.value >= rc.value - 1e-12


def test_depolarize_endpoints(rng):
    enc = adv.random_pure_encoder(4, 1, rng)
    np.testing.assert_allclose(adv.depolarize(enc, 1.0).states, enc.states)
    np.testing.assert_allclose(adv.depolarize(enc, 0.0).states[2], np.eye(2) / 2)
    assert opalg.numerical_rank(adv.depolarize(enc, 0.5).states[0]) == 2
