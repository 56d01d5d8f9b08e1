"""Invariants checked on hypothesis-generated instances."""

import json

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from qbsm import adversary as adv
from qbsm import extract, opalg, povm
from qbsm.cqstate import (
    Distribution,
    apply_extractor,
    marginal,
    nonuniformity_classical,
    nonuniformity_quantum,
    random_cq_state,
)
from qbsm.harness import report

SETTINGS = settings(max_examples=60, deadline=None)
seeds = st.integers(0, 2**32 - 1)
dims = st.integers(1, 6)


@SETTINGS
@given(seeds, dims)
def test_trace_norm_is_a_norm(seed, d):
    rng = np.random.default_rng(seed)
    a, b = opalg.random_hermitian(d, rng), opalg.random_hermitian(d, rng)
    assert opalg.trace_norm(a + b) <= opalg.trace_norm(a) + opalg.trace_norm(b) + 1e-12
    u = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))[0]
    assert abs(opalg.trace_norm(u @ a @ u.conj().T) - opalg.trace_norm(a)) <= 1e-10
    assert abs(opalg.trace_norm(-2.5 * a) - 2.5 * opalg.trace_norm(a)) <= 1e-10


@SETTINGS
@given(seeds, dims)
def test_trace_distance_of_states_in_unit_interval(seed, d):
    rng = np.random.default_rng(seed)
    dist = opalg.trace_norm(opalg.random_density(d, rng) - opalg.random_density(d, rng))
    assert -1e-15 <= dist <= 1 + 1e-12


@SETTINGS
@given(seeds, st.integers(2, 6), st.integers(1, 4), st.integers(2, 4))
def test_nonuniformity_range_and_side_information(seed, nz, nw, d):
    rng = np.random.default_rng(seed)
    labels = [(z, w) for z in range(nz) for w in range(nw)]
    rho = random_cq_state(rng, len(labels), d, labels=labels)
    with_w = nonuniformity_quantum(rho, 0, (1,))
    without = nonuniformity_quantum(rho, 0, ())
    assert -1e-12 <= without <= with_w + 1e-12
    assert with_w <= 1 - 1 / nz + 1e-12
    # measuring Q can only lose information
    M = povm.random_povm(d, int(rng.integers(1, 6)), rng)
    measured = nonuniformity_classical(povm.measure_cq(marginal(rho, (0,)), M), 0, (1,))
    assert measured <= without + 1e-12


@SETTINGS
@given(seeds, st.integers(2, 6), st.integers(1, 4))
def test_bracket_is_consistent(seed, nx, d):
    rng = np.random.default_rng(seed)
    rho = random_cq_state(rng, nx, d)
    br = povm.guessing_prob_bracket(rho, max_iter=60)
    assert max(rho.probs) - 1e-12 <= br.p_lo <= br.p_hi + 1e-12
    assert br.p_hi <= 1 + 1e-12
    M = povm.random_povm(d, nx, rng)
    assert povm.success_probability(rho, M) <= br.p_hi + 1e-12


@SETTINGS
@given(seeds, st.integers(2, 5))
def test_helstrom_pgm_ordering(seed, d):
    rng = np.random.default_rng(seed)
    p0 = float(rng.uniform(0.05, 0.95))
    r0, r1 = opalg.random_density(d, rng), opalg.random_density(d, rng)
    hel, _ = povm.helstrom(p0, r0, 1 - p0, r1)
    from qbsm.cqstate import CqState

    ens = CqState.from_ensemble([p0, 1 - p0], np.stack([r0, r1]))
    p_pgm = povm.success_probability(ens, povm.pgm(ens))
    assert hel**2 - 1e-12 <= p_pgm <= hel + 1e-12


@SETTINGS
@given(st.sampled_from(["ip", "pair_xor", "hash"]), st.integers(2, 4))
def test_epsilon_monotone_in_k(family, n):
    e = {"ip": extract.ip_extractor, "pair_xor": extract.pair_xor,
         "hash": lambda n: extract.two_universal_hash(n, 1)}[family](n)
    eps = [extract.worst_case_epsilon(e, k).epsilon for k in range(n + 1)]
    assert all(a >= b - 1e-12 for a, b in zip(eps, eps[1:]))
    assert eps[0] == 0.5


@SETTINGS
@given(seeds, st.sampled_from([extract.ip_extractor(3), extract.pair_xor(4),
                               extract.two_universal_hash(3, 2)]), st.integers(0, 2))
def test_attack_values_bracketed_by_storage(seed, e, q):
    rng = np.random.default_rng(seed)
    px = rng.dirichlet(np.ones(e.num_sources))
    enc = adv.depolarize(adv.random_pure_encoder(e.num_sources, q, rng), float(rng.uniform()))
    val = adv.quantum_attack_eval(e, px, enc).value
    assert extract.seeded_nonuniformity(e, px) - 1e-12 <= val <= adv.full_storage_value(e, px) + 1e-12
    assert abs(val - nonuniformity_quantum(apply_extractor(enc.cq_state(px), e), 0, (2,))) <= 1e-12


@SETTINGS
@given(st.lists(st.floats(allow_nan=False, allow_infinity=False), max_size=8))
def test_report_floats_round_trip(values):
    text = report.dumps({"v": values})
    assert json.loads(text)["v"] == values


@SETTINGS
@given(seeds, st.integers(1, 4))
def test_classical_nonuniformity_against_direct_sum(seed, nw):
    rng = np.random.default_rng(seed)
    nz = 3
    probs = rng.dirichlet(np.ones(nz * nw))
    dist = Distribution([(z, w) for z in range(nz) for w in range(nw)], probs)
    joint = probs.reshape(nz, nw)
    direct = 0.5 * np.abs(joint - joint.sum(axis=0)[None] / nz).sum()
    assert abs(nonuniformity_classical(dist, 0, (1,)) - direct) <= 1e-12
