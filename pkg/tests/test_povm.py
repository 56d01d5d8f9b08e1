import math

import numpy as np
import pytest

from qbsm import extract, opalg, povm
from qbsm.cqstate import CqState, Distribution, marginal, random_cq_state

KET0 = np.array([1, 0], dtype=complex)
PLUS = np.array([1, 1], dtype=complex) / math.sqrt(2)
HELSTROM_0_PLUS = 0.5 * (1 + math.sqrt(0.5))  # 0.8535534


def trine():
    vecs = [np.array([math.cos(2 * math.pi * j / 3), math.sin(2 * math.pi * j / 3)]) for j in range(3)]
    return CqState.from_ensemble(np.full(3, 1 / 3), np.stack([np.outer(v, v) for v in vecs]))


def test_povm_validation():
    with pytest.raises(ValueError):
        povm.Povm(np.stack([np.eye(2), np.eye(2)]))
    with pytest.raises(ValueError):
        povm.Povm(np.stack([np.diag([1.5, 1.0]), np.diag([-0.5, 0.0])]))


def test_measure_cq_examples(rng):
    rho = random_cq_state(rng, 3, 2)
    joint = povm.measure_cq(rho, povm.Povm(np.eye(2)[None]))
    np.testing.assert_allclose(marginal(joint, (0,)).probs, rho.probs)
    orth = CqState.from_ensemble([0.4, 0.6], np.stack([np.diag([1.0, 0]), np.diag([0, 1.0])]))
    joint = povm.measure_cq(orth, povm.Povm(np.stack([np.diag([1.0, 0]), np.diag([0, 1.0])])))
    assert joint.as_dict() == pytest.approx({(0, 0): 0.4, (0, 1): 0.0, (1, 0): 0.0, (1, 1): 0.6})
    plus = CqState.from_ensemble([1.0], opalg.projector(PLUS)[None])
    joint = povm.measure_cq(plus, povm.Povm(np.stack([np.diag([1.0, 0]), np.diag([0, 1.0])])))
    np.testing.assert_allclose(marginal(joint, (1,)).probs, [0.5, 0.5])


def test_helstrom_examples(rng):
    assert povm.helstrom(0.5, np.diag([1.0, 0]), 0.5, np.diag([0, 1.0]))[0] == pytest.approx(1.0)
    st = opalg.random_density(3, rng)
    assert povm.helstrom(0.3, st, 0.7, st)[0] == pytest.approx(0.7)
    p, M = povm.helstrom(0.5, opalg.projector(KET0), 0.5, opalg.projector(PLUS))
    assert p == pytest.approx(HELSTROM_0_PLUS, abs=1e-12)
    assert p == pytest.approx(0.8535534, abs=1e-7)
    ens = CqState.from_ensemble([0.5, 0.5], np.stack([opalg.projector(KET0), opalg.projector(PLUS)]))
    assert povm.success_probability(ens, M) == pytest.approx(p, abs=1e-12)


def test_pgm_examples():
    orth = CqState.from_ensemble([0.5, 0.5], np.stack([np.diag([1.0, 0]), np.diag([0, 1.0])]))
    M = povm.pgm(orth)
    np.testing.assert_allclose(M.elements, orth.states, atol=1e-12)
    ens = CqState.from_ensemble([0.5, 0.5], np.stack([opalg.projector(KET0), opalg.projector(PLUS)]))
    assert povm.success_probability(ens, povm.pgm(ens)) == pytest.approx(HELSTROM_0_PLUS, abs=1e-12)
    t = trine()
    assert povm.success_probability(t, povm.pgm(t)) == pytest.approx(2 / 3, abs=1e-12)
    br = povm.guessing_prob_bracket(t)
    assert br.p_hi - br.p_lo <= 1e-9 and br.p_hi == pytest.approx(2 / 3, abs=1e-9)


def test_pgm_dead_outcome_only_when_rank_deficient(rng):
    full = random_cq_state(rng, 3, 2, rank=2)
    assert povm.DEAD not in povm.pgm(full).labels
    st = np.zeros((2, 3, 3))
    st[0, 0, 0] = st[1, 1, 1] = 1.0
    M = povm.pgm(CqState.from_ensemble([0.5, 0.5], st))
    assert M.labels[-1] == povm.DEAD
    np.testing.assert_allclose(M.element(povm.DEAD), np.diag([0, 0, 1.0]), atol=1e-12)


def test_pgm_per_seed_examples(rng):
    rho = random_cq_state(rng, 4, 2)
    c = extract.constant_extractor(2)
    M = povm.pgm_per_seed(rho, c, c.seeds[0])
    # the only nonzero element is the identity, on the constant output
    np.testing.assert_allclose(M.elements[0], np.eye(2), atol=1e-12)
    assert np.all(np.abs(M.elements[1:]) <= 1e-12)
    ident = extract.identity_extractor(2)
    np.testing.assert_allclose(povm.pgm_per_seed(rho, ident, ident.seeds[0]).elements,
                               povm.pgm(rho).elements, atol=1e-12)


def test_pgm_per_seed_equals_coarse_grained_source_pgm(rng):
    # the output PGM equals the source PGM summed over each output's preimage
    e = extract.two_universal_hash(3, 2)
    rho = random_cq_state(rng, 8, 3)
    src = povm.pgm(rho)
    table = e.table()
    for j, y in enumerate(e.seeds):
        direct = povm.pgm_per_seed(rho, e, y).elements[: e.num_outputs]
        coarse = np.stack([src.elements[:8][table[:, j] == z].sum(axis=0) for z in range(e.num_outputs)])
        assert np.max(np.abs(direct - coarse)) <= 1e-10


def test_refine_postprocess(rng):
    F = povm.random_povm(2, 4, rng)
    same = povm.refine_postprocess(F, np.eye(4))
    np.testing.assert_allclose(same.elements, F.elements)
    const = povm.refine_postprocess(F, np.ones((4, 1)))
    np.testing.assert_allclose(const.elements[0], np.eye(2), atol=1e-12)
    labels = [(a, b) for a in range(2) for b in range(2)]
    ch = povm.deterministic_channel(labels, lambda ab: ab[0] ^ ab[1], [0, 1])
    xor = povm.refine_postprocess(F, ch)
    np.testing.assert_allclose(xor.elements[0], F.elements[0] + F.elements[3])
    np.testing.assert_allclose(xor.elements[1], F.elements[1] + F.elements[2])
    with pytest.raises(ValueError):
        povm.refine_postprocess(F, np.ones((4, 2)))


def test_bracket_examples(rng):
    orth = CqState.from_ensemble(np.full(4, 0.25), np.stack([np.diag(np.eye(4)[i]) for i in range(4)]))
    br = povm.guessing_prob_bracket(orth)
    assert br.p_lo == pytest.approx(1.0) and br.p_hi == pytest.approx(1.0)
    assert br.h_guess_lower == pytest.approx(0.0, abs=1e-12)
    st = opalg.random_density(3, rng)
    probs = np.array([0.1, 0.5, 0.15, 0.25])
    br = povm.guessing_prob_bracket(CqState.from_ensemble(probs, np.stack([st] * 4)))
    assert br.p_lo == pytest.approx(0.5) and br.p_hi == pytest.approx(0.5)
    ens = CqState.from_ensemble([0.5, 0.5], np.stack([opalg.projector(KET0), opalg.projector(PLUS)]))
    br = povm.guessing_prob_bracket(ens)
    assert br.exact and br.p_lo == pytest.approx(HELSTROM_0_PLUS, abs=1e-12)


def test_bracket_against_sdp_oracle():
    # semidefinite program solved with cvxpy/SCS offline: 0.6257078188
    rng = np.random.default_rng(2024)

    def rdens(d):
        g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        r = g @ g.conj().T
        return r / np.trace(r).real

    probs = rng.dirichlet(np.ones(4))
    states = np.stack([rdens(3) for _ in range(4)])
    br = povm.guessing_prob_bracket(CqState.from_ensemble(probs, states))
    assert br.p_lo <= 0.6257078188 + 1e-7
    assert br.p_hi >= 0.6257078188 - 1e-7
    assert br.p_hi - br.p_lo <= 1e-6


def test_bracket_certificate_is_dual_feasible(rng):
    rho = random_cq_state(rng, 5, 3)
    br = povm.guessing_prob_bracket(rho)
    k = br.certificate
    assert np.real(np.trace(k)) == pytest.approx(br.p_hi)
    for w in rho.weighted_states():
        assert opalg.eigvalsh_batch(k - w).min() >= -1e-10
    assert povm.success_probability(rho, br.povm) == pytest.approx(br.p_lo, abs=1e-12)


def test_bracket_target_stops_early_but_stays_sound(rng):
    rho = random_cq_state(rng, 6, 2)
    full = povm.guessing_prob_bracket(rho)
    quick = povm.guessing_prob_bracket(rho, target=0.99)
    assert quick.p_hi >= full.p_lo - 1e-12 and quick.p_lo <= full.p_hi + 1e-12
    assert quick.certifies_at_least(-math.log2(0.99))


def test_classical_guessing():
    u4 = Distribution([(x, 0) for x in range(4)], np.full(4, 0.25))
    assert povm.hguess_classical(u4) == pytest.approx(2.0)
    copy = Distribution([(x, x) for x in range(4)], np.full(4, 0.25))
    assert povm.hguess_classical(copy) == pytest.approx(0.0)
    first = Distribution([(x, x >> 1) for x in range(4)], np.full(4, 0.25))
    assert povm.hguess_classical(first) == pytest.approx(1.0)


def test_mub_qubit_and_qutrit():
    M = povm.mub_povm(2)
    assert len(M) == 6
    np.testing.assert_allclose(np.real(np.trace(M.elements, axis1=1, axis2=2)), np.full(6, 1 / 3))
    bases = povm.mub_bases(3)
    assert len(povm.mub_povm(3)) == 12
    for a in range(4):
        for b in range(a + 1, 4):
            overlaps = np.abs(bases[a].conj().T @ bases[b]) ** 2
            np.testing.assert_allclose(overlaps, np.full((3, 3), 1 / 3), atol=1e-12)
    with pytest.raises(ValueError):
        povm.mub_bases(4)


def test_mub_sigma_z_equality():
    a = np.diag([0.5, -0.5])
    assert opalg.trace_norm(a) == pytest.approx(0.5)
    assert 3 * povm.measured_trace_norm(povm.mub_povm(2), a) == pytest.approx(0.5, abs=1e-12)


def test_random_povm_valid(rng):
    M = povm.random_povm(3, 5, rng)
    M.validate()
    assert len(M) == 5
