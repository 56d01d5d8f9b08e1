"""POVMs, state discrimination and guessing probabilities.

The optimal probability of guessing ``X`` from ``Q``,

.. math::

    p_{guess} = \\max_{\\{E_x\\}} \\sum_x P_X(x) \\operatorname{tr}(E_x \\rho_x),

is a semidefinite program.  Instead of a general solver it is bracketed:
any POVM gives a lower bound, and any Hermitian ``K`` with
``K >= P_X(x) rho_x`` for every ``x`` gives the upper bound ``tr K``
(weak duality).  Both sides come from the same fixed-point iteration, so
the bracket closes when the iteration converges.  Two-outcome problems are
solved exactly by the Helstrom measurement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import opalg
from .cqstate import CqState, Distribution, conditional_ensemble

POVM_TOL = 1e-9
DEAD = "dead"


@dataclass(frozen=True, eq=False)
class Povm:
    """Positive operators ``elements[i]`` with outcome ``labels[i]``, summing to identity."""

    elements: np.ndarray
    labels: tuple

    def __init__(self, elements, labels=None, validate: bool = True):
        elements = np.asarray(elements, dtype=complex)
        if elements.ndim != 3 or elements.shape[1] != elements.shape[2]:
            raise ValueError("POVM elements must be a stack of square matrices")
        labels = tuple(range(elements.shape[0])) if labels is None else tuple(labels)
        if len(labels) != elements.shape[0]:
            raise ValueError("one label per POVM element required")
        elements = 0.5 * (elements + np.conj(np.swapaxes(elements, -1, -2)))
        object.__setattr__(self, "elements", elements)
        object.__setattr__(self, "labels", labels)
        if validate:
            self.validate()

    @property
    def dim(self) -> int:
        return self.elements.shape[1]

    def __len__(self) -> int:
        return self.elements.shape[0]

    def validate(self, tol: float = POVM_TOL) -> None:
        if not np.all(np.isfinite(self.elements)):
            raise ValueError("POVM elements have non-finite entries")
        lam = opalg.eigvalsh_batch(self.elements)
        if lam.size and lam.min() < -tol:
            raise ValueError(f"POVM element not PSD (min eigenvalue {lam.min():.3e})")
        dev = np.max(np.abs(self.elements.sum(axis=0) - np.eye(self.dim)))
        if dev > tol:
            raise ValueError(f"POVM elements do not sum to identity (deviation {dev:.3e})")

    def outcome_probs(self, rho) -> np.ndarray:
        """``tr(E_i rho)`` for every element."""
        return np.real(np.einsum("kij,ji->k", self.elements, np.asarray(rho)))

    def apply(self, a) -> np.ndarray:
        """Image of an operator under the measurement map, ``(tr(E_i A))_i``."""
        return self.outcome_probs(a)

    def element(self, label) -> np.ndarray:
        return self.elements[self.labels.index(label)]


def _kernel_defect(elements: np.ndarray) -> np.ndarray:
    return np.eye(elements.shape[1]) - elements.sum(axis=0)


def _with_dead_outcome(elements: np.ndarray, labels: Sequence, tol: float = 1e-12) -> Povm:
    defect = _kernel_defect(elements)
    if np.max(np.abs(defect)) > tol:
        elements = np.concatenate([elements, defect[None]], axis=0)
        labels = tuple(labels) + (DEAD,)
    return Povm(elements, labels)


def measure_cq(rho: CqState, M: Povm) -> Distribution:
    """Joint distribution ``P(x, z) = P_X(x) tr(E_z rho_x)``.

    Labels are the cq-state's labels with the outcome appended.
    """
    if M.dim != rho.dim:
        raise ValueError(f"POVM dimension {M.dim} does not match state dimension {rho.dim}")
    # tr(E_z rho_k) for every stored state k, then expand to labels
    table = np.real(np.einsum("zij,kji->kz", M.elements, rho.states))
    table = np.clip(table, 0.0, None)
    joint = rho.probs[:, None] * table[rho.state_of]
    joint /= joint.sum()
    labels = [lab + (z,) for lab in rho.labels for z in M.labels]
    alphabets = rho.classical.alphabets + (M.labels,)
    return Distribution(labels, joint.reshape(-1), alphabets)


def success_probability(rho: CqState, M: Povm) -> float:
    """``sum_x P(x) tr(E_x rho_x)`` where outcome ``i`` guesses label ``i``."""
    n = len(rho.labels)
    if len(M) < n:
        raise ValueError("POVM has fewer outcomes than the ensemble has labels")
    ws = rho.weighted_states()
    return float(np.real(np.einsum("xij,xji->", M.elements[:n], ws)))


def helstrom(p0: float, rho0, p1: float, rho1) -> tuple[float, Povm]:
    """Optimal success probability for telling ``rho0`` from ``rho1``.

    Returns ``1/2 + ||p0 rho0 - p1 rho1||`` and the measurement
    (projector onto the positive part of ``p0 rho0 - p1 rho1``, complement).
    """
    if p0 < -1e-12 or p1 < -1e-12 or abs(p0 + p1 - 1.0) > 1e-12:
        raise ValueError("priors must be nonnegative and sum to one")
    delta = p0 * np.asarray(rho0, dtype=complex) - p1 * np.asarray(rho1, dtype=complex)
    spec = opalg.eig_hermitian(delta)
    u = spec.eigenvectors[:, spec.eigenvalues > 0]
    proj = u @ u.conj().T
    p_succ = 0.5 + 0.5 * float(np.sum(np.abs(spec.eigenvalues)))
    povm = Povm(np.stack([proj, np.eye(delta.shape[0]) - proj]), (0, 1))
    return p_succ, povm


def pgm(ensemble: CqState, rel_threshold: float = opalg.DEFAULT_REL_THRESHOLD) -> Povm:
    """Pretty good measurement ``E_x = P(x) rho^{-1/2} rho_x rho^{-1/2}``.

    ``rho`` is the average state; its inverse square root acts on the
    support only.  When the average state is rank deficient the projector
    onto its kernel is appended as an extra outcome labelled :data:`DEAD`.
    """
    s = opalg.psd_sqrt_pinv(ensemble.rho_q(), rel_threshold)
    elements = np.einsum("ij,xjk,kl->xil", s, ensemble.weighted_states(), s)
    return _with_dead_outcome(elements, ensemble.labels)


def pgm_per_seed(rho: CqState, extractor, y) -> Povm:
    """Pretty good measurement for guessing ``E(X, y)`` from ``Q``.

    Built from the conditional ensemble ``{p_z^y, rho_z^y}``, whose average
    ``G^y = sum_z p_z^y rho_z^y`` is the same operator for every seed.
    Outcome ``z`` ranges over the output alphabet.
    """
    ens = conditional_ensemble(rho, extractor, y)
    d = rho.dim
    weighted = np.stack([c.prob * c.state if c.defined else np.zeros((d, d)) for c in ens])
    g = weighted.sum(axis=0)
    s = opalg.psd_sqrt_pinv(g)
    elements = np.einsum("ij,zjk,kl->zil", s, weighted, s)
    return _with_dead_outcome(elements, [c.z for c in ens])


def refine_postprocess(F: Povm, channel, labels=None) -> Povm:
    """Coarse-grain ``F`` through a classical channel: ``E_e = sum_x P(e|x) F_x``.

    ``channel[i, j]`` is the probability of output ``j`` given outcome
    ``F.labels[i]``; rows must be distributions.
    """
    ch = np.asarray(channel, dtype=float)
    if ch.ndim != 2 or ch.shape[0] != len(F):
        raise ValueError("channel must have one row per POVM outcome")
    if np.any(ch < -1e-12) or np.any(np.abs(ch.sum(axis=1) - 1.0) > 1e-9):
        raise ValueError("channel rows must be probability distributions")
    elements = np.einsum("xe,xij->eij", ch, F.elements)
    return Povm(elements, labels)


def deterministic_channel(source_labels: Sequence, fn, target_labels: Sequence) -> np.ndarray:
    """Channel matrix of a function ``fn`` between label sets."""
    index = {lab: j for j, lab in enumerate(target_labels)}
    ch = np.zeros((len(source_labels), len(target_labels)))
    for i, lab in enumerate(source_labels):
        ch[i, index[fn(lab)]] = 1.0
    return ch


@dataclass(frozen=True, eq=False)
class GuessBracket:
    """Bracket ``p_lo <= p_guess <= p_hi`` on the optimal guessing probability.

    ``povm`` attains ``p_lo``; ``certificate`` is a dual-feasible ``K`` with
    ``tr K = p_hi``.
    """

    p_lo: float
    p_hi: float
    exact: bool
    povm: Povm | None = None
    certificate: np.ndarray | None = None

    @property
    def h_guess_lower(self) -> float:
        """Sound lower bound on the guessing entropy."""
        return -math.log2(self.p_hi)

    @property
    def h_guess_upper(self) -> float:
        return -math.log2(self.p_lo)

    def certifies_at_least(self, threshold_bits: float) -> bool:
        """True if ``H_guess >= threshold_bits`` follows from the upper bound ``p_hi``."""
        return self.p_hi <= 2.0 ** (-threshold_bits)


def _make_feasible(sigma: np.ndarray, k: np.ndarray) -> tuple[float, np.ndarray]:
    """Shift ``k`` by ``lambda * I`` so that ``k >= sigma_x`` for every ``x``."""
    lam = max(float(opalg.eigvalsh_batch(sigma - k[None])[:, -1].max()), 0.0)
    k = k + lam * np.eye(k.shape[0])
    return float(np.real(np.trace(k))), k


def _dual_from_measurement(sigma: np.ndarray, elements: np.ndarray) -> tuple[float, np.ndarray]:
    """Dual-feasible operator built from ``K0 = sym(sum_x E_x sigma_x)``.

    Two repairs of ``K0`` are compared: a uniform shift ``K0 + lambda I`` and
    ``K0 + sum_x (sigma_x - K0)_+``; the one with smaller trace is returned.
    """
    prod = np.einsum("xij,xjk->ik", elements[: sigma.shape[0]], sigma)
    k0 = 0.5 * (prod + prod.conj().T)
    shifted = _make_feasible(sigma, k0)
    diff = sigma - k0[None]
    lam, u = np.linalg.eigh(0.5 * (diff + np.conj(np.swapaxes(diff, -1, -2))))
    k1 = k0 + np.einsum("xia,xa,xja->ij", u, np.clip(lam, 0.0, None), u.conj())
    summed = _make_feasible(sigma, 0.5 * (k1 + k1.conj().T))
    return shifted if shifted[0] <= summed[0] else summed


def _support_dual(sigma: np.ndarray) -> tuple[float, np.ndarray]:
    """``K = max_x ||sigma_x|| P`` with ``P`` the support projector of ``sum_x sigma_x``."""
    rho_q = sigma.sum(axis=0)
    spec = opalg.eig_hermitian(0.5 * (rho_q + rho_q.conj().T))
    keep = spec.eigenvalues > opalg.DEFAULT_REL_THRESHOLD * max(float(spec.eigenvalues[0]), 1e-300)
    u = spec.eigenvectors[:, keep]
    top = float(opalg.eigvalsh_batch(sigma)[:, -1].max())
    return _make_feasible(sigma, top * (u @ u.conj().T))


def _fixed_point_step(sigma: np.ndarray, elements: np.ndarray) -> np.ndarray:
    """One step of ``E_x <- R^{-1/2} sigma_x E_x sigma_x R^{-1/2}``, ``R = sum sigma E sigma``."""
    n = sigma.shape[0]
    t = np.einsum("xij,xjk,xkl->xil", sigma, elements[:n], sigma)
    r = t.sum(axis=0)
    r = 0.5 * (r + r.conj().T)
    s = opalg.psd_sqrt_pinv(r)
    new = np.einsum("ij,xjk,kl->xil", s, t, s)
    defect = _kernel_defect(new)
    if np.max(np.abs(defect)) > 1e-12:
        # leftover kernel goes to the likeliest guess
        new[int(np.argmax(np.real(np.trace(sigma, axis1=1, axis2=2))))] += defect
    return new


def guessing_prob_bracket(
    rho: CqState,
    candidates: Sequence[Povm] = (),
    *,
    max_iter: int = 2000,
    gap_tol: float = 1e-10,
    target: float | None = None,
    stop_below_only: bool = False,
) -> GuessBracket:
    """Bracket the optimal probability of guessing the classical label of ``rho``.

    Two labels: exact Helstrom value.  Otherwise ``p_lo`` is the best of the
    pretty good measurement, the trivial "always guess the likeliest label"
    measurement, fixed-point iterates starting from the PGM, and any
    ``candidates``; ``p_hi`` is the smallest dual value over the same
    measurements and the scaled support projector of ``rho_Q``.  ``exact`` is set once ``p_hi - p_lo <= 1e-9``.

    With ``target`` the iteration stops as soon as the comparison with
    ``target`` is decided: ``p_hi <= target`` or (unless
    ``stop_below_only``) ``p_lo > target``.  Both ends stay sound.
    """
    n = len(rho.labels)
    d = rho.dim
    sigma = rho.weighted_states()
    if n == 1:
        return GuessBracket(1.0, 1.0, True, Povm(np.eye(d)[None], rho.labels),
                            sigma[0].copy())
    if n == 2:
        p_succ, M = helstrom(rho.probs[0], rho.states[rho.state_of[0]],
                             rho.probs[1], rho.states[rho.state_of[1]])
        k = sigma[0] + _positive_part(sigma[1] - sigma[0])
        return GuessBracket(p_succ, p_succ, True, M, k)

    def primal(elements):
        return float(np.real(np.einsum("xij,xji->", elements[:n], sigma)))

    trivial = np.zeros((n, d, d), dtype=complex)
    trivial[int(np.argmax(rho.probs))] = np.eye(d)
    start = pgm(rho).elements
    if start.shape[0] > n:
        start = start[:n].copy()
        start[int(np.argmax(rho.probs))] += _kernel_defect(start)
    pool = [trivial, start] + [c.elements for c in candidates]

    best_lo, best_el = -1.0, None
    best_hi, best_k = np.inf, None

    def consider(elements):
        nonlocal best_lo, best_el, best_hi, best_k
        lo = primal(elements)
        if lo > best_lo:
            best_lo, best_el = lo, elements
        hi, k = _dual_from_measurement(sigma, elements)
        if hi < best_hi:
            best_hi, best_k = hi, k

    for elements in pool:
        consider(elements)
    hi, k = _support_dual(sigma)
    if hi < best_hi:
        best_hi, best_k = hi, k
    current = start
    for _ in range(max_iter):
        if best_hi - best_lo <= gap_tol:
            break
        if target is not None and (best_hi <= target or (best_lo > target and not stop_below_only)):
            break
        current = _fixed_point_step(sigma, current)
        consider(current)

    lo = min(best_lo, best_hi)
    labels = rho.labels if best_el.shape[0] == n else rho.labels + tuple(range(n, best_el.shape[0]))
    povm = Povm(best_el, labels, validate=False)
    return GuessBracket(lo, best_hi, best_hi - best_lo <= 1e-9, povm, best_k)


def _positive_part(a: np.ndarray) -> np.ndarray:
    spec = opalg.eig_hermitian(a)
    lam = np.clip(spec.eigenvalues, 0.0, None)
    u = spec.eigenvectors
    return (u * lam) @ u.conj().T


def hguess_classical(p: Distribution, x=0) -> float:
    """``-log2 sum_e max_x P(x, e)``: guessing entropy of part ``x`` given the rest."""
    return -math.log2(guess_prob_classical(p, x))


def guess_prob_classical(p: Distribution, x=0) -> float:
    xparts = (x,) if isinstance(x, int) else tuple(x)
    rest = tuple(i for i in range(p.nparts) if i not in xparts)
    best: dict = {}
    joint: dict = {}
    for lab, pr in zip(p.labels, p.probs):
        key = (tuple(lab[i] for i in rest), tuple(lab[i] for i in xparts))
        joint[key] = joint.get(key, 0.0) + pr
    for (e, _), pr in joint.items():
        best[e] = max(best.get(e, 0.0), pr)
    return float(sum(best.values()))


def _is_prime(p: int) -> bool:
    return p >= 2 and all(p % q for q in range(2, int(math.isqrt(p)) + 1))


def mub_bases(p: int) -> list[np.ndarray]:
    """The ``p + 1`` mutually unbiased bases of ``C^p`` as unitary column matrices.

    ``p = 2``: eigenbases of Z, X and Y.  Odd prime ``p``: the computational
    basis and, for each ``a``, the vectors
    ``p^{-1/2} sum_j omega^{a j^2 + b j} |j>`` with ``omega = exp(2 pi i / p)``.
    """
    if not _is_prime(p):
        raise ValueError(f"{p} is not prime")
    if p > 13:
        raise ValueError("only primes up to 13 are supported")
    if p == 2:
        s = 1 / math.sqrt(2)
        return [
            np.eye(2, dtype=complex),
            np.array([[s, s], [s, -s]], dtype=complex),
            np.array([[s, s], [1j * s, -1j * s]], dtype=complex),
        ]
    j = np.arange(p)
    bases = [np.eye(p, dtype=complex)]
    for a in range(p):
        cols = [np.exp(2j * np.pi * ((a * j * j + b * j) % p) / p) / math.sqrt(p) for b in range(p)]
        bases.append(np.stack(cols, axis=1))
    return bases


def mub_povm(p: int) -> Povm:
    """Tomographic POVM ``{|v><v| / (p + 1)}`` over all vectors of all MUBs."""
    bases = mub_bases(p)
    elements = []
    labels = []
    for a, basis in enumerate(bases):
        for b in range(p):
            v = basis[:, b]
            elements.append(np.outer(v, v.conj()) / (p + 1))
            labels.append((a, b))
    return Povm(np.stack(elements), labels)


def measured_trace_norm(M: Povm, a) -> float:
    """``||F(A)||``: half the l1 norm of the outcome vector of ``A``."""
    return 0.5 * float(np.sum(np.abs(M.apply(a))))


def random_povm(dim: int, outcomes: int, rng: np.random.Generator) -> Povm:
    """Random POVM from normalised Wishart operators."""
    raw = []
    for _ in range(outcomes):
        g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        raw.append(g @ g.conj().T)
    raw = np.stack(raw)
    s = opalg.psd_sqrt_pinv(raw.sum(axis=0))
    return Povm(np.einsum("ij,kjl,lm->kim", s, raw, s))
