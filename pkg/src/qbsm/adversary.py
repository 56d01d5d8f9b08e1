"""Bounded-storage adversaries and the exact security of the extracted key.

An adversary sees the source ``X`` while it is available and keeps either
a classical record ``e = enc(x)`` of ``b`` bits or a quantum state
``rho_x`` on ``q`` qubits.  Later the seed ``Y`` is revealed.  The figure
of merit is the non-uniformity ``d(E(X,Y) | Y, memory)``, evaluated here
exactly.  Searching for good encoders is heuristic and flagged as such.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import opalg
from .cqstate import CqState, Distribution, apply_extractor, nonuniformity_quantum
from .extract import ExtractorSpec, bit


@dataclass(frozen=True, eq=False)
class ClassicalEncoder:
    """Table ``x -> e`` with values in ``0 .. 2**b - 1``."""

    table: np.ndarray
    b: int

    def __init__(self, table, b: int):
        table = np.asarray(table, dtype=np.int64).reshape(-1)
        if b < 0:
            raise ValueError("storage must be nonnegative")
        if table.size and (table.min() < 0 or table.max() >= 1 << b):
            raise ValueError(f"encoder range exceeds {b} bits")
        object.__setattr__(self, "table", table)
        object.__setattr__(self, "b", int(b))

    def to_json(self) -> dict:
        return {"kind": "classical", "b": self.b, "table": self.table.tolist()}

    @classmethod
    def from_json(cls, d: dict) -> "ClassicalEncoder":
        return cls(d["table"], d["b"])


@dataclass(frozen=True, eq=False)
class QuantumEncoder:
    """One density operator per source value on ``q`` qubits."""

    states: np.ndarray
    q: int

    def __init__(self, states, q: int | None = None):
        states = np.asarray(states, dtype=complex)
        if states.ndim == 2:
            # rows are pure state vectors
            states = np.einsum("xi,xj->xij", states, states.conj())
        dim = states.shape[1]
        if q is None:
            q = int(math.ceil(math.log2(dim))) if dim > 1 else 0
        if dim > 1 << q:
            raise ValueError(f"dimension {dim} does not fit into {q} qubits")
        traces = np.real(np.trace(states, axis1=1, axis2=2))
        if np.any(np.abs(traces - 1.0) > 1e-9):
            raise ValueError("encoder states must have unit trace")
        if opalg.eigvalsh_batch(states).min() < -1e-9:
            raise ValueError("encoder states must be positive semidefinite")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "q", int(q))

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def cq_state(self, px) -> CqState:
        px = np.asarray(px, dtype=float)
        return CqState.from_ensemble(px, self.states)

    def to_json(self) -> dict:
        return {
            "kind": "quantum",
            "q": self.q,
            "density_matrices": [
                {"real": s.real.tolist(), "imag": s.imag.tolist()} for s in self.states
            ],
        }

    @classmethod
    def from_json(cls, d: dict) -> "QuantumEncoder":
        if "state_vectors" in d:
            vecs = np.array([np.array(v["real"]) + 1j * np.array(v["imag"]) for v in d["state_vectors"]])
            return cls(vecs, d.get("q"))
        mats = np.array([np.array(m["real"]) + 1j * np.array(m["imag"]) for m in d["density_matrices"]])
        return cls(mats, d.get("q"))


@dataclass(frozen=True)
class AttackResult:
    """Achieved non-uniformity of the key against one strategy.

    ``exact`` refers to the optimisation: the value itself is always an
    exact evaluation for the returned strategy, but ``exact=False`` means
    the strategy came from a heuristic search and may not be optimal.
    """

    value: float
    strategy: str
    exact: bool
    per_seed_success: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if not -1e-12 <= self.value <= 1 + 1e-12:
            raise ValueError(f"attack value {self.value} outside [0, 1]")


def _px_array(extractor: ExtractorSpec, px) -> np.ndarray:
    if px is None:
        return np.full(extractor.num_sources, 1.0 / extractor.num_sources)
    if isinstance(px, Distribution):
        arr = np.zeros(extractor.num_sources)
        for lab, p in zip(px.labels, px.probs):
            arr[lab[0]] = p
        return arr
    arr = np.asarray(px, dtype=float)
    if arr.shape != (extractor.num_sources,):
        raise ValueError("source distribution does not match the extractor's domain")
    return arr


def _classical_value(onehot: np.ndarray, px: np.ndarray, tables: np.ndarray, nstore: int) -> np.ndarray:
    """``d(Z | Y, E)`` for a batch of encoder tables, shape ``(batch,)``.

    Averages, over ``(y, e)``, the distance of ``P_{Z|Y=y,E=e}`` from uniform.
    """
    nx, ny, nz = onehot.shape
    batch = tables.shape[0]
    enc = np.zeros((batch, nx, nstore))
    enc[np.arange(batch)[:, None], np.arange(nx)[None, :], tables] = 1.0
    joint = np.einsum("x,xyz,bxe->byez", px / ny, onehot, enc)
    pye = joint.sum(axis=-1, keepdims=True)
    return 0.5 * np.abs(joint - pye / nz).sum(axis=(1, 2, 3))


def classical_attack_eval(extractor: ExtractorSpec, px, enc: ClassicalEncoder) -> AttackResult:
    """Exact ``d(E(X,Y) | Y, enc(X))`` for a uniform seed."""
    px = _px_array(extractor, px)
    if enc.table.size != extractor.num_sources:
        raise ValueError("encoder table does not cover the source domain")
    value = _classical_value(extractor.onehot(), px, enc.table[None], 1 << enc.b)[0]
    return AttackResult(float(value), f"classical b={enc.b}", True)


def best_classical_encoder(
    extractor: ExtractorSpec,
    px,
    b: int,
    budget: int = 1 << 16,
    *,
    restarts: int = 8,
    sweeps: int = 50,
    rng: np.random.Generator | None = None,
) -> tuple[ClassicalEncoder, AttackResult]:
    """Best classical ``b``-bit encoder.

    Exhaustive when there are at most ``budget`` tables, otherwise
    hill climbing over single-entry changes from several random starts
    (flagged inexact).
    """
    px = _px_array(extractor, px)
    nx = extractor.num_sources
    if b >= extractor.n:
        enc = ClassicalEncoder(np.arange(nx), extractor.n)
        if b > extractor.n:
            enc = ClassicalEncoder(np.arange(nx), b)
        return enc, AttackResult(classical_attack_eval(extractor, px, enc).value, f"classical b={b}", True)
    ns = 1 << b
    onehot = extractor.onehot()
    if b == 0 or ns ** nx <= budget:
        best_val, best_tab = -1.0, None
        it = itertools.product(range(ns), repeat=nx)
        while True:
            block = list(itertools.islice(it, 2048))
            if not block:
                break
            tabs = np.array(block, dtype=np.int64)
            vals = _classical_value(onehot, px, tabs, ns)
            i = int(np.argmax(vals))
            if vals[i] > best_val + 1e-15:
                best_val, best_tab = float(vals[i]), tabs[i]
        enc = ClassicalEncoder(best_tab, b)
        return enc, AttackResult(best_val, f"classical b={b} exhaustive", True)

    rng = np.random.default_rng(0) if rng is None else rng
    best_val, best_tab = -1.0, None
    for r in range(restarts):
        # first restart keeps the leading b bits of x
        tab = (np.arange(nx) >> (extractor.n - b)) if r == 0 else rng.integers(0, ns, size=nx)
        tab, val = _hill_climb(onehot, px, tab, ns, rng, sweeps)
        if val > best_val + 1e-15:
            best_val, best_tab = val, tab
    enc = ClassicalEncoder(best_tab, b)
    return enc, AttackResult(classical_attack_eval(extractor, px, enc).value, f"classical b={b} hill-climb", False)


def _hill_climb(onehot, px, tab, ns, rng, max_sweeps):
    """Move single table entries to the best storage value until no move helps.

    Keeps ``J[y, e, z] = P(y, e, z)`` and the per-``(y, e)`` distances ``F``
    up to date, so one move costs ``O(|Y| |E| |Z|)``.
    """
    nx, ny, nz = onehot.shape
    tab = np.array(tab, dtype=np.int64)
    contrib = (px / ny)[:, None, None] * onehot

    def dist(block):
        return 0.5 * np.abs(block - block.sum(axis=-1, keepdims=True) / nz).sum(axis=-1)

    joint = np.zeros((ny, ns, nz))
    for x in range(nx):
        joint[:, tab[x]] += contrib[x]
    per = dist(joint)
    col = per.sum(axis=0)
    for _ in range(max_sweeps):
        moved = False
        for x in rng.permutation(nx):
            if px[x] == 0:
                continue
            e0 = tab[x]
            c = contrib[x]
            removed = dist(joint[:, e0] - c).sum()
            added = dist(joint + c[:, None, :]).sum(axis=0)
            delta = removed - col[e0] + added - col
            delta[e0] = 0.0
            e1 = int(np.argmax(delta))
            if delta[e1] > 1e-13:
                joint[:, e0] -= c
                joint[:, e1] += c
                for e in (e0, e1):
                    per[:, e] = dist(joint[:, e])
                    col[e] = per[:, e].sum()
                tab[x] = e1
                moved = True
        if not moved:
            break
    return tab, float(col.sum())


def per_seed_blocks(extractor: ExtractorSpec, px, states: np.ndarray) -> np.ndarray:
    """``p_z^y rho_z^y = sum_x [E(x,y)=z] P(x) rho_x``, shape ``(Y, Z, d, d)``."""
    return np.einsum("x,xyz,xij->yzij", px, extractor.onehot(), states)


def _quantum_value(extractor: ExtractorSpec, px: np.ndarray, states: np.ndarray) -> tuple[float, np.ndarray]:
    blocks = per_seed_blocks(extractor, px, states)
    rho_q = np.einsum("x,xij->ij", px, states)
    diffs = blocks - rho_q / extractor.num_outputs
    norms = opalg.trace_norms(diffs.reshape((-1,) + diffs.shape[2:])).reshape(diffs.shape[:2])
    per_seed = norms.sum(axis=1)
    return float(per_seed.mean()), per_seed


def quantum_attack_eval(extractor: ExtractorSpec, px, enc: QuantumEncoder) -> AttackResult:
    """Exact ``d(E(X,Y) | Y Q)`` for a uniform seed.

    For one-bit outputs ``d(e(X,y)|Q) = ||p_0^y rho_0^y - p_1^y rho_1^y||``
    and the per-seed Helstrom success ``1/2 + d(e(X,y)|Q)`` is reported.
    """
    px = _px_array(extractor, px)
    if enc.states.shape[0] != extractor.num_sources:
        raise ValueError("encoder does not cover the source domain")
    value, per_seed = _quantum_value(extractor, px, enc.states)
    success = 0.5 + per_seed if extractor.m == 1 else None
    return AttackResult(min(value, 1.0), f"quantum q={enc.q}", True, success)


def quantum_attack_eval_generic(extractor: ExtractorSpec, px, enc: QuantumEncoder) -> float:
    """Same quantity through the generic cq-state route (``rho_ZXYQ``, then ``d(Z|YQ)``)."""
    px = _px_array(extractor, px)
    rho = enc.cq_state(px)
    return nonuniformity_quantum(apply_extractor(rho, extractor), z=0, given=(2,))


def full_storage_value(extractor: ExtractorSpec, px) -> float:
    """Non-uniformity when the adversary keeps ``X`` itself."""
    enc = ClassicalEncoder(np.arange(extractor.num_sources), extractor.n)
    return classical_attack_eval(extractor, px, enc).value


def trivial_encoder(num_sources: int, dim: int = 1) -> QuantumEncoder:
    return QuantumEncoder(np.repeat((np.eye(dim) / dim)[None], num_sources, axis=0),
                          int(math.ceil(math.log2(dim))) if dim > 1 else 0)


def orthogonal_encoder(num_sources: int, q: int) -> QuantumEncoder:
    """``x -> |x mod 2^q>``: stores the last ``q`` bits of ``x`` in the computational basis."""
    dim = 1 << q
    vecs = np.zeros((num_sources, dim), dtype=complex)
    vecs[np.arange(num_sources), np.arange(num_sources) % dim] = 1.0
    return QuantumEncoder(vecs, q)


def encoder_from_classical(enc: ClassicalEncoder) -> QuantumEncoder:
    """Diagonal embedding of a classical encoder: ``x -> |enc(x)><enc(x)|``."""
    dim = 1 << enc.b
    vecs = np.zeros((enc.table.size, dim), dtype=complex)
    vecs[np.arange(enc.table.size), enc.table] = 1.0
    return QuantumEncoder(vecs, enc.b)


def bit_encoder(n: int, i: int, basis: str = "z") -> QuantumEncoder:
    """One qubit holding bit ``x_i`` as ``|0>/|1>`` (``basis="z"``) or ``|0>/|+>`` (``"zx"``)."""
    zero = np.array([1, 0], dtype=complex)
    one = np.array([0, 1], dtype=complex) if basis == "z" else np.array([1, 1], dtype=complex) / math.sqrt(2)
    vecs = np.array([one if bit(x, i, n) else zero for x in range(1 << n)])
    return QuantumEncoder(vecs, 1)


def depolarize(enc: QuantumEncoder, t: float) -> QuantumEncoder:
    """``t rho_x + (1 - t) I / d``."""
    eye = np.eye(enc.dim) / enc.dim
    return QuantumEncoder(t * enc.states + (1.0 - t) * eye[None], enc.q)


def random_pure_encoder(num_sources: int, q: int, rng: np.random.Generator) -> QuantumEncoder:
    dim = 1 << q
    return QuantumEncoder(np.array([opalg.random_pure(dim, rng) for _ in range(num_sources)]), q)


def gkw_encoder(n: int) -> QuantumEncoder:
    """Phase states ``|psi_x> = n^{-1/2} sum_i (-1)^{x_i} |i>`` on ``ceil(log2 n)`` qubits.

    For ``n`` not a power of two the extra basis states carry zero amplitude.
    """
    q = int(math.ceil(math.log2(n))) if n > 1 else 0
    dim = 1 << q
    vecs = np.zeros((1 << n, dim), dtype=complex)
    for x in range(1 << n):
        for i in range(1, n + 1):
            vecs[x, i - 1] = (-1) ** bit(x, i, n)
    return QuantumEncoder(vecs / math.sqrt(n), q)


def seesaw_optimize_encoder(
    extractor: ExtractorSpec,
    px,
    q: int,
    restarts: int = 4,
    iters: int = 300,
    *,
    rng: np.random.Generator | None = None,
    initial=(),
) -> tuple[QuantumEncoder, AttackResult]:
    """Heuristic search for a pure-state encoder maximising ``d(E(X,Y)|YQ)``.

    Each iteration evaluates the exact per-seed distinguishability of the
    current encoding, then perturbs the state of one source value and keeps
    the change if the value increases.  The step size shrinks after failed
    rounds.  Restarts are the structured encoders (``initial``, the
    computational-basis storage of the last ``q`` bits) followed by random
    ones; the best is returned, ties resolved by restart order.
    """
    if q > 4:
        raise ValueError("q <= 4 supported")
    px = _px_array(extractor, px)
    nx = extractor.num_sources
    dim = 1 << q
    rng = np.random.default_rng(0) if rng is None else rng
    if q == 0:
        enc = trivial_encoder(nx)
        return enc, AttackResult(quantum_attack_eval(extractor, px, enc).value, "seesaw q=0", True)

    starts = [_purify_start(e, dim, rng) for e in initial]
    starts.append(np.eye(dim, dtype=complex)[np.arange(nx) % dim])
    while len(starts) < restarts:
        starts.append(np.array([opalg.random_pure(dim, rng) for _ in range(nx)]))

    onehot = extractor.onehot()
    nz = extractor.num_outputs
    best_val, best_vecs = -1.0, None
    for vecs in starts:
        vecs = vecs / np.linalg.norm(vecs, axis=1, keepdims=True)
        # blocks[y, z] = sum_x [E(x,y)=z] P(x) |v_x><v_x|, updated one x at a time
        weights = np.einsum("x,xyz->xyz", px, onehot)
        proj = np.einsum("xi,xj->xij", vecs, vecs.conj())
        blocks = np.einsum("xyz,xij->yzij", weights, proj)
        rho_q = np.einsum("x,xij->ij", px, proj)

        def value_of(blk, rq):
            diffs = blk - rq / nz
            return float(opalg.trace_norms(diffs.reshape((-1, dim, dim))).sum() / blk.shape[0])

        val = value_of(blocks, rho_q)
        step = 0.5
        for _ in range(iters):
            x = int(rng.integers(nx))
            if px[x] == 0:
                continue
            trial = vecs[x] + step * (rng.normal(size=dim) + 1j * rng.normal(size=dim))
            trial /= np.linalg.norm(trial)
            delta = np.outer(trial, trial.conj()) - proj[x]
            new_blocks = blocks + np.einsum("yz,ij->yzij", weights[x], delta)
            new_rho = rho_q + px[x] * delta
            new_val = value_of(new_blocks, new_rho)
            if new_val > val + 1e-14:
                vecs[x], proj[x] = trial, proj[x] + delta
                blocks, rho_q, val = new_blocks, new_rho, new_val
            else:
                step = max(step * 0.97, 1e-3)
        if val > best_val + 1e-14:
            best_val, best_vecs = val, vecs.copy()
    enc = QuantumEncoder(best_vecs, q)
    result = quantum_attack_eval(extractor, px, enc)
    return enc, AttackResult(result.value, f"seesaw q={q}", False, result.per_seed_success)


def _purify_start(enc, dim: int, rng: np.random.Generator) -> np.ndarray:
    """Pure-state starting point from an encoder: leading eigenvector of each state."""
    if isinstance(enc, ClassicalEncoder):
        enc = encoder_from_classical(enc)
    states = enc.states
    if states.shape[1] != dim:
        raise ValueError("initial encoder has the wrong dimension")
    _, vecs = np.linalg.eigh(states)
    return vecs[:, :, -1].copy()
