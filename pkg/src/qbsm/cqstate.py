"""Classical distributions and classical-quantum (cq) states.

A :class:`Distribution` is a probability vector over an explicit list of
labels.  Labels are tuples; position ``i`` of every label is the value of
classical part ``i`` (so ``(z, x, y)`` labels describe a three-part
variable).  Scalar labels are accepted and stored as 1-tuples.

A :class:`CqState` attaches a density operator to each label.  States are
stored once in a shared stack and referenced by index, which keeps states
such as ``rho_{ZXYQ}`` compact: the quantum part depends on ``x`` only, so
``|Z| |X| |Y|`` labels share ``|X|`` operators.

Non-uniformities are evaluated blockwise,

.. math::

    \\|\\rho_{ZWQ} - \\rho_{U_Z} \\otimes \\rho_{WQ}\\|
        = \\sum_{z, w} \\|P(z, w) \\rho_{zw} - P(w) \\rho_w / |Z|\\|,

so a state with ``|Z| |W|`` blocks costs that many ``d x d`` eigenvalue
problems instead of one of size ``|Z| |W| d``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence

import numpy as np

from . import opalg

PROB_TOL = 1e-12
STATE_TRACE_TOL = 1e-9


def _as_label(label) -> tuple:
    return tuple(label) if isinstance(label, tuple) else (label,)


def _as_parts(parts) -> tuple[int, ...]:
    if parts is None:
        return ()
    if isinstance(parts, (int, np.integer)):
        return (int(parts),)
    return tuple(int(p) for p in parts)


@dataclass(frozen=True, eq=False)
class Distribution:
    """Finite probability distribution over tuple labels.

    Parameters
    ----------
    labels : sequence
        Distinct labels.  Tuples denote multipartite values; anything
        else is wrapped into a 1-tuple.
    probs : array_like
        Nonnegative weights summing to one (within ``1e-12``).
    alphabets : sequence of sequences, optional
        Alphabet of each classical part.  Defaults to the values that
        occur in ``labels`` (sorted where possible).  Needed when a part
        can take values of probability zero that should still count
        towards the alphabet size, e.g. the output ``Z`` of an extractor.
    """

    labels: tuple
    probs: np.ndarray
    alphabets: tuple

    def __init__(self, labels, probs, alphabets=None):
        labels = tuple(_as_label(lab) for lab in labels)
        probs = np.asarray(probs, dtype=float).reshape(-1)
        if len(labels) != probs.size:
            raise ValueError("labels and probs differ in length")
        if len(set(labels)) != len(labels):
            raise ValueError("labels must be unique")
        if labels and len({len(lab) for lab in labels}) != 1:
            raise ValueError("all labels must have the same number of parts")
        if not np.all(np.isfinite(probs)) or np.any(probs < -PROB_TOL):
            raise ValueError("probabilities must be finite and nonnegative")
        if abs(probs.sum() - 1.0) > PROB_TOL * max(1, probs.size):
            raise ValueError(f"probabilities sum to {probs.sum()!r}, not 1")
        probs = np.clip(probs, 0.0, None)
        nparts = len(labels[0]) if labels else 0
        if alphabets is None:
            alphabets = tuple(_sorted_values(lab[i] for lab in labels) for i in range(nparts))
        else:
            alphabets = tuple(tuple(a) for a in alphabets)
            if len(alphabets) != nparts:
                raise ValueError("one alphabet per classical part required")
            for i, alpha in enumerate(alphabets):
                known = set(alpha)
                if any(lab[i] not in known for lab in labels):
                    raise ValueError(f"part {i} has values outside its alphabet")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "alphabets", alphabets)

    @property
    def nparts(self) -> int:
        return len(self.alphabets)

    def __len__(self) -> int:
        return len(self.labels)

    def prob(self, label) -> float:
        try:
            return float(self.probs[self.index(label)])
        except KeyError:
            return 0.0

    def index(self, label) -> int:
        lookup = self.__dict__.get("_lookup")
        if lookup is None:
            lookup = {lab: i for i, lab in enumerate(self.labels)}
            object.__setattr__(self, "_lookup", lookup)
        return lookup[_as_label(label)]

    def as_dict(self) -> dict:
        return dict(zip(self.labels, self.probs.tolist()))


def _sorted_values(values: Iterable[Hashable]) -> tuple:
    seen = dict.fromkeys(values)
    try:
        return tuple(sorted(seen))
    except TypeError:
        return tuple(seen)


def uniform(alphabet: Sequence) -> Distribution:
    n = len(alphabet)
    return Distribution(alphabet, np.full(n, 1.0 / n))


def point_mass(alphabet: Sequence, value) -> Distribution:
    probs = np.zeros(len(alphabet))
    probs[list(alphabet).index(value)] = 1.0
    return Distribution(alphabet, probs)


def product(*dists: Distribution) -> Distribution:
    """Joint distribution of independent variables; labels are concatenated."""
    labels = [()]
    probs = np.ones(1)
    alphabets: tuple = ()
    for d in dists:
        labels = [a + b for a in labels for b in d.labels]
        probs = np.outer(probs, d.probs).reshape(-1)
        alphabets = alphabets + d.alphabets
    return Distribution(labels, probs, alphabets)


@dataclass(frozen=True, eq=False)
class CqState:
    """Classical-quantum state ``sum_x P(x) |x><x| (x) rho_x``.

    ``states[state_of[i]]`` is the density operator attached to
    ``classical.labels[i]``.
    """

    classical: Distribution
    states: np.ndarray
    state_of: np.ndarray

    def __init__(self, classical: Distribution, states, state_of=None, validate: bool = True):
        states = np.asarray(states, dtype=complex)
        if states.ndim == 2:
            states = states[None]
        if states.ndim != 3 or states.shape[1] != states.shape[2]:
            raise ValueError("states must be a stack of square matrices")
        if state_of is None:
            if states.shape[0] != len(classical):
                raise ValueError("need one state per label or an explicit state_of index")
            state_of = np.arange(len(classical))
        state_of = np.asarray(state_of, dtype=np.intp).reshape(-1)
        if state_of.size != len(classical):
            raise ValueError("state_of must have one entry per label")
        if state_of.size and (state_of.min() < 0 or state_of.max() >= states.shape[0]):
            raise ValueError("state_of references a missing state")
        if validate:
            if not np.all(np.isfinite(states)):
                raise ValueError("states have non-finite entries")
            herm = 0.5 * (states + np.conj(np.swapaxes(states, -1, -2)))
            if np.max(np.abs(states - herm), initial=0.0) > opalg.HERMITIAN_TOL:
                raise ValueError("states must be Hermitian")
            states = herm
            traces = np.real(np.trace(states, axis1=1, axis2=2))
            if np.any(np.abs(traces - 1.0) > STATE_TRACE_TOL):
                raise ValueError("states must have unit trace")
            lam = opalg.eigvalsh_batch(states)
            if lam.size and lam.min() < -STATE_TRACE_TOL:
                raise ValueError("states must be positive semidefinite")
        object.__setattr__(self, "classical", classical)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "state_of", state_of)

    @classmethod
    def from_ensemble(cls, probs, states, labels=None, alphabets=None) -> "CqState":
        probs = np.asarray(probs, dtype=float)
        if labels is None:
            labels = list(range(probs.size))
        return cls(Distribution(labels, probs, alphabets), states)

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def labels(self) -> tuple:
        return self.classical.labels

    @property
    def probs(self) -> np.ndarray:
        return self.classical.probs

    def state(self, label) -> np.ndarray:
        return self.states[self.state_of[self.classical.index(label)]]

    def weighted_states(self) -> np.ndarray:
        """``P(x) rho_x`` for every label, shape ``(N, d, d)``."""
        return self.probs[:, None, None] * self.states[self.state_of]

    def rho_q(self) -> np.ndarray:
        return _group_sum(self, np.zeros(len(self.labels), dtype=np.intp), 1)[0]


def _group_sum(rho: CqState, group: np.ndarray, ngroups: int) -> np.ndarray:
    """``sum_{i in group g} P_i rho_i`` for each group, via the shared state stack."""
    weights = np.zeros((ngroups, rho.states.shape[0]))
    np.add.at(weights, (group, rho.state_of), rho.probs)
    return np.einsum("gk,kij->gij", weights, rho.states)


def min_entropy(p) -> float:
    """``-log2 max_x P(x)`` of a :class:`Distribution` or probability vector."""
    probs = p.probs if isinstance(p, Distribution) else np.asarray(p, dtype=float)
    return -math.log2(float(np.max(probs)))


def max_entropy(rho, rel_threshold: float = opalg.DEFAULT_REL_THRESHOLD) -> float:
    """Log2 of the numerical rank of ``rho``.

    For a :class:`Distribution`, the log2 of its support size.
    """
    if isinstance(rho, Distribution):
        return math.log2(int(np.count_nonzero(rho.probs > 0)))
    return math.log2(opalg.numerical_rank(rho, rel_threshold))


@dataclass(frozen=True)
class EntropyReport:
    h_min: float
    h_max: float


def entropy_report(rho) -> EntropyReport:
    """Min- and max-entropy of a density operator or distribution."""
    if isinstance(rho, Distribution):
        return EntropyReport(min_entropy(rho), max_entropy(rho))
    spec = opalg.check_psd(rho)
    return EntropyReport(-math.log2(float(spec.eigenvalues[0])), max_entropy(rho))


def _project(labels: Sequence[tuple], parts: tuple[int, ...]) -> list[tuple]:
    return [tuple(lab[i] for i in parts) for lab in labels]


def _indexer(keys: Sequence[tuple]) -> tuple[np.ndarray, list[tuple]]:
    lookup: dict = {}
    idx = np.empty(len(keys), dtype=np.intp)
    for i, key in enumerate(keys):
        idx[i] = lookup.setdefault(key, len(lookup))
    return idx, list(lookup)


def _split(obj) -> tuple[Distribution, CqState | None]:
    if isinstance(obj, CqState):
        return obj.classical, obj
    if isinstance(obj, Distribution):
        return obj, None
    raise TypeError(f"expected Distribution or CqState, got {type(obj).__name__}")


def condition(rho, part: int, value):
    """Condition on classical part ``part`` taking ``value``.

    The conditioned coordinate is removed from the labels and the remaining
    probabilities are renormalised.

    Raises
    ------
    ValueError
        If ``value`` has probability zero.
    """
    dist, cq = _split(rho)
    if not 0 <= part < dist.nparts:
        raise ValueError(f"part {part} out of range")
    mask = np.array([lab[part] == value for lab in dist.labels], dtype=bool)
    total = float(dist.probs[mask].sum()) if mask.any() else 0.0
    if total <= 0.0:
        raise ValueError(f"conditioning value {value!r} has probability zero")
    keep = tuple(i for i in range(dist.nparts) if i != part)
    labels = _project([lab for lab, m in zip(dist.labels, mask) if m], keep)
    probs = dist.probs[mask] / total
    cond = Distribution(labels, probs, tuple(dist.alphabets[i] for i in keep))
    if cq is None:
        return cond
    return CqState(cond, cq.states, cq.state_of[mask], validate=False)


def marginal(rho, keep, quantum: bool = True):
    """Marginal on the classical parts ``keep`` (and the quantum part if ``quantum``).

    Returns a :class:`CqState` when the quantum part is kept and ``keep`` is
    non-empty, the reduced operator ``rho_Q`` when ``keep`` is empty, and a
    :class:`Distribution` when the quantum part is traced out.

    Raises
    ------
    ValueError
        If nothing would be kept.
    """
    dist, cq = _split(rho)
    keep = _as_parts(keep)
    if any(not 0 <= i < dist.nparts for i in keep):
        raise ValueError("selector references a missing part")
    quantum = quantum and cq is not None
    if not keep and not quantum:
        raise ValueError("empty selector")
    if not keep:
        return cq.rho_q()
    group, keys = _indexer(_project(dist.labels, keep))
    probs = np.zeros(len(keys))
    np.add.at(probs, group, dist.probs)
    alphabets = tuple(dist.alphabets[i] for i in keep)
    marg = Distribution(keys, probs, alphabets)
    if not quantum:
        return marg
    sums = _group_sum(cq, group, len(keys))
    safe = np.where(probs > 0, probs, 1.0)
    states = sums / safe[:, None, None]
    # zero-probability labels keep an arbitrary valid state
    dead = probs <= 0
    if dead.any():
        states[dead] = np.eye(cq.dim) / cq.dim
    return CqState(marg, states, validate=False)


def _alphabet_size(dist: Distribution, parts: tuple[int, ...]) -> int:
    return int(np.prod([len(dist.alphabets[i]) for i in parts])) if parts else 1


def _given_default(dist: Distribution, z: tuple[int, ...], given) -> tuple[int, ...]:
    if given is None:
        return tuple(i for i in range(dist.nparts) if i not in z)
    return _as_parts(given)


def nonuniformity_classical(p: Distribution, z=0, given=None) -> float:
    """Non-uniformity ``d(Z|E) = || P_ZE - P_U_Z . P_E ||``.

    ``z`` selects the part(s) forming ``Z``; ``given`` the parts forming
    ``E`` (default: all other parts).  Parts in neither are summed out.
    Evaluated as the average over ``e`` of the variational distance between
    ``P_{Z|E=e}`` and uniform.
    """
    z = _as_parts(z)
    given = _given_default(p, z, given)
    zsize = _alphabet_size(p, z)
    zidx, zkeys = _indexer(_project(p.labels, z))
    widx, wkeys = _indexer(_project(p.labels, given))
    joint = np.zeros((len(wkeys), len(zkeys)))
    np.add.at(joint, (widx, zidx), p.probs)
    pw = joint.sum(axis=1)
    observed = 0.5 * np.abs(joint - pw[:, None] / zsize).sum()
    unobserved = 0.5 * (zsize - len(zkeys)) * pw.sum() / zsize
    return float(observed + unobserved)


def nonuniformity_quantum(rho: CqState, z=0, given=()) -> float:
    """Non-uniformity ``d(Z|WQ) = || rho_ZWQ - rho_U_Z (x) rho_WQ ||``.

    ``z`` selects the classical part(s) forming ``Z``, ``given`` the
    classical parts ``W`` available next to ``Q`` (default: none).  Other
    classical parts are traced out.
    """
    dist = rho.classical
    z = _as_parts(z)
    given = _as_parts(given)
    if set(z) & set(given):
        raise ValueError("z and given overlap")
    zsize = _alphabet_size(dist, z)
    zw_idx, zw_keys = _indexer(_project(dist.labels, z + given))
    w_of_zw, w_keys = _indexer([key[len(z):] for key in zw_keys])
    blocks = _group_sum(rho, zw_idx, len(zw_keys))
    w_idx = w_of_zw[zw_idx]
    w_blocks = _group_sum(rho, w_idx, len(w_keys))
    pw = np.real(np.trace(w_blocks, axis1=1, axis2=2))
    diffs = blocks - w_blocks[w_of_zw] / zsize
    observed = float(opalg.trace_norms(diffs).sum())
    # a (z, w) block of probability zero contributes || rho_w P(w) / |Z| || = P(w) / (2|Z|)
    zcount = np.bincount(w_of_zw, minlength=len(w_keys))
    unobserved = float(np.sum((zsize - zcount) * pw) / (2.0 * zsize))
    return observed + unobserved


def nonuniformity(obj, z=0, given=None) -> float:
    """Dispatch to the classical or quantum non-uniformity."""
    if isinstance(obj, CqState):
        return nonuniformity_quantum(obj, z, () if given is None else given)
    return nonuniformity_classical(obj, z, given)


def _source_probs(rho: CqState) -> tuple[np.ndarray, np.ndarray]:
    """Source values and probabilities of a single-part cq-state."""
    if rho.classical.nparts != 1:
        raise ValueError("expected a cq-state with a single classical part")
    xs = np.array([lab[0] for lab in rho.labels])
    return xs, rho.probs


def apply_extractor(rho: CqState, extractor, p_y: Distribution | None = None) -> CqState:
    """Form ``rho_ZXYQ`` with ``Z = E(X, Y)`` and ``Y`` independent of ``XQ``.

    Labels of the result are ``(z, x, y)``; the alphabet of ``Z`` is the
    full output range of the extractor.
    """
    xs, px = _source_probs(rho)
    seeds = list(extractor.seeds)
    if p_y is None:
        py = np.full(len(seeds), 1.0 / len(seeds))
    else:
        py = np.array([p_y.prob(s) for s in seeds])
        if abs(py.sum() - 1.0) > 1e-12:
            raise ValueError("seed distribution does not match the extractor's seed domain")
    if np.any((xs < 0) | (xs >= extractor.num_sources)):
        raise ValueError("source values outside the extractor's domain")
    table = extractor.table()
    labels = []
    probs = []
    state_of = []
    for i, x in enumerate(xs):
        for j, y in enumerate(seeds):
            labels.append((int(table[x, j]), int(x), y))
            probs.append(px[i] * py[j])
            state_of.append(rho.state_of[i])
    alphabets = (tuple(range(extractor.num_outputs)), rho.classical.alphabets[0], tuple(seeds))
    return CqState(Distribution(labels, probs, alphabets), rho.states, state_of, validate=False)


@dataclass(frozen=True)
class ConditionalState:
    """``(p_z^y, rho_z^y)``; ``state`` is ``None`` when ``prob`` is zero."""

    z: int
    prob: float
    state: np.ndarray | None

    @property
    def defined(self) -> bool:
        return self.state is not None


def conditional_ensemble(rho: CqState, extractor, y) -> list[ConditionalState]:
    """States of ``Q`` conditioned on ``E(X, y) = z`` for one seed ``y``.

    Returns one entry per output value ``z``, in order.  Entries with
    ``p_z^y = 0`` carry ``state=None``.
    """
    xs, px = _source_probs(rho)
    col = list(extractor.seeds).index(y)
    zs = extractor.table()[xs, col]
    group_states = _group_sum(rho, zs.astype(np.intp), extractor.num_outputs)
    out = []
    for zval in range(extractor.num_outputs):
        p = float(px[zs == zval].sum())
        state = group_states[zval] / p if p > 0 else None
        out.append(ConditionalState(zval, p, state))
    return out


def random_cq_state(
    rng: np.random.Generator,
    nx: int,
    dim: int,
    *,
    rank: int | None = None,
    probs=None,
    labels=None,
) -> CqState:
    """Random cq-state with Dirichlet-distributed priors and Ginibre states."""
    if probs is None:
        probs = rng.dirichlet(np.ones(nx))
    states = np.stack([
        opalg.random_density(dim, rng, rank if rank is not None else int(rng.integers(1, dim + 1)))
        for _ in range(nx)
    ])
    return CqState.from_ensemble(probs, states, labels)


def product_labels(*alphabets: Sequence) -> list[tuple]:
    return [tuple(t) for t in itertools.product(*alphabets)]
