"""Registry of numerical inequality checkers.

Every checker evaluates both sides of one statement on a concrete instance,
by separate routes, and reports the slack ``rhs - lhs``.  Inequalities are
oriented as ``lhs <= rhs``; equalities are checked as ``|lhs - rhs| <= tol``.

Hypotheses that involve the guessing entropy are established with the
sound end of a :class:`~qbsm.povm.GuessBracket` (``H_guess >= tau`` is
accepted only if ``p_hi <= 2**-tau``).  When that fails the checker raises
:class:`Unverifiable` and the case is rejected rather than counted.

Check identifiers
-----------------
====  ==============================================================
B1    ``d(Z|Q) <= sqrt(2 d(Z|PGM(Q))) + d(Z)`` for binary ``Z``
B2    one-bit extractor: ``d(e(X,Y)|YQ) <= 3 sqrt(eps)`` (``2 sqrt(eps) + eps`` recorded)
B3    one-bit extractor with side information ``(V, W)``: ``<= 4 sqrt(eps)``
C1    hybrid bound ``d(Z|Q) <= sum_i d(Z_{i+1}|Z^i Q)``
C2    ``m`` independent seeds: ``<= 4 m sqrt(eps)``
C3    seed reused over ``L`` blocks: ``<= 4 L m sqrt(eps)``
D1    classical side information: ``d(E(X,Y)|YE) <= 2 eps``
D2    fixed measurement: ``d(E(X,Y)|Y F(Q)) <= 2 eps``
D3    chain rule for the guessing entropy (average and 1 - eps versions)
D4    storage bound ``H_guess(X|Q) >= H_min(X) - H_0(Q)``
D5    independent blocks do not help guessing
E1    MUB tomography ``||A|| <= (d + 1) ||F(A)||``
E2    small memory: ``d(E(X,Y)|YQ) <= 4 2^{H_0(Q)} eps``
F1    four averaging identities of the non-uniformity
F2    classical post-processing never increases non-uniformity
F3    ``sum_z p_z^y rho_z^y = rho_Q`` for every seed
====  ==============================================================
"""

from __future__ import annotations

import functools
import json
import math
import zlib
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import adversary as adv
from . import extract, opalg, povm
from .cqstate import (
    CqState,
    Distribution,
    apply_extractor,
    condition,
    conditional_ensemble,
    marginal,
    max_entropy,
    min_entropy,
    nonuniformity_classical,
    nonuniformity_quantum,
    random_cq_state,
)

INEQUALITY_TOL = 1e-8
EQUALITY_TOL = 1e-10


class Unverifiable(Exception):
    """The hypotheses of a statement could not be certified for this case."""


@dataclass(frozen=True)
class Scale:
    """Size caps for generated instances.

    ``n`` bounds the source length of the base extractor (for the blockwise
    construction: per block), ``q`` the adversary's qubits, ``b`` its
    classical bits, ``m`` the number of output bits (so ``|Z| <= 2**m``) and
    ``L`` the number of blocks.
    """

    n: int = 6
    q: int = 3
    b: int = 3
    m: int = 3
    L: int = 2

    def __post_init__(self):
        limits = {"n": (1, 6), "q": (0, 3), "b": (0, 6), "m": (1, 3), "L": (1, 3)}
        for name, (lo, hi) in limits.items():
            val = getattr(self, name)
            if not lo <= val <= hi:
                raise ValueError(f"scale {name}={val} outside supported range {lo}..{hi}")


@dataclass(frozen=True, eq=False)
class CheckCase:
    """One instance for a checker.

    ``params`` is a JSON-friendly description; ``payload`` holds the objects
    (states, extractors, encoders) the checker consumes.
    """

    check_id: str
    params: dict
    payload: dict = field(repr=False)
    seed: int
    index: int


@dataclass(frozen=True)
class CheckResult:
    check_id: str
    index: int
    lhs: float
    rhs: float
    slack: float
    sound_sides: str
    passed: bool
    tolerance: float
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "check_id": self.check_id,
            "index": self.index,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
            "sound_sides": self.sound_sides,
            "passed": self.passed,
            "tolerance": self.tolerance,
            "extra": self.extra,
        }


@dataclass(frozen=True)
class Check:
    check_id: str
    statement: str
    kind: str  # "inequality" or "equality"
    generate: Callable[[np.random.Generator, Scale, dict], tuple[dict, dict]]
    evaluate: Callable[[dict], tuple[float, float, str, dict]]


REGISTRY: dict[str, Check] = {}


def _register(check_id: str, statement: str, kind: str = "inequality"):
    def wrap(pair):
        gen, ev = pair
        REGISTRY[check_id] = Check(check_id, statement, kind, gen, ev)
        return pair
    return wrap


def gen_cases(check_id: str, count: int, scale: Scale | None = None, seed: int = 0,
              options: dict | None = None) -> list[CheckCase]:
    """Reproducible list of ``count`` instances for ``check_id``.

    Case ``i`` draws from ``default_rng([seed, crc32(check_id), i])``, so
    any case can be regenerated on its own with :func:`gen_case`.
    ``options`` pins parts of the instance (e.g. ``{"extractor": {...}, "k": 2}``).
    """
    return [gen_case(check_id, i, scale, seed, options) for i in range(count)]


def gen_case(check_id: str, index: int, scale: Scale | None = None, seed: int = 0,
             options: dict | None = None) -> CheckCase:
    """Instance number ``index`` of the stream produced by :func:`gen_cases`."""
    check = _lookup(check_id)
    scale = Scale() if scale is None else scale
    options = {} if options is None else dict(options)
    rng = np.random.default_rng([seed, zlib.crc32(check_id.encode()), index])
    params, payload = check.generate(rng, scale, options)
    return CheckCase(check_id, params, payload, seed, index)


def run_check(check_id: str, case: CheckCase, tolerance: float | None = None) -> CheckResult:
    """Evaluate one case.

    Raises
    ------
    Unverifiable
        If the hypotheses cannot be certified with sound bracket ends.
    """
    check = _lookup(check_id)
    if case.check_id != check_id:
        raise ValueError(f"case belongs to {case.check_id}, not {check_id}")
    if tolerance is None:
        tolerance = EQUALITY_TOL if check.kind == "equality" else INEQUALITY_TOL
    lhs, rhs, sides, extra = check.evaluate(case.payload)
    slack = rhs - lhs
    passed = abs(slack) <= tolerance if check.kind == "equality" else slack >= -tolerance
    return CheckResult(check_id, case.index, float(lhs), float(rhs), float(slack), sides,
                       bool(passed), float(tolerance), extra)


def _lookup(check_id: str) -> Check:
    try:
        return REGISTRY[check_id]
    except KeyError:
        raise KeyError(f"unknown check {check_id!r}; known: {sorted(REGISTRY)}") from None


# ---------------------------------------------------------------------------
# shared machinery


@functools.lru_cache(maxsize=None)
def _epsilon(descriptor_json: str, k: int) -> extract.EpsilonWitness:
    e = extract.from_descriptor(json.loads(descriptor_json))
    return extract.worst_case_epsilon(e, k)


def exhaustive_epsilon(extractor: extract.ExtractorSpec, k: int) -> float:
    """Exact worst-case error at min-entropy ``k``; refuses heuristic values."""
    wit = _epsilon(json.dumps(extractor.descriptor(), sort_keys=True), k)
    if not wit.exhaustive:
        raise Unverifiable("extractor error is only a heuristic lower bound at this size")
    return wit.epsilon


@functools.lru_cache(maxsize=None)
def _extractor(descriptor_json: str) -> extract.ExtractorSpec:
    return extract.from_descriptor(json.loads(descriptor_json))


def _build(descriptor: dict) -> extract.ExtractorSpec:
    return _extractor(json.dumps(descriptor, sort_keys=True))


def dense_nonuniformity(blocks: np.ndarray) -> float:
    """``|| rho_ZQ - rho_U (x) rho_Q ||`` from the full ``|Z| d`` matrix.

    ``blocks[z] = P(z) rho_z``.  Deliberately avoids the block decomposition.
    """
    nz, d, _ = blocks.shape
    if nz * d > opalg.MAX_DIM:
        raise ValueError("dense route limited to |Z| * d <= 64")
    full = np.zeros((nz * d, nz * d), dtype=complex)
    for z in range(nz):
        full[z * d:(z + 1) * d, z * d:(z + 1) * d] = blocks[z]
    full -= np.kron(np.eye(nz) / nz, blocks.sum(axis=0))
    return opalg.trace_norm(full)


def certify(rho: CqState, tau: float) -> povm.GuessBracket:
    """Bracket of ``p_guess(X|Q)``; raises unless ``p_hi <= 2**-tau``."""
    br = povm.guessing_prob_bracket(rho, target=2.0 ** (-tau))
    if not br.certifies_at_least(tau):
        raise Unverifiable(f"H_guess >= {tau:.6g} not certified (p_hi = {br.p_hi:.6g})")
    return br


def _uniform(nx: int) -> np.ndarray:
    return np.full(nx, 1.0 / nx)


def _largest_certified(build, certified, steps: int = 14):
    """Largest ``t`` in [0, 1] with ``certified(build(t))``, by bisection.

    Relies on monotonicity in ``t`` (mixing toward a useless state only
    lowers guessing probabilities).  Returns ``None`` if even ``t = 0`` fails.
    """
    if certified(build(1.0)):
        return 1.0
    if not certified(build(0.0)):
        return None
    lo, hi = 0.0, 1.0
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if certified(build(mid)):
            lo = mid
        else:
            hi = mid
    return lo


def _bracket_ok(rho: CqState, tau: float) -> bool:
    return povm.guessing_prob_bracket(rho, target=2.0 ** (-tau)).certifies_at_least(tau)


BINARY_FAMILIES = ("ip", "pair_xor", "hash")


def _binary_extractor(family: str, n: int) -> extract.ExtractorSpec:
    if family == "ip":
        return extract.ip_extractor(n)
    if family == "pair_xor":
        return extract.pair_xor(n)
    return extract.two_universal_hash(n, 1)


def _pick_config(rng, options, candidates, feasible):
    """Choose an ``(extractor, k, extra)`` triple.

    ``options`` may pin ``extractor`` (descriptor) and ``k``; otherwise
    random ``candidates`` are tried until ``feasible`` accepts one.
    """
    if "extractor" in options:
        e = _build(options["extractor"])
        k = int(options.get("k", 0))
        return e, k
    order = rng.permutation(len(candidates))
    for i in order:
        e, k = candidates[i]
        if feasible(e, k):
            return e, k
    raise RuntimeError("no feasible configuration at this scale")


def _encoder_base(family: str, n: int, q: int, rng, extractor=None, px=None) -> adv.QuantumEncoder:
    """Undepolarised encoder of ``n``-bit sources into ``q`` qubits."""
    nx = 1 << n
    if q == 0:
        return adv.trivial_encoder(nx)
    if family == "orthogonal":
        return adv.orthogonal_encoder(nx, q)
    if family == "bit_z":
        return _pad(adv.bit_encoder(n, int(rng.integers(1, n + 1))), q)
    if family == "bit_zx":
        return _pad(adv.bit_encoder(n, int(rng.integers(1, n + 1)), "zx"), q)
    if family == "gkw":
        g = adv.gkw_encoder(n)
        if g.q > q:
            raise ValueError("GKW encoder needs more qubits")
        return _pad(g, q)
    if family == "commuting":
        return adv.encoder_from_classical(adv.ClassicalEncoder(rng.integers(0, 1 << q, size=nx), q))
    if family == "random_pure":
        return adv.random_pure_encoder(nx, q, rng)
    if family == "random_mixed":
        return adv.QuantumEncoder(np.stack([opalg.random_density(1 << q, rng, int(rng.integers(1, (1 << q) + 1)))
                                            for _ in range(nx)]), q)
    if family == "seesaw":
        enc, _ = adv.seesaw_optimize_encoder(extractor, px, q, restarts=2, iters=120, rng=rng)
        return enc
    raise ValueError(f"unknown encoder family {family!r}")


def _pad(enc: adv.QuantumEncoder, q: int) -> adv.QuantumEncoder:
    """Embed into ``q`` qubits by tensoring with ``|0><0|``."""
    dim = 1 << q
    if enc.dim == dim:
        return adv.QuantumEncoder(enc.states, q)
    states = np.zeros((enc.states.shape[0], dim, dim), dtype=complex)
    states[:, :enc.dim, :enc.dim] = enc.states
    return adv.QuantumEncoder(states, q)


ENCODER_FAMILIES = ("orthogonal", "bit_z", "bit_zx", "gkw", "commuting", "random_pure", "random_mixed", "seesaw")


def _certified_encoder(rng, n: int, q: int, px, tau: float, extractor, families=ENCODER_FAMILIES):
    """Depolarise a structured or random encoder until ``H_guess(X|Q) >= tau`` is certified.

    Returns ``(encoder, info)``; when no mixing level works the fully mixed
    encoder is returned and ``info["certified"]`` is False (the checker
    will then reject the case).
    """
    usable = [f for f in families if not (f == "gkw" and math.ceil(math.log2(max(n, 2))) > q)]
    family = usable[int(rng.integers(len(usable)))] if q > 0 else "trivial"
    base = _encoder_base(family, n, q, rng, extractor, px)
    build = lambda t: adv.depolarize(base, t).cq_state(px)
    t_max = _largest_certified(build, lambda rho: _bracket_ok(rho, tau))
    if t_max is None:
        return adv.depolarize(base, 0.0), {"family": family, "t": 0.0, "certified": False}
    t = t_max * float(rng.uniform(0.6, 1.0)) if rng.random() < 0.5 else t_max
    return adv.depolarize(base, t), {"family": family, "t": t, "certified": True}


def _log2inv(eps: float) -> float:
    return math.log2(1.0 / eps) if eps > 0 else math.inf


# ---------------------------------------------------------------------------
# B1: binary non-uniformity through the pretty good measurement


def _gen_b1(rng, scale: Scale, options):
    nx = int(rng.integers(2, 17))
    dim = int(rng.integers(2, 9))
    rho = _random_structured_cq(rng, nx, dim)
    f = rng.integers(0, 2, size=nx)
    if not f.any() or f.all():
        f[int(rng.integers(nx))] ^= 1
    labels = [(int(f[i]), i) for i in range(nx)]
    rho_zx = CqState(Distribution(labels, rho.probs), rho.states, rho.state_of, validate=False)
    rho_zq = marginal(rho_zx, (0,))
    return {"nx": nx, "dim": dim}, {"rho": rho_zq}


def _random_structured_cq(rng, nx: int, dim: int) -> CqState:
    """Random cq-state, sometimes degenerate (identical, orthogonal or pure states)."""
    kind = rng.choice(["random", "random", "pure", "identical", "orthogonal", "diagonal"])
    probs = rng.dirichlet(np.ones(nx)) if rng.random() < 0.7 else _uniform(nx)
    if kind == "identical":
        st = opalg.random_density(dim, rng)
        states = np.repeat(st[None], nx, axis=0)
    elif kind == "orthogonal":
        states = np.stack([np.diag(np.eye(dim)[i % dim]).astype(complex) for i in range(nx)])
    elif kind == "pure":
        states = np.stack([opalg.projector(opalg.random_pure(dim, rng)) for _ in range(nx)])
    elif kind == "diagonal":
        states = np.stack([np.diag(rng.dirichlet(np.ones(dim))).astype(complex) for _ in range(nx)])
    else:
        return random_cq_state(rng, nx, dim, probs=probs)
    return CqState.from_ensemble(probs, states)


def _eval_b1(p):
    rho = p["rho"]
    lhs = nonuniformity_quantum(rho)
    M = povm.pgm(rho)
    joint = povm.measure_cq(rho, M)
    d_meas = nonuniformity_classical(joint, z=0, given=(1,))
    d_z = nonuniformity_classical(marginal(joint, (0,), quantum=False), z=0, given=())
    rhs = math.sqrt(2.0 * d_meas) + d_z
    return lhs, rhs, "exact", {"d_pgm": d_meas, "d_z": d_z}


_register("B1", "d(Z|Q) <= sqrt(2 d(Z|PGM(Q))) + d(Z) for binary Z")((_gen_b1, _eval_b1))


# ---------------------------------------------------------------------------
# B2: one-bit extractor against quantum memory


def _binary_candidates(scale: Scale, nmax: int = 6):
    out = []
    for fam in BINARY_FAMILIES:
        for n in range(2, min(scale.n, nmax) + 1):
            for k in range(0, n):
                out.append((_binary_extractor(fam, n), k))
    return out


def _gen_extractor_attack(rng, scale: Scale, options, tau_of, q_limit=None, families=ENCODER_FAMILIES):
    """Shared generator: extractor + k + certified encoder.

    ``tau_of(e, k, eps)`` is the required guessing entropy.
    """
    cands = options.get("candidates") or _binary_candidates(scale)

    def feasible(e, k):
        try:
            eps = exhaustive_epsilon(e, k)
        except Unverifiable:
            return False
        return tau_of(e, k, eps) < e.n
    e, k = _pick_config(rng, options, cands, feasible)
    eps = exhaustive_epsilon(e, k)
    tau = tau_of(e, k, eps)
    qcap = min(scale.q, options.get("q_max", scale.q) if q_limit is None else q_limit)
    room = e.n - tau
    qmax = max(0, min(qcap, int(math.floor(room - 1e-9)) if room > 0 else 0))
    if "q" in options:
        q = int(options["q"])
    else:
        # mostly the largest memory the hypothesis leaves room for
        q = qmax if rng.random() < 0.7 else int(rng.integers(0, qmax + 1))
    px = _uniform(e.num_sources)
    enc, info = _certified_encoder(rng, e.n, q, px, tau, e, options.get("families", families))
    params = {"extractor": e.descriptor(), "k": k, "epsilon": eps, "tau": tau, "q": q, **info}
    return params, {"extractor": e, "k": k, "eps": eps, "tau": tau, "px": px, "encoder": enc}


def _gen_b2(rng, scale, options):
    return _gen_extractor_attack(rng, scale, options, lambda e, k, eps: k + _log2inv(eps))


def _eval_b2(p):
    e, px, enc = p["extractor"], p["px"], p["encoder"]
    br = certify(enc.cq_state(px), p["tau"])
    res = adv.quantum_attack_eval(e, px, enc)
    eps = p["eps"]
    tight = 2 * math.sqrt(eps) + eps
    extra = {"p_hi": br.p_hi, "proof_bound": tight, "proof_bound_slack": tight - res.value}
    return res.value, 3 * math.sqrt(eps), "hypothesis: bracket p_hi; lhs exact", extra


_register("B2", "one-bit extractor: d(e(X,Y)|YQ) <= 3 sqrt(eps) when H_guess(X|Q) >= k + log(1/eps)")(
    (_gen_b2, _eval_b2))


# ---------------------------------------------------------------------------
# B3: one-bit extractor with independent V and short W


def _gen_b3(rng, scale, options):
    bw = int(options.get("w_bits", rng.integers(0, 2)))

    def tau_of(e, k, eps):
        return k + bw + 2 * _log2inv(eps)
    params, payload = _gen_extractor_attack(rng, scale, options, tau_of)
    e = payload["extractor"]
    nv = int(rng.integers(1, 4))
    nw = 1 << bw
    # W depends on (X, V) through a random table, sometimes noisily
    table = rng.integers(0, nw, size=(e.num_sources, nv))
    channel = np.zeros((e.num_sources, nv, nw))
    channel[np.arange(e.num_sources)[:, None], np.arange(nv)[None, :], table] = 1.0
    if rng.random() < 0.5:
        channel = 0.7 * channel + 0.3 * rng.dirichlet(np.ones(nw), size=(e.num_sources, nv))
    pv = rng.dirichlet(np.ones(nv))
    params.update({"w_bits": bw, "nv": nv})
    payload.update({"pv": pv, "channel": channel})
    return params, payload


def _xvw_state(px, pv, channel, enc: adv.QuantumEncoder) -> CqState:
    labels, probs, state_of = [], [], []
    nx, nv, nw = channel.shape
    for x in range(nx):
        for v in range(nv):
            for w in range(nw):
                pr = px[x] * pv[v] * channel[x, v, w]
                if pr > 0:
                    labels.append((x, v, w))
                    probs.append(pr)
                    state_of.append(x)
    dist = Distribution(labels, np.array(probs) / np.sum(probs),
                        (tuple(range(nx)), tuple(range(nv)), tuple(range(nw))))
    return CqState(dist, enc.states, state_of, validate=False)


def _eval_b3(p):
    e, px, enc = p["extractor"], p["px"], p["encoder"]
    rho = _xvw_state(px, p["pv"], p["channel"], enc)
    h0w = max_entropy(marginal(rho, (2,), quantum=False))
    tau = p["k"] + h0w + 2 * _log2inv(p["eps"])
    br = certify(enc.cq_state(px), tau)
    # rho_{Z X V W Y Q} with labels (z, x, v, w, y)
    table = e.table()
    labels, probs, state_of = [], [], []
    py = 1.0 / e.num_seeds
    for lab, pr, s in zip(rho.labels, rho.probs, rho.state_of):
        x, v, w = lab
        for j in range(e.num_seeds):
            labels.append((int(table[x, j]), x, v, w, j))
            probs.append(pr * py)
            state_of.append(s)
    big = CqState(Distribution(labels, probs, (tuple(range(e.num_outputs)),) + rho.classical.alphabets
                               + (tuple(range(e.num_seeds)),)), rho.states, state_of, validate=False)
    lhs = nonuniformity_quantum(big, z=0, given=(4, 2, 3))
    eps = p["eps"]
    extra = {"p_hi": br.p_hi, "h0_w": h0w, "proof_bound": 3 * math.sqrt(eps) + eps}
    return lhs, 4 * math.sqrt(eps), "hypothesis: bracket p_hi; lhs exact", extra


_register("B3", "one-bit extractor with side information (V, W): d <= 4 sqrt(eps) when "
                "H_guess(X|Q) >= k + H_0(W) + 2 log(1/eps)")((_gen_b3, _eval_b3))


# ---------------------------------------------------------------------------
# C1: hybrid bound


def _gen_c1(rng, scale: Scale, options):
    m = int(options.get("m", rng.integers(1, scale.m + 1)))
    dim = int(rng.integers(1, min(8, opalg.MAX_DIM >> m) + 1))
    nz = 1 << m
    base = _random_structured_cq(rng, nz, dim)
    labels = [tuple(extract.bit(z, i, m) for i in range(1, m + 1)) for z in range(nz)]
    dist = Distribution(labels, base.probs, tuple((0, 1) for _ in range(m)))
    return {"m": m, "dim": dim}, {"rho": CqState(dist, base.states, base.state_of, validate=False)}


def _eval_c1(p):
    rho = p["rho"]
    m = rho.classical.nparts
    blocks = rho.weighted_states()
    lhs = dense_nonuniformity(blocks)
    terms = [nonuniformity_quantum(rho, z=i, given=tuple(range(i))) for i in range(m)]
    return lhs, float(sum(terms)), "exact (lhs dense, rhs blockwise)", {"terms": terms}


_register("C1", "d(Z|Q) <= sum_i d(Z_{i+1}|Z^i Q)")((_gen_c1, _eval_c1))


# ---------------------------------------------------------------------------
# C2: m independent seeds


def _gen_c2(rng, scale: Scale, options):
    m = int(options.get("m", rng.integers(1, min(scale.m, 2) + 1)))
    cands = options.get("candidates") or _binary_candidates(scale)

    def tau_of(e, k, eps):
        return k + m + 2 * _log2inv(eps)
    opts = dict(options, candidates=cands)
    params, payload = _gen_extractor_attack(rng, scale, opts, tau_of)
    params["m"] = m
    payload["m"] = m
    return params, payload


def _eval_c2(p):
    e, px, enc, m = p["extractor"], p["px"], p["encoder"], p["m"]
    br = certify(enc.cq_state(px), p["k"] + m + 2 * _log2inv(p["eps"]))
    em = extract.compose_multi_seed(e, m)
    res = adv.quantum_attack_eval(em, px, enc)
    return res.value, 4 * m * math.sqrt(p["eps"]), "hypothesis: bracket p_hi; lhs exact", {"p_hi": br.p_hi}


_register("C2", "m independent seeds: d(E^m(X,Y^m)|Y^m Q) <= 4 m sqrt(eps) when "
                "H_guess(X|Q) >= k + m + 2 log(1/eps)")((_gen_c2, _eval_c2))


# ---------------------------------------------------------------------------
# C3: seed reused across L independent blocks


def _block_state(enc_states: np.ndarray, nb: int, L: int) -> CqState:
    """cq-state with labels ``(x_1, ..., x_L)`` for a uniform source on ``L`` blocks."""
    labels = [tuple((x >> (nb * (L - 1 - i))) & ((1 << nb) - 1) for i in range(L)) for x in range(1 << (nb * L))]
    dist = Distribution(labels, _uniform(len(labels)), tuple(tuple(range(1 << nb)) for _ in range(L)))
    return CqState(dist, enc_states, validate=False)


def blockwise_guess_bounds(rho: CqState, target: float | None = None, max_iter: int = 400) -> list[float]:
    """Sound upper bounds on ``2^{-H_guess(X_{i+1}|X^i Q)}`` for every ``i``.

    ``p_guess(X_{i+1}|X^i Q) = sum_{x^i} P(x^i) p_guess(X_{i+1}|Q, X^i = x^i)``;
    each term is replaced by its bracket's upper end.  ``target`` only
    shortens the iterations once a term is decided against it; a smaller
    ``max_iter`` loosens the bounds but keeps them sound.
    """
    bracket = functools.partial(povm.guessing_prob_bracket, target=target, max_iter=max_iter)
    L = rho.classical.nparts
    out = []
    for i in range(L):
        head = marginal(rho, tuple(range(i + 1)))
        if i == 0:
            out.append(bracket(head).p_hi)
            continue
        prefix = marginal(rho, tuple(range(i)), quantum=False)
        total = 0.0
        for lab, pr in zip(prefix.labels, prefix.probs):
            if pr <= 0:
                continue
            cond = head
            for val in lab:
                cond = condition(cond, 0, val)
            total += pr * bracket(cond).p_hi
        out.append(total)
    return out


def _gen_c3(rng, scale: Scale, options):
    L = int(options.get("L", min(2, scale.L)))
    m = int(options.get("m", 1))
    if "extractor" in options:
        e = _build(options["extractor"])
        k = int(options.get("k", 0))
    else:
        nb = min(4, scale.n)
        cands = [(_binary_extractor(f, nb), 0) for f in BINARY_FAMILIES]
        e, k = cands[int(rng.integers(len(cands)))]
    eps = exhaustive_epsilon(e, k)
    tau = k + m + 2 * _log2inv(eps)
    nb = e.n
    per_block_q = int(options.get("q", 1 if tau < nb - 1 + 1e-12 else 0))
    q = min(per_block_q * L, scale.q)
    kind = options.get("kind", rng.choice(["product", "adaptive", "random"]))
    base = _blockwise_encoder(rng, kind, nb, L, q)
    build = lambda t: _block_state(adv.depolarize(base, t).states, nb, L)
    ok = lambda rho: max(blockwise_guess_bounds(rho, 2.0 ** (-tau))) <= 2.0 ** (-tau)
    t_max = _largest_certified(build, ok, steps=10)
    certified = t_max is not None
    t = 0.0 if t_max is None else t_max * (float(rng.uniform(0.6, 1.0)) if rng.random() < 0.5 else 1.0)
    enc = adv.depolarize(base, t)
    params = {"extractor": e.descriptor(), "k": k, "epsilon": eps, "tau": tau, "m": m, "L": L, "q": q,
              "kind": str(kind), "t": t, "certified": certified}
    return params, {"extractor": e, "k": k, "eps": eps, "tau": tau, "m": m, "L": L, "encoder": enc}


def _blockwise_encoder(rng, kind: str, nb: int, L: int, q: int) -> adv.QuantumEncoder:
    nx = 1 << (nb * L)
    dim = 1 << q
    if q == 0:
        return adv.trivial_encoder(nx)
    if kind == "random":
        return adv.random_pure_encoder(nx, q, rng)
    per = q // L if q >= L else 0
    vecs = np.zeros((nx, dim), dtype=complex)
    plus = np.array([1, 1]) / math.sqrt(2)
    for x in range(nx):
        blocks = [(x >> (nb * (L - 1 - i))) & ((1 << nb) - 1) for i in range(L)]
        v = np.ones(1, dtype=complex)
        for i in range(L):
            if per == 0 and i > 0:
                continue
            bit_i = blocks[i] & 1
            if kind == "adaptive" and i > 0:
                # the register for block i also depends on the previous block
                bit_i ^= blocks[i - 1] >> (nb - 1)
            qubit = np.array([1, 0]) if bit_i == 0 else plus
            v = np.kron(v, qubit)
        if v.size < dim:
            v = np.kron(v, np.eye(dim // v.size)[0])
        vecs[x] = v
    return adv.QuantumEncoder(vecs, q)


def _eval_c3(p):
    e, enc, m, L = p["extractor"], p["encoder"], p["m"], p["L"]
    nb = e.n
    rho = _block_state(enc.states, nb, L)
    bounds = blockwise_guess_bounds(rho, 2.0 ** (-p["tau"]))
    if max(bounds) > 2.0 ** (-p["tau"]):
        raise Unverifiable(f"blockwise condition not certified (max p_hi = {max(bounds):.6g})")
    el = extract.compose_blockwise(e, m, L)
    res = adv.quantum_attack_eval(el, _uniform(el.num_sources), enc)
    return res.value, 4 * L * m * math.sqrt(p["eps"]), "hypothesis: bracket p_hi per block; lhs exact", \
        {"p_hi": bounds}


_register("C3", "seed reused over L blocks: d <= 4 L m sqrt(eps) on blockwise states")((_gen_c3, _eval_c3))


# ---------------------------------------------------------------------------
# D1, D2: measurement before the seed is known


def _all_candidates(scale: Scale, nmax: int = 4):
    out = _binary_candidates(scale, nmax)
    for n in range(2, min(scale.n, nmax) + 1):
        for mm in range(2, min(scale.m, n) + 1):
            for k in range(0, n):
                out.append((extract.two_universal_hash(n, mm), k))
    return out


def key_given_outcome(extractor: extract.ExtractorSpec, pxe: np.ndarray) -> float:
    """``d(E(X,Y)|Y E)`` for a joint ``pxe[x, e]`` and uniform seed."""
    table = extractor.table()
    ny = extractor.num_seeds
    labels, probs = [], []
    for x, e in zip(*np.nonzero(pxe > 0)):
        for j in range(ny):
            labels.append((int(table[x, j]), j, int(e)))
            probs.append(pxe[x, e] / ny)
    joint = {}
    for lab, pr in zip(labels, probs):
        joint[lab] = joint.get(lab, 0.0) + pr
    dist = Distribution(list(joint), np.fromiter(joint.values(), float),
                        (tuple(range(extractor.num_outputs)), tuple(range(ny)), tuple(range(pxe.shape[1]))))
    return nonuniformity_classical(dist, z=0, given=(1, 2))


def _gen_d1(rng, scale, options):
    cands = options.get("candidates") or _all_candidates(scale)

    def feasible(e, k):
        try:
            eps = exhaustive_epsilon(e, k)
        except Unverifiable:
            return False
        return k + _log2inv(eps) < e.n
    e, k = _pick_config(rng, options, cands, feasible)
    eps = exhaustive_epsilon(e, k)
    tau = k + _log2inv(eps)
    bmax = max(0, min(scale.b, int(math.floor(e.n - tau - 1e-9))))
    b = int(rng.integers(0, bmax + 1))
    nx = e.num_sources
    px = _uniform(nx) if rng.random() < 0.7 else None
    table = rng.integers(0, 1 << b, size=nx) if rng.random() < 0.5 else np.arange(nx) >> (e.n - b)
    det = np.zeros((nx, 1 << b))
    det[np.arange(nx), table] = 1.0
    if px is None:
        # slightly tilted source, still flat enough for the hypothesis after noise
        px = rng.dirichlet(np.full(nx, 50.0))
    build = lambda t: px[:, None] * (t * det + (1 - t) / (1 << b))
    ok = lambda pxe: _guess_joint(pxe) <= 2.0 ** (-tau)
    t_max = _largest_certified(build, ok)
    if t_max is None:
        px = _uniform(nx)
        t_max = _largest_certified(build, ok) or 0.0
    t = t_max * float(rng.uniform(0.6, 1.0)) if rng.random() < 0.5 else t_max
    params = {"extractor": e.descriptor(), "k": k, "epsilon": eps, "tau": tau, "b": b, "t": t}
    return params, {"extractor": e, "k": k, "eps": eps, "tau": tau, "pxe": build(t)}


def _guess_joint(pxe: np.ndarray) -> float:
    return float(pxe.max(axis=0).sum())


def _eval_d1(p):
    pxe = p["pxe"]
    labels = [(x, e) for x in range(pxe.shape[0]) for e in range(pxe.shape[1])]
    dist = Distribution(labels, pxe.reshape(-1))
    pg = povm.guess_prob_classical(dist, 0)
    if pg > 2.0 ** (-p["tau"]):
        raise Unverifiable("classical guessing hypothesis fails")
    lhs = key_given_outcome(p["extractor"], pxe)
    return lhs, 2 * p["eps"], "exact", {"p_guess": pg}


_register("D1", "classical side information: d(E(X,Y)|YE) <= 2 eps when H_guess(X|E) >= k + log(1/eps)")(
    (_gen_d1, _eval_d1))


def _gen_d2(rng, scale, options):
    opts = dict(options)
    opts.setdefault("candidates", _all_candidates(scale))
    params, payload = _gen_extractor_attack(rng, scale, opts, lambda e, k, eps: k + _log2inv(eps))
    dim = payload["encoder"].dim
    kind = rng.choice(["random", "pgm", "basis", "mub"] if dim == 2 else ["random", "pgm", "basis"])
    if kind == "random":
        F = povm.random_povm(dim, int(rng.integers(2, 9)), rng)
    elif kind == "pgm":
        F = povm.pgm(payload["encoder"].cq_state(payload["px"]))
    elif kind == "mub":
        F = povm.mub_povm(2)
    else:
        F = povm.Povm(np.stack([np.diag(np.eye(dim)[i]) for i in range(dim)]).astype(complex))
    params["povm"] = str(kind)
    payload["povm"] = F
    return params, payload


def _eval_d2(p):
    rho = p["encoder"].cq_state(p["px"])
    br = certify(rho, p["tau"])
    F = p["povm"]
    pxe = np.clip(np.real(np.einsum("eij,xji->xe", F.elements, rho.states)), 0.0, None) * p["px"][:, None]
    lhs = key_given_outcome(p["extractor"], pxe)
    return lhs, 2 * p["eps"], "hypothesis: bracket p_hi; lhs exact", {"p_hi": br.p_hi}


_register("D2", "fixed measurement: d(E(X,Y)|Y F(Q)) <= 2 eps when H_guess(X|Q) >= k + log(1/eps)")(
    (_gen_d2, _eval_d2))


# ---------------------------------------------------------------------------
# D3: chain rule; D4: storage bound; D5: independent blocks


def _gen_d3(rng, scale: Scale, options):
    nx = int(rng.integers(2, 9))
    nv = int(rng.integers(1, 4))
    bw = int(rng.integers(0, 3))
    nw = 1 << bw
    dim = int(rng.integers(1, 5))
    base = _random_structured_cq(rng, nx, dim) if dim > 1 else CqState.from_ensemble(
        rng.dirichlet(np.ones(nx)), np.ones((nx, 1, 1)))
    enc = adv.QuantumEncoder(base.states[base.state_of], None)
    channel = rng.dirichlet(np.full(nw, 0.3), size=(nx, nv))
    if rng.random() < 0.5:
        table = rng.integers(0, nw, size=(nx, nv))
        channel = np.zeros((nx, nv, nw))
        channel[np.arange(nx)[:, None], np.arange(nv)[None, :], table] = 1.0
    version = options.get("version", "average" if rng.random() < 0.5 else "conditional")
    eps = float(options.get("eps", rng.uniform(0.05, 0.9)))
    params = {"nx": nx, "nv": nv, "w_bits": bw, "dim": dim, "version": version, "eps": eps}
    return params, {"px": base.probs, "pv": rng.dirichlet(np.ones(nv)), "channel": channel,
                    "encoder": enc, "version": version, "eps": eps}


def _eval_d3(p):
    rho = _xvw_state(p["px"], p["pv"], p["channel"], p["encoder"])
    h0w = max_entropy(marginal(rho, (2,), quantum=False))
    br_q = povm.guessing_prob_bracket(marginal(rho, (0,)))
    h_q_upper = -math.log2(br_q.p_lo)
    vw = marginal(rho, (1, 2), quantum=False)
    cond_hi = []
    for (v, w), pr in zip(vw.labels, vw.probs):
        if pr <= 0:
            continue
        c = condition(condition(rho, 1, v), 1, w)
        cond_hi.append((pr, povm.guessing_prob_bracket(c).p_hi))
    if p["version"] == "average":
        h_vw_lower = -math.log2(sum(pr * ph for pr, ph in cond_hi))
        lhs, rhs = h_q_upper - h0w, h_vw_lower
        extra = {"h0_w": h0w}
    else:
        thresh = h_q_upper - h0w - _log2inv(p["eps"])
        bad = sum(pr for pr, ph in cond_hi if -math.log2(ph) < thresh)
        lhs, rhs = bad, p["eps"]
        extra = {"h0_w": h0w, "threshold": thresh}
    return lhs, rhs, "H_guess(X|Q) from p_lo, conditional ones from p_hi", extra


_register("D3", "H_guess(X|VWQ) >= H_guess(X|Q) - H_0(W), and the 1 - eps conditional version")(
    (_gen_d3, _eval_d3))


def _gen_d4(rng, scale: Scale, options):
    nx = int(rng.integers(2, 17))
    dim = int(rng.integers(1, 9))
    if dim == 1:
        rho = CqState.from_ensemble(rng.dirichlet(np.ones(nx)), np.ones((nx, 1, 1)))
    else:
        rho = _random_structured_cq(rng, nx, dim)
        if rng.random() < 0.3:
            # low-rank memory: all states inside a random subspace
            r = int(rng.integers(1, dim + 1))
            u = np.linalg.qr(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))[0][:, :r]
            small = random_cq_state(rng, nx, r, probs=rho.probs)
            rho = CqState.from_ensemble(rho.probs, np.einsum("ia,xab,jb->xij", u, small.states, u.conj()))
    return {"nx": nx, "dim": dim}, {"rho": rho}


def _eval_d4(p):
    rho = p["rho"]
    lhs = min_entropy(rho.classical) - max_entropy(rho.rho_q())
    br = povm.guessing_prob_bracket(rho)
    return lhs, br.h_guess_lower, "rhs from p_hi", {"p_hi": br.p_hi, "p_lo": br.p_lo}


_register("D4", "H_guess(X|Q) >= H_min(X) - H_0(Q)")((_gen_d4, _eval_d4))


def _gen_d5(rng, scale: Scale, options):
    nx = int(rng.integers(2, 9))
    nxp = int(rng.integers(1, 5))
    q = int(rng.integers(1, min(2, scale.q) + 1))
    dim = 1 << q
    kind = rng.choice(["random", "shifted", "mixed"])
    states = np.zeros((nxp, nx, dim, dim), dtype=complex)
    for xp in range(nxp):
        for x in range(nx):
            if kind == "shifted":
                states[xp, x] = np.diag(np.eye(dim)[(x + xp) % dim])
            elif kind == "mixed":
                states[xp, x] = opalg.random_density(dim, rng)
            else:
                states[xp, x] = opalg.projector(opalg.random_pure(dim, rng))
    family = [np.stack([opalg.projector(opalg.random_pure(dim, rng)) for _ in range(nx)]) for _ in range(6)]
    family.append(np.stack([np.diag(np.eye(dim)[x % dim]).astype(complex) for x in range(nx)]))
    params = {"nx": nx, "nx_prime": nxp, "q": q, "kind": str(kind)}
    return params, {"px": rng.dirichlet(np.ones(nx)), "pxp": rng.dirichlet(np.ones(nxp)),
                    "states": states, "family": family}


def _eval_d5(p):
    px, pxp, states = p["px"], p["pxp"], p["states"]
    nxp, nx = states.shape[:2]
    # H_guess(X|X'Q) from below: average of per-x' upper ends
    slices = [CqState.from_ensemble(px, states[xp]) for xp in range(nxp)]
    p_hi = sum(pxp[i] * povm.guessing_prob_bracket(s).p_hi for i, s in enumerate(slices))
    rhs = -math.log2(p_hi)
    # min over the evaluated members of S-valued rho_XQ, from above
    members = slices + [CqState.from_ensemble(px, f) for f in p["family"]]
    lhs = min(-math.log2(povm.guessing_prob_bracket(s).p_lo) for s in members)
    return lhs, rhs, "lhs from p_lo over evaluated family, rhs from p_hi", {"members": len(members)}


_register("D5", "independent blocks: H_guess(X|X'Q) >= min over S of H_guess(X|Q), per evaluated family")(
    (_gen_d5, _eval_d5))


# ---------------------------------------------------------------------------
# E1: MUB tomography; E2: small quantum memory


def _gen_e1(rng, scale: Scale, options):
    dims = options.get("dims", (2, 3, 5, 7))
    d = int(dims[int(rng.integers(len(dims)))]) if "d" not in options else int(options["d"])
    kind = options.get("kind", rng.choice(["hermitian", "hermitian", "traceless", "psd", "rank1", "difference"]))
    if kind == "sigma_z":
        a = np.diag([0.5, -0.5]).astype(complex)
    elif kind == "traceless":
        a = opalg.random_hermitian(d, rng)
        a -= np.trace(a) / d * np.eye(d)
    elif kind == "psd":
        a = opalg.random_density(d, rng)
    elif kind == "rank1":
        a = opalg.projector(opalg.random_pure(d, rng)) * rng.normal()
    elif kind == "difference":
        a = 0.5 * opalg.random_density(d, rng) - 0.5 * opalg.random_density(d, rng)
    else:
        a = opalg.random_hermitian(d, rng, scale=float(rng.uniform(0.1, 3.0)))
    return {"d": d, "kind": str(kind)}, {"a": a, "d": d}


def _eval_e1(p):
    d = p["d"]
    lhs = opalg.trace_norm(p["a"])
    rhs = (d + 1) * povm.measured_trace_norm(povm.mub_povm(d), p["a"])
    return lhs, rhs, "exact", {}


_register("E1", "||A|| <= (d + 1) ||F(A)|| for the MUB tomography POVM")((_gen_e1, _eval_e1))


def _is_prime_power(r: int) -> bool:
    if r == 1:
        return True
    for p in range(2, r + 1):
        if r % p == 0:
            while r % p == 0:
                r //= p
            return r == 1
    return False


def _gen_e2(rng, scale, options):
    opts = dict(options)
    opts.setdefault("candidates", _all_candidates(scale))
    return _gen_extractor_attack(rng, scale, opts, lambda e, k, eps: k + _log2inv(eps))


def _eval_e2(p):
    e, px, enc = p["extractor"], p["px"], p["encoder"]
    rho = enc.cq_state(px)
    br = certify(rho, p["tau"])
    rank = opalg.numerical_rank(rho.rho_q())
    if not _is_prime_power(rank):
        raise Unverifiable(f"memory rank {rank} is not a prime power")
    res = adv.quantum_attack_eval(e, px, enc)
    return res.value, 4 * rank * p["eps"], "hypothesis: bracket p_hi; lhs exact", \
        {"p_hi": br.p_hi, "rank": rank}


_register("E2", "d(E(X,Y)|YQ) <= 4 2^{H_0(Q)} eps when H_guess(X|Q) >= k + log(1/eps)")((_gen_e2, _eval_e2))


# ---------------------------------------------------------------------------
# F1: averaging identities; F2: refinement; F3: reassembly


F1_IDENTITIES = ("classical_average", "quantum_average", "seed_average", "independent")


def _gen_f1(rng, scale: Scale, options):
    which = options.get("identity", F1_IDENTITIES[int(rng.integers(len(F1_IDENTITIES)))])
    nz = int(rng.integers(2, 5))
    nw = int(rng.integers(1, 4))
    dim = int(rng.integers(1, 5))
    params = {"identity": which, "nz": nz, "nw": nw, "dim": dim}
    if which == "classical_average":
        probs = rng.dirichlet(np.full(nz * nw, 0.5))
        labels = [(z, w) for z in range(nz) for w in range(nw)]
        return params, {"which": which, "p": Distribution(labels, probs)}
    if which == "seed_average":
        n = int(rng.integers(2, 4))
        fam = ["ip", "pair_xor", "hash"][int(rng.integers(3))]
        e = _binary_extractor(fam, n) if rng.random() < 0.6 else extract.two_universal_hash(n, min(2, n))
        rho = random_cq_state(rng, 1 << n, dim)
        params.update({"extractor": e.descriptor()})
        return params, {"which": which, "rho": rho, "extractor": e}
    rho = random_cq_state(rng, nz * nw, dim, labels=[(z, w) for z in range(nz) for w in range(nw)])
    if which == "independent":
        rho_zq = marginal(rho, (0,))
        pv = rng.dirichlet(np.ones(nw))
        labels, probs, state_of = [], [], []
        for lab, pr, s in zip(rho_zq.labels, rho_zq.probs, rho_zq.state_of):
            for v in range(nw):
                labels.append(lab + (v,))
                probs.append(pr * pv[v])
                state_of.append(s)
        rho = CqState(Distribution(labels, probs), rho_zq.states, state_of, validate=False)
    return params, {"which": which, "rho": rho}


def _blocks_for(rho: CqState, nz: int) -> np.ndarray:
    """``P(z) rho_z`` for a single-part cq-state over ``0..nz-1``."""
    blocks = np.zeros((nz, rho.dim, rho.dim), dtype=complex)
    for lab, w in zip(rho.labels, rho.weighted_states()):
        blocks[lab[0]] += w
    return blocks


def _eval_f1(p):
    which = p["which"]
    if which == "classical_average":
        dist = p["p"]
        lhs = nonuniformity_classical(dist, z=0, given=(1,))
        pw = marginal(dist, (1,), quantum=False)
        nz = len(dist.alphabets[0])
        rhs = 0.0
        for (w,), pr in zip(pw.labels, pw.probs):
            if pr > 0:
                cond = condition(dist, 1, w)
                full = np.array([cond.prob((z,)) if (z,) in cond.as_dict() else 0.0 for z in dist.alphabets[0]])
                rhs += pr * opalg.variational_distance(full, _uniform(nz))
        return lhs, rhs, "exact", {}
    if which == "seed_average":
        rho, e = p["rho"], p["extractor"]
        lhs = nonuniformity_quantum(apply_extractor(rho, e), z=0, given=(2,))
        rhs = 0.0
        for y in e.seeds:
            ens = conditional_ensemble(rho, e, y)
            blocks = np.stack([c.prob * c.state if c.defined else np.zeros((rho.dim, rho.dim)) for c in ens])
            rhs += dense_nonuniformity(blocks) / e.num_seeds
        return lhs, rhs, "exact (dense per-seed route)", {}
    rho = p["rho"]
    nz = len(rho.classical.alphabets[0])
    if which == "independent":
        lhs = nonuniformity_quantum(rho, z=0, given=(1,))
        rhs = dense_nonuniformity(_blocks_for(marginal(rho, (0,)), nz))
        return lhs, rhs, "exact (dense route without V)", {}
    lhs = nonuniformity_quantum(rho, z=0, given=(1,))
    pw = marginal(rho, (1,), quantum=False)
    rhs = 0.0
    for (w,), pr in zip(pw.labels, pw.probs):
        if pr > 0:
            rhs += pr * dense_nonuniformity(_blocks_for(condition(rho, 1, w), nz))
    return lhs, rhs, "exact (dense conditional route)", {}


_register("F1", "averaging identities of the non-uniformity", kind="equality")((_gen_f1, _eval_f1))


def _gen_f2(rng, scale: Scale, options):
    nz = int(rng.integers(2, 9))
    dim = int(rng.integers(2, 9))
    rho = _random_structured_cq(rng, nz, dim)
    nf = int(rng.integers(2, 9))
    F = povm.random_povm(dim, nf, rng) if rng.random() < 0.7 else povm.pgm(rho)
    ne = int(rng.integers(1, len(F) + 1))
    if rng.random() < 0.5:
        channel = rng.dirichlet(np.full(ne, 0.5), size=len(F))
    else:
        channel = np.zeros((len(F), ne))
        channel[np.arange(len(F)), rng.integers(0, ne, size=len(F))] = 1.0
    return {"nz": nz, "dim": dim, "outcomes": len(F), "coarse_outcomes": ne}, \
        {"rho": rho, "F": F, "channel": channel}


def _eval_f2(p):
    rho, F = p["rho"], p["F"]
    E = povm.refine_postprocess(F, p["channel"])
    lhs = nonuniformity_classical(povm.measure_cq(rho, E), z=0, given=(1,))
    rhs = nonuniformity_classical(povm.measure_cq(rho, F), z=0, given=(1,))
    return lhs, rhs, "exact", {}


_register("F2", "d(Z|E(Q)) <= d(Z|F(Q)) for E a post-processing of F")((_gen_f2, _eval_f2))


def _gen_f3(rng, scale: Scale, options):
    n = int(rng.integers(1, min(4, scale.n) + 1))
    dim = int(rng.integers(1, 9))
    choice = rng.choice(["ip", "pair_xor", "hash", "multi_seed", "blockwise"])
    if choice == "pair_xor" and n >= 2:
        e = extract.pair_xor(n)
    elif choice == "hash":
        e = extract.two_universal_hash(n, int(rng.integers(1, n + 1)))
    elif choice == "multi_seed" and n <= 3:
        e = extract.compose_multi_seed(extract.ip_extractor(n), 2)
    elif choice == "blockwise" and n <= 2:
        e = extract.compose_blockwise(extract.ip_extractor(n), 1, 2)
    else:
        e = extract.ip_extractor(n)
    rho = random_cq_state(rng, e.num_sources, dim)
    return {"extractor": e.descriptor(), "dim": dim}, {"rho": rho, "extractor": e}


def _eval_f3(p):
    rho, e = p["rho"], p["extractor"]
    rho_q = marginal(rho, ())
    worst = 0.0
    for y in e.seeds:
        total = sum(c.prob * c.state for c in conditional_ensemble(rho, e, y) if c.defined)
        worst = max(worst, opalg.trace_norm(total - rho_q))
    return worst, 0.0, "exact", {"seeds": e.num_seeds}


_register("F3", "sum_z p_z^y rho_z^y equals rho_Q for every seed y", kind="equality")((_gen_f3, _eval_f3))


CHECK_IDS = tuple(sorted(REGISTRY))
