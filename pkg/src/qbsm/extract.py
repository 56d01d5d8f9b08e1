"""Concrete seeded extractors, their compositions, and worst-case error search.

Sources are integers ``0 <= x < 2**n`` read most-significant bit first:
bit ``x_i`` (1-based) of an ``n``-bit source is ``(x >> (n - i)) & 1``, so
the string ``"1010"`` has ``x_1 = 1`` and ``x_3 = 1``.  Multi-bit outputs
are packed the same way, first component in the most significant bit.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Hashable, Sequence

import numpy as np

from .cqstate import Distribution

MAX_SOURCE_BITS = 16

# Irreducible polynomials over GF(2), bit i = coefficient of t^i.
IRREDUCIBLE = {
    1: 0b11,
    2: 0b111,
    3: 0b1011,
    4: 0b10011,
    5: 0b100101,
    6: 0b1000011,
    7: 0b10000011,
    8: 0b100011011,
    9: 0b1000010001,
    10: 0b10000001001,
    11: 0b100000000101,
    12: 0b1000001010011,
    13: 0b10000000011011,
    14: 0b100010001000011,
    15: 0b1000000000000011,
    16: 0b10001000000001011,
}


def bit(x: int, i: int, n: int) -> int:
    """Bit ``x_i`` (1-based, most significant first) of an ``n``-bit integer."""
    return (x >> (n - i)) & 1


def bits_to_int(bits: Sequence[int]) -> int:
    out = 0
    for b in bits:
        out = (out << 1) | int(b)
    return out


def parse_bits(s: str) -> int:
    return int(s, 2)


@dataclass(eq=False)
class ExtractorSpec:
    """A seeded function ``E: {0,1}^n x Y -> {0,1}^m``.

    Attributes
    ----------
    family : str
        Name of the construction (``"ip"``, ``"pair_xor"``, ...).
    n, m : int
        Source and output length in bits.
    seeds : tuple
        The seed domain, enumerated.  Seeds are always uniform.
    evaluate : callable
        ``evaluate(x, y) -> z`` with ``0 <= z < 2**m``.
    locality : int or None
        Number of source bits read for a fixed seed.
    positions : callable or None
        ``positions(y)`` returns the 1-based bit positions read under seed ``y``.
    seed_domain : str
        ``"bits"``, ``"pairs"``, ``"disjoint_pairs"``, ``"product"`` or ``"trivial"``.
    params : dict
        Extra descriptor fields (e.g. ``L`` or the base extractor).
    """

    family: str
    n: int
    m: int
    seeds: tuple
    evaluate: Callable[[int, Hashable], int]
    locality: int | None = None
    positions: Callable[[Hashable], Sequence[int]] | None = None
    seed_domain: str = "bits"
    params: dict = field(default_factory=dict)
    _table: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.seeds = tuple(self.seeds)
        if self.locality is not None and not 0 < self.locality <= self.n:
            raise ValueError("locality must lie in 1..n")

    @property
    def num_sources(self) -> int:
        return 1 << self.n

    @property
    def num_outputs(self) -> int:
        return 1 << self.m

    @property
    def num_seeds(self) -> int:
        return len(self.seeds)

    def __call__(self, x: int, y) -> int:
        return self.evaluate(x, y)

    def table(self) -> np.ndarray:
        """Output table, shape ``(2**n, num_seeds)``; computed once."""
        if self._table is None:
            tab = np.empty((self.num_sources, self.num_seeds), dtype=np.int64)
            for j, y in enumerate(self.seeds):
                for x in range(self.num_sources):
                    tab[x, j] = self.evaluate(x, y)
            if tab.size and (tab.min() < 0 or tab.max() >= self.num_outputs):
                raise ValueError(f"{self.family}: evaluator left the declared output range")
            tab.setflags(write=False)
            self._table = tab
        return self._table

    def onehot(self) -> np.ndarray:
        """Indicator array ``[x, y, z] = 1{E(x, y) = z}`` as floats."""
        tab = self.table()
        out = np.zeros(tab.shape + (self.num_outputs,))
        np.put_along_axis(out, tab[..., None], 1.0, axis=-1)
        return out

    def descriptor(self) -> dict:
        """JSON-serialisable description sufficient to rebuild the extractor."""
        d = {
            "family": self.family,
            "n": self.n,
            "m": self.m,
            "L": self.params.get("L", 1),
            "seed_domain": self.seed_domain,
            "locality": self.locality,
        }
        for key, val in self.params.items():
            if key != "L":
                d[key] = val
        return d


def ip_extractor(n: int) -> ExtractorSpec:
    """Inner product modulo 2 with an ``n``-bit seed."""
    if not 1 <= n <= MAX_SOURCE_BITS:
        raise ValueError(f"n must lie in 1..{MAX_SOURCE_BITS}")
    return ExtractorSpec(
        family="ip",
        n=n,
        m=1,
        seeds=tuple(range(1 << n)),
        evaluate=lambda x, y: bin(x & y).count("1") & 1,
        locality=n,
        positions=lambda y: tuple(range(1, n + 1)),
        seed_domain="bits",
    )


def _check_pair(pair, n: int) -> tuple[int, int]:
    a, b = pair
    if a == b:
        raise ValueError(f"malformed seed {pair!r}: repeated index")
    if not (1 <= a <= n and 1 <= b <= n):
        raise ValueError(f"malformed seed {pair!r}: index out of range")
    return a, b


def pair_xor(n: int) -> ExtractorSpec:
    """``x_{y1} XOR x_{y2}`` over unordered pairs of distinct positions."""
    if not 2 <= n <= MAX_SOURCE_BITS:
        raise ValueError(f"n must lie in 2..{MAX_SOURCE_BITS}")
    seeds = tuple(itertools.combinations(range(1, n + 1), 2))

    def evaluate(x, y):
        a, b = _check_pair(y, n)
        return bit(x, a, n) ^ bit(x, b, n)

    return ExtractorSpec("pair_xor", n, 1, seeds, evaluate, locality=2,
                         positions=lambda y: tuple(y), seed_domain="pairs")


def disjoint_pair_tuples(n: int, m: int) -> tuple:
    """Ordered ``m``-tuples of pairwise disjoint unordered pairs from ``1..n``."""
    pairs = list(itertools.combinations(range(1, n + 1), 2))
    out = []
    for combo in itertools.permutations(pairs, m):
        used = [i for p in combo for i in p]
        if len(set(used)) == len(used):
            out.append(combo)
    return tuple(out)


def pair_xor_tuples(n: int, m: int) -> ExtractorSpec:
    """The pair-XOR function applied to ``m`` disjoint pairs, giving ``m`` bits."""
    if 2 * m > n:
        raise ValueError("need 2m <= n")
    if not 2 <= n <= MAX_SOURCE_BITS:
        raise ValueError(f"n must lie in 2..{MAX_SOURCE_BITS}")
    seeds = disjoint_pair_tuples(n, m)

    def evaluate(x, y):
        used = [i for p in y for i in p]
        if len(set(used)) != len(used):
            raise ValueError(f"malformed seed {y!r}: repeated index")
        out = 0
        for a, b in y:
            a, b = _check_pair((a, b), n)
            out = (out << 1) | (bit(x, a, n) ^ bit(x, b, n))
        return out

    return ExtractorSpec("pair_xor_tuples", n, m, seeds, evaluate, locality=2 * m,
                         positions=lambda y: tuple(i for p in y for i in p),
                         seed_domain="disjoint_pairs")


def gf2_mul(a: int, b: int, n: int) -> int:
    """Product in GF(2^n) modulo :data:`IRREDUCIBLE` ``[n]``."""
    poly = IRREDUCIBLE[n]
    out = 0
    while b:
        if b & 1:
            out ^= a
        b >>= 1
        a <<= 1
        if a >> n:
            a ^= poly
    return out


def two_universal_hash(n: int, m: int) -> ExtractorSpec:
    """``h_y(x)`` = leading ``m`` bits of ``x * y`` in GF(2^n)."""
    if not 1 <= m <= n <= MAX_SOURCE_BITS:
        raise ValueError("need 1 <= m <= n <= 16")
    return ExtractorSpec(
        family="hash",
        n=n,
        m=m,
        seeds=tuple(range(1 << n)),
        evaluate=lambda x, y: gf2_mul(x, y, n) >> (n - m),
        locality=n,
        positions=lambda y: tuple(range(1, n + 1)),
        seed_domain="bits",
    )


def constant_extractor(n: int, m: int = 1, value: int = 0, num_seeds: int = 1) -> ExtractorSpec:
    return ExtractorSpec("constant", n, m, tuple(range(num_seeds)), lambda x, y: value,
                         locality=None, positions=lambda y: (), seed_domain="bits",
                         params={"value": value, "num_seeds": num_seeds})


def identity_extractor(n: int) -> ExtractorSpec:
    """Outputs the source itself; a single trivial seed."""
    return ExtractorSpec("identity", n, n, (0,), lambda x, y: x, locality=n,
                         positions=lambda y: tuple(range(1, n + 1)), seed_domain="trivial")


def compose_multi_seed(e: ExtractorSpec, m: int) -> ExtractorSpec:
    """``(e(x, y_1), ..., e(x, y_m))`` with ``m`` independent seeds."""
    if e.m != 1:
        raise ValueError("base extractor must output a single bit")
    if m == 1:
        return e
    seeds = tuple(itertools.product(e.seeds, repeat=m))
    col = {y: j for j, y in enumerate(e.seeds)}
    base = e.table()

    def evaluate(x, ys):
        out = 0
        for y in ys:
            out = (out << 1) | int(base[x, col[y]])
        return out

    def positions(ys):
        if e.positions is None:
            return tuple(range(1, e.n + 1))
        return tuple(sorted({p for y in ys for p in e.positions(y)}))

    loc = None if e.locality is None else min(e.n, m * e.locality)
    return ExtractorSpec("multi_seed", e.n, m, seeds, evaluate, locality=loc,
                         positions=positions, seed_domain="product",
                         params={"base": e.descriptor(), "copies": m})


def compose_blockwise(e: ExtractorSpec, m: int, L: int) -> ExtractorSpec:
    """``(E^m(x_1, y), ..., E^m(x_L, y))``: one seed tuple reused on ``L`` blocks.

    The source is ``L`` concatenated ``e.n``-bit blocks, block 1 first.
    """
    inner = compose_multi_seed(e, m)
    if L == 1:
        return inner
    nb = e.n
    n = L * nb
    if n > MAX_SOURCE_BITS:
        raise ValueError(f"L * n exceeds {MAX_SOURCE_BITS} source bits")
    col = {y: j for j, y in enumerate(inner.seeds)}
    base = inner.table()
    mask = (1 << nb) - 1

    def evaluate(x, y):
        out = 0
        j = col[y]
        for blk in range(L):
            xb = (x >> (nb * (L - 1 - blk))) & mask
            out = (out << m) | int(base[xb, j])
        return out

    def positions(y):
        inner_pos = inner.positions(y) if inner.positions else range(1, nb + 1)
        return tuple(blk * nb + p for blk in range(L) for p in inner_pos)

    loc = None if inner.locality is None else L * inner.locality
    return ExtractorSpec("blockwise", n, L * m, inner.seeds, evaluate, locality=loc,
                         positions=positions, seed_domain="product",
                         params={"base": e.descriptor(), "copies": m, "L": L})


def from_descriptor(d: dict) -> ExtractorSpec:
    """Rebuild an extractor from :meth:`ExtractorSpec.descriptor` output."""
    fam = d["family"]
    if fam == "ip":
        return ip_extractor(d["n"])
    if fam == "pair_xor":
        return pair_xor(d["n"])
    if fam == "pair_xor_tuples":
        return pair_xor_tuples(d["n"], d["m"])
    if fam == "hash":
        return two_universal_hash(d["n"], d["m"])
    if fam == "constant":
        return constant_extractor(d["n"], d["m"], d.get("value", 0), d.get("num_seeds", 1))
    if fam == "identity":
        return identity_extractor(d["n"])
    if fam == "multi_seed":
        return compose_multi_seed(from_descriptor(d["base"]), d["copies"])
    if fam == "blockwise":
        return compose_blockwise(from_descriptor(d["base"]), d["copies"], d["L"])
    raise ValueError(f"unknown extractor family {fam!r}")


def seeded_nonuniformity(extractor: ExtractorSpec, px) -> float:
    """``d(E(X,Y)|Y)`` for a source distribution ``px`` over ``0..2**n - 1``."""
    px = np.asarray(px, dtype=float)
    pz = np.einsum("x,xyz->yz", px, extractor.onehot())
    return float(0.5 * np.abs(pz - 1.0 / extractor.num_outputs).sum(axis=1).mean())


@dataclass(frozen=True)
class EpsilonWitness:
    """Largest ``d(E(X,Y)|Y)`` found over flat sources of min-entropy ``k``.

    ``mode == "exhaustive"`` means every flat source was checked and
    ``epsilon`` is the exact worst case.  ``"heuristic"`` values are only
    lower bounds on the true error.
    """

    epsilon: float
    support: tuple[int, ...]
    mode: str
    k: float

    @property
    def source(self) -> Distribution:
        size = len(self.support)
        return Distribution(self.support, np.full(size, 1.0 / size))

    @property
    def exhaustive(self) -> bool:
        return self.mode == "exhaustive"


def _flat_errors(onehot: np.ndarray, combos: np.ndarray) -> np.ndarray:
    """Errors of the flat sources whose supports are the rows of ``combos``."""
    size = combos.shape[1]
    nz = onehot.shape[-1]
    counts = onehot[combos].sum(axis=1) / size
    return 0.5 * np.abs(counts - 1.0 / nz).sum(axis=-1).mean(axis=-1)


def worst_case_epsilon(
    extractor: ExtractorSpec,
    k: float,
    budget: int = 10**6,
    *,
    restarts: int = 20,
    rng: np.random.Generator | None = None,
    chunk: int | None = None,
) -> EpsilonWitness:
    """Worst-case error of ``extractor`` over sources with ``H_min(X) >= k``.

    The error ``d(E(X,Y)|Y)`` is convex in ``P_X`` and the sources with
    ``max_x P(x) <= 2**-k`` form a polytope whose vertices are the flat
    distributions on ``2**k``-element subsets (``2**k`` integral), so the
    maximum is attained at a flat source.  If there are at most ``budget``
    subsets all of them are checked; otherwise a swap local search with
    random restarts is run and the result is marked heuristic.

    Raises
    ------
    ValueError
        If ``2**k`` is not an integer in ``1..2**n``.
    """
    size_f = 2.0 ** k
    size = int(round(size_f))
    if abs(size - size_f) > 1e-9 or not 1 <= size <= extractor.num_sources:
        raise ValueError(f"2**k = {size_f} is not an integer in 1..2**n")
    N = extractor.num_sources
    onehot = extractor.onehot()
    total = math.comb(N, size)
    if chunk is None:
        chunk = max(16, (1 << 22) // (size * onehot[0].size))
    if total <= budget:
        best = -1.0
        best_support: tuple[int, ...] = ()
        it = itertools.combinations(range(N), size)
        while True:
            block = list(itertools.islice(it, chunk))
            if not block:
                break
            combos = np.array(block, dtype=np.intp)
            errs = _flat_errors(onehot, combos)
            i = int(np.argmax(errs))
            if errs[i] > best:
                best = float(errs[i])
                best_support = tuple(int(v) for v in combos[i])
        return EpsilonWitness(best, best_support, "exhaustive", float(k))

    rng = np.random.default_rng(0) if rng is None else rng
    best = -1.0
    best_support = ()
    for _ in range(restarts):
        support = np.sort(rng.choice(N, size=size, replace=False))
        err = float(_flat_errors(onehot, support[None])[0])
        improved = True
        while improved:
            improved = False
            outside = np.setdiff1d(np.arange(N), support)
            # all single swaps at once: replace position i by value v
            cand = np.repeat(support[None], size * outside.size, axis=0)
            cand[np.arange(cand.shape[0]), np.repeat(np.arange(size), outside.size)] = np.tile(outside, size)
            errs = _flat_errors(onehot, cand)
            j = int(np.argmax(errs))
            if errs[j] > err + 1e-15:
                err = float(errs[j])
                support = np.sort(cand[j])
                improved = True
        if err > best:
            best = err
            best_support = tuple(int(v) for v in support)
    return EpsilonWitness(best, best_support, "heuristic", float(k))


def collision_probability(extractor: ExtractorSpec, x1: int, x2: int) -> float:
    """``Pr_y[E(x1, y) = E(x2, y)]`` over a uniform seed."""
    tab = extractor.table()
    return float(np.mean(tab[x1] == tab[x2]))
