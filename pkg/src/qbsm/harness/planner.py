"""Parameter planner for the extractor constructions.

All outputs are evaluations of asymptotic formulas with user-chosen values
for the unspecified constants.  They are labelled ``asymptotic-formula`` in
reports and are not security guarantees.
"""

from __future__ import annotations

import math

from .config import PlannerParams

FORMULA = "asymptotic-formula"


def _c(params: PlannerParams, name: str) -> float:
    return float(params.constants.get(name, params.constants.get("C", 1.0)))


def local_extractor_plan(params: PlannerParams) -> dict:
    """Seed length ``t`` and locality ``ell`` of the m-bit local construction.

    ``t = m log n + C (m log m + m log 1/eps)`` and
    ``ell = 1.5 n m / (k - m - 2 log 1/eps) + C (m log m + m log 1/eps)``.
    ``ell`` is ``None`` when the denominator is not positive (or ``k`` is
    unknown).
    """
    n, m = params.n, params.m
    log_eps = math.log2(1.0 / params.eps)
    overhead = m * math.log2(m) + m * log_eps
    t = m * math.log2(n) + _c(params, "C_t") * overhead
    k = params.effective_k
    ell = None
    if k is not None:
        denom = k - m - 2 * log_eps
        if denom > 0:
            ell = 1.5 * n * m / denom + _c(params, "C_ell") * overhead
    return {"t": t, "ell": ell, "k": k, "requires_k_above": m + 2 * log_eps}


def hashing_plan(params: PlannerParams) -> dict:
    """Privacy amplification against ``d`` qubits with a two-universal-style extractor.

    Seed ``t = 4 (d + m + log 1/eps + 3) + C log n``; requirement
    ``H_min(X) >= m + 4 d + 3 log 1/eps + 8``.
    """
    log_eps = math.log2(1.0 / params.eps)
    seed_core = 4 * (params.d + params.m + log_eps + 3)
    t = seed_core + _c(params, "C_log_n") * math.log2(params.n)
    h_min = params.m + 4 * params.d + 3 * log_eps + 8
    available = None if params.alpha is None else params.alpha * params.n
    return {"t": t, "t_without_log_n": seed_core, "h_min_required": h_min,
            "h_min_available": available,
            "satisfied": None if available is None else bool(available >= h_min)}


def blockwise_plan(params: PlannerParams) -> dict:
    """Seed reuse over ``L`` blocks: ``t = m C (log n + log L + log 1/eps)`` and
    bits read ``m C (log m + log L + log 1/eps)``."""
    log_eps = math.log2(1.0 / params.eps)
    c = _c(params, "C_block")
    t = params.m * c * (math.log2(params.n) + math.log2(params.L) + log_eps)
    reads = params.m * c * (math.log2(params.m) + math.log2(params.L) + log_eps)
    return {"t": t, "bits_read": reads, "output_bits": params.L * params.m}


def plan(params: PlannerParams) -> dict:
    return {
        "local_extractor": local_extractor_plan(params),
        "hashing": hashing_plan(params),
        "blockwise": blockwise_plan(params),
    }
