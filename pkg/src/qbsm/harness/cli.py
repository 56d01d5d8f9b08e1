"""Command-line entry point: ``qbsm {check,attack,epsilon,plan,report-merge}``.

Exit status is 0 on success, 1 when a check fails and 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from .. import adversary as adv
from .. import extract, theorems
from . import planner, report
from .config import ConfigError, ExperimentConfig, PlannerParams, load_config_file, parse_scale

DEFAULT_COUNT = 20
ATTACK_MAX_N = 10
ATTACK_MAX_Q = 4
ATTACK_MAX_B = 10
EPSILON_MAX_N = 8


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument parsing


def _common(p: argparse.ArgumentParser, randomized: bool = True) -> None:
    p.add_argument("--config", help="JSON config file; command-line flags override it")
    if randomized:
        p.add_argument("--seed", type=int, help="unsigned 64-bit PRNG seed")
        p.add_argument("--scale", help="size caps, e.g. n=5,q=2,b=3,m=3,L=2")
    p.add_argument("--tol", type=float, help="tolerance override")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=("json", "csv"), help="output format (default json)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qbsm", description="Numerical checks for extractors "
                                     "against quantum storage.")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("check", help="run registry checks on generated cases")
    _common(p)
    p.add_argument("--checks", help="comma-separated check ids (default: all; empty string: none)")
    p.add_argument("--count", type=int, help=f"cases per check (default {DEFAULT_COUNT})")
    p.add_argument("--jobs", type=int, help="worker processes (default 1)")

    p = sub.add_parser("attack", help="classical vs quantum storage attacks on one extractor")
    _common(p)
    p.add_argument("--extractor", help="e.g. pair_xor_tuples:8:2, ip:4, hash:4:2, or a JSON descriptor")
    p.add_argument("--bits", help="classical storage sizes b, comma-separated (default 0)")
    p.add_argument("--qubits", help="quantum storage sizes q, comma-separated (default 0)")
    p.add_argument("--encoders", help="quantum encoder families: gkw,orthogonal,seesaw,random_pure "
                                      "(default orthogonal,seesaw)")
    p.add_argument("--restarts", type=int, help="random restarts of the searches (default 8)")

    p = sub.add_parser("epsilon", help="worst-case extractor error for a list of min-entropies")
    _common(p, randomized=False)
    p.add_argument("--seed", type=int, help="seed for the heuristic search on large instances")
    p.add_argument("--extractor", help="extractor spec as for attack")
    p.add_argument("--k", help="comma-separated integer min-entropies (default 0..n)")
    p.add_argument("--budget", type=int, help="flat-source enumeration budget (default 1e6)")

    p = sub.add_parser("plan", help="evaluate parameter formulas with chosen constants")
    _common(p, randomized=False)
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--k", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--log-inv-eps", type=float, help="alternative to --eps: log2(1/eps)")
    p.add_argument("--d", type=int, help="adversary qubits")
    p.add_argument("--alpha", type=float, help="min-entropy rate")
    p.add_argument("--beta", type=float, help="storage rate")
    p.add_argument("--L", type=int, help="number of blocks")
    p.add_argument("--constants", help="big-O constants, e.g. C=1 or C_t=0,C_ell=0,C_log_n=2")

    p = sub.add_parser("report-merge", help="merge JSON check reports")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--out")
    p.add_argument("--format", choices=("json", "csv"))
    return parser


def _merged(args: argparse.Namespace, keys: tuple[str, ...]) -> dict:
    data = load_config_file(getattr(args, "config", None))
    for key in keys:
        val = getattr(args, key, None)
        if val is not None:
            data[key] = val
    return data


def _make_config(sub: str, data: dict, param_keys: tuple[str, ...]) -> ExperimentConfig:
    try:
        seed = data.get("seed")
        return ExperimentConfig(
            subcommand=sub,
            seed=None if seed is None else int(seed),
            scale=parse_scale(data.get("scale")),
            tol=None if data.get("tol") is None else float(data["tol"]),
            out=data.get("out"),
            format=data.get("format", "json"),
            params={k: data[k] for k in param_keys if k in data},
        )
    except (TypeError, ValueError) as ex:
        if isinstance(ex, ConfigError):
            raise
        raise ConfigError(str(ex)) from None


def _int_list(text, name: str) -> list[int]:
    if text is None:
        return []
    if isinstance(text, (list, tuple)):
        items = list(text)
    else:
        items = [t for t in str(text).split(",") if t.strip()]
    out = []
    for t in items:
        try:
            v = float(t)
        except (TypeError, ValueError):
            raise ConfigError(f"{name}: {t!r} is not a number") from None
        if v != int(v):
            raise ConfigError(f"{name}: {t!r} is not an integer")
        out.append(int(v))
    return out


def parse_extractor(spec) -> extract.ExtractorSpec:
    """``family:n[:m]`` or a JSON descriptor (string or dict)."""
    if spec is None:
        raise ConfigError("an extractor is required")
    if isinstance(spec, dict):
        desc = spec
    elif str(spec).lstrip().startswith("{"):
        try:
            desc = json.loads(spec)
        except json.JSONDecodeError as ex:
            raise ConfigError(f"bad extractor descriptor: {ex}") from None
    else:
        parts = str(spec).split(":")
        try:
            nums = [int(p) for p in parts[1:]]
        except ValueError:
            raise ConfigError(f"bad extractor spec {spec!r}") from None
        fam = parts[0]
        if not nums:
            raise ConfigError(f"extractor spec {spec!r} needs a source length")
        desc = {"family": fam, "n": nums[0], "m": nums[1] if len(nums) > 1 else 1}
    try:
        return extract.from_descriptor(desc)
    except (KeyError, ValueError, TypeError) as ex:
        raise ConfigError(f"cannot build extractor {desc}: {ex}") from None


# ---------------------------------------------------------------------------
# output


def _write(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _emit_report(cfg: ExperimentConfig, rep: dict, csv_text: str) -> None:
    if cfg.format == "csv":
        _write(csv_text, cfg.out)
        return
    _write(report.dumps(rep) + "\n", cfg.out)
    if cfg.out is not None:
        stem = cfg.out[:-5] if cfg.out.endswith(".json") else cfg.out
        _write(csv_text, stem + ".csv")


# ---------------------------------------------------------------------------
# check


def _run_one(check_id: str, index: int, scale, seed: int, options: dict, tol) -> dict:
    case = theorems.gen_case(check_id, index, scale, seed, options)
    try:
        res = theorems.run_check(check_id, case, tol)
    except theorems.Unverifiable as ex:
        return {"check_id": check_id, "index": index, "status": "rejected", "reason": str(ex),
                "params": case.params}
    rec = report.check_result_record(res, res.sound_sides)
    rec["params"] = case.params
    return rec


def _select_checks(raw) -> list[str]:
    if raw is None:
        return list(theorems.CHECK_IDS)
    ids = [c.strip() for c in (raw.split(",") if isinstance(raw, str) else raw) if c.strip()]
    unknown = [c for c in ids if c not in theorems.REGISTRY]
    if unknown:
        raise ConfigError(f"unknown check ids {unknown}; known: {list(theorems.CHECK_IDS)}")
    return ids


def cmd_check(args) -> int:
    data = _merged(args, ("seed", "scale", "tol", "out", "format", "checks", "count", "jobs"))
    cfg = _make_config("check", data, ("checks", "count", "jobs", "options"))
    seed = cfg.require_seed()
    ids = _select_checks(data.get("checks"))
    count = int(data.get("count", DEFAULT_COUNT))
    jobs = int(data.get("jobs", 1))
    if count < 0 or jobs < 1:
        raise ConfigError("count must be >= 0 and jobs >= 1")
    options = data.get("options", {})
    tasks = [(cid, i, cfg.scale, seed, options.get(cid, {}), cfg.tol) for cid in ids for i in range(count)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run_one, *zip(*tasks), chunksize=4))
    else:
        records = [_run_one(*t) for t in tasks]
    records.sort(key=lambda r: (r["check_id"], r["index"]))
    summary = report.summarise(records)
    echo = dict(cfg.echo(), params={"checks": ids, "count": count, "options": options})
    tolerances = {"inequality": theorems.INEQUALITY_TOL, "equality": theorems.EQUALITY_TOL, "override": cfg.tol}
    rep = report.envelope("check", echo, {"tolerances": tolerances, "results": records, "summary": summary})
    _emit_report(cfg, rep, report.summary_csv(summary))
    failed = sum(s["fail"] for s in summary.values())
    return 1 if failed else 0


# ---------------------------------------------------------------------------
# attack


def attack_table(e: extract.ExtractorSpec, bits, qubits, encoders, rng, restarts: int = 8) -> list[dict]:
    """Rows of attack values: baseline, classical ``b``, quantum ``q``, full storage."""
    px = np.full(e.num_sources, 1.0 / e.num_sources)
    rows = [{"adversary": "none", "size": 0, "strategy": "no storage",
             "value": report.quantity(extract.seeded_nonuniformity(e, px), "exact")}]
    for b in bits:
        enc, res = adv.best_classical_encoder(e, px, b, restarts=restarts, rng=rng)
        rows.append({"adversary": "classical", "size": b, "strategy": res.strategy,
                     "value": report.quantity(res.value, "exhaustive" if res.exact else "heuristic-lower-bound")})
    for q in qubits:
        for fam in encoders:
            if q == 0:
                enc = adv.trivial_encoder(e.num_sources)
                rows.append({"adversary": "quantum", "size": 0, "strategy": "no storage",
                             "value": report.quantity(adv.quantum_attack_eval(e, px, enc).value, "exact")})
                break
            if fam == "gkw":
                enc = adv.gkw_encoder(e.n)
                if enc.q != q:
                    continue
                res, flag = adv.quantum_attack_eval(e, px, enc), "exact"
            elif fam == "orthogonal":
                res, flag = adv.quantum_attack_eval(e, px, adv.orthogonal_encoder(e.num_sources, q)), "exact"
            elif fam == "random_pure":
                res, flag = adv.quantum_attack_eval(e, px, adv.random_pure_encoder(e.num_sources, q, rng)), "exact"
            elif fam == "seesaw":
                init = [adv.gkw_encoder(e.n)] if adv.gkw_encoder(e.n).q == q else []
                _, res = adv.seesaw_optimize_encoder(e, px, q, restarts=max(restarts // 2, 2), rng=rng,
                                                     initial=init)
                flag = "heuristic-lower-bound"
            else:
                raise ConfigError(f"unknown encoder family {fam!r}")
            rows.append({"adversary": "quantum", "size": q, "strategy": f"{fam} q={q}",
                         "value": report.quantity(res.value, flag)})
    rows.append({"adversary": "full", "size": e.n, "strategy": "stores X",
                 "value": report.quantity(adv.full_storage_value(e, px), "exact")})
    return rows


def cmd_attack(args) -> int:
    data = _merged(args, ("seed", "scale", "tol", "out", "format", "extractor", "bits", "qubits",
                          "encoders", "restarts"))
    cfg = _make_config("attack", data, ("extractor", "bits", "qubits", "encoders", "restarts"))
    seed = cfg.require_seed()
    e = parse_extractor(data.get("extractor"))
    bits = _int_list(data.get("bits", "0"), "bits")
    qubits = _int_list(data.get("qubits", "0"), "qubits")
    encs = data.get("encoders", "orthogonal,seesaw")
    encs = [s.strip() for s in (encs.split(",") if isinstance(encs, str) else encs) if s.strip()]
    restarts = int(data.get("restarts", 8))
    if e.n > ATTACK_MAX_N:
        raise ConfigError(f"scale overflow: attack tables need n <= {ATTACK_MAX_N}")
    if any(b < 0 or b > min(ATTACK_MAX_B, e.n) for b in bits):
        raise ConfigError(f"scale overflow: b must lie in 0..{min(ATTACK_MAX_B, e.n)}")
    qcap = min(ATTACK_MAX_Q, cfg.scale.q if "scale" in data else ATTACK_MAX_Q)
    if any(q < 0 or q > qcap for q in qubits):
        raise ConfigError(f"scale overflow: q must lie in 0..{qcap}")
    rng = np.random.default_rng(seed)
    rows = attack_table(e, bits, qubits, encs, rng, restarts)
    rep = report.envelope("attack", dict(cfg.echo(), params={"extractor": e.descriptor(), "bits": bits,
                                                             "qubits": qubits, "encoders": encs,
                                                             "restarts": restarts}), {"rows": rows})
    _emit_report(cfg, rep, report.rows_csv(rows, ["adversary", "size", "strategy", "value"]))
    return 0


# ---------------------------------------------------------------------------
# epsilon


def epsilon_table(e: extract.ExtractorSpec, ks, budget: int, rng) -> tuple[list[dict], bool]:
    rows = []
    for k in ks:
        if not 0 <= k <= e.n:
            raise ConfigError(f"k = {k} outside 0..{e.n}")
        wit = extract.worst_case_epsilon(e, k, budget, rng=rng)
        rows.append({"k": k, "epsilon": report.quantity(wit.epsilon, "exhaustive" if wit.exhaustive
                                                         else "heuristic-lower-bound"),
                     "mode": wit.mode, "witness_support": list(wit.support)})
    # exhaustive values must be non-increasing in k
    exact = sorted((r["k"], r["epsilon"]["value"]) for r in rows if r["epsilon"]["exactness"] == "exhaustive")
    monotone = all(a[1] >= b[1] - 1e-12 for a, b in zip(exact, exact[1:]))
    return rows, monotone


def cmd_epsilon(args) -> int:
    data = _merged(args, ("seed", "tol", "out", "format", "extractor", "k", "budget"))
    cfg = _make_config("epsilon", data, ("extractor", "k", "budget"))
    e = parse_extractor(data.get("extractor"))
    if e.n > EPSILON_MAX_N:
        raise ConfigError(f"scale overflow: epsilon tables need n <= {EPSILON_MAX_N}")
    ks = _int_list(data["k"], "k") if "k" in data else list(range(e.n + 1))
    budget = int(data.get("budget", 10**6))
    rng = np.random.default_rng(0 if cfg.seed is None else cfg.seed)
    rows, monotone = epsilon_table(e, ks, budget, rng)
    rep = report.envelope("epsilon", dict(cfg.echo(), params={"extractor": e.descriptor(), "k": ks,
                                                              "budget": budget}),
                          {"rows": rows, "monotone": monotone})
    _emit_report(cfg, rep, report.rows_csv(rows, ["k", "epsilon", "mode"]))
    return 0 if monotone else 1


# ---------------------------------------------------------------------------
# plan


def _constants(text) -> dict:
    if text is None:
        return {"C": 1.0}
    if isinstance(text, dict):
        return {k: float(v) for k, v in text.items()}
    out = {}
    for part in filter(None, (p.strip() for p in str(text).split(","))):
        if "=" not in part:
            raise ConfigError(f"constants look like name=value, got {part!r}")
        k, v = part.split("=", 1)
        try:
            out[k.strip()] = float(v)
        except ValueError:
            raise ConfigError(f"constant {k} must be a number") from None
    return out


def cmd_plan(args) -> int:
    keys = ("tol", "out", "format", "n", "m", "k", "eps", "log_inv_eps", "d", "alpha", "beta", "L", "constants")
    data = _merged(args, keys)
    cfg = _make_config("plan", data, keys[3:])
    if "n" not in data:
        raise ConfigError("plan needs --n")
    if "eps" in data and "log_inv_eps" in data:
        raise ConfigError("give --eps or --log-inv-eps, not both")
    eps = 2.0 ** -float(data["log_inv_eps"]) if "log_inv_eps" in data else float(data.get("eps", 2.0 ** -10))
    params = PlannerParams(n=int(data["n"]), m=int(data.get("m", 1)), eps=eps,
                           k=None if data.get("k") is None else float(data["k"]), d=int(data.get("d", 0)),
                           alpha=data.get("alpha"), beta=data.get("beta"), L=int(data.get("L", 1)),
                           constants=_constants(data.get("constants")))
    result = planner.plan(params)
    rows = []
    for name, values in result.items():
        for key, val in values.items():
            if isinstance(val, float):
                rows.append({"formula": name, "quantity": key, "value": report.quantity(val, planner.FORMULA)})
            else:
                rows.append({"formula": name, "quantity": key, "value": val})
    body = {"rows": rows, "note": "formula evaluations with chosen constants; not security guarantees"}
    rep = report.envelope("plan", dict(cfg.echo(), params={"n": params.n, "m": params.m, "eps": params.eps,
                                                           "k": params.k, "d": params.d, "alpha": params.alpha,
                                                           "beta": params.beta, "L": params.L,
                                                           "constants": params.constants}), body)
    _emit_report(cfg, rep, report.rows_csv(rows, ["formula", "quantity", "value"]))
    return 0


# ---------------------------------------------------------------------------
# report-merge


def cmd_merge(args) -> int:
    reports = []
    for path in args.inputs:
        try:
            with open(path, encoding="utf-8") as fh:
                reports.append(json.load(fh))
        except (OSError, json.JSONDecodeError) as ex:
            raise ConfigError(f"cannot read report {path}: {ex}") from None
    try:
        merged = report.merge_check_reports(reports)
    except (KeyError, ValueError) as ex:
        raise ConfigError(str(ex)) from None
    cfg = ExperimentConfig("report-merge", out=args.out, format=args.format or "json")
    _emit_report(cfg, merged, report.summary_csv(merged["summary"]))
    failed = sum(s["fail"] for s in merged["summary"].values())
    return 1 if failed else 0


COMMANDS = {"check": cmd_check, "attack": cmd_attack, "epsilon": cmd_epsilon, "plan": cmd_plan,
            "report-merge": cmd_merge}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as ex:
        return 0 if ex.code == 0 else 2
    try:
        return COMMANDS[args.subcommand](args)
    except ConfigError as ex:
        print(f"qbsm {args.subcommand}: error: {ex}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
