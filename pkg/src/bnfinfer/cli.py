"""Command-line entry point: solve, evaluate, validate, construct.

Every option can also come from a JSON config file (``--config``) whose keys
are the option names with dashes replaced by underscores; explicit flags win.
Exit codes: 0 success, 1 failed/unsolved/violations, 2 usage or config error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

from . import __version__
from .baselines import OpfConfig, run_dp, run_opf
from .challenges import (DatasetError, construct_dataset, dump_dataset, dump_queue, load_dataset,
                         validate_dataset)
from .bnf import print_bnf
from .evolution import GaConfig, run_hygenar
from .llm import Gateway, HttpBackend, ScriptedBackend
from .metrics import ChallengeResult, aggregate, format_table, score
from .recognizer import accepts_or_reject

log = logging.getLogger("bnfinfer")

METHODS = ("dp", "opf", "hygenar")

DEFAULTS = {
    "method": "hygenar",
    "dataset": None,
    "backend": "mock",
    "endpoint": "http://127.0.0.1:8089/v1",
    "model": "",
    "token_env": None,
    "script": None,
    "temperature": None,  # per-method default when unset
    "max_tokens": 2000,
    "seed": 0,
    "population": 10,
    "generations": 5,
    "crossover_rate": 0.7,
    "mutation_rate": 0.3,
    "max_turns": 5,
    "parallel": 1,
    "out_dir": None,
    "retries": 3,
    "k_min": 1,
    "k_max": 9,
    "grammars_per_k": 10,
    "challenges_per_grammar": 6,
    "examples": 3,
}

METHOD_TEMPERATURE = {"dp": 0.0, "opf": 0.3, "hygenar": 0.7}


class UsageError(Exception):
    pass


def bundled_dataset() -> Path:
    return Path(str(resources.files("bnfinfer") / "data" / "sample_challenges.jsonl"))


def _settings(args) -> dict:
    cfg = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        unknown = sorted(set(cfg) - set(DEFAULTS))
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    out = {}
    for key, default in DEFAULTS.items():
        flag = getattr(args, key, None)
        out[key] = flag if flag is not None else cfg.get(key, default)
    if out["method"] not in METHODS:
        raise UsageError(f"unknown method {out['method']!r}")
    if out["backend"] not in ("http", "mock"):
        raise UsageError(f"unknown backend {out['backend']!r}")
    if out["temperature"] is None:
        out["temperature"] = METHOD_TEMPERATURE[out["method"]]
    if out["parallel"] < 1:
        raise UsageError("--parallel must be at least 1")
    return out


def _gateway(s: dict, artifacts_dir) -> Gateway:
    if s["backend"] == "mock":
        if not s["script"]:
            raise UsageError("the mock backend needs --script")
        try:
            backend = ScriptedBackend.from_file(s["script"])
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot load mock script: {exc}") from None
    else:
        backend = HttpBackend(s["endpoint"], token_env=s["token_env"], retries=s["retries"],
                              max_in_flight=max(1, s["parallel"]))
    return Gateway(backend, s["model"], artifacts_dir)


def _ga_config(s: dict, seed: int) -> GaConfig:
    try:
        return GaConfig(population_size=s["population"], generations=s["generations"],
                        crossover_rate=s["crossover_rate"], mutation_rate=s["mutation_rate"],
                        rng_seed=seed, temperature=s["temperature"], max_tokens=s["max_tokens"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _opf_config(s: dict) -> OpfConfig:
    try:
        return OpfConfig(s["max_turns"], s["temperature"], s["max_tokens"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def challenge_seed(seed: int, cid: str) -> int:
    digest = hashlib.sha256(f"{seed}:{cid}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _run_method(s: dict, positives, negatives, llm, seed: int):
    method = s["method"]
    if method == "dp":
        return run_dp(positives, negatives, llm, temperature=s["temperature"], max_tokens=s["max_tokens"])
    if method == "opf":
        return run_opf(positives, negatives, _opf_config(s), llm)
    return run_hygenar(positives, negatives, _ga_config(s, seed), llm)


def _config_snapshot(s: dict) -> dict:
    snap = {k: s[k] for k in ("method", "backend", "model", "temperature", "max_tokens", "seed", "parallel")}
    if s["method"] == "hygenar":
        snap["ga"] = asdict(_ga_config(s, s["seed"]))
    elif s["method"] == "opf":
        snap["opf"] = asdict(_opf_config(s))
    snap["backend_detail"] = ({"script": s["script"]} if s["backend"] == "mock"
                              else {"endpoint": s["endpoint"], "token_env": s["token_env"]})
    return snap


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")


def _now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%S%z")


def _read_examples(path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [ln.rstrip("\r\n") for ln in fh if ln.strip()]


# -- commands ----------------------------------------------------------------

def cmd_solve(args) -> int:
    s = _settings(args)
    positives = list(args.positive or [])
    negatives = list(args.negative or [])
    try:
        if args.positives_file:
            positives += _read_examples(args.positives_file)
        if args.negatives_file:
            negatives += _read_examples(args.negatives_file)
    except OSError as exc:
        raise UsageError(str(exc)) from None
    if not positives or not negatives:
        raise UsageError("solve needs at least one positive and one negative example")
    if set(positives) & set(negatives):
        raise UsageError("positive and negative examples overlap")
    out_dir = Path(s["out_dir"]) if s["out_dir"] else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
    llm = _gateway(s, out_dir)
    result = _run_method(s, positives, negatives, llm, s["seed"])
    best = result.best
    g = best.grammar
    print(print_bnf(g) if g is not None else best.source_text or "(no grammar)")
    print()
    print(f"fitness: {best.fitness}/{len(positives) + len(negatives)}")
    if best.error:
        print(f"error: {best.error}")
    solved = best.fitness == len(positives) + len(negatives)
    for label, want, xs in (("positive", True, positives), ("negative", False, negatives)):
        for x in xs:
            got = best.fitness >= 0 and accepts_or_reject(g, x)
            mark = "ok" if got == want else "WRONG"
            print(f"  {label:8}  {'accept' if got else 'reject':6}  {mark:5}  {x!r}")
    if out_dir:
        (out_dir / "run_log.jsonl").write_text(
            "".join(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n" for r in result.log),
            encoding="utf-8")
    return 0 if solved else 1


def _evaluate_one(s: dict, gateway: Gateway, c):
    llm = gateway.bind(c.id)
    seed = challenge_seed(s["seed"], c.id)
    res = _run_method(s, list(c.positives), list(c.negatives), llm, seed)
    cand = res.best
    outcome = score(ChallengeResult(c.reference, c.positives, c.negatives, cand.source_text,
                                    cand.grammar if cand.fitness >= 0 else None, c.id))
    return res, outcome


def _result_record(c, res, outcome, method: str) -> dict:
    q = outcome.quality
    return {
        "id": c.id, "method": method, "k": c.k,
        "groups": outcome.groups,
        "fitness": res.best.fitness, "sx": outcome.sx, "se": outcome.se,
        "grammar": res.best.source_text,
        "error": res.best.error,
        "diff": q.diff if q else None, "overfit": q.overfit if q else None,
        "overgen": q.overgen if q else None, "tu": q.tu if q else None,
        "ref_used": q.ref_used if q else None, "cand_used": q.cand_used if q else None,
        "llm_calls": res.llm_calls, "stopped_generation": res.stopped_generation,
    }


def cmd_evaluate(args) -> int:
    s = _settings(args)
    dataset = Path(s["dataset"]) if s["dataset"] else bundled_dataset()
    if not s["out_dir"]:
        raise UsageError("evaluate needs --out-dir")
    try:
        raw = dataset.read_bytes()
        challenges = load_dataset(dataset)
    except OSError as exc:
        raise UsageError(f"cannot read dataset: {exc}") from None
    except DatasetError as exc:
        print(exc, file=sys.stderr)
        return 1
    report = validate_dataset(challenges)
    if not report.clean:
        print(report.render(), file=sys.stderr)
        print("dataset has violations; nothing was run", file=sys.stderr)
        return 1
    out_dir = Path(s["out_dir"])
    logs_dir = out_dir / "logs"
    logs_dir.mkdir(parents=True, exist_ok=True)
    started = _now()
    gateway = _gateway(s, out_dir)
    with ThreadPoolExecutor(max_workers=s["parallel"]) as pool:
        pairs = list(pool.map(lambda c: _evaluate_one(s, gateway, c), challenges))
    records = []
    for c, (res, outcome) in zip(challenges, pairs):
        records.append(_result_record(c, res, outcome, s["method"]))
        (logs_dir / f"{c.id}.jsonl").write_text(
            "".join(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n" for r in res.log),
            encoding="utf-8")
    (out_dir / "results.jsonl").write_text(
        "".join(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n" for r in records),
        encoding="utf-8")
    outcomes = [o for _, o in pairs]
    tables = {
        "all": aggregate(outcomes),
        "by_nonterminals": aggregate(outcomes, "by_nonterminals"),
        "by_productions": aggregate(outcomes, "by_productions"),
    }
    _write_json(out_dir / "metrics.json", {k: [r.to_record() for r in v] for k, v in tables.items()})
    _write_json(out_dir / "manifest.json", {
        "command": "evaluate", "version": __version__,
        "config": _config_snapshot(s),
        "dataset": {"path": str(dataset), "sha256": hashlib.sha256(raw).hexdigest()},
        "rng_seed": s["seed"], "started_at": started, "finished_at": _now(),
        "llm_calls": gateway.calls,
    })
    print(format_table(tables["all"], f"method: {s['method']}  challenges: {len(challenges)}"))
    print()
    print(format_table(tables["by_nonterminals"], "by non-terminal count"))
    print()
    print(format_table(tables["by_productions"], "by production count"))
    return 0


def cmd_validate(args) -> int:
    dataset = Path(args.dataset) if args.dataset else bundled_dataset()
    try:
        challenges = load_dataset(dataset)
    except OSError as exc:
        raise UsageError(f"cannot read dataset: {exc}") from None
    except DatasetError as exc:
        print(exc)
        return 1
    report = validate_dataset(challenges)
    print(report.render())
    return 0 if report.clean else 1


def cmd_construct(args) -> int:
    s = _settings(args)
    if not s["out_dir"]:
        raise UsageError("construct needs --out-dir")
    if not 1 <= s["k_min"] <= s["k_max"] <= 9:
        raise UsageError("need 1 <= --k-min <= --k-max <= 9")
    out_dir = Path(s["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    gateway = _gateway(s, out_dir)
    started = _now()
    built = construct_dataset(gateway, range(s["k_min"], s["k_max"] + 1), s["grammars_per_k"],
                              s["challenges_per_grammar"], s["examples"])
    dump_dataset(built.draft, out_dir / "draft.jsonl")
    dump_queue(built.queue, out_dir / "correction_queue.jsonl")
    _write_json(out_dir / "manifest.json", {
        "command": "construct", "version": __version__,
        "config": {k: s[k] for k in ("backend", "model", "k_min", "k_max", "grammars_per_k",
                                     "challenges_per_grammar", "examples")},
        "rng_seed": s["seed"], "started_at": started, "finished_at": _now(),
        "llm_calls": gateway.calls,
    })
    print(f"grammars attempted: {built.grammars_attempted}")
    print(f"challenges attempted: {built.challenges_attempted}")
    print(f"draft challenges: {len(built.draft)}")
    print(f"queued for correction: {len(built.queue)}")
    return 0


# -- parser ------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    # defaults stay None so config-file values can show through
    p.add_argument("--config", help="JSON file with default option values")
    p.add_argument("--backend", choices=("http", "mock"))
    p.add_argument("--endpoint", help="base URL of an OpenAI-style chat endpoint")
    p.add_argument("--model")
    p.add_argument("--token-env", help="environment variable holding the bearer token")
    p.add_argument("--script", help="JSONL response script for the mock backend")
    p.add_argument("--temperature", type=float)
    p.add_argument("--max-tokens", type=int)
    p.add_argument("--retries", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir")
    p.add_argument("-v", "--verbose", action="store_true")


def _add_method(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--population", type=int)
    p.add_argument("--generations", type=int)
    p.add_argument("--crossover-rate", type=float)
    p.add_argument("--mutation-rate", type=float)
    p.add_argument("--max-turns", type=int)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bnfinfer", description="Infer BNF grammars from examples.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="infer a grammar for one example set")
    _add_common(p)
    _add_method(p)
    p.add_argument("--positive", action="append", help="positive example (repeatable)")
    p.add_argument("--negative", action="append", help="negative example (repeatable)")
    p.add_argument("--positives-file", help="one positive example per line")
    p.add_argument("--negatives-file", help="one negative example per line")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("evaluate", help="run a method over a dataset and report metrics")
    _add_common(p)
    _add_method(p)
    p.add_argument("--dataset", help="challenge file (default: bundled sample)")
    p.add_argument("--parallel", type=int, help="challenges run concurrently (default 1)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("validate", help="check a dataset against its reference grammars")
    p.add_argument("--dataset", help="challenge file (default: bundled sample)")
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("construct", help="draft a dataset with an LLM")
    _add_common(p)
    p.add_argument("--k-min", type=int)
    p.add_argument("--k-max", type=int)
    p.add_argument("--grammars-per-k", type=int)
    p.add_argument("--challenges-per-grammar", type=int)
    p.add_argument("--examples", type=int, help="examples per side (default 3)")
    p.set_defaults(func=cmd_construct)
    return ap


def main(argv: Optional[list[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"bnfinfer {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
