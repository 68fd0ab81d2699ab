"""Command-line front end.

Subcommands: eval | reward | serve | sft-filter | sim. Settings resolve as
flags > SQLSCORE_* environment variables > --config file > defaults, and all
streaming JSON I/O is line-delimited.

Exit codes: 0 success, 1 usage or configuration error, 2 dataset defect,
3 infrastructure failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from .errors import (
    DatabaseConnectionError,
    DbNotFound,
    GoldExecutionError,
    SqlScoreError,
)
from .grpo import GrpoConfig, GroupSample, advantages, grpo_objective, simulate_training
from .harness import DatabaseRegistry, EngineKind, TimingConfig
from .metrics import (
    EvalRecord,
    aggregate,
    evaluate_records,
    sft_filter,
    write_per_record_csv,
)
from .reward import GoldRecord, RewardScorer, RewardWeights
from .similarity import DEFAULT_ALPHA, DEFAULT_TAU

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATASET = 2
EXIT_INFRA = 3

ENV_PREFIX = "SQLSCORE_"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; the exit-code contract wants 1.
    def error(self, message):
        raise UsageError(message)


@dataclasses.dataclass
class RunConfig:
    dataset: Optional[str] = None
    db_manifest: Optional[str] = None
    engine: str = "sqlite"
    tau: float = DEFAULT_TAU
    alpha: float = DEFAULT_ALPHA
    warmup: int = 1
    runs: int = 5
    timeout: float = 30.0
    out: Optional[str] = None
    jobs: int = 1
    seed: int = 0

    def to_json_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_json_dict(cls, doc: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)

    def timing(self) -> TimingConfig:
        return TimingConfig(warmup_runs=self.warmup, measured_runs=self.runs,
                            timeout_s=self.timeout)


_CONFIG_FIELDS = [f.name for f in dataclasses.fields(RunConfig)]


def _load_config(args) -> RunConfig:
    """Merge defaults < config file < environment < explicit flags."""
    cfg = RunConfig()
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise UsageError(f"config file not found: {path}")
        try:
            cfg = RunConfig.from_json_dict(json.loads(path.read_text()))
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file is not valid JSON: {exc}")
    for name in _CONFIG_FIELDS:
        env = os.environ.get(ENV_PREFIX + name.upper())
        if env is not None:
            setattr(cfg, name, _coerce(name, env))
        flag = getattr(args, name, None)
        if flag is not None:
            setattr(cfg, name, flag)
    return cfg


def _coerce(name: str, value: str):
    kind = RunConfig.__dataclass_fields__[name].type
    if "int" in kind:
        return int(value)
    if "float" in kind:
        return float(value)
    return value


def _add_common(p: argparse.ArgumentParser, *, dataset=True):
    if dataset:
        p.add_argument("--dataset", help="JSONL dataset path")
    p.add_argument("--db-manifest", dest="db_manifest",
                   help="database manifest JSON path")
    p.add_argument("--engine", help="comma-separated engines (sqlite,mysql)")
    p.add_argument("--tau", type=float, help="skeleton similarity threshold")
    p.add_argument("--alpha", type=float, help="similarity mixing weight")
    p.add_argument("--warmup", type=int, help="warm-up runs per statement")
    p.add_argument("--runs", type=int, help="measured runs per statement")
    p.add_argument("--timeout", type=float, help="per-run timeout seconds")
    p.add_argument("--out", help="output path")
    p.add_argument("--jobs", type=int, help="worker threads")
    p.add_argument("--seed", type=int, help="random seed")
    p.add_argument("--config", help="declarative config file (flags win)")


def build_parser() -> _Parser:
    parser = _Parser(prog="sqlscore",
                     description="Text-to-SQL reward scoring and evaluation")
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("eval", help="run benchmark metrics over a dataset")
    _add_common(p_eval)
    p_eval.add_argument("--skip-bad-gold", action="store_true",
                        help="report defective gold records instead of failing")
    p_eval.add_argument("--csv", help="optional per-record CSV path")

    p_reward = sub.add_parser("reward", help="score responses against gold records")
    _add_common(p_reward, dataset=False)
    p_reward.add_argument("--batch", help="JSONL of records ('-' for stdin)")
    p_reward.add_argument("--record", help="single record as inline JSON")

    p_serve = sub.add_parser("serve", help="run the HTTP reward service")
    _add_common(p_serve, dataset=False)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8100)

    p_filter = sub.add_parser("sft-filter", help="self-distillation dataset filter")
    p_filter.add_argument("--input", required=True, help="candidate JSONL")
    p_filter.add_argument("--out", help="output JSONL path")
    p_filter.add_argument("-k", type=int, default=3,
                          help="required consecutive exact matches")
    p_filter.add_argument("--lenient", action="store_true",
                          help="skip malformed lines instead of failing")

    p_sim = sub.add_parser("sim", help="toy GRPO policy simulator")
    _add_common(p_sim, dataset=False)
    p_sim.add_argument("--pool", help="JSONL candidate pool")
    p_sim.add_argument("--math", dest="math_input",
                       help="one-shot objective math: JSON file or '-'")
    p_sim.add_argument("--steps", type=int, default=200)
    p_sim.add_argument("--lr", type=float, default=0.5)
    p_sim.add_argument("--epsilon", type=float, default=0.2)
    p_sim.add_argument("--beta", type=float, default=0.0)
    p_sim.add_argument("--group-size", type=int, default=4)

    return parser


def _read_jsonl(path: str, *, lenient: bool = False):
    stream = sys.stdin if path == "-" else open(path)
    skipped = 0
    try:
        for lineno, line in enumerate(stream, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                if lenient:
                    skipped += 1
                    print(f"skipping malformed line {lineno}: {exc}", file=sys.stderr)
                    continue
                raise GoldExecutionError(f"malformed JSONL at line {lineno}: {exc}")
    finally:
        if stream is not sys.stdin:
            stream.close()


def _emit(doc: dict, out_path: Optional[str], fh=None):
    line = json.dumps(doc)
    if fh is not None:
        fh.write(line + "\n")
    else:
        print(line)


def _registry_for(cfg: RunConfig) -> DatabaseRegistry:
    if not cfg.db_manifest:
        raise UsageError("--db-manifest is required")
    return DatabaseRegistry.load(cfg.db_manifest)


def _scorer_for(cfg: RunConfig) -> RewardScorer:
    return RewardScorer(
        _registry_for(cfg),
        tau=cfg.tau,
        alpha=cfg.alpha,
        weights=RewardWeights(),
        timing=cfg.timing(),
    )


# --- subcommands --------------------------------------------------------------


def cmd_eval(args) -> int:
    cfg = _load_config(args)
    if not cfg.dataset:
        raise UsageError("--dataset is required")
    registry = _registry_for(cfg)

    records = [EvalRecord.from_mapping(doc) for doc in _read_jsonl(cfg.dataset)]
    if not records:
        raise GoldExecutionError("no records in dataset")

    wanted = {e.strip() for e in cfg.engine.split(",") if e.strip()}
    available = {e.value for e in registry.engines()}
    missing = wanted - available
    if missing:
        print(f"warning: engines not in manifest, skipped: {sorted(missing)}",
              file=sys.stderr)
    engines = sorted(wanted & available)
    if not engines:
        raise UsageError(f"no requested engine present in manifest: {sorted(wanted)}")

    reports = {}
    all_results = []
    for engine in engines:
        engine_kind = EngineKind(engine)
        handles = {(h.db_id, h.source) for h in registry.handles
                   if h.engine is engine_kind}
        subset = [r for r in records if (r.db_id, r.source) in handles]
        results, defects = evaluate_records(
            subset, registry, cfg.timing(), jobs=cfg.jobs,
        )
        hard_defects = [(r, e) for r, e in defects
                        if not isinstance(e, GoldExecutionError)]
        if hard_defects:
            raise hard_defects[0][1]
        if defects and not args.skip_bad_gold:
            raise defects[0][1]
        report = aggregate(results, bad_gold=defects)
        reports[engine] = report
        all_results.extend(results)
        doc = report.to_json_dict()
        doc["engine"] = engine
        if cfg.out:
            out = Path(cfg.out)
            path = out if len(engines) == 1 else out.with_name(
                f"{out.stem}.{engine}{out.suffix}")
            path.write_text(json.dumps(doc, indent=2) + "\n")
            print(f"wrote {path}")
        else:
            print(json.dumps(doc, indent=2))

    if len(reports) > 1 and cfg.out:
        # Cross-engine average, written only when every engine ran.
        avg = {
            "engines": engines,
            "em": sum(r.em for r in reports.values()) / len(reports),
            "ex": sum(r.ex for r in reports.values()) / len(reports),
            "ves": sum(r.ves for r in reports.values()) / len(reports),
        }
        out = Path(cfg.out)
        path = out.with_name(f"{out.stem}.average{out.suffix}")
        path.write_text(json.dumps(avg, indent=2) + "\n")
        print(f"wrote {path}")

    if args.csv:
        write_per_record_csv(args.csv, all_results)
    return EXIT_OK


def cmd_reward(args) -> int:
    cfg = _load_config(args)
    scorer = _scorer_for(cfg)

    if args.record:
        docs = [json.loads(args.record)]
    elif args.batch:
        docs = list(_read_jsonl(args.batch))
    else:
        docs = list(_read_jsonl("-"))

    out_fh = open(cfg.out, "w") if cfg.out else None
    try:
        for doc in docs:
            gold = GoldRecord.from_mapping(doc)
            breakdown = scorer.score_response(doc.get("response", ""), gold)
            _emit(breakdown.to_json_dict(), cfg.out, out_fh)
    finally:
        if out_fh:
            out_fh.close()
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    cfg = _load_config(args)
    scorer = _scorer_for(cfg)
    from .service import create_app

    app = create_app(scorer)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def cmd_sft_filter(args) -> int:
    if args.k < 1:
        raise UsageError("k must be >= 1")
    candidates = list(_read_jsonl(args.input, lenient=args.lenient))
    retained = sft_filter(candidates, k=args.k)

    if args.out:
        with open(args.out, "w") as fh:
            for cand in retained:
                fh.write(json.dumps(cand) + "\n")
    else:
        for cand in retained:
            print(json.dumps(cand))
    kept = len(retained)
    total = len(candidates)
    pct = 100.0 * kept / total if total else 0.0
    print(f"retained {kept}/{total} records ({pct:.1f}%)", file=sys.stderr)
    return EXIT_OK


def cmd_sim(args) -> int:
    cfg = _load_config(args)
    grpo_cfg = GrpoConfig(epsilon=args.epsilon, beta=args.beta,
                          group_size=args.group_size)

    if args.math_input:
        raw = sys.stdin.read() if args.math_input == "-" else Path(args.math_input).read_text()
        doc = json.loads(raw)
        rewards = doc["rewards"]
        adv = advantages(rewards)
        result = {"advantages": adv}
        if all(key in doc for key in ("logp_new", "logp_old", "logp_ref")):
            samples = [
                GroupSample(reward=r, logp_new=n, logp_old=o, logp_ref=f)
                for r, n, o, f in zip(rewards, doc["logp_new"],
                                      doc["logp_old"], doc["logp_ref"])
            ]
            one_shot = GrpoConfig(epsilon=doc.get("epsilon", args.epsilon),
                                  beta=doc.get("beta", args.beta),
                                  group_size=len(samples))
            obj = grpo_objective(samples, one_shot)
            result.update({
                "objective": obj.objective,
                "clipped_fraction": obj.clipped_fraction,
                "kl": obj.kl,
            })
        print(json.dumps(result))
        return EXIT_OK

    if not args.pool:
        raise UsageError("sim requires --pool or --math")
    pool_docs = list(_read_jsonl(args.pool))
    pool = [doc["response"] for doc in pool_docs]
    if all("reward" in doc for doc in pool_docs):
        reward_table = [float(doc["reward"]) for doc in pool_docs]
        scorer = None
        gold = None
    else:
        reward_table = None
        scorer = _scorer_for(cfg)
        gold_doc = pool_docs[0]
        gold = GoldRecord.from_mapping(gold_doc)

    trajectory = simulate_training(
        pool, gold, steps=args.steps, cfg=grpo_cfg,
        learning_rate=args.lr, seed=cfg.seed,
        reward_table=reward_table, scorer=scorer,
    )
    out_fh = open(cfg.out, "w") if cfg.out else None
    try:
        for point in trajectory:
            _emit(point.to_json_dict(), cfg.out, out_fh)
    finally:
        if out_fh:
            out_fh.close()
    return EXIT_OK


_COMMANDS = {
    "eval": cmd_eval,
    "reward": cmd_reward,
    "serve": cmd_serve,
    "sft-filter": cmd_sft_filter,
    "sim": cmd_sim,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (json.JSONDecodeError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GoldExecutionError, DbNotFound) as exc:
        print(f"dataset error: {exc}", file=sys.stderr)
        return EXIT_DATASET
    except (DatabaseConnectionError, OSError) as exc:
        print(f"infrastructure error: {exc}", file=sys.stderr)
        return EXIT_INFRA
    except SqlScoreError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATASET


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
