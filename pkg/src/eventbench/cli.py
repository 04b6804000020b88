"""Command-line pipeline: validate -> stats -> split -> score -> llm-ed/llm-eae -> report.

Exit codes are a stable CI contract: 0 success, 1 input error, 2 infeasible
configuration, 3 network exhaustion. Every artifact-producing command writes
one manifest.json (config snapshot, seeds, input digests, version, timestamp)
alongside its outputs.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .ingest import ParseError, compute_stats, parse_dataset, parse_predictions, serialize_predictions, validate_assumptions
from .llm.client import EvalConfig, ResponseCache, RetryPolicy, ChatClient
from .llm.prompts import PromptConfig
from .llm.runner import Ontology, run_eval
from .model import TaskKind
from .report import render_csv, render_figures, render_markdown_table
from .scorer import CONVENTIONS, MetricReport, score_split, pair_instances
from .splitter import (
    InfeasibleSplitError,
    SplitRatios,
    propose_splits,
    read_split,
    select_splits,
    write_split,
)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INFEASIBLE = 2
EXIT_NETWORK = 3

SUBTOKEN_COUNTER_NOTE = "constant-1"


class InputError(ValueError):
    """Bad input file or inconsistent inputs (exit code 1)."""


class NetworkExhausted(RuntimeError):
    """Requests failed after retries with no cached fallback (exit code 3)."""


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out_dir: Path, command: str, config: dict, seeds: dict, inputs: list[Path]) -> None:
    manifest = {
        "command": command,
        "config": config,
        "seeds": seeds,
        "input_digests": {str(p): _sha256(p) for p in inputs},
        "tool_version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    p = Path(path)
    if not p.exists():
        raise InputError(f"config file not found: {path}")
    try:
        obj = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise InputError(f"config file {path} must hold a JSON object")
    return obj


def _setting(args: argparse.Namespace, config: dict, name: str, default=None):
    """Flags win over the config file; the config wins over defaults."""
    value = getattr(args, name.replace("-", "_"), None)
    if value is not None:
        return value
    return config.get(name, default)


def _read_corpus(path: str, task: TaskKind):
    p = Path(path)
    if not p.exists():
        raise InputError(f"corpus file not found: {path}")
    with open(p, encoding="utf-8") as f:
        return parse_dataset(f, task)


def _task(value: str) -> TaskKind:
    try:
        return TaskKind(value.lower())
    except ValueError:
        raise InputError(f"unknown task {value!r}; expected e2e, ed, or eae")


def _out_dir(args: argparse.Namespace) -> Path | None:
    if getattr(args, "out_dir", None) is None:
        return None
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_validate(args: argparse.Namespace) -> int:
    dataset = _read_corpus(args.corpus, _task(args.task))
    report = validate_assumptions(dataset).to_dict()
    payload = json.dumps(report, indent=2, sort_keys=True) + "\n"
    out = _out_dir(args)
    if out is not None:
        (out / "compliance.json").write_text(payload, encoding="utf-8")
        _write_manifest(out, "validate", {"task": args.task}, {}, [Path(args.corpus)])
    sys.stdout.write(payload)
    return EXIT_OK


def cmd_stats(args: argparse.Namespace) -> int:
    dataset = _read_corpus(args.corpus, _task(args.task))
    profile = compute_stats(dataset)
    payload = json.dumps(
        {
            "profile": profile.to_dict(),
            "conventions": {"subtoken_counter": SUBTOKEN_COUNTER_NOTE},
        },
        indent=2,
        sort_keys=True,
    ) + "\n"
    out = _out_dir(args)
    if out is not None:
        (out / "stats.json").write_text(payload, encoding="utf-8")
        _write_manifest(out, "stats", {"task": args.task}, {}, [Path(args.corpus)])
    sys.stdout.write(payload)
    return EXIT_OK


def cmd_split(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    seed = _setting(args, config, "seed")
    if seed is None:
        raise InfeasibleSplitError("a seed is mandatory (flag --seed or config key 'seed')")
    ratios = SplitRatios.parse(_setting(args, config, "ratios", "0.8/0.1/0.1"))
    n_candidates = int(_setting(args, config, "n_candidates", 1000))
    k = int(_setting(args, config, "k", 5))
    dataset = _read_corpus(args.corpus, _task(args.task))

    candidates = propose_splits(dataset, ratios, n_candidates=n_candidates, seed=int(seed))
    selected = select_splits(candidates, k=k)
    out = _out_dir(args)
    if out is None:
        raise InputError("split requires --out-dir")
    for assignment in selected:
        write_split(out / f"split{assignment.split_id}.json", assignment)
    pool_scores = sorted(c.discrepancy for c in candidates)
    mid = len(pool_scores) // 2
    median = (
        pool_scores[mid]
        if len(pool_scores) % 2
        else (pool_scores[mid - 1] + pool_scores[mid]) / 2
    )
    resolved = {
        "ratios": f"{ratios.train}/{ratios.dev}/{ratios.test}",
        "n_candidates": n_candidates,
        "k": k,
        "objective": "sum over dev/test of |stat - train stat| / max(train stat, 1e-9) "
        "for event-type coverage, role coverage, events/instance, arguments/event",
        "pool": {
            "n_scored": len(pool_scores),
            "median_discrepancy": median,
            "min_discrepancy": pool_scores[0],
            "max_discrepancy": pool_scores[-1],
        },
    }
    _write_manifest(out, "split", resolved, {"seed": int(seed)}, [Path(args.corpus)])
    for assignment in selected:
        print(f"split {assignment.split_id}: discrepancy {assignment.discrepancy:.6f}")
    return EXIT_OK


def cmd_score(args: argparse.Namespace) -> int:
    task = _task(args.task)
    dataset = _read_corpus(args.corpus, task)
    pred_path = Path(args.pred)
    if not pred_path.exists():
        raise InputError(f"prediction file not found: {args.pred}")
    with open(pred_path, encoding="utf-8") as f:
        predictions = parse_predictions(f)

    known_ids = {ai.instance_id for ai in dataset}
    unknown = sorted(set(predictions) - known_ids)
    if unknown:
        raise InputError(
            f"{len(unknown)} prediction instance_id(s) not in corpus: {', '.join(unknown[:20])}"
        )

    split_scores = []
    for path in args.splits:
        if not Path(path).exists():
            raise InputError(f"split file not found: {path}")
        assignment = read_split(path)
        test_instances = [ai for ai in dataset if ai.doc_id in assignment.test]
        pairs, violations = pair_instances(test_instances, predictions, task)
        split_scores.append(score_split(assignment.split_id, pairs, task, violations))

    report = MetricReport(
        dataset=Path(args.corpus).stem,
        task=task,
        splits=tuple(split_scores),
        system=args.system,
    )
    payload = report.to_json()
    table = render_markdown_table([report.to_dict()])
    out = _out_dir(args)
    if out is not None:
        (out / "report.json").write_text(payload, encoding="utf-8")
        (out / "report.md").write_text(table, encoding="utf-8")
        _write_manifest(
            out,
            "score",
            {"task": task.value, "system": args.system, "conventions": dict(CONVENTIONS)},
            {},
            [Path(args.corpus), pred_path] + [Path(p) for p in args.splits],
        )
    sys.stdout.write(table)
    return EXIT_OK


def _llm_command(args: argparse.Namespace, task: TaskKind) -> int:
    config = _load_config(args.config)
    seed = _setting(args, config, "seed")
    demo_seed = _setting(args, config, "demo_seed", seed)
    sample_seed = _setting(args, config, "sample_seed", seed)
    if demo_seed is None or sample_seed is None:
        raise InfeasibleSplitError(
            "seeds are mandatory: pass --seed or set demo_seed/sample_seed in the config"
        )
    endpoint = _setting(args, config, "endpoint")
    model = _setting(args, config, "model")
    if not endpoint or not model:
        raise InfeasibleSplitError("--endpoint and --model are required (flag or config)")

    retry_cfg = config.get("retry", {})
    eval_cfg = EvalConfig(
        endpoint=endpoint,
        model=model,
        sample_docs=int(_setting(args, config, "sample_docs", 250)),
        sample_seed=int(sample_seed),
        temperature=float(_setting(args, config, "temperature", 0.0)),
        max_in_flight=int(_setting(args, config, "max_in_flight", 4)),
        timeout=float(_setting(args, config, "timeout", 60.0)),
        retry=RetryPolicy(
            max_attempts=int(retry_cfg.get("max_attempts", 3)),
            backoff_base=float(retry_cfg.get("backoff_base", 1.0)),
        ),
    )
    prompt_cfg = PromptConfig(
        k_shot=int(_setting(args, config, "k_shot", 2)),
        demo_seed=int(demo_seed),
        max_prompt_units=_setting(args, config, "max_prompt_units"),
    )

    dataset = _read_corpus(args.corpus, task)
    if len(args.splits) != 1:
        raise InputError("llm evaluation takes exactly one split file")
    if not Path(args.splits[0]).exists():
        raise InputError(f"split file not found: {args.splits[0]}")
    assignment = read_split(args.splits[0])
    ontology = Ontology.from_json(args.ontology) if args.ontology else None

    cache = ResponseCache(args.cache_dir) if args.cache_dir else None
    client = ChatClient(eval_cfg, cache=cache)
    result = run_eval(
        dataset, assignment, task, prompt_cfg, eval_cfg, client=client, ontology=ontology
    )

    report = MetricReport(
        dataset=Path(args.corpus).stem,
        task=task,
        splits=(result.scores,),
        system=f"{model} ({prompt_cfg.k_shot}-shot)",
        extras={"diagnostics": result.diagnostics},
    )
    out = _out_dir(args)
    if out is None:
        raise InputError("llm evaluation requires --out-dir")
    (out / "predictions.jsonl").write_text(
        serialize_predictions(result.predictions), encoding="utf-8"
    )
    (out / "report.json").write_text(report.to_json(), encoding="utf-8")
    (out / "errors.json").write_text(
        json.dumps(result.error_report(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    inputs = [Path(args.corpus), Path(args.splits[0])]
    if args.config:
        inputs.append(Path(args.config))
    if args.ontology:
        inputs.append(Path(args.ontology))
    _write_manifest(
        out,
        f"llm-{task.value}",
        {
            "endpoint": endpoint,
            "model": model,
            "k_shot": prompt_cfg.k_shot,
            "sample_docs": eval_cfg.sample_docs,
            "temperature": eval_cfg.temperature,
        },
        {"demo_seed": int(demo_seed), "sample_seed": int(sample_seed)},
        inputs,
    )
    sys.stdout.write(render_markdown_table([report.to_dict()]))
    n_failed = result.diagnostics.get("n_failed_requests", 0)
    if n_failed:
        print(f"warning: {n_failed} request(s) failed after retries", file=sys.stderr)
        raise NetworkExhausted(f"{n_failed} request(s) failed after retries")
    return EXIT_OK


def cmd_llm_ed(args: argparse.Namespace) -> int:
    return _llm_command(args, TaskKind.ED)


def cmd_llm_eae(args: argparse.Namespace) -> int:
    return _llm_command(args, TaskKind.EAE)


def cmd_report(args: argparse.Namespace) -> int:
    reports = []
    for path in args.scores:
        p = Path(path)
        if not p.exists():
            raise InputError(f"score report not found: {path}")
        reports.append(json.loads(p.read_text(encoding="utf-8")))
    out = _out_dir(args)
    if out is None:
        raise InputError("report requires --out-dir")
    table = render_markdown_table(reports)
    (out / "report.md").write_text(table, encoding="utf-8")
    (out / "report.csv").write_text(render_csv(reports), encoding="utf-8")
    figures = render_figures(reports, out / "figures")
    _write_manifest(out, "report", {"n_systems": len(reports)}, {}, [Path(p) for p in args.scores])
    sys.stdout.write(table)
    print(f"wrote {len(figures)} figure(s) under {out / 'figures'}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eventbench",
        description="Event-extraction benchmark harness: normalization, splits, "
        "attachment-aware scoring, and few-shot LLM evaluation.",
    )
    parser.add_argument("--version", action="version", version=f"eventbench {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, *, corpus: bool = True) -> None:
        if corpus:
            p.add_argument("--corpus", required=True, help="corpus JSONL path")
        p.add_argument("--task", default="e2e", help="e2e, ed, or eae (default e2e)")
        p.add_argument("--out-dir", default=None, help="directory for output files")

    p = sub.add_parser("validate", help="parse a corpus and audit its data assumptions")
    add_common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("stats", help="corpus statistics (#Docs, #Inst, #ET, #Evt, #RT, #Arg)")
    add_common(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("split", help="generate the k most balanced document splits")
    add_common(p)
    p.add_argument("--ratios", default=None, help="train/dev/test fractions, e.g. 0.8/0.1/0.1")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--k", type=int, default=None, help="splits to emit (default 5)")
    p.add_argument("--n-candidates", type=int, default=None, help="candidate pool size (default 1000)")
    p.add_argument("--config", default=None, help="JSON config file; flags override it")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("score", help="score a prediction file on the test part of each split")
    add_common(p)
    p.add_argument("--pred", required=True, help="prediction JSONL path")
    p.add_argument("--splits", required=True, nargs="+", help="split JSON file(s)")
    p.add_argument("--system", default="system", help="row label for the report")
    p.set_defaults(func=cmd_score)

    for name, func in (("llm-ed", cmd_llm_ed), ("llm-eae", cmd_llm_eae)):
        p = sub.add_parser(name, help=f"few-shot {name.split('-')[1].upper()} evaluation over a chat endpoint")
        p.add_argument("--corpus", required=True, help="corpus JSONL path")
        p.add_argument("--splits", required=True, nargs="+", help="one split JSON file")
        p.add_argument("--out-dir", required=True, help="directory for output files")
        p.add_argument("--endpoint", default=None, help="chat-completions base URL")
        p.add_argument("--model", default=None)
        p.add_argument("--config", default=None, help="JSON config file; flags override it")
        p.add_argument("--seed", type=int, default=None, help="sets demo and sampling seeds")
        p.add_argument("--k-shot", type=int, default=None, dest="k_shot")
        p.add_argument("--sample-docs", type=int, default=None, dest="sample_docs")
        p.add_argument("--cache-dir", default=None, help="response cache directory")
        p.add_argument("--ontology", default=None, help="ontology JSON (types, descriptions, roles)")
        p.set_defaults(func=func)

    p = sub.add_parser("report", help="merge score reports into markdown, CSV, and figures")
    p.add_argument("--scores", required=True, nargs="+", help="report.json file(s) from `score`")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InfeasibleSplitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except NetworkExhausted as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NETWORK


if __name__ == "__main__":
    sys.exit(main())
