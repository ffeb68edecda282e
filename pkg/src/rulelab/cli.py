"""Command-line front end: batch access to induction, application, scoring,
suggestions, importance, the session simulator, and the HTTP service.

Every command reads JSON files, writes JSON (stdout or --out) with sorted
keys so outputs diff cleanly, and exits 2 with a one-line structured error
on stderr when an input is invalid.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .induction import (
    InductionConfig,
    InductionError,
    induce_ruleset,
    induction_config_from_json,
)
from .predicates import ParseError, ValidationError, ingest_dataset, predicate_vocabulary
from .recommend import (
    ActiveLearningConfig,
    al_config_from_json,
    compute_importance,
    holdout_accuracy,
    rank_objects_for_dropdown,
    suggest_images,
)
from .rules import EditError, apply_ruleset, empty_ruleset, ruleset_from_json
from .session import NoLabelsError, SessionError, SessionStore
from .simulate import SimulationPolicy, policy_from_json, run_simulation

_USER_ERRORS = (ParseError, ValidationError, EditError, InductionError,
                NoLabelsError, SessionError)


def _read_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path} is not valid JSON: {exc}") from exc


def _load_labels(path: str) -> dict[str, str]:
    doc = _read_json(path)
    if not isinstance(doc, list):
        raise ParseError(f"{path}: expected a JSON list of {{image_id, label}}")
    labels: dict[str, str] = {}
    for i, entry in enumerate(doc):
        if not isinstance(entry, dict) or "image_id" not in entry or "label" not in entry:
            raise ValidationError(f"{path}: entry {i} must carry image_id and label")
        iid = entry["image_id"]
        if iid in labels:
            raise ValidationError(f"{path}: duplicate label for image {iid!r}")
        labels[iid] = entry["label"]
    return labels


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    doc = _read_json(path)
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: expected a JSON object")
    return doc


def _induction_cfg(config: dict) -> InductionConfig:
    return induction_config_from_json(config.get("induction", {}))


def _al_cfg(config: dict, seed: int | None) -> ActiveLearningConfig:
    cfg = al_config_from_json(config.get("active_learning", {}))
    if seed is not None:
        from dataclasses import replace

        cfg = replace(cfg, seed=seed)
    return cfg


def _emit(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _prior_ruleset(args, dataset):
    if args.rules is not None:
        return ruleset_from_json(_read_json(args.rules))
    return empty_ruleset(dataset.classes)


def cmd_induce(args) -> dict:
    dataset = ingest_dataset(args.dataset, strict=args.strict)
    labels = _load_labels(args.labels)
    cfg = _induction_cfg(_load_config(args.config))
    rs = induce_ruleset(labels, dataset, _prior_ruleset(args, dataset), cfg)
    return rs.to_json()


def cmd_apply(args) -> dict:
    dataset = ingest_dataset(args.dataset, strict=args.strict)
    rs = ruleset_from_json(_read_json(args.rules))
    manual = _load_labels(args.labels) if args.labels else {}
    states = apply_ruleset(rs, dataset.pool, manual, dataset.overlap)
    counts: dict[str, int] = {}
    for ls in states.values():
        counts[ls.status] = counts.get(ls.status, 0) + 1
    return {
        "generation": rs.generation,
        "labels": [states[iid].to_json() for iid in sorted(states)],
        "counts": {k: counts[k] for k in sorted(counts)},
    }


def cmd_eval(args) -> dict:
    dataset = ingest_dataset(args.dataset, strict=args.strict)
    rs = ruleset_from_json(_read_json(args.rules))
    report = holdout_accuracy(rs, dataset.holdout, dataset.overlap)
    return report.to_json()


def cmd_suggest(args) -> dict:
    dataset = ingest_dataset(args.dataset, strict=args.strict)
    rs = _prior_ruleset(args, dataset)
    manual = _load_labels(args.labels) if args.labels else {}
    cfg = _al_cfg(_load_config(args.config), args.seed)
    vocab = predicate_vocabulary(dataset)
    return suggest_images(dataset.pool, manual, rs, vocab, cfg, dataset.overlap).to_json()


def cmd_importance(args) -> dict:
    dataset = ingest_dataset(args.dataset, strict=args.strict)
    table = compute_importance(dataset.pool)
    return {"ranked": rank_objects_for_dropdown(table), "table": table.to_json()}


def cmd_simulate(args) -> dict:
    dataset = ingest_dataset(args.dataset, strict=args.strict)
    truth = _load_labels(args.ground_truth)
    config = _load_config(args.config)
    policy = policy_from_json(config.get("policy", {}))
    if args.seed is not None:
        from dataclasses import replace

        policy = replace(policy, seed=args.seed)
    report = run_simulation(dataset, truth, policy, _induction_cfg(config))
    return report.to_json(include_timing=args.timing)


def cmd_serve(args) -> dict:
    import uvicorn

    from .server import create_app

    store = SessionStore(args.store)
    uvicorn.run(create_app(store), host=args.host, port=args.port,
                log_level="warning")
    return {}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rulelab",
        description="Rule-based image labeling: induce, apply, and refine "
                    "per-class DNF rules over visual predicates.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--dataset", required=True, help="dataset JSON file")
    common.add_argument("--out", help="write output JSON here instead of stdout")
    common.add_argument("--strict", action="store_true",
                        help="reject unknown fields in the dataset file")
    common.add_argument("--config", help="config JSON file (induction / "
                                         "active_learning / policy sections)")
    common.add_argument("--seed", type=int, help="override the seed")

    p = sub.add_parser("induce", parents=[common],
                       help="learn a ruleset from manual labels")
    p.add_argument("--labels", required=True, help="JSON list of {image_id, label}")
    p.add_argument("--rules", help="prior ruleset (for locks and bans)")
    p.set_defaults(fn=cmd_induce)

    p = sub.add_parser("apply", parents=[common],
                       help="apply a ruleset to the pool")
    p.add_argument("--rules", required=True, help="ruleset JSON file")
    p.add_argument("--labels", help="manual labels that override rule matches")
    p.set_defaults(fn=cmd_apply)

    p = sub.add_parser("eval", parents=[common],
                       help="score a ruleset on the dataset's holdout")
    p.add_argument("--rules", required=True)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("suggest", parents=[common],
                       help="pick the next images worth labeling")
    p.add_argument("--rules", help="current ruleset (defaults to empty)")
    p.add_argument("--labels", help="manual labels to exclude")
    p.set_defaults(fn=cmd_suggest)

    p = sub.add_parser("importance", parents=[common],
                       help="rank object types by corpus importance")
    p.set_defaults(fn=cmd_importance)

    p = sub.add_parser("simulate", parents=[common],
                       help="run a scripted oracle labeling session")
    p.add_argument("--ground-truth", required=True,
                   help="JSON list of {image_id, label} covering the pool")
    p.add_argument("--timing", action="store_true",
                   help="include wall-clock times in the report")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("serve", help="start the HTTP session service")
    p.add_argument("--store", default="sessions", help="session storage directory")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8400)
    p.set_defaults(fn=cmd_serve, out=None)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        doc = args.fn(args)
    except _USER_ERRORS as exc:
        sys.stderr.write(json.dumps({
            "code": type(exc).__name__,
            "message": str(exc),
            "detail": args.command,
        }) + "\n")
        return 2
    if args.command != "serve":
        _emit(doc, args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
