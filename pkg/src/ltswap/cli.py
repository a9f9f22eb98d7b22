"""Command-line interface."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import pipeline
from .config import load_config
from .errors import LtswapError
from .fixture import build_fixture, write_fixture
from .pipeline import STAGES, make_scorer, run_stages
from .scoring import JudgeMode, ScoringMode, score_quadruplets


def _add_run(sub):
    p = sub.add_parser("run", help="run pipeline stages")
    p.add_argument("stages", nargs="+", choices=list(STAGES) + ["all"], metavar="STAGE")
    p.add_argument("--config", required=True, help="TOML config file")
    p.add_argument("--dry-run", action="store_true", help="print the plan without running")
    p.add_argument("--force", action="store_true", help="rerun even when the manifest is current")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--mock-llm", action="store_true", help="use the offline mock chat backend")
    p.add_argument("--max-concurrency", type=int, default=None)
    p.add_argument("--filter-backend", default=None, help="chat backend for feasibility (mock or URL)")


def _add_score(sub):
    p = sub.add_parser("score", help="score a quadruplet file directly")
    p.add_argument("--quadruplets", required=True)
    p.add_argument("--backend", required=True, help="unigram | file:PATH | http(s) URL")
    p.add_argument("--mode", default="causal", choices=[m.value for m in ScoringMode])
    p.add_argument("--judge", default="quad", choices=[j.value for j in JudgeMode])
    p.add_argument("--model", default="model")
    p.add_argument("--out", default="-", help="verdicts JSONL path, - for stdout")


def _add_fixture(sub):
    p = sub.add_parser("make-fixture", help="write the synthetic fixture corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=13)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="ltswap", description="Long-tail minimal-pair benchmark tooling")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run(sub)
    _add_score(sub)
    _add_fixture(sub)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "score":
            return _cmd_score(args)
        if args.command == "make-fixture":
            return _cmd_fixture(args)
    except LtswapError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    return 0


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.mock_llm:
        cfg.llm.backend = "mock"
    if args.filter_backend:
        cfg.llm.backend = args.filter_backend
    if args.max_concurrency is not None:
        cfg.llm.max_concurrency = args.max_concurrency
    stages = list(STAGES[:6]) if args.stages == ["all"] else args.stages
    results = run_stages(stages, cfg, dry_run=args.dry_run, force=args.force)
    for name, status in results.items():
        print(f"{name}: {status}")
    return 0


def _cmd_score(args) -> int:
    rows = pipeline.read_jsonl(Path(args.quadruplets))
    quads = [pipeline._quad_from_row(r) for r in rows]
    backend = make_scorer(args.backend)
    verdicts, skipped = score_quadruplets(quads, backend, ScoringMode(args.mode), JudgeMode(args.judge))
    out_rows = []
    for quad, v in verdicts:
        out_rows.append(
            {
                "model": args.model,
                "quadruplet_id": v.quadruplet_id,
                "subtask": quad.subtask.value,
                "bin": quad.bin,
                "pos": quad.pos.value,
                "correct": v.correct,
                "margin": v.margin,
                "judge_mode": v.judge_mode.value,
                "member": v.member,
            }
        )
    text = "".join(json.dumps(r, sort_keys=True) + "\n" for r in out_rows)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        pipeline.write_atomic(Path(args.out), text)
    if skipped:
        print(f"skipped {len(skipped)} quadruplets with missing scores", file=sys.stderr)
    return 0


def _cmd_fixture(args) -> int:
    fixture = build_fixture(seed=args.seed)
    written = write_fixture(fixture, args.out)
    config = Path(args.out) / "config.toml"
    config.write_text(
        'workdir = "work"\n'
        "seed = 42\n\n"
        "[corpus]\n"
        f'paths = ["{Path(written["corpus"]).name}"]\n'
        f'dictionary_path = "{Path(written["dictionary"]).name}"\n\n'
        "[llm]\n"
        'backend = "mock"\n'
        'mock_policy = "perfect"\n\n'
        "[scorer]\n"
        'backend = "unigram"\n'
        'mode = "causal"\n'
        'judge = "quad"\n'
        'model = "unigram"\n'
    )
    print(json.dumps({**written, "config": str(config), "total_tokens": fixture.total_tokens}))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
