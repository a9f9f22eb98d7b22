#!/usr/bin/env python3
"""End-to-end offline demo: synthetic corpus, mock chat backend, unigram scorer.

Writes everything under --out (default ./demo_out) and prints the headline
numbers from the report. No network access needed.
"""
import argparse
import json
import time
from pathlib import Path

from ltswap.config import config_from_dict
from ltswap.fixture import build_fixture, write_fixture
from ltswap.pipeline import Paths, read_jsonl, run_stages


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="demo_out")
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--fixture-seed", type=int, default=13)
    args = ap.parse_args()

    root = Path(args.out)
    fixture = build_fixture(seed=args.fixture_seed)
    written = write_fixture(fixture, root / "fixtures")
    print(f"fixture: {fixture.total_tokens} tokens, {len(fixture.dictionary)} dictionary words")

    cfg = config_from_dict(
        {
            "workdir": str(root / "work"),
            "seed": args.seed,
            "corpus": {"paths": [written["corpus"]], "dictionary_path": written["dictionary"]},
            "llm": {"backend": "mock", "mock_policy": "perfect"},
            "scorer": {"backend": "unigram", "mode": "causal", "judge": "quad", "model": "unigram"},
        },
        base_dir=".",
    )
    t0 = time.time()
    statuses = run_stages(
        ["ingest", "candidates", "generate", "filter", "score", "report", "counts"], cfg
    )
    print(f"stages: {statuses} ({time.time() - t0:.1f}s)")

    paths = Paths(cfg)
    quads = read_jsonl(paths.quadruplets)
    by_subtask = {}
    for q in quads:
        by_subtask[q["subtask"]] = by_subtask.get(q["subtask"], 0) + 1
    print(f"quadruplets kept: {len(quads)} {by_subtask}")

    report = json.loads((paths.report_dir / "report.json").read_text())
    print(f"lt-swap score (unigram scorer, ties incorrect): {report['ltswap_score']}")
    print(f"report files in {paths.report_dir}")


if __name__ == "__main__":
    main()
