#!/usr/bin/env python3
"""Write the synthetic fixture corpus, dictionary, and a ready-to-run config."""
import argparse
from pathlib import Path

from ltswap.fixture import build_fixture, write_fixture


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="fixture_out")
    ap.add_argument("--seed", type=int, default=13)
    args = ap.parse_args()

    fixture = build_fixture(seed=args.seed)
    written = write_fixture(fixture, args.out)
    config = Path(args.out) / "config.toml"
    config.write_text(
        "\n".join(
            [
                'workdir = "work"',
                "seed = 42",
                "",
                "[corpus]",
                f'paths = ["{Path(written["corpus"]).name}"]',
                f'dictionary_path = "{Path(written["dictionary"]).name}"',
                "",
                "[llm]",
                'backend = "mock"',
                'mock_policy = "perfect"',
                "",
                "[scorer]",
                'backend = "unigram"',
                'mode = "causal"',
                'judge = "quad"',
                'model = "unigram"',
                "",
            ]
        )
    )
    print(f"corpus: {written['corpus']} ({fixture.total_tokens} tokens)")
    print(f"dictionary: {written['dictionary']} ({len(fixture.dictionary)} words)")
    print(f"config: {config}")
    print(f"run: ltswap run all --config {config}")


if __name__ == "__main__":
    main()
