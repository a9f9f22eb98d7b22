"""Command-line interface for the scoring sidecar."""
from __future__ import annotations

import argparse
import json
import sys

from .models import ALL_MODES, load_model
from .service import batch, serve


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="ltswap-scorer", description="Sentence-scoring sidecar")
    sub = parser.add_subparsers(dest="command", required=True)

    p_serve = sub.add_parser("serve", help="serve POST /score")
    p_serve.add_argument("--model", required=True, help="toy:uniform:V | toy:table:F | hf-causal:N | hf-masked:N")
    p_serve.add_argument("--port", type=int, default=8400)
    p_serve.add_argument("--host", default="0.0.0.0")
    p_serve.add_argument("--device", default="cpu")

    p_batch = sub.add_parser("batch", help="translate requests.jsonl into scores.jsonl")
    p_batch.add_argument("--model", required=True)
    p_batch.add_argument("--mode", required=True, choices=ALL_MODES)
    p_batch.add_argument("--in", dest="in_file", required=True)
    p_batch.add_argument("--out", dest="out_file", required=True)
    p_batch.add_argument("--device", default="cpu")

    args = parser.parse_args(argv)
    try:
        handle = load_model(args.model, device=args.device)
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2

    if args.command == "serve":
        serve(handle, port=args.port, host=args.host)
        return 0

    summary = batch(handle, args.mode, args.in_file, args.out_file)
    print(json.dumps(summary))
    return 0 if not summary["errors"] else 1


if __name__ == "__main__":
    raise SystemExit(main())
