#!/usr/bin/env python3
"""Serve the annotation review API over HTTP.

Optionally seeds the store from a synthesized corpus first (ground truth
becomes revision 1 of every diagram), then runs uvicorn. The review
frontend talks to this process.
"""

import argparse

import uvicorn

from diagraph.service import AnnotationStore, create_app


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("store", help="store directory (created if missing)")
    ap.add_argument("--seed-from", help="corpus directory with manifest.jsonl")
    ap.add_argument("--limit", type=int, default=None,
                    help="seed at most this many diagrams")
    ap.add_argument("--host", default="127.0.0.1")
    ap.add_argument("--port", type=int, default=8000)
    args = ap.parse_args()

    store = AnnotationStore(args.store)
    if args.seed_from:
        existing = {m["diagram_id"] for m in store.list_diagrams()}
        if existing:
            print(f"store already holds {len(existing)} diagrams, not seeding")
        else:
            n = store.seed_from_manifest(args.seed_from, limit=args.limit)
            print(f"seeded {n} diagrams from {args.seed_from}")
    app = create_app(store)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
