"""CLI: export PFEMB stores described by a manifest file."""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ExporterError
from .export import export, synth
from .manifest import load_manifest


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="pfemb-export",
        description="Compute or synthesize per-stream embeddings for a dataset "
        "and write PFEMB stores.",
    )
    parser.add_argument("--manifest", required=True, help="export manifest (JSON)")
    parser.add_argument("--seed", type=int, help="override the manifest seed (synth mode)")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if not exc.code else 1
    try:
        manifest = load_manifest(args.manifest)
        if args.seed is not None:
            outputs = synth(manifest, seed=args.seed)
        else:
            outputs = export(manifest)
    except (ExporterError, FileNotFoundError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except Exception as err:  # noqa: BLE001 - CLI boundary
        print(f"internal error: {type(err).__name__}: {err}", file=sys.stderr)
        return 2
    for stream in sorted(outputs):
        print(f"{stream}\t{outputs[stream]}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
