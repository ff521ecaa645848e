"""Command line front end: manifest in, embedding file out."""

from __future__ import annotations

import argparse
import sys

from .encoders import ENCODERS, make_encoder
from .errors import ExportError
from .export import export
from .manifest import MODALITIES, read_manifest


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hcube-export",
        description="Encode files listed in a manifest into an embedding file.",
    )
    parser.add_argument("--manifest", required=True, help="tab-separated manifest path")
    parser.add_argument("--out", required=True, help="output embedding file")
    parser.add_argument("--modality", required=True, choices=MODALITIES)
    parser.add_argument(
        "--encoder",
        default="stub",
        choices=sorted(ENCODERS),
        help="built-in encoder to run over file contents",
    )
    parser.add_argument("--dim", type=int, default=64, help="encoder output width")
    parser.add_argument(
        "--batch-size", type=int, default=1, help="items encoded per internal batch"
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        manifest = read_manifest(
            args.manifest,
            modality=args.modality,
            encoder_id=args.encoder,
            output_path=args.out,
            batch_size=args.batch_size,
        )
        result = export(manifest, make_encoder(args.encoder, args.dim))
    except (ExportError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for failure in result.failures:
        print(f"skipped {failure.path}: {failure.message}", file=sys.stderr)
    print(
        f"wrote {result.written} rows of dim {result.dim} to {result.output_path}"
        + (f" ({len(result.failures)} skipped)" if result.failures else "")
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
