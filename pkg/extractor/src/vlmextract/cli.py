"""Command-line wrapper around :func:`vlmextract.extract.extract`."""

from __future__ import annotations

import argparse
import logging
import sys


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vlmextract",
        description="Encode an image folder and class prompts into "
                    "gaussadapt dataset files",
    )
    parser.add_argument("--images", required=True,
                        help="image directory (class subfolders become "
                             "labels)")
    parser.add_argument("--classes", required=True,
                        help="text file with one class name per line")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--model", default="openai/clip-vit-base-patch32",
                        help="checkpoint id, or synthetic:<dim> for the "
                             "procedural test encoder")
    parser.add_argument("--template", action="append", dest="templates",
                        help="prompt template with {} for the class name; "
                             "repeat for an ensemble (default: "
                             "'a photo of a {}.')")
    parser.add_argument("--batch-size", type=int, default=32)
    parser.add_argument("--device", default="cpu")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    args = build_parser().parse_args(argv)
    from .extract import extract

    try:
        manifest = extract(
            args.images, args.classes, args.out, args.model,
            prompt_templates=args.templates, device=args.device,
            batch_size=args.batch_size,
        )
    except Exception as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return 2
    print(manifest)
    return 0


if __name__ == "__main__":
    sys.exit(main())
