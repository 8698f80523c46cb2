"""Run the sidecar: ``python -m shotmem_sidecar --host 0.0.0.0 --port 8094``."""

from __future__ import annotations

import argparse
import sys

from .app import create_app
from .models import MODEL_FAMILIES, ModelLoadFailure


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="shotmem embedding sidecar")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8094)
    parser.add_argument(
        "--models",
        default="tiny",
        choices=sorted(MODEL_FAMILIES),
        help="model family to serve",
    )
    args = parser.parse_args(argv)
    try:
        app = create_app(family=args.models)
    except ModelLoadFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    import uvicorn

    uvicorn.run(app, host=args.host, port=args.port)
    return 0


if __name__ == "__main__":
    sys.exit(main())
