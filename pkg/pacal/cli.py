"""
pacal command line.

    pacal curvature|geodesic|transport|flatness|verify|limits --config run.json [--out DIR] [flags]
    pacal serve [--host HOST] [--port PORT]

Data goes to stdout and to files under --out; logs go to stderr. Exit codes: 0 success,
2 usage or configuration error, 3 domain, limit or numeric failure, 4 verification failure.
"""

import argparse
import logging
import sys
from typing import List, Optional

from config.config import configure_logging, get_settings

from . import commands
from .schemas import load_run_config
from .utils.emitters import dumps_json
from .utils.errors import PacalError, UsageError
from .verify import SUITES

logger = logging.getLogger("pacal")


def parse_vector(text: str) -> List[float]:
    """'1,2.5,-3' -> [1.0, 2.5, -3.0]"""
    try:
        return [float(part) for part in text.split(",")]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}")


def parse_path(text: str) -> List[List[float]]:
    """'1,0;0,1' -> [[1, 0], [0, 1]]; an empty string is the empty path."""
    if not text.strip():
        return []
    return [parse_vector(step) for step in text.split(";")]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pacal", description="Numerical engine for pointwise affine spaces")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="run configuration JSON")
        p.add_argument("--out", default=None, help="output directory (default: output.path from the config)")
        return p

    command("curvature", "connection coefficients and curvature tensors on a grid")

    p = command("geodesic", "integrate an affine geodesic")
    p.add_argument("--p0", required=True, type=parse_vector)
    p.add_argument("--v", required=True, type=parse_vector, help="body velocity")
    p.add_argument("--t-end", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--svg", action="store_true", help="also write a 2-d SVG polyline")

    p = command("transport", "transport a vector along a polygonal path")
    p.add_argument("--v", required=True, type=parse_vector)
    p.add_argument("--start", required=True, type=parse_vector)
    p.add_argument("--path", required=True, type=parse_path, help="ground steps, e.g. '1,0;0,1;-1,0;0,-1'")

    p = command("flatness", "sample the flatness residual")
    p.add_argument("--samples", type=int, default=200)

    p = command("verify", "run the identity suites")
    p.add_argument("--suite", choices=("all",) + SUITES, default="all")

    p = command("limits", "difference-quotient table of a pseudo-derivative")
    p.add_argument("--p", required=True, type=parse_vector)
    p.add_argument("--u", required=True, type=parse_vector)
    p.add_argument("--v", required=True, type=parse_vector)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="0.0.0.0")
    p.add_argument("--port", type=int, default=4242)
    return parser


def run(args: argparse.Namespace, threads: int) -> int:
    if args.command == "serve":
        import uvicorn

        uvicorn.run("pacal.api:app", host=args.host, port=args.port)
        return 0

    config = load_run_config(args.config)
    out_dir = args.out if args.out is not None else config.output.path

    if args.command == "curvature":
        result = commands.cmd_curvature(config, out_dir=out_dir, threads=threads)
        result.text = dumps_json({"failed": result.data["failed"], "points": len(result.data["points"]), "files": result.files})
    elif args.command == "geodesic":
        result = commands.cmd_geodesic(config, args.p0, args.v, args.t_end, args.steps, svg=args.svg, out_dir=out_dir)
    elif args.command == "transport":
        result = commands.cmd_transport(config, args.v, args.start, args.path, out_dir=out_dir)
    elif args.command == "flatness":
        result = commands.cmd_flatness(config, samples=args.samples, out_dir=out_dir)
    elif args.command == "verify":
        result = commands.cmd_verify(config, suite=args.suite, out_dir=out_dir)
    else:
        result = commands.cmd_limits(config, args.p, args.u, args.v, out_dir=out_dir)

    sys.stdout.write(result.text if result.text is not None else dumps_json(result.data))
    for path in result.files:
        logger.info("wrote %s", path)
    return result.exit_code


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        sys.stderr.write(f"pacal: {e}\n")
        return e.exit_code
    except SystemExit as e:
        return int(e.code or 0)

    try:
        settings = get_settings()
    except ValueError as e:
        sys.stderr.write(f"pacal: {e}\n")
        return UsageError.exit_code
    configure_logging(settings)

    try:
        return run(args, settings.THREADS)
    except PacalError as e:
        logger.error("%s", e)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
