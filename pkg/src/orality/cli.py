"""Command line entry point: configure providers and layout, run the server."""

from __future__ import annotations

import argparse
import logging
import sys

import uvicorn

from .layout import LayoutParams
from .providers import ProviderError, mock_providers, providers_from_env
from .server import create_app
from .stimulation import CONFLICT_REPORT_FLOOR


def build_parser() -> argparse.ArgumentParser:
    defaults = LayoutParams()
    parser = argparse.ArgumentParser(
        prog="orality",
        description="Speech-first semantic canvas server.",
    )
    parser.add_argument("--host", default="127.0.0.1", help="bind address")
    parser.add_argument("--port", type=int, default=8765, help="bind port")
    parser.add_argument("--session-dir", default="sessions",
                        help="directory for session files (autosaved on every snapshot)")
    parser.add_argument("--memo-dir", default=None,
                        help="also write exported memos to this directory")
    parser.add_argument("--mock-providers", action="store_true",
                        help="run fully offline with deterministic mock providers")
    parser.add_argument("--layout-tau", type=float, default=defaults.tau,
                        help="similarity threshold for cross-topic attraction")
    parser.add_argument("--layout-radial-radius", type=float,
                        default=defaults.radial_radius,
                        help="distance of content nodes from their topic")
    parser.add_argument("--layout-step-max", type=float, default=defaults.step_max,
                        help="per-iteration displacement cap during refinement")
    parser.add_argument("--layout-iterations", type=int, default=defaults.iterations,
                        help="refinement iteration count")
    parser.add_argument("--layout-force-gain", type=float, default=defaults.force_gain,
                        help="attraction strength per unit similarity excess")
    parser.add_argument("--layout-min-separation", type=float,
                        default=defaults.min_separation,
                        help="minimum distance enforced between placed topics")
    parser.add_argument("--layout-canvas-extent", type=float,
                        default=defaults.canvas_extent,
                        help="half-size of the canvas PCA projection is scaled to")
    parser.add_argument("--conflict-floor", type=int, default=CONFLICT_REPORT_FLOOR,
                        help="minimum model confidence for a conflict edge (1-10)")
    parser.add_argument("--log-level", default="info",
                        choices=["critical", "error", "warning", "info", "debug"],
                        help="logging verbosity")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=args.log_level.upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    if args.mock_providers:
        providers = mock_providers()
    else:
        try:
            providers = providers_from_env()
        except ProviderError as exc:
            print(f"error: {exc}", file=sys.stderr)
            print("hint: run with --mock-providers for a fully offline session",
                  file=sys.stderr)
            return 2
    params = LayoutParams(
        tau=args.layout_tau,
        radial_radius=args.layout_radial_radius,
        step_max=args.layout_step_max,
        iterations=args.layout_iterations,
        force_gain=args.layout_force_gain,
        min_separation=args.layout_min_separation,
        canvas_extent=args.layout_canvas_extent,
    )
    app = create_app(
        providers=providers,
        params=params,
        session_dir=args.session_dir,
        conflict_floor=args.conflict_floor,
        memo_dir=args.memo_dir,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level=args.log_level)
    return 0


if __name__ == "__main__":
    sys.exit(main())
