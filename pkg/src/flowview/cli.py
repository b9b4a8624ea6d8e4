"""Command-line front door for the synthesis pipeline.

Subcommands mirror the pipeline stages (register, colorfix, flow) plus the
renderers (view, closeup) and the local navigator backend (serve). Exit
codes: 0 success, 1 usage error, 2 processing error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .closeup import CloseupParams, closeup_fused
from .color import apply_transfer, fit_transfer
from .errors import FlowViewError
from .flow import FlowParams, bidirectional_flow, flow_to_color
from .pipeline import PairConfig, prepare_pair
from .raster import load_image, read_flo, save_image, write_flo
from .registration import (
    estimate_homography,
    find_correspondences,
    load_correspondences,
    ransac_homography,
    save_correspondences,
    warp_perspective,
)
from .synthesis import overlay_rgb, synthesize_view


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Argparse variant reporting usage problems as exit code 1."""

    def error(self, message):
        raise _UsageError(message)


def _add_flow_params(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, default=15.0, help="smoothness weight")
    p.add_argument("--iterations", type=int, default=200, help="relaxation sweeps per level")
    p.add_argument("--levels", type=int, default=4, help="pyramid depth")
    p.add_argument("--warp-updates", type=int, default=3, help="re-warps per level")
    p.add_argument("--eps", type=float, default=1e-3, help="convergence threshold (px)")


def _flow_params(args) -> FlowParams:
    return FlowParams(
        alpha=args.alpha,
        iterations=args.iterations,
        levels=args.levels,
        warp_updates=args.warp_updates,
        convergence_eps=args.eps,
    )


def _build_parser() -> _Parser:
    parser = _Parser(prog="flowview", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("register", help="warp image b into image a's frame")
    p.add_argument("--a", required=True, help="reference image (untouched)")
    p.add_argument("--b", required=True, help="image to rectify")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--correspondences", help="JSON correspondence file")
    group.add_argument("--auto", action="store_true", help="NCC grid matching + RANSAC")
    p.add_argument("--out-a", required=True)
    p.add_argument("--out-b", required=True)
    p.add_argument("--dump-matches", help="write auto-detected correspondences as JSON")

    p = sub.add_parser("colorfix", help="match image b's colors to image a's")
    p.add_argument("--a", required=True, help="color reference")
    p.add_argument("--b", required=True, help="image to correct")
    p.add_argument("--out", required=True)
    p.add_argument("--dump-curve", help="write fitted transfer curve as JSON")

    p = sub.add_parser("flow", help="bidirectional optical flow between the pair")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--out", required=True, help="forward flow (.flo)")
    p.add_argument("--out-back", required=True, help="backward flow (.flo)")
    p.add_argument("--viz", help="write forward-flow color-wheel PNG")
    _add_flow_params(p)

    p = sub.add_parser("view", help="synthesize the viewpoint at fraction t")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--flow", help="precomputed forward .flo")
    p.add_argument("--flow-back", help="precomputed backward .flo")
    p.add_argument("--t", type=float, action="append", required=True,
                   help="viewpoint fraction in [0, 1]; repeatable")
    p.add_argument("--overlay-rgb", action="store_true",
                   help="combine exactly three --t renders into an RGB overlay")
    p.add_argument("--out", required=True)
    _add_flow_params(p)

    p = sub.add_parser("closeup", help="parallax close-up at fraction t")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--flow", help="precomputed forward .flo")
    p.add_argument("--flow-back", help="precomputed backward .flo")
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--zoom", type=float, required=True)
    p.add_argument("--cx", type=float, default=0.5)
    p.add_argument("--cy", type=float, default=0.5)
    p.add_argument("--tau", default="auto", help="magnitude threshold or 'auto'")
    p.add_argument("--feather", type=float, default=2.0)
    p.add_argument("--out", required=True)
    _add_flow_params(p)

    p = sub.add_parser("serve", help="run the local render service")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--correspondences")
    p.add_argument("--auto", action="store_true")
    p.add_argument("--port", type=int, default=8008)
    p.add_argument("--static", help="directory of viewer assets to serve at /")
    _add_flow_params(p)

    return parser


def _load_pair_and_flows(args):
    """Images plus flows: precomputed when both .flo paths are given,
    otherwise computed through the cached pipeline."""
    if args.flow and args.flow_back:
        img1 = load_image(args.a)
        img2 = load_image(args.b)
        return img1, img2, read_flo(args.flow), read_flo(args.flow_back)
    config = PairConfig(
        path1=Path(args.a), path2=Path(args.b), flow_params=_flow_params(args)
    )
    prep = prepare_pair(config)
    return prep.img1, prep.img2, prep.f12, prep.f21


def _cmd_register(args) -> int:
    img1 = load_image(args.a)
    img2 = load_image(args.b)
    if args.correspondences:
        pairs = load_correspondences(args.correspondences)
        homography = estimate_homography(pairs)
    else:
        pairs = find_correspondences(img1, img2)
        if args.dump_matches:
            save_correspondences(pairs, args.dump_matches)
        homography = ransac_homography(pairs)
    rect2 = warp_perspective(img2, homography, img1.width, img1.height)
    save_image(img1, args.out_a)
    save_image(rect2, args.out_b)
    return 0


def _cmd_colorfix(args) -> int:
    ref = load_image(args.a)
    src = load_image(args.b)
    curve = fit_transfer(src, ref)
    save_image(apply_transfer(src, curve), args.out)
    if args.dump_curve:
        curve.save(args.dump_curve)
    return 0


def _cmd_flow(args) -> int:
    img1 = load_image(args.a)
    img2 = load_image(args.b)
    f12, f21 = bidirectional_flow(img1, img2, _flow_params(args))
    write_flo(f12, args.out)
    write_flo(f21, args.out_back)
    if args.viz:
        save_image(flow_to_color(f12), args.viz)
    return 0


def _cmd_view(args) -> int:
    img1, img2, f12, f21 = _load_pair_and_flows(args)
    if args.overlay_rgb:
        if len(args.t) != 3:
            raise _UsageError("--overlay-rgb needs exactly three --t values")
        views = [synthesize_view(img1, img2, f12, f21, t).image for t in args.t]
        save_image(overlay_rgb(*views), args.out)
    else:
        if len(args.t) != 1:
            raise _UsageError("give exactly one --t (or use --overlay-rgb with three)")
        save_image(synthesize_view(img1, img2, f12, f21, args.t[0]).image, args.out)
    return 0


def _cmd_closeup(args) -> int:
    img1, img2, f12, f21 = _load_pair_and_flows(args)
    tau = args.tau if args.tau == "auto" else float(args.tau)
    params = CloseupParams(
        zoom=args.zoom, center=(args.cx, args.cy), tau=tau, feather=args.feather
    )
    save_image(closeup_fused(img1, img2, f12, f21, args.t, params), args.out)
    return 0


def _cmd_serve(args) -> int:
    from .service import serve

    config = PairConfig(
        path1=Path(args.a),
        path2=Path(args.b),
        correspondences=Path(args.correspondences) if args.correspondences else None,
        auto_register=args.auto,
        flow_params=_flow_params(args),
    )
    static = Path(args.static) if args.static else None
    serve(config, args.port, static_dir=static)
    return 0


_COMMANDS = {
    "register": _cmd_register,
    "colorfix": _cmd_colorfix,
    "flow": _cmd_flow,
    "view": _cmd_view,
    "closeup": _cmd_closeup,
    "serve": _cmd_serve,
}


def run_cli(argv: list[str]) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (FlowViewError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
