"""Command-line front end.

Machine-readable JSON goes to stdout, human summaries to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import bitstream, hwmodel, reorder
from .codec import CodecConfig, EndpointMode, decode, encode
from .errors import AscError
from .metrics import quality
from .tensor import BlockShape, derive_cubical_shape, read_fmap, write_fmap


def _emit(obj) -> None:
    json.dump(obj, sys.stdout, indent=2)
    sys.stdout.write("\n")


def _note(msg: str) -> None:
    print(msg, file=sys.stderr)


def _shape(args) -> BlockShape:
    if args.block_shape:
        return BlockShape.parse(args.block_shape)
    return derive_cubical_shape(args.block_size)


def _load_permutation(path):
    with open(path) as fh:
        return reorder.ChannelPermutation(json.load(fh))


def cmd_encode(args) -> int:
    fmap = read_fmap(args.input)
    shape = _shape(args)
    config = CodecConfig(shape, EndpointMode(args.endpoints), fmap.format, args.vbr)
    perm = None
    if args.permutation:
        perm = _load_permutation(args.permutation)
    elif args.reorder != "none":
        sim = reorder.similarity_matrix([fmap])
        perm = reorder.channel_order(sim, args.reorder, group_size=shape.c)
    blob = bitstream.serialize(encode(fmap, config, scale=args.scale, permutation=perm))
    with open(args.output, "wb") as fh:
        fh.write(blob)
    report = bitstream.measured_rate(blob, fmap)
    _emit(report.as_dict())
    _note(f"{args.input} -> {args.output}: shape {shape}, {len(blob)} bytes, "
          f"measured rate {float(report.measured):.4f}")
    return 0


def cmd_decode(args) -> int:
    with open(args.input, "rb") as fh:
        t = bitstream.deserialize(fh.read())
    fmap = decode(t)
    write_fmap(args.output, fmap)
    _note(f"{args.input} -> {args.output}: {fmap.format.name} {fmap.width}x{fmap.height}x{fmap.channels}")
    return 0


def cmd_stats(args) -> int:
    usage = None
    if args.stream:
        with open(args.stream, "rb") as fh:
            usage = bitstream.deserialize(fh.read()).scale_usage()
    report = quality(read_fmap(args.original), read_fmap(args.reconstructed), usage)
    _emit(report.as_dict())
    _note(f"PSNR {report.psnr:.3f} dB, L1 mean {report.l1_mean:.4f}, max error {report.max_abs_error}")
    return 0


def cmd_shape(args) -> int:
    s = derive_cubical_shape(args.block_size)
    _emit({"block_size": s.size, "w": s.w, "h": s.h, "c": s.c})
    _note(str(s))
    return 0


def cmd_reorder(args) -> int:
    maps = [read_fmap(p) for p in args.calibration]
    sim = reorder.similarity_matrix(maps)
    perm = reorder.channel_order(sim, args.method, group_size=args.group_size)
    text = json.dumps(list(perm.order))
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return 0


def cmd_hw_report(args) -> int:
    report = hwmodel.hw_report(check=not args.no_check)
    if args.format == "json":
        _emit(report)
        return 0
    print(f"{'variant':<18}{'div':>5}{'mul':>5}{'add':>5}   published   equivalence")
    for name, v in report["variants"].items():
        pub = v["published"]
        eq = v.get("equivalence")
        eq_text = "skipped" if eq is None else ", ".join(
            f"{k}: {e['mismatches']} mismatches / {e['pairs']}" for k, e in eq.items()
        )
        print(f"{name:<18}{v['dividers']:>5}{v['multipliers']:>5}{v['adders']:>5}"
              f"   ({pub['dividers']},{pub['multipliers']},{pub['adders']})   {eq_text}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ascfmap", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="compress an .fmap file into an .asc stream")
    p.add_argument("input")
    p.add_argument("output")
    size = p.add_mutually_exclusive_group()
    size.add_argument("--block-size", type=int, default=16)
    size.add_argument("--block-shape", metavar="WxHxC")
    p.add_argument("--endpoints", type=int, choices=(1, 2), default=2)
    p.add_argument("--vbr", action="store_true")
    p.add_argument("--scale", choices=("adaptive", "revised", "log"), default="adaptive")
    order = p.add_mutually_exclusive_group()
    order.add_argument("--reorder", choices=("none", "greedy", "heuristic"), default="none")
    order.add_argument("--permutation", metavar="FILE")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="decompress an .asc stream into an .fmap file")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("stats", help="compare an original and a reconstructed map")
    p.add_argument("original")
    p.add_argument("reconstructed")
    p.add_argument("--stream", help="stream whose per-scale block usage to report")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("shape", help="print the cubical block shape for a block size")
    p.add_argument("block_size", type=int)
    p.set_defaults(func=cmd_shape)

    p = sub.add_parser("reorder", help="derive a channel permutation from calibration maps")
    p.add_argument("calibration", nargs="+")
    p.add_argument("--method", choices=("greedy", "heuristic"), default="heuristic")
    p.add_argument("--group-size", type=int, default=2)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_reorder)

    p = sub.add_parser("hw-report", help="datapath operator census and equivalence check")
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("--no-check", action="store_true", help="skip the exhaustive INT8 equivalence check")
    p.set_defaults(func=cmd_hw_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (AscError, OSError, json.JSONDecodeError) as exc:
        _note(f"error: {type(exc).__name__}: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
