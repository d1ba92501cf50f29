"""Command-line entry point.

Subcommands: transmit, sweep-snr, sweep-bpp, edit, caption, inspect. Flags
mirror RunConfig; a JSON file via --config supplies defaults and explicit
flags win over it. The remote restorer endpoint may also come from the
SEMCAST_RESTORER_ENDPOINT environment variable.
"""

from __future__ import annotations

import argparse
import json
import os
import shlex
import sys
from pathlib import Path

from .errors import SemcastError
from .features import (
    CommandCaption,
    FillTextureRegion,
    FixedCaption,
    SetText,
    SidecarCaption,
    TintColorRegion,
    caption,
)
from .harness import (
    BPP_LADDER,
    PROFILES,
    RunConfig,
    cmd_edit,
    cmd_sweep_bpp,
    cmd_sweep_snr,
    cmd_transmit,
    inspect_stream,
)
from .imaging import read_rgb_png

ENDPOINT_ENV = "SEMCAST_RESTORER_ENDPOINT"


def _parse_snr(text: str) -> float:
    if text.lower() in ("inf", "+inf", "infinity"):
        return float("inf")
    return float(text)


def _add_run_flags(p: argparse.ArgumentParser, sweep: bool) -> None:
    p.add_argument("--image", type=Path, help="input PNG")
    p.add_argument("--config", type=Path, help="JSON file with RunConfig fields")
    p.add_argument("--profile", choices=sorted(PROFILES), help="extraction profile")
    p.add_argument("--transport",
                   choices=("digital", "analog", "both") if sweep else ("digital", "analog"))
    p.add_argument("--modulation", choices=("bpsk", "qpsk", "16qam", "64qam"))
    p.add_argument("--fec", choices=("identity", "repetition", "ldpc"))
    if sweep:
        p.add_argument("--snrs", help="comma-separated SNR grid in dB, e.g. 0,5,10,15,20")
        p.add_argument("--trials", type=int, help="trials per grid point")
    else:
        p.add_argument("--snr", help="channel Es/N0 in dB ('inf' for noiseless)")
    p.add_argument("--seed", type=int, help="base seed")
    p.add_argument("--backend", choices=("fallback", "remote", "none"))
    p.add_argument("--endpoint", help=f"remote restorer URL (or ${ENDPOINT_ENV})")
    p.add_argument("--gain", type=float, help="fallback compositor luminance gain")
    p.add_argument("--out", type=Path, help="output directory")


def _build_config(args, sweep: bool = False) -> RunConfig:
    data: dict = {}
    if args.config:
        data.update(json.loads(Path(args.config).read_text(encoding="utf-8")))

    def take(key, value, conv=None):
        if value is not None:
            data[key] = value
        if key in data and conv is not None:
            data[key] = conv(data[key])

    take("image", args.image, Path)
    take("profile", args.profile)
    take("transport", args.transport)
    take("modulation", args.modulation)
    take("fec", args.fec)
    take("seed", args.seed, int)
    take("backend", args.backend)
    take("endpoint", args.endpoint)
    take("luminance_gain", args.gain, float)
    take("out_dir", args.out, Path)
    if sweep:
        snrs = args.snrs
        if snrs is not None:
            data["snr_list"] = [_parse_snr(s) for s in snrs.split(",")]
        elif "snr_list" in data:
            data["snr_list"] = [_parse_snr(str(s)) for s in data["snr_list"]]
        take("trials", args.trials, int)
    else:
        if args.snr is not None:
            data["snr_db"] = _parse_snr(args.snr)
        elif "snr_db" in data:
            data["snr_db"] = _parse_snr(str(data["snr_db"]))

    if not data.get("endpoint"):
        env = os.environ.get(ENDPOINT_ENV)
        if env:
            data["endpoint"] = env
    if "image" not in data:
        raise ValueError("an input image is required (--image or config)")
    data["image"] = Path(data["image"])
    if "out_dir" in data:
        data["out_dir"] = Path(data["out_dir"])
    if "snr_list" in data:
        data["snr_list"] = tuple(data["snr_list"])
    if "profiles" in data:
        data["profiles"] = tuple(data["profiles"])
    return RunConfig(**data)


def _rect(parts: list[str], n: int, what: str) -> list[int]:
    if len(parts) != n:
        raise ValueError(f"{what} wants {n} comma-separated ints, got {len(parts)}")
    return [int(p) for p in parts]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="semcast",
        description="semantic image transmission over simulated wireless channels")
    sub = parser.add_subparsers(dest="command", required=True)

    p_tx = sub.add_parser("transmit", help="one end-to-end transmission")
    _add_run_flags(p_tx, sweep=False)

    p_snr = sub.add_parser("sweep-snr", help="SNR grid with trials and CSV output")
    _add_run_flags(p_snr, sweep=True)

    p_bpp = sub.add_parser("sweep-bpp", help="noiseless rate ladder CSV")
    _add_run_flags(p_bpp, sweep=False)
    p_bpp.add_argument("--profiles", help=f"comma-separated ladder (default {','.join(BPP_LADDER)})")

    p_edit = sub.add_parser("edit", help="edit a stored payload and restore before/after")
    p_edit.add_argument("--bits", type=Path, required=True, help="stored payload stream")
    p_edit.add_argument("--set-text", help="replace the caption")
    p_edit.add_argument("--tint", action="append", default=[],
                        help="x,y,w,h,r,g,b color-cell rectangle fill (repeatable)")
    p_edit.add_argument("--fill-texture", action="append", default=[],
                        help="x,y,w,h,value texture-cell rectangle fill (repeatable)")
    p_edit.add_argument("--backend", choices=("fallback", "remote"), default="fallback")
    p_edit.add_argument("--endpoint")
    p_edit.add_argument("--gain", type=float, default=1.0)
    p_edit.add_argument("--seed", type=int, default=0)
    p_edit.add_argument("--out", type=Path, default=Path("edits"))

    p_cap = sub.add_parser("caption", help="run a caption source against an image")
    p_cap.add_argument("--image", type=Path, required=True)
    group = p_cap.add_mutually_exclusive_group()
    group.add_argument("--text", help="fixed caption text")
    group.add_argument("--cmd", help="captioner command line; image path appended")
    group.add_argument("--sidecar", action="store_true",
                       help="read <image>.txt next to the input")

    p_ins = sub.add_parser("inspect", help="dump a stored stream's header and accounting")
    p_ins.add_argument("--bits", type=Path, required=True)

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except (SemcastError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _dispatch(args) -> int:
    if args.command == "transmit":
        report, paths = cmd_transmit(_build_config(args))
        print(json.dumps(report.to_dict(), sort_keys=True))
        for name, path in sorted(paths.items()):
            print(f"{name}: {path}")
        return 0

    if args.command == "sweep-snr":
        path = cmd_sweep_snr(_build_config(args, sweep=True))
        print(f"csv: {path}")
        return 0

    if args.command == "sweep-bpp":
        cfg = _build_config(args)
        if args.profiles:
            cfg.profiles = tuple(args.profiles.split(","))
        path = cmd_sweep_bpp(cfg)
        print(f"csv: {path}")
        return 0

    if args.command == "edit":
        edits = []
        if args.set_text is not None:
            edits.append(SetText(args.set_text))
        for arg in args.tint:
            x, y, w, h, r, g, b = _rect(arg.split(","), 7, "--tint")
            edits.append(TintColorRegion((x, y, w, h), (r, g, b)))
        for arg in args.fill_texture:
            x, y, w, h, v = _rect(arg.split(","), 5, "--fill-texture")
            edits.append(FillTextureRegion((x, y, w, h), v))
        if not edits:
            raise ValueError("no edit given: use --set-text, --tint, or --fill-texture")
        endpoint = args.endpoint or os.environ.get(ENDPOINT_ENV)
        paths = cmd_edit(args.bits, edits, args.out, args.backend, endpoint,
                         args.gain, args.seed)
        for name, path in sorted(paths.items()):
            print(f"{name}: {path}")
        return 0

    if args.command == "caption":
        if args.text:
            source = FixedCaption(args.text)
        elif args.cmd:
            source = CommandCaption(tuple(shlex.split(args.cmd)))
        else:
            source = SidecarCaption()
        image = read_rgb_png(args.image)
        print(caption(image, source, args.image))
        return 0

    if args.command == "inspect":
        print(json.dumps(inspect_stream(args.bits), indent=2, sort_keys=True))
        return 0

    raise ValueError(f"unhandled command {args.command!r}")


if __name__ == "__main__":
    raise SystemExit(main())
