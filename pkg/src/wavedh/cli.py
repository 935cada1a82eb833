"""``wavedh`` command line: dehaze, info, synth, eval, bench, init-weights.

Exit status: 0 on success, 1 for usage errors, 2 for unreadable or invalid
input data.  Messages for non-zero exits go to standard error.
"""

from __future__ import annotations

import argparse
import json
import os
import statistics
import sys
import time
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import haze, imaging, metrics, model, weights
from .errors import WaveDHError

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _size(text: str) -> tuple:
    try:
        h, w = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"size must look like HxW, got {text!r}") from None
    if h < 1 or w < 1:
        raise argparse.ArgumentTypeError(f"size must be positive, got {text!r}")
    return h, w


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _non_negative(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not np.isfinite(v) or v < 0:
        raise argparse.ArgumentTypeError(f"expected a finite value >= 0, got {text!r}")
    return v


def _airlight(text: str) -> tuple:
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"airlight must be R,G,B, got {text!r}") from None
    if len(vals) != 3 or not all(0.0 <= v <= 1.0 for v in vals):
        raise argparse.ArgumentTypeError(f"airlight must be three values in [0, 1], got {text!r}")
    return vals


def _config_arg(p):
    p.add_argument("--config", default="wavedh", choices=sorted(model.PRESETS))


def _threads_arg(p):
    p.add_argument("--threads", type=_positive_int, default=os.cpu_count() or 1,
                   help="BLAS threads (default: all cores); results do not depend on it")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wavedh", description="Wavelet-domain dehazing network (NumPy inference).")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("dehaze", help="dehaze a PPM image")
    p.add_argument("--weights", required=True, type=Path)
    _config_arg(p)
    p.add_argument("--input", required=True, type=Path)
    p.add_argument("--output", required=True, type=Path)
    _threads_arg(p)

    p = sub.add_parser("info", help="print parameter and MAC counts")
    _config_arg(p)
    p.add_argument("--size", type=_size, default=(256, 256), metavar="HxW")

    p = sub.add_parser("synth", help="render a hazy image from a clear image and a depth map")
    p.add_argument("--clear", required=True, type=Path)
    p.add_argument("--depth", required=True, type=Path, help="8-bit PGM scaled to [0, dmax]")
    p.add_argument("--beta", required=True, type=_non_negative)
    p.add_argument("--airlight", required=True, type=_airlight, metavar="R,G,B")
    p.add_argument("--dmax", type=_non_negative, default=1.0)
    p.add_argument("--output", required=True, type=Path)
    p.add_argument("--emit-truth", type=Path, metavar="JSON")

    p = sub.add_parser("eval", help="mean PSNR/SSIM over paired PPM files")
    p.add_argument("--pred", required=True, type=Path)
    p.add_argument("--truth", required=True, type=Path)

    p = sub.add_parser("bench", help="time forward passes on a random input")
    _config_arg(p)
    p.add_argument("--size", type=_size, default=(256, 256), metavar="HxW")
    p.add_argument("--iters", type=_positive_int, default=5)
    p.add_argument("--seed", type=_seed, default=0)
    _threads_arg(p)

    p = sub.add_parser("init-weights", help="write seeded random weights")
    _config_arg(p)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--output", required=True, type=Path)
    return parser


def cmd_dehaze(args, out) -> int:
    cfg = model.preset(args.config)
    net = model.build(cfg, weights.load(args.weights))
    img = imaging.read_ppm(args.input)
    start = time.perf_counter()
    with threadpool_limits(limits=args.threads):
        pred = model.forward(net, imaging.to_tensor(img))
    elapsed = time.perf_counter() - start
    imaging.write_ppm(imaging.from_tensor(pred), args.output)
    print(f"dehazed {img.width}x{img.height} in {elapsed:.3f} s -> {args.output}", file=out)
    return EXIT_OK


def cmd_info(args, out) -> int:
    h, w = args.size
    if h % model.SIZE_MULTIPLE or w % model.SIZE_MULTIPLE:
        raise UsageError(f"--size must be multiples of {model.SIZE_MULTIPLE}, got {h}x{w}")
    cfg = model.preset(args.config)
    prof = model.profile(cfg, h, w)
    print(f"config {args.config} ({cfg.fingerprint()})", file=out)
    print(prof.summary(), file=out)
    print(file=out)
    print(prof.format_table(), file=out)
    return EXIT_OK


def cmd_synth(args, out) -> int:
    clear = imaging.read_ppm(args.clear)
    depth = imaging.read_pgm(args.depth).astype(np.float64) * (args.dmax / imaging.MAXVAL)
    params = haze.HazeParams(args.airlight, args.beta, depth)
    hazy = haze.synthesize_haze(imaging.to_tensor(clear), params)
    imaging.write_ppm(imaging.from_tensor(hazy), args.output)
    if args.emit_truth:
        truth = {"airlight": list(params.airlight), "beta": params.beta, "dmax": args.dmax}
        args.emit_truth.write_text(json.dumps(truth) + "\n")
    t = params.transmission()
    print(f"wrote {args.output} (transmission {t.min():.4f}..{t.max():.4f})", file=out)
    return EXIT_OK


def _pairs(pred: Path, truth: Path) -> list:
    if pred.is_file() and truth.is_file():
        return [(pred.name, pred, truth)]
    if not pred.is_dir() or not truth.is_dir():
        raise FileNotFoundError("--pred and --truth must both be directories or both files")
    names = sorted(p.name for p in pred.iterdir() if p.suffix.lower() == ".ppm")
    if not names:
        raise FileNotFoundError(f"no .ppm files in {pred}")
    missing = [n for n in names if not (truth / n).is_file()]
    if missing:
        raise FileNotFoundError(f"no ground truth for: {', '.join(missing)}")
    return [(n, pred / n, truth / n) for n in names]


def cmd_eval(args, out) -> int:
    scores = []
    for name, p, t in _pairs(args.pred, args.truth):
        a = imaging.to_tensor(imaging.read_ppm(p), np.float64)
        b = imaging.to_tensor(imaging.read_ppm(t), np.float64)
        s = (metrics.psnr(a, b), metrics.ssim(a, b))
        scores.append(s)
        print(f"{name}\tPSNR {metrics.format_psnr(s[0])} dB\tSSIM {metrics.format_ssim(s[1])}", file=out)
    mean_psnr = float(np.mean([s[0] for s in scores]))
    mean_ssim = float(np.mean([s[1] for s in scores]))
    print(f"mean ({len(scores)} images)\tPSNR {metrics.format_psnr(mean_psnr)} dB"
          f"\tSSIM {metrics.format_ssim(mean_ssim)}", file=out)
    return EXIT_OK


def cmd_bench(args, out) -> int:
    cfg = model.preset(args.config)
    net = model.build(cfg, weights.init_random(cfg, args.seed))
    h, w = args.size
    rng = np.random.default_rng(args.seed)
    x = rng.random((1, cfg.in_channels, h, w), dtype=np.float32)
    times = []
    with threadpool_limits(limits=args.threads):
        model.forward(net, x)  # warm-up
        for _ in range(args.iters):
            start = time.perf_counter()
            y = model.forward(net, x)
            times.append(time.perf_counter() - start)
    if not np.all(np.isfinite(y)):
        raise WaveDHError("forward produced non-finite values")
    med = statistics.median(times)
    print(f"config {args.config} size {h}x{w} threads {args.threads} iters {args.iters}", file=out)
    print(f"median latency {med * 1e3:.1f} ms, {1.0 / med:.2f} images/sec", file=out)
    return EXIT_OK


def cmd_init_weights(args, out) -> int:
    cfg = model.preset(args.config)
    store = weights.init_random(cfg, args.seed)
    weights.save(store, args.output)
    print(f"wrote {args.output}: {len(store)} tensors, {store.element_count:,} parameters", file=out)
    return EXIT_OK


COMMANDS = {
    "dehaze": cmd_dehaze,
    "info": cmd_info,
    "synth": cmd_synth,
    "eval": cmd_eval,
    "bench": cmd_bench,
    "init-weights": cmd_init_weights,
}


def run(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args, out)
    except BrokenPipeError:
        # output consumer went away (e.g. piped into head)
        sys.stdout = open(os.devnull, "w")
        return EXIT_OK
    except UsageError as exc:
        print(f"wavedh {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (WaveDHError, OSError, ValueError) as exc:
        print(f"wavedh {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(run())
