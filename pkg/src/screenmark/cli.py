"""Command-line entry point.

Subcommands: train, embed, extract, eval, capture-sim, gen-overlay, serve.
Exit codes: 0 success, 2 watermark decode failure, 1 any other error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

import numpy as np

from . import codec
from .capture_sim import (CaptureScenario, eval_rows_to_csv, eval_rows_to_json,
                          run_eval_matrix, simulate_capture)
from .extraction import ExtractionParams, extract_watermark
from .images import load_image, save_png
from .models import load_bundle, save_bundle, encoder_forward
from .overlay import tile_overlay, composite, psnr, ssim
from .training import TrainConfig, train


def parse_corners(text):
    """Parse 'x1,y1;x2,y2;x3,y3;x4,y4' (TL,TR,BR,BL order)."""
    try:
        pts = [tuple(float(v) for v in p.split(",")) for p in text.split(";")]
    except ValueError:
        raise ValueError(f"malformed corners string: {text!r}") from None
    if len(pts) != 4 or any(len(p) != 2 for p in pts):
        raise ValueError("corners must be four x,y pairs separated by ';'")
    return pts


def _atomic_write(path, writer):
    d = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    os.close(fd)
    try:
        writer(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def cmd_train(args):
    cfg = TrainConfig.from_json(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    bundle, log = train(cfg)
    _atomic_write(args.out, lambda p: save_bundle(bundle, p))
    if args.log:
        log.to_csv(args.log)
    print(f"trained {cfg.iterations} iterations; model written to {args.out}")
    return 0


def cmd_embed(args):
    bundle = load_bundle(args.model)
    payload = codec.hex_to_bits(args.payload, codec.PAYLOAD_BITS)
    word = codec.bch_encode(payload)
    screen = load_image(args.screen)
    if screen.ndim == 2:
        screen = np.stack([screen] * 3, axis=-1)
    H, W = screen.shape[:2]
    tile = encoder_forward(word, bundle)
    marked = composite(screen, tile_overlay(tile, W, H), args.alpha)
    save_png(marked, args.out)
    print(json.dumps({"psnr_db": psnr(screen, marked),
                      "ssim": ssim(screen, marked)}))
    return 0


def cmd_extract(args):
    bundle = load_bundle(args.model)
    photo = load_image(args.photo)
    corners = parse_corners(args.corners) if args.corners else None
    params = ExtractionParams(median_window=args.median_window,
                              threshold=args.threshold,
                              period_min=args.period_min,
                              period_max=args.period_max,
                              gauss_sigma=args.gauss_sigma)
    out_size = None
    if args.rectify_size:
        w, h = args.rectify_size.split("x")
        out_size = (int(w), int(h))
    rep = extract_watermark(photo, params, bundle, corners=corners,
                            out_size=out_size)
    doc = rep.to_json_dict()
    if args.out:
        with open(args.out, "w") as f:
            json.dump(doc, f, indent=2)
    else:
        print(json.dumps(doc, indent=2))
    if args.dump_intermediates:
        os.makedirs(args.dump_intermediates, exist_ok=True)
        for name, img in rep.artifacts().items():
            save_png(img, os.path.join(args.dump_intermediates, f"{name}.png"))
    return 0 if rep.bch_status == "ok" else 2


def cmd_eval(args):
    bundle = load_bundle(args.model)
    with open(args.scenarios) as f:
        raw = json.load(f)
    scenarios = [(item["label"], CaptureScenario.from_dict(item["scenario"]))
                 for item in raw]
    rows = run_eval_matrix(bundle, scenarios, args.trials, alpha=args.alpha,
                           seed=args.seed or 0)
    eval_rows_to_csv(rows, args.out + ".csv")
    eval_rows_to_json(rows, args.out + ".json")
    for r in rows:
        print(f"{r.label}: BER={r.ber:.4f} le3={r.le3_count}/{r.total} "
              f"decoded={r.ok_count}/{r.total}")
    return 0


def cmd_capture_sim(args):
    with open(args.scenario) as f:
        scenario = CaptureScenario.from_dict(json.load(f))
    if args.seed is not None:
        scenario.seed = args.seed
    image = load_image(args.image)
    photo, corners = simulate_capture(image, scenario)
    save_png(photo, args.out)
    print(json.dumps({"corners": ";".join(f"{x:.2f},{y:.2f}"
                                          for x, y in corners)}))
    return 0


def cmd_gen_overlay(args):
    bundle = load_bundle(args.model)
    payload = codec.hex_to_bits(args.payload, codec.PAYLOAD_BITS)
    tile = encoder_forward(codec.bch_encode(payload), bundle)
    w, h = args.size.split("x")
    save_png(tile_overlay(tile, int(w), int(h)), args.out)
    return 0


def cmd_serve(args):
    import socket
    import uvicorn
    from .service import create_app
    app = create_app(model_path=args.model)
    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    sock.bind(("127.0.0.1", args.port))
    print(f"listening on 127.0.0.1:{sock.getsockname()[1]}", flush=True)
    config = uvicorn.Config(app, log_level="warning")
    uvicorn.Server(config).run(sockets=[sock])
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="screenmark")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train the three networks")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--log")
    p.add_argument("--seed", type=int)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("embed", help="composite a watermark overlay onto an image")
    p.add_argument("--model", required=True)
    p.add_argument("--payload", required=True, help="8 hex digits (32 bits)")
    p.add_argument("--screen", required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_embed)

    p = sub.add_parser("extract", help="blind extraction from a photograph")
    p.add_argument("--model", required=True)
    p.add_argument("--photo", required=True)
    p.add_argument("--corners", help="x1,y1;x2,y2;x3,y3;x4,y4 TL,TR,BR,BL")
    p.add_argument("--rectify-size", help="WxH of the rectified image")
    p.add_argument("--median-window", type=int, default=15)
    p.add_argument("--threshold", type=float, default=16 / 255)
    p.add_argument("--period-min", type=int, default=40)
    p.add_argument("--period-max", type=int, default=400)
    p.add_argument("--gauss-sigma", type=float, default=2.0)
    p.add_argument("--out")
    p.add_argument("--dump-intermediates", metavar="DIR")
    p.set_defaults(fn=cmd_extract)

    p = sub.add_parser("eval", help="run an evaluation matrix of scenarios")
    p.add_argument("--model", required=True)
    p.add_argument("--scenarios", required=True)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--alpha", type=float, default=8 / 255)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="output path stem")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("capture-sim", help="simulate the screen-camera channel")
    p.add_argument("--image", required=True)
    p.add_argument("--scenario", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_capture_sim)

    p = sub.add_parser("gen-overlay", help="render a tiled overlay PNG")
    p.add_argument("--model", required=True)
    p.add_argument("--payload", required=True)
    p.add_argument("--size", required=True, help="WxH, e.g. 1920x1080")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_gen_overlay)

    p = sub.add_parser("serve", help="run the analyst workbench service")
    p.add_argument("--model", required=True)
    p.add_argument("--port", type=int, default=8321)
    p.set_defaults(fn=cmd_serve)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
