"""maskforge command-line interface.

Subcommands: extract, synth, pair, apply, video, eval, losses-check. All
randomness funnels through explicit --seed flags so every run is reproducible.
Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error. Set
MASKFORGE_LOG to control verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import extraction, geometry, imageio, losses, metrics, parsing, synthesis, video

log = logging.getLogger("maskforge")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the CLI contract wants 1
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _load_library(path: str | None) -> synthesis.StyleLibrary:
    if path is None:
        return synthesis.default_library()
    return synthesis.load_library(path)


def _cluster_params(args) -> extraction.ClusterParams:
    return extraction.ClusterParams(k=args.k, s=args.s, seed=args.seed)


def cmd_extract(args) -> int:
    photo = imageio.read_rgb(args.photo)
    lm = geometry.load_landmarks(args.landmarks)
    pmask = parsing.load_parsing(args.parsing, args.labels)
    mask, stats = extraction.extract_eye_mask_with_stats(
        photo, lm, pmask, _cluster_params(args), chroma_only=args.chroma_only
    )
    imageio.write_rgba(args.out, mask)
    if args.json:
        print(
            json.dumps(
                {
                    "out": str(args.out),
                    "skin_tone_lab": stats.skin_tone_lab,
                    "cluster_counts": stats.cluster_counts,
                    "elapsed_ms": stats.elapsed_ms,
                },
                sort_keys=True,
            )
        )
    return EXIT_OK


def cmd_synth(args) -> int:
    lib = _load_library(args.lib)
    canon = geometry.default_canonical()
    style = synthesis.sample_style(lib, args.seed)
    mask = synthesis.render_style_mask(style, lib, canon)
    imageio.write_rgba(args.out, mask)
    if args.json:
        print(json.dumps({"out": str(args.out), "style": style.to_json()}, sort_keys=True))
    return EXIT_OK


def cmd_pair(args) -> int:
    lib = _load_library(args.lib)
    result = synthesis.generate_dataset(
        args.faces,
        lib,
        n_styles_per_face=args.styles_per_face,
        out_dir=args.out,
        base_seed=args.seed,
        workers=args.workers,
    )
    if args.json:
        print(
            json.dumps(
                {
                    "manifest": str(result.manifest_path),
                    "pairs": len(result.rows),
                    "failures": result.failures,
                },
                sort_keys=True,
            )
        )
    return EXIT_OK


def cmd_apply(args) -> int:
    mask = imageio.read_rgba(args.mask)
    frame_img = imageio.read_rgb(args.frame)
    lm = geometry.load_landmarks(args.landmarks)
    pmask = parsing.load_parsing(args.parsing, args.labels) if args.parsing else None
    frame = video.FrameInput(image=frame_img, landmarks=lm, parsing=pmask)
    options = video.ApplyOptions(alpha_scale=args.alpha_scale)
    out, ok = video.apply_to_frame(mask, frame, options=options)
    imageio.write_rgb(args.out, out)
    if not ok:
        log.warning("degenerate landmarks: wrote passthrough frame")
    if args.json:
        print(json.dumps({"out": str(args.out), "ok": ok}, sort_keys=True))
    return EXIT_OK


def _frame_inputs(frames_dir: Path) -> list[video.FrameInput]:
    pngs = sorted(frames_dir.glob("*.png"))
    pngs = [p for p in pngs if not p.stem.endswith("_seg")]
    if not pngs:
        raise FileNotFoundError(f"no frame PNGs under {frames_dir}")
    frames = []
    for p in pngs:
        lm_path = p.with_suffix(".json")
        if not lm_path.exists():
            raise FileNotFoundError(f"missing landmark JSON for frame {p.name}")
        seg = p.with_name(p.stem + "_seg.png")
        pmask = parsing.load_parsing(seg) if seg.exists() else None
        frames.append(
            video.FrameInput(
                image=imageio.read_rgb(p),
                landmarks=geometry.load_landmarks(lm_path),
                parsing=pmask,
            )
        )
    return frames


def cmd_video(args) -> int:
    mask = imageio.read_rgba(args.mask)
    frames = _frame_inputs(Path(args.frames))
    config = video.VideoConfig(beta=args.beta, workers=args.workers)
    outputs, report = video.run_video(mask, frames, config=config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for i, img in enumerate(outputs):
        imageio.write_rgb(out_dir / f"frame_{i:05d}.png", img)
    with open(out_dir / "timing.json", "w") as f:
        json.dump(report.to_json(), f, indent=2, sort_keys=True)
    if args.json:
        print(json.dumps(report.to_json(), sort_keys=True))
    return EXIT_OK


def cmd_eval(args) -> int:
    lib = _load_library(args.lib)
    report = metrics.synthetic_transfer_eval(
        args.faces,
        lib,
        seed=args.seed,
        n_pairs=args.pairs,
        params=extraction.ClusterParams(k=args.k, s=args.s, seed=args.seed),
        workers=args.workers,
        use_gt_mask=args.use_gt_mask,
    )
    report.write_json(args.out)
    if args.csv:
        report.write_csv(args.csv)
    if args.json:
        print(json.dumps(report.to_json(), sort_keys=True))
    return EXIT_OK


def cmd_losses_check(args) -> int:
    doc = losses.write_loss_vectors(args.out, seed=args.seed)
    worst = max(doc["max_rel_grad_error"].values())
    if args.json:
        print(json.dumps(doc, sort_keys=True))
    else:
        for name, err in sorted(doc["max_rel_grad_error"].items()):
            print(f"{name}: max relative gradient error {err:.3e}")
    if worst > args.tolerance:
        log.error("gradient check exceeded tolerance %g (worst %g)", args.tolerance, worst)
        return EXIT_DATA
    return EXIT_OK


def build_parser() -> _Parser:
    p = _Parser(prog="maskforge", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp, seed=True, workers=False):
        if seed:
            sp.add_argument("--seed", type=int, default=0)
        if workers:
            sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--json", action="store_true", help="machine-readable stdout")

    sp = sub.add_parser("extract", help="extract an RGBA eye-makeup mask from a photo")
    sp.add_argument("--photo", required=True)
    sp.add_argument("--landmarks", required=True)
    sp.add_argument("--parsing", required=True)
    sp.add_argument("--labels", default=None, help="sidecar JSON mapping label ids to names")
    sp.add_argument("--out", required=True)
    sp.add_argument("--k", type=int, default=6)
    sp.add_argument("--s", type=int, default=2)
    sp.add_argument("--chroma-only", action="store_true")
    add_common(sp)
    sp.set_defaults(fn=cmd_extract)

    sp = sub.add_parser("synth", help="render a sampled style mask")
    sp.add_argument("--lib", default=None, help="style library dir (default: packaged)")
    sp.add_argument("--out", required=True)
    add_common(sp)
    sp.set_defaults(fn=cmd_synth)

    sp = sub.add_parser("pair", help="generate a paired pseudo-GT dataset")
    sp.add_argument("--faces", required=True, help="JSONL manifest of {image, landmarks}")
    sp.add_argument("--lib", default=None)
    sp.add_argument("--styles-per-face", type=int, default=3)
    sp.add_argument("--out", required=True)
    add_common(sp, workers=True)
    sp.set_defaults(fn=cmd_pair)

    sp = sub.add_parser("apply", help="apply a mask to a single image")
    sp.add_argument("--mask", required=True)
    sp.add_argument("--frame", required=True)
    sp.add_argument("--landmarks", required=True)
    sp.add_argument("--parsing", default=None)
    sp.add_argument("--labels", default=None)
    sp.add_argument("--alpha-scale", type=float, default=1.0)
    sp.add_argument("--out", required=True)
    add_common(sp, seed=False)
    sp.set_defaults(fn=cmd_apply)

    sp = sub.add_parser("video", help="apply a mask to a directory of frames")
    sp.add_argument("--mask", required=True)
    sp.add_argument("--frames", required=True, help="dir of NNN.png + NNN.json landmarks")
    sp.add_argument("--out", required=True)
    sp.add_argument("--beta", type=float, default=0.0, help="landmark EMA smoothing")
    add_common(sp, seed=False, workers=True)
    sp.set_defaults(fn=cmd_video)

    sp = sub.add_parser("eval", help="synthetic transfer-fidelity protocol")
    sp.add_argument("--faces", required=True)
    sp.add_argument("--lib", default=None)
    sp.add_argument("--pairs", type=int, default=metrics.DEFAULT_EVAL_PAIRS)
    sp.add_argument("--k", type=int, default=6)
    sp.add_argument("--s", type=int, default=2)
    sp.add_argument("--use-gt-mask", action="store_true", help="skip extraction (oracle)")
    sp.add_argument("--out", required=True)
    sp.add_argument("--csv", default=None)
    add_common(sp, workers=True)
    sp.set_defaults(fn=cmd_eval)

    sp = sub.add_parser("losses-check", help="gradient-oracle report for all losses")
    sp.add_argument("--out", required=True)
    sp.add_argument("--tolerance", type=float, default=1e-4)
    add_common(sp)
    sp.set_defaults(fn=cmd_losses_check)

    return p


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("MASKFORGE_LOG", "WARNING").upper())
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.fn(args)
    except (FileNotFoundError, ValueError, KeyError, RuntimeError, json.JSONDecodeError) as e:
        log.error("%s", e)
        print(f"maskforge: data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except Exception as e:  # pragma: no cover - defensive
        log.exception("internal error")
        print(f"maskforge: internal error: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
