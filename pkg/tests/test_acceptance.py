"""Acceptance suite: one test per release criterion, at the stated tolerances.

Run with `pytest tests/test_acceptance.py -v -s` to see one PASS/FAIL line per
criterion.
"""

import hashlib
import json
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

from maskforge import (
    cli,
    color,
    extraction,
    geometry,
    imageio,
    losses,
    metrics,
    synthesis,
    video,
)
from maskforge.synthesis import MakeupStyle, RegionStyle

import util


@contextmanager
def criterion(name):
    try:
        yield
    except Exception:
        print(f"[ACCEPTANCE] {name}: FAIL")
        raise
    print(f"[ACCEPTANCE] {name}: PASS")


FIXTURE_SHADOW_COLORS = [
    ("plum", (0.35, 0.12, 0.33)),
    ("navy", (0.08, 0.10, 0.32)),
    ("teal", (0.05, 0.32, 0.36)),
    ("violet", (0.28, 0.14, 0.45)),
]


def test_eq1_extraction_fidelity(canon, library):
    """20 flat-skin faces with known eyeshadow: alpha correlation > 0.95 in the
    eye region; extraction under 1 s per 256x256 eye crop."""
    with criterion("Eq.1 extraction fidelity"):
        rng = np.random.default_rng(2024)
        from maskforge import _kernels

        _kernels.warmup()
        worst = 1.0
        crop_times = []
        for i in range(20):
            face = util.make_face(256, seed=i)
            _, rgb = FIXTURE_SHADOW_COLORS[i % 4]
            style = MakeupStyle(
                regions={
                    "eyeshadow": RegionStyle(
                        "eyeshadow_defined", rgb, float(rng.uniform(0.55, 0.9)), "matte"
                    )
                },
                seed=i,
            )
            smask = synthesis.render_style_mask(style, library, canon)
            after, warped = synthesis.generate_pair(face.image, face.landmarks, smask, canon)
            t0 = time.perf_counter()
            ext = extraction.extract_eye_mask(after, face.landmarks, face.parsing, canon=canon)
            crop_times.append((time.perf_counter() - t0) / 2.0)  # two eye crops
            T = geometry.fit_canonical_affine(face.landmarks, canon)
            inv = geometry.invert_affine(T)
            ext_face = geometry.apply_affine(ext, inv, (256, 256))
            gate = metrics.extraction_gate(face.landmarks, face.parsing, canon)
            gate_face = (
                geometry.apply_affine(np.dstack([gate.astype(np.float64)] * 4), inv, (256, 256))[
                    ..., 0
                ]
                > 0.5
            ) & face.parsing.member_mask(("skin",))
            r = np.corrcoef(warped[..., 3][gate_face], ext_face[..., 3][gate_face])[0, 1]
            worst = min(worst, r)
            assert r > 0.95, f"face {i}: correlation {r:.4f}"
        assert max(crop_times) < 1.0, f"slowest crop {max(crop_times):.2f}s"
        print(f"  worst correlation {worst:.4f}, slowest crop {max(crop_times)*1000:.0f} ms")


def test_tps_exactness():
    """Control residual < 1e-6 px at reg=0 and exact affine reproduction
    (kernel weights < 1e-6) over 100 random configurations."""
    with criterion("TPS exactness"):
        rng = np.random.default_rng(7)
        for trial in range(100):
            n = int(rng.integers(4, 40))
            src = rng.uniform(0, 512, (n, 2))
            dst = src + rng.uniform(-50, 50, (n, 2))
            warp = geometry.tps_fit(src, dst)
            resid = np.abs(warp.transform(src) - dst).max()
            assert resid < 1e-6, f"trial {trial}: residual {resid:.2e}"
            A = np.array(
                [
                    [rng.uniform(0.5, 1.5), rng.uniform(-0.3, 0.3), rng.uniform(-50, 50)],
                    [rng.uniform(-0.3, 0.3), rng.uniform(0.5, 1.5), rng.uniform(-50, 50)],
                ]
            )
            aff = geometry.tps_fit(src, geometry.apply_affine_points(A, src))
            w = np.abs(aff.kernel_weights).max()
            assert w < 1e-6, f"trial {trial}: kernel weights {w:.2e}"


def test_loss_gradient_oracle():
    """Analytic vs central differences (step 1e-3, kink-avoided): max relative
    error <= 1e-4 for the reconstruction, lip color (both forms), and
    adversarial losses over 20 seeds of 8x8 inputs, in under 10 s."""
    with criterion("Loss gradient oracle"):
        t0 = time.perf_counter()
        step = 1e-3
        worst = {}
        for seed in range(20):
            rng = np.random.default_rng(seed)
            gt = rng.random((8, 8, 4))
            pred = losses.nudge_off_kinks(rng.random((8, 8, 4)), gt, 10 * step)
            M = (rng.random((8, 8)) < 0.5).astype(np.float64)
            if M.sum() == 0:
                M[0, 0] = 1.0
            logits = rng.normal(0, 3, (8, 8))
            checks = {
                "recon(Eq.3)": lambda x: losses.recon_alpha_weighted(x, gt),
                "lip_color(Eq.5)": lambda x: losses.lip_color_loss(x, gt, M),
                "lip_color_noreg(Eq.6)": lambda x: losses.lip_color_loss_noreg(x, gt, M),
            }
            for name, fn in checks.items():
                err = losses.finite_diff_check(fn, pred.copy(), step)
                worst[name] = max(worst.get(name, 0.0), err)
                assert err <= 1e-4, f"{name} seed {seed}: {err:.2e}"
            err = losses.finite_diff_check(
                lambda z: losses.adversarial_bce(z, True), logits.copy(), step
            )
            worst["adversarial_bce"] = max(worst.get("adversarial_bce", 0.0), err)
            assert err <= 1e-4, f"bce seed {seed}: {err:.2e}"
        elapsed = time.perf_counter() - t0
        assert elapsed < 10.0, f"gradient oracle took {elapsed:.1f}s"
        print(f"  worst errors: { {k: f'{v:.1e}' for k, v in worst.items()} }, {elapsed:.1f}s")


def test_recomposition_identity(tmp_path, library):
    """composite(gt_mask, face) equals the written after-image within 1/255 per
    channel at every pixel, for 100 generated pairs."""
    with criterion("Recomposition identity"):
        entries = [
            util.write_face_files(util.make_face(128, seed=s), tmp_path, f"face{s:02d}")
            for s in range(25)
        ]
        manifest = util.write_manifest(entries, tmp_path / "faces.jsonl")
        result = synthesis.generate_dataset(
            manifest, library, n_styles_per_face=4, out_dir=tmp_path / "ds", base_seed=0,
            workers=2,
        )
        assert len(result.rows) == 100
        worst = 0.0
        for row in result.rows:
            face = imageio.read_rgb(row["face"])
            mask = imageio.read_rgba(tmp_path / "ds" / row["mask_png"])
            after = imageio.read_rgb(tmp_path / "ds" / row["after_png"])
            err = np.abs(color.composite_mask(mask, face) - after).max()
            worst = max(worst, err)
            assert err <= 1.0 / 255.0, f"{row['after_png']}: {err * 255:.2f}/255"
        print(f"  worst recomposition error {worst * 255:.3f}/255 over 100 pairs")


def test_synthetic_transfer_protocol(tmp_path):
    """Transfer protocol over 200 pairs with the k-means extractor:
    PSNR >= 30 dB and alpha MAE <= 0.05."""
    with criterion("Synthetic transfer protocol"):
        entries = [
            util.write_face_files(util.make_face(256, seed=s), tmp_path, f"face{s:02d}")
            for s in range(12)
        ]
        manifest = util.write_manifest(entries, tmp_path / "faces.jsonl")
        report = metrics.synthetic_transfer_eval(manifest, seed=0, n_pairs=200, workers=2)
        print(
            f"  psnr={report.psnr_db:.2f} dB, alpha_mae={report.alpha_mae:.4f}, "
            f"iou={report.mask_iou:.3f}, pairs={report.n_pairs}"
        )
        assert report.n_pairs == 200
        assert report.psnr_db >= 30.0
        assert report.alpha_mae <= 0.05


def _video_fixture(canon, library, n_frames=100, size=256):
    style = synthesis.sample_style(library, 21, regions=("eyeshadow", "lipstick"))
    mask = synthesis.render_style_mask(style, library, canon)
    base = util.make_face(size, seed=0)
    frames = []
    for i in range(n_frames):
        # gentle smooth head motion
        dx = 3.0 * np.sin(2 * np.pi * i / 60.0)
        dy = 1.5 * np.cos(2 * np.pi * i / 45.0)
        lm = geometry.LandmarkSet(base.landmarks.points + [dx, dy])
        frames.append(
            video.FrameInput(image=base.image, landmarks=lm, parsing=base.parsing)
        )
    return mask, frames


def test_realtime_video(canon, library):
    """run_video sustains >= 30 fps at 256x256 with a single worker;
    p95 per-frame latency < 33 ms."""
    with criterion("Real-time video"):
        mask, frames = _video_fixture(canon, library)
        _, report = video.run_video(
            mask, frames, canon, video.VideoConfig(workers=1)
        )
        print(f"  fps={report.fps:.1f}, p50={report.p50_ms:.1f} ms, p95={report.p95_ms:.1f} ms")
        assert report.frames == 100
        assert report.fps >= 30.0
        assert report.p95_ms < 33.0


def test_temporal_consistency(canon, library):
    """Identical frame inputs yield bit-identical outputs across a 100-frame
    run; the mask hash never changes."""
    with criterion("Temporal consistency"):
        style = synthesis.sample_style(library, 33)
        mask = synthesis.render_style_mask(style, library, canon)
        mask_hash = hashlib.sha256(mask.tobytes()).hexdigest()
        face = util.make_face(256, seed=4)
        frames = [
            video.FrameInput(image=face.image, landmarks=face.landmarks, parsing=face.parsing)
        ] * 100
        outputs, report = video.run_video(mask, frames, canon)
        assert report.frames == 100
        hashes = {hashlib.sha256(o.tobytes()).hexdigest() for o in outputs}
        assert len(hashes) == 1
        assert hashlib.sha256(mask.tobytes()).hexdigest() == mask_hash


def test_cli_determinism(tmp_path):
    """Every CLI subcommand with fixed seeds produces identical output hashes
    across two runs and across worker counts 1 and 8."""
    with criterion("CLI determinism"):
        entries = [
            util.write_face_files(util.make_face(160, seed=s), tmp_path, f"face{s}")
            for s in range(3)
        ]
        manifest = util.write_manifest(entries, tmp_path / "faces.jsonl")
        frames_dir = tmp_path / "frames"
        frames_dir.mkdir()
        for i in range(3):
            util.write_face_files(util.make_face(160, seed=7), frames_dir, f"{i:03d}")

        def hash_outputs(out: Path) -> str:
            digest = hashlib.sha256()
            if out.is_file():
                digest.update(out.read_bytes())
                return digest.hexdigest()
            for p in sorted(out.rglob("*")):
                if p.is_file() and p.name != "timing.json":  # timing is measurement, not artifact
                    digest.update(p.name.encode())
                    digest.update(p.read_bytes())
            return digest.hexdigest()

        mask_path = tmp_path / "mask.png"
        assert cli.main(
            ["extract", "--photo", str(tmp_path / "face0.png"),
             "--landmarks", str(tmp_path / "face0.json"),
             "--parsing", str(tmp_path / "face0_seg.png"),
             "--seed", "1", "--out", str(mask_path)]
        ) == 0

        runs = {
            "extract": lambda out, w: [
                "extract", "--photo", str(tmp_path / "face1.png"),
                "--landmarks", str(tmp_path / "face1.json"),
                "--parsing", str(tmp_path / "face1_seg.png"),
                "--seed", "3", "--out", str(out)],
            "synth": lambda out, w: ["synth", "--seed", "9", "--out", str(out)],
            "pair": lambda out, w: [
                "pair", "--faces", str(manifest), "--styles-per-face", "1",
                "--seed", "5", "--workers", w, "--out", str(out)],
            "apply": lambda out, w: [
                "apply", "--mask", str(mask_path), "--frame", str(tmp_path / "face2.png"),
                "--landmarks", str(tmp_path / "face2.json"),
                "--parsing", str(tmp_path / "face2_seg.png"), "--out", str(out)],
            "video": lambda out, w: [
                "video", "--mask", str(mask_path), "--frames", str(frames_dir),
                "--workers", w, "--out", str(out)],
            "eval": lambda out, w: [
                "eval", "--faces", str(manifest), "--pairs", "2", "--seed", "2",
                "--workers", w, "--out", str(out)],
            "losses-check": lambda out, w: ["losses-check", "--seed", "4", "--out", str(out)],
        }
        file_outputs = {"extract", "synth", "apply", "eval", "losses-check"}
        for name, argv_fn in runs.items():
            hashes = []
            for label, workers in (("run1", "1"), ("run2", "1"), ("w8", "8")):
                suffix = ".json" if name in ("eval", "losses-check") else ".png"
                out = tmp_path / (
                    f"{name}_{label}{suffix}" if name in file_outputs else f"{name}_{label}"
                )
                assert cli.main(argv_fn(out, workers)) == 0, f"{name} {label} failed"
                hashes.append(hash_outputs(out))
            assert hashes[0] == hashes[1], f"{name}: two runs differ"
            assert hashes[0] == hashes[2], f"{name}: workers 1 vs 8 differ"


def test_eq3_gating_property():
    """1000 random perturbations of predicted RGB restricted to gt_A=0 pixels
    change the alpha-weighted reconstruction loss by exactly 0."""
    with criterion("Eq.3 gating property"):
        rng = np.random.default_rng(99)
        gt = rng.random((16, 16, 4))
        gt[..., 3] *= rng.random((16, 16)) > 0.4  # plenty of exact zeros
        pred = rng.random((16, 16, 4))
        base, _ = losses.recon_alpha_weighted(pred, gt)
        zys, zxs = np.nonzero(gt[..., 3] == 0.0)
        assert len(zys) > 0
        for _ in range(1000):
            i = rng.integers(len(zys))
            p2 = pred.copy()
            p2[zys[i], zxs[i], :3] = rng.random(3)
            perturbed, _ = losses.recon_alpha_weighted(p2, gt)
            assert perturbed == base  # bitwise equality
