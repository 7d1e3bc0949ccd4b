"""Simulated screen-to-camera channel for desk-scale evaluation.

Three distortion stages, matching where they arise physically: display
response (gamma, brightness/contrast), shooting geometry and optics
(perspective, resampling, defocus, interference pattern), and in-camera
processing (sensor noise, JPEG). Corner ground truth is recorded so the
extraction pipeline can be fed exactly rectified input.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, asdict

import numpy as np
from PIL import Image
from scipy.ndimage import gaussian_filter

from . import codec
from .extraction import ExtractionParams, extract_watermark, warp_perspective
from .models import ModelBundle, encoder_forward
from .overlay import tile_overlay, composite


@dataclass
class CaptureScenario:
    gamma: float = 2.2
    brightness_jitter: tuple = (0.0, 0.0)
    contrast_jitter: tuple = (1.0, 1.0)
    perspective: float = 0.0        # max corner displacement, fraction of frame
    resample_factor: float = 1.0    # photo size relative to the screen
    defocus_blur_sigma: float = 0.0
    sensor_noise_std: float = 0.0
    moire: dict | None = None       # {"amplitude", "frequencies", "orientation_deg"}
    jpeg_quality: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.jpeg_quality is not None and not 1 <= self.jpeg_quality <= 100:
            raise ValueError("jpeg_quality must be in 1..100")
        if self.brightness_jitter[0] > self.brightness_jitter[1] \
                or self.contrast_jitter[0] > self.contrast_jitter[1]:
            raise ValueError("jitter ranges must be ordered")

    @classmethod
    def identity(cls, seed=0):
        return cls(gamma=1.0, seed=seed)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        for k in ("brightness_jitter", "contrast_jitter"):
            if k in d:
                d[k] = tuple(d[k])
        return cls(**d)


@dataclass
class EvalRow:
    label: str
    ber: float
    le3_count: int
    ok_count: int                 # trials whose corrected payload was exact
    total: int
    params: dict = field(default_factory=dict)


def _frame_corners(W, H):
    return np.array([[0, 0], [W - 1, 0], [W - 1, H - 1], [0, H - 1]],
                    dtype=np.float64)


def _moire_pattern(shape, spec, rng):
    H, W = shape
    y, x = np.mgrid[0:H, 0:W]
    amp = spec.get("amplitude", 0.02)
    f1, f2 = spec.get("frequencies", (0.08, 0.11))
    theta = np.deg2rad(spec.get("orientation_deg", 20.0))
    u = np.cos(theta) * x + np.sin(theta) * y
    v = -np.sin(theta) * x + np.cos(theta) * y
    # slowly drifting phase makes the beat bands non-uniform across the frame
    drift = 2 * np.pi * 0.3 * np.sin(2 * np.pi * y / max(H, 1) * 1.7
                                     + rng.uniform(0, 2 * np.pi))
    return amp * 0.5 * (np.sin(2 * np.pi * f1 * u + drift)
                        + np.sin(2 * np.pi * f2 * v - drift))


def simulate_capture(marked, scenario: CaptureScenario):
    """uint8 RGB screen image -> (photo, true corner positions).

    The identity scenario (gamma 1, no jitter/warp/noise/JPEG) returns the
    input bit-exactly with frame corners.
    """
    rng = np.random.default_rng(scenario.seed)
    img = np.asarray(marked)
    H, W = img.shape[:2]
    x = img.astype(np.float64) / 255.0
    identity_so_far = True

    if scenario.gamma != 1.0:
        x = np.power(np.clip(x, 0, 1), scenario.gamma)
        identity_so_far = False
    b_lo, b_hi = scenario.brightness_jitter
    c_lo, c_hi = scenario.contrast_jitter
    if (b_lo, b_hi) != (0.0, 0.0) or (c_lo, c_hi) != (1.0, 1.0):
        b = rng.uniform(b_lo, b_hi)
        c = rng.uniform(c_lo, c_hi)
        x = np.clip(c * (x - 0.5) + 0.5 + b, 0, 1)
        identity_so_far = False

    out_w, out_h = int(round(W * scenario.resample_factor)), \
        int(round(H * scenario.resample_factor))
    corners = _frame_corners(out_w, out_h)
    if scenario.perspective > 0 or scenario.resample_factor != 1.0:
        f = scenario.perspective
        quad = _frame_corners(out_w, out_h)
        if f > 0:
            inward = np.array([[1, 1], [-1, 1], [-1, -1], [1, -1]],
                              dtype=np.float64)
            quad = quad + inward * rng.uniform(0, f, size=(4, 2)) \
                * np.array([out_w, out_h])
        x = _project_frame(x, quad, out_w, out_h)
        corners = quad
        identity_so_far = False

    if scenario.defocus_blur_sigma > 0:
        sig = scenario.defocus_blur_sigma
        if x.ndim == 3:
            x = np.stack([gaussian_filter(x[..., c], sig, mode="nearest")
                          for c in range(x.shape[2])], axis=-1)
        else:
            x = gaussian_filter(x, sig, mode="nearest")
        identity_so_far = False
    if scenario.moire:
        pat = _moire_pattern(x.shape[:2], scenario.moire, rng)
        x = np.clip(x + (pat[..., None] if x.ndim == 3 else pat), 0, 1)
        identity_so_far = False
    if scenario.sensor_noise_std > 0:
        x = np.clip(x + rng.normal(0, scenario.sensor_noise_std, x.shape), 0, 1)
        identity_so_far = False

    if identity_so_far and scenario.jpeg_quality is None:
        return img.copy(), corners
    photo = np.clip(np.floor(x * 255.0 + 0.5), 0, 255).astype(np.uint8)
    if scenario.jpeg_quality is not None:
        photo = jpeg_roundtrip(photo, scenario.jpeg_quality)
    return photo, corners


def _project_frame(x, quad, out_w, out_h):
    """Warp the full image so its frame corners land on `quad` inside an
    out_w-by-out_h canvas; bilinear, black outside."""
    from scipy.ndimage import map_coordinates
    H, W = x.shape[:2]
    # sample the screen through the photo->screen homography
    M = _solve_homography(quad, _frame_corners(W, H))
    u, v = np.meshgrid(np.arange(out_w, dtype=np.float64),
                       np.arange(out_h, dtype=np.float64), indexing="xy")
    denom = M[2, 0] * u + M[2, 1] * v + M[2, 2]
    sx = (M[0, 0] * u + M[0, 1] * v + M[0, 2]) / denom
    sy = (M[1, 0] * u + M[1, 1] * v + M[1, 2]) / denom
    coords = np.stack([sy.ravel(), sx.ravel()])

    def sample(ch):
        return map_coordinates(ch, coords, order=1, mode="constant",
                               cval=0.0).reshape(out_h, out_w)

    if x.ndim == 2:
        return sample(x)
    return np.stack([sample(x[..., c]) for c in range(x.shape[2])], axis=-1)


def _solve_homography(src_pts, dst_pts):
    """3x3 homography with src_pts -> dst_pts (four correspondences)."""
    A = []
    rhs = []
    for (u, v), (x, y) in zip(np.asarray(src_pts, dtype=np.float64),
                              np.asarray(dst_pts, dtype=np.float64)):
        A.append([u, v, 1, 0, 0, 0, -u * x, -v * x])
        A.append([0, 0, 0, u, v, 1, -u * y, -v * y])
        rhs += [x, y]
    h = np.linalg.solve(np.asarray(A), np.asarray(rhs))
    return np.append(h, 1.0).reshape(3, 3)


def jpeg_roundtrip(image, quality):
    """Baseline JPEG encode/decode at the given quality."""
    if not 1 <= int(quality) <= 100:
        raise ValueError("quality must be in 1..100")
    a = np.asarray(image)
    mode = "L" if a.ndim == 2 else "RGB"
    buf = io.BytesIO()
    Image.fromarray(a, mode=mode).save(buf, format="JPEG", quality=int(quality))
    buf.seek(0)
    return np.asarray(Image.open(buf).convert(mode))


def synth_document(W, H, rng, margin=0.08):
    """White page with dark text-like line strokes, as uint8 RGB."""
    img = np.full((H, W, 3), 255, dtype=np.uint8)
    mx, my = int(W * margin), int(H * margin)
    y = my
    line_h = max(6, H // 60)
    while y + line_h < H - my:
        if rng.random() > 0.15:  # occasional blank line
            x = mx
            while x < W - mx:
                wlen = int(rng.integers(line_h, 6 * line_h))
                x2 = min(x + wlen, W - mx)
                shade = int(rng.integers(0, 70))
                img[y:y + line_h - 2, x:x2] = shade
                x = x2 + int(rng.integers(line_h // 2, 2 * line_h))
        y += int(line_h * 1.8)
    return img


def run_eval_matrix(bundle: ModelBundle, scenarios, trials_per_cell,
                    alpha=8 / 255, screen_size=(640, 480),
                    params: ExtractionParams | None = None, seed=0,
                    progress=None):
    """Per scenario: embed random payloads into synthetic documents, push
    them through the simulated channel, extract with true corners, and
    record BER before correction plus the count of trials with <= 3 bit
    errors. `scenarios` is a list of (label, CaptureScenario)."""
    if params is None:
        # The evaluator knows its own tile size, so the defaults are tuned
        # to it: the high-pass window must span at least two tile periods
        # to keep the residual intact, and the period search is restricted
        # to values that leave several repeats per axis on the screen.
        S = bundle.hyper.S
        params = ExtractionParams(median_window=2 * S + 1,
                                  period_min=max(8, S - 24),
                                  period_max=2 * S - 8)
    W, H = screen_size
    rows = []
    for cell, (label, scenario) in enumerate(scenarios):
        rng = np.random.default_rng((seed, cell))
        bit_errors = 0
        le3 = 0
        ok = 0
        for trial in range(trials_per_cell):
            payload = [int(b) for b in rng.integers(0, 2, codec.PAYLOAD_BITS)]
            word = codec.bch_encode(payload)
            tile = encoder_forward(word, bundle)
            doc = synth_document(W, H, rng)
            marked = composite(doc, tile_overlay(tile, W, H), alpha)
            scen = CaptureScenario(**{**asdict(scenario),
                                      "seed": int(rng.integers(0, 2 ** 31))})
            photo, corners = simulate_capture(marked, scen)
            rep = extract_watermark(photo, params, bundle, corners=corners,
                                    out_size=(W, H))
            errs = sum(a != b for a, b in zip(rep.bits, word))
            bit_errors += errs
            le3 += errs <= 3
            ok += (rep.bch_status == "ok"
                   and list(rep.payload) == payload)
            if progress is not None:
                progress(label, trial, errs)
        total_bits = trials_per_cell * codec.MESSAGE_BITS
        rows.append(EvalRow(label=label,
                            ber=bit_errors / total_bits if total_bits else 0.0,
                            le3_count=le3, ok_count=ok,
                            total=trials_per_cell,
                            params=asdict(scenario)))
    return rows


def eval_rows_to_csv(rows, path):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["scenario", "BER", "le3", "decoded", "total"])
        for r in rows:
            w.writerow([r.label, f"{r.ber:.4f}", r.le3_count, r.ok_count,
                        r.total])


def eval_rows_to_json(rows, path):
    with open(path, "w") as f:
        json.dump([asdict(r) for r in rows], f, indent=2)
