"""Blind watermark extraction from a rectified screen photograph.

Six steps: perspective rectification (analyst-supplied corners), grayscale
conversion, background-residual detection against a local median, period
search, period averaging down to a tile, shift recovery and bit decoding
with the trained networks, then error correction.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.ndimage import gaussian_filter, median_filter, map_coordinates

from . import codec
from .models import ModelBundle, cyclic_shift, locate_shift, \
    shift_decoder_forward, message_decoder_forward


@dataclass
class ExtractionParams:
    median_window: int = 15       # a: odd window for the local median
    threshold: float = 16 / 255   # t: residual acceptance threshold
    period_min: int = 40          # p0
    period_max: int = 400         # p1
    gauss_sigma: float = 2.0      # scoring filter width

    def __post_init__(self):
        if self.median_window < 3 or self.median_window % 2 == 0:
            raise ValueError("median_window must be odd and >= 3")
        if not 0 <= self.threshold < 1:
            raise ValueError("threshold must be in [0, 1)")
        if not 2 <= self.period_min < self.period_max:
            raise ValueError("need 2 <= period_min < period_max")
        if self.gauss_sigma <= 0:
            raise ValueError("gauss_sigma must be positive")


@dataclass
class ExtractionReport:
    rectified: np.ndarray | None = None
    grayscale: np.ndarray | None = None
    background: np.ndarray | None = None       # I_b
    score_curve: list = field(default_factory=list)  # [(p, score)]
    period: int | None = None
    tile_raw: np.ndarray | None = None          # I''_w
    shift: tuple | None = None
    tile_aligned: np.ndarray | None = None      # I'_w
    probabilities: np.ndarray | None = None
    bits: list | None = None                    # hard-thresholded m'
    bch_status: str = "skipped"                 # ok | failed | skipped
    payload: list | None = None
    corrections: int | None = None
    warnings: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    def to_json_dict(self):
        d = {
            "period": self.period,
            "score_curve": [{"p": int(p), "score": float(s)}
                            for p, s in self.score_curve],
            "shift": list(self.shift) if self.shift else None,
            "bits": codec.bits_to_hex(self.bits) if self.bits else None,
            "probabilities": [float(p) for p in self.probabilities]
            if self.probabilities is not None else None,
            "bch": {"status": self.bch_status,
                    "payload": codec.bits_to_hex(self.payload)
                    if self.payload else None,
                    "corrections": self.corrections},
            "warnings": list(self.warnings),
            "timings": {k: float(v) for k, v in self.timings.items()},
        }
        return d

    def artifacts(self):
        """Intermediate images renderable as PNGs, name -> float array."""
        out = {}
        if self.grayscale is not None:
            out["i_ph"] = self.grayscale
        if self.background is not None:
            b = self.background
            scale = np.abs(b).max() or 1.0
            out["i_b"] = 0.5 + b / (2 * scale)
        if self.tile_raw is not None:
            out["i_w_raw"] = _unit_range(self.tile_raw)
        if self.tile_aligned is not None:
            out["i_w_aligned"] = _unit_range(self.tile_aligned)
        return out


def _unit_range(a):
    lo, hi = float(a.min()), float(a.max())
    return (a - lo) / (hi - lo) if hi > lo else np.zeros_like(a) + 0.5


# ---------------------------------------------------------------------------
# steps
# ---------------------------------------------------------------------------

def to_grayscale(photo):
    """BT.601 luma in [0, 1]; passes already-gray data through."""
    a = np.asarray(photo)
    if a.ndim == 2:
        return a.astype(np.float64) / 255.0 if a.dtype == np.uint8 \
            else a.astype(np.float64)
    luma = (0.299 * a[..., 0] + 0.587 * a[..., 1] + 0.114 * a[..., 2])
    return luma.astype(np.float64) / 255.0 if a.dtype == np.uint8 \
        else luma.astype(np.float64)


def homography_from_corners(corners, out_w, out_h):
    """3x3 map from rectified (x, y) to source coordinates, given the
    source-photo positions of the rectangle corners in TL,TR,BR,BL order."""
    corners = np.asarray(corners, dtype=np.float64)
    if corners.shape != (4, 2):
        raise ValueError("need four (x, y) corner points")
    # convexity / collinearity: consecutive-edge cross products must share sign
    crosses = []
    for i in range(4):
        a, b, c = corners[i], corners[(i + 1) % 4], corners[(i + 2) % 4]
        crosses.append((b[0] - a[0]) * (c[1] - b[1])
                       - (b[1] - a[1]) * (c[0] - b[0]))
    if any(abs(c) < 1e-9 for c in crosses) or not (
            all(c > 0 for c in crosses) or all(c < 0 for c in crosses)):
        raise ValueError("corners are collinear or non-convex")
    dst = np.array([[0, 0], [out_w - 1, 0], [out_w - 1, out_h - 1],
                    [0, out_h - 1]], dtype=np.float64)
    A = []
    rhs = []
    for (x, y), (u, v) in zip(corners, dst):
        A.append([u, v, 1, 0, 0, 0, -u * x, -v * x])
        A.append([0, 0, 0, u, v, 1, -u * y, -v * y])
        rhs += [x, y]
    h = np.linalg.solve(np.asarray(A), np.asarray(rhs))
    return np.append(h, 1.0).reshape(3, 3)


def warp_perspective(photo, corners, out_w, out_h):
    """Rectify the quad spanned by `corners` to an out_w-by-out_h image
    through bilinear sampling; samples outside the source are zero."""
    a = np.asarray(photo)
    H = homography_from_corners(corners, out_w, out_h)
    u, v = np.meshgrid(np.arange(out_w, dtype=np.float64),
                       np.arange(out_h, dtype=np.float64), indexing="xy")
    denom = H[2, 0] * u + H[2, 1] * v + H[2, 2]
    src_x = (H[0, 0] * u + H[0, 1] * v + H[0, 2]) / denom
    src_y = (H[1, 0] * u + H[1, 1] * v + H[1, 2]) / denom
    # snap float fuzz at pixel centers so exact-corner rectification is
    # exact and the border does not bleed into the zero fill
    for src in (src_x, src_y):
        near = np.abs(src - np.round(src)) < 1e-6
        src[near] = np.round(src[near])
    coords = np.stack([src_y.ravel(), src_x.ravel()])

    def sample(channel):
        out = map_coordinates(channel.astype(np.float64), coords, order=1,
                              mode="constant", cval=0.0)
        return out.reshape(out_h, out_w)

    if a.ndim == 2:
        out = sample(a)
    else:
        out = np.stack([sample(a[..., c]) for c in range(a.shape[2])], axis=-1)
    if a.dtype == np.uint8:
        out = np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)
    return out


# Above this per-pixel workload the exact float median is replaced by a
# histogram median. Windows above 31 px use a 12-bit sliding-histogram rank
# filter: quantization error <= 1/8190, two orders below the default
# residual threshold, and the filter ignores out-of-image neighbors, which
# is exactly the clipped-window border convention used below. Small windows
# on megapixel images use the 8-bit cv2 median instead (the rank filter's
# 4096-bin histogram is too slow there, and 8-bit source photos carry no
# sub-level precision at that scale).
# Conditioning blurs tried before decoding; see extract_watermark.
_CONDITIONING_SIGMAS = (0.0, 0.3, 0.5, 0.7, 0.9, 1.1, 1.3)

_EXACT_MEDIAN_OPS = 3 * 10 ** 7
_MEDIAN_LEVELS = (1 << 12) - 1


def _clipped_median(img, a):
    """Median over the a-by-a window intersected with the image."""
    r = a // 2
    if (img.size * a * a > _EXACT_MEDIAN_OPS and img.min() >= 0.0
            and img.max() <= 1.0):
        if a > 31:
            import warnings
            from skimage.filters import rank
            from skimage.morphology import footprint_rectangle
            q = np.rint(img * _MEDIAN_LEVELS).astype(np.uint16)
            with warnings.catch_warnings():
                warnings.filterwarnings("ignore", message=".*rank filter.*")
                med = rank.median(q, footprint_rectangle((a, a)))
            return med.astype(np.float64) / _MEDIAN_LEVELS
        import cv2
        q = np.rint(img * 255.0).astype(np.uint8)
        # replicated edges stand in for the exact clipped border here; the
        # border band is a vanishing fraction of a megapixel-scale image
        return cv2.medianBlur(q, a).astype(np.float64) / 255.0
    med = median_filter(img, size=a, mode="reflect")
    # interior is exact; recompute the border band over clipped windows
    H, W = img.shape
    border = np.zeros(img.shape, dtype=bool)
    border[:r, :] = border[-r:, :] = True
    border[:, :r] = border[:, -r:] = True
    ys, xs = np.nonzero(border)
    for y, x in zip(ys, xs):
        win = img[max(0, y - r):y + r + 1, max(0, x - r):x + r + 1]
        med[y, x] = np.median(win)
    return med


def detect_background(i_ph, a, t):
    """Residual versus the local a-by-a median, zeroed where it exceeds t."""
    i_ph = np.asarray(i_ph, dtype=np.float64)
    diff = i_ph - _clipped_median(i_ph, a)
    return np.where(np.abs(diff) <= t, diff, 0.0)


def average_with_period(i_b, p):
    """Fold the image into one p-by-p block by averaging with step p."""
    i_b = np.asarray(i_b, dtype=np.float64)
    H, W = i_b.shape
    if not 1 <= p <= min(H, W):
        raise ValueError(f"period {p} out of range for {W}x{H} image")
    nb_y, nb_x = H // p, W // p
    crop = i_b[:nb_y * p, :nb_x * p]
    return crop.reshape(nb_y, p, nb_x, p).mean(axis=(0, 2))


def score_period(i_p, gauss_sigma):
    """Standard deviation of the cyclically Gaussian-filtered block;
    high when the candidate period matches the tiling."""
    sm = gaussian_filter(np.asarray(i_p, dtype=np.float64), gauss_sigma,
                         mode="wrap", truncate=3.0)
    return float(sm.std())


def find_period(i_b, params: ExtractionParams):
    """Scan candidate periods; return the smallest one scoring within 90%
    of the maximum (a pure argmax cannot tell p from its multiples)."""
    i_b = np.asarray(i_b)
    H, W = i_b.shape
    p1 = min(params.period_max, min(H, W))
    if params.period_min > p1:
        raise ValueError("empty period range for this image size")
    curve = [(p, score_period(average_with_period(i_b, p), params.gauss_sigma))
             for p in range(params.period_min, p1 + 1)]
    scores = np.array([s for _, s in curve])
    best = scores.max()
    if best <= 0:
        return curve[0][0], curve
    chosen = next(p for (p, s) in curve if s >= 0.9 * best)
    return chosen, curve


def _resize_periodic(block, S):
    """Bilinear p-by-p -> S-by-S resize treating the block as periodic."""
    p = block.shape[0]
    pos = np.arange(S, dtype=np.float64) * p / S
    i0 = np.floor(pos).astype(int)
    f = pos - i0
    i0 %= p
    i1 = (i0 + 1) % p
    rows = block[i0][:, :] * (1 - f)[:, None] + block[i1][:, :] * f[:, None]
    return rows[:, i0] * (1 - f)[None, :] + rows[:, i1] * f[None, :]


def extract_tile(i_b, p, S):
    """Average with step p, rescale to S-by-S, standardize to zero mean and
    unit variance (the decoders are gain-insensitive by construction)."""
    block = average_with_period(i_b, p)
    tile = _resize_periodic(block, S)
    sd = tile.std()
    if sd < 1e-12:
        return np.zeros_like(tile)
    return (tile - tile.mean()) / sd


# ---------------------------------------------------------------------------
# full pipeline
# ---------------------------------------------------------------------------

def extract_watermark(photo, params: ExtractionParams, bundle: ModelBundle,
                      corners=None, out_size=None) -> ExtractionReport:
    """Run the full blind-extraction pipeline and capture every
    intermediate. `corners=None` means the photograph is pre-rectified.
    Low-confidence situations add warnings; only hard errors raise."""
    rep = ExtractionReport()
    t0 = time.perf_counter()

    def mark(name):
        nonlocal t0
        t1 = time.perf_counter()
        rep.timings[name] = t1 - t0
        t0 = t1

    photo = np.asarray(photo)
    if corners is not None:
        if out_size is None:
            out_size = (photo.shape[1], photo.shape[0])
        rep.rectified = warp_perspective(photo, corners, out_size[0], out_size[1])
    else:
        rep.rectified = photo
    mark("rectify")

    rep.grayscale = to_grayscale(rep.rectified)
    mark("grayscale")
    H, W = rep.grayscale.shape
    S = bundle.hyper.S
    if min(H, W) < 2 * S:
        rep.warnings.append(
            f"rectified image {W}x{H} is below 2 tile periods; "
            "extraction may be unreliable")

    rep.background = detect_background(rep.grayscale, params.median_window,
                                       params.threshold)
    if not np.any(rep.background):
        rep.warnings.append("background residual is empty (threshold too low?)")
    mark("background")

    p1 = params.period_max
    limit = max(2, min(H, W) // 2 - 1)
    if p1 > limit:
        rep.warnings.append(f"period_max clamped from {p1} to {limit} "
                            "for this image size")
        p1 = limit
    p0 = params.period_min
    if p0 >= p1:
        rep.warnings.append(f"period_min clamped from {p0} to {p1 - 1}")
        p0 = max(2, p1 - 1)
    scan = replace(params, period_min=p0, period_max=p1)
    rep.period, rep.score_curve = find_period(rep.background, scan)
    scores = np.array([s for _, s in rep.score_curve])
    med = float(np.median(scores))
    if med <= 0 or scores.max() / med < 1.5:
        rep.warnings.append("low-confidence period: flat score curve")
    mark("period")

    rep.tile_raw = extract_tile(rep.background, rep.period, S)
    mark("tile")

    # The decoders were trained behind a distortion layer that always ends
    # with a fixed Gaussian blur, so their operating point is a blurred
    # tile. The folded residual's effective blur depends on the capture
    # (a sharp screenshot vs. a resampled photograph), so steps 5-6 are run
    # at several conditioning blurs, plus one ensemble attempt that averages
    # the per-blur bit probabilities. Candidates that pass the BCH check
    # vote by decoded payload (ties broken by soft agreement with the
    # re-encoded codeword); with no valid candidate the unblurred attempt
    # is reported as-is.
    decodable = bundle.hyper.M == codec.MESSAGE_BITS
    attempts = []
    for sigma in _CONDITIONING_SIGMAS:
        tile_in = (gaussian_filter(rep.tile_raw, sigma, mode="wrap")
                   if sigma else rep.tile_raw)
        ic_out = shift_decoder_forward(tile_in, bundle)
        shift = locate_shift(ic_out)
        aligned = cyclic_shift(tile_in, -shift[0], -shift[1])
        probs = message_decoder_forward(aligned, bundle)
        attempts.append((sigma, shift, aligned, probs))
        if not decodable:
            break
    if decodable:
        mean_probs = np.mean([a[3] for a in attempts], axis=0)
        attempts.append(("ensemble",) + attempts[0][1:3] + (mean_probs,))

    votes = {}
    for att in attempts:
        bits = [int(p > 0.5) for p in att[3]]
        if not decodable:
            continue
        try:
            payload, ncorr = codec.bch_decode(bits)
        except codec.DecodeFailure:
            continue
        codeword = codec.bch_encode(payload)
        soft = float(np.abs(np.asarray(att[3]) - codeword).sum())
        votes.setdefault(tuple(payload), []).append(
            (soft, ncorr, att, bits))

    if votes:
        winner = max(votes, key=lambda p: (len(votes[p]),
                                           -min(v[0] for v in votes[p])))
        soft, ncorr, chosen, bits = min(votes[winner],
                                        key=lambda v: (v[0], v[1]))
        decoded = (list(winner), ncorr)
    else:
        chosen, bits, decoded = attempts[0], \
            [int(p > 0.5) for p in attempts[0][3]], None
    sigma, rep.shift, rep.tile_aligned, rep.probabilities = chosen
    rep.bits = bits
    mark("shift")
    mark("decode")

    if not decodable:
        rep.warnings.append("message length is not 50 bits; BCH skipped")
    elif decoded is not None:
        rep.bch_status = "ok"
        rep.payload, rep.corrections = decoded
        if sigma == "ensemble":
            rep.warnings.append(
                "decoded from blur-ensemble averaged probabilities")
        elif sigma:
            rep.warnings.append(
                f"decoded with conditioning blur sigma={sigma}")
    else:
        rep.bch_status = "failed"
        rep.warnings.append("BCH decoding failed at all conditioning blurs")
    mark("bch")
    return rep
