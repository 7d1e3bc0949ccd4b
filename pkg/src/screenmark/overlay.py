"""Tiled overlay construction, alpha compositing, imperceptibility metrics.

Image convention throughout the package: numpy arrays indexed [row, col]
((y, x) in pixel-coordinate terms); screen images are uint8 with shape
(H, W, 3), grayscale working images are float in [0, 1] with shape (H, W).
"""

from __future__ import annotations

import math

import numpy as np
from scipy.ndimage import gaussian_filter


def tile_overlay(tile, W, H):
    """Tile the S-by-S watermark periodically across a W-by-H frame; the
    partial tiles at the right/bottom edges are cropped."""
    tile = np.asarray(tile)
    S = tile.shape[0]
    if W < S or H < S:
        raise ValueError(f"frame {W}x{H} smaller than tile side {S}")
    reps = (math.ceil(H / S), math.ceil(W / S))
    return np.tile(tile, reps)[:H, :W]


def composite(screen, overlay, alpha):
    """Blend the grayscale overlay over an RGB screen image at opacity
    alpha; real-arithmetic convex combination, then round-half-away-from-
    zero to 8 bits."""
    screen = np.asarray(screen)
    overlay = np.asarray(overlay, dtype=np.float64)
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha={alpha} outside [0, 1]")
    if screen.shape[:2] != overlay.shape:
        raise ValueError(f"dimension mismatch: screen {screen.shape[:2]}, "
                         f"overlay {overlay.shape}")
    if screen.ndim == 3:
        overlay = overlay[..., None]
    blended = (1.0 - alpha) * screen.astype(np.float64) + alpha * overlay * 255.0
    return np.clip(np.floor(blended + 0.5), 0, 255).astype(np.uint8)


def psnr(a, b):
    """Peak signal-to-noise ratio in dB over all channels; +inf for
    identical images."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    mse = np.mean((a - b) ** 2)
    if mse == 0:
        return float("inf")
    return 10.0 * math.log10(255.0 ** 2 / mse)


_SSIM_SIGMA = 1.5
_SSIM_RADIUS = 5  # 11x11 window
_C1 = (0.01 * 255.0) ** 2
_C2 = (0.03 * 255.0) ** 2


def _ssim_channel(x, y):
    def filt(img):
        return gaussian_filter(img, _SSIM_SIGMA,
                               truncate=_SSIM_RADIUS / _SSIM_SIGMA, mode="reflect")

    mu_x = filt(x)
    mu_y = filt(y)
    xx = filt(x * x) - mu_x * mu_x
    yy = filt(y * y) - mu_y * mu_y
    xy = filt(x * y) - mu_x * mu_y
    num = (2 * mu_x * mu_y + _C1) * (2 * xy + _C2)
    den = (mu_x ** 2 + mu_y ** 2 + _C1) * (xx + yy + _C2)
    ssim_map = num / den
    r = _SSIM_RADIUS
    return float(np.mean(ssim_map[r:-r, r:-r]))


def ssim(a, b):
    """Single-scale structural similarity with the standard 11x11 Gaussian
    window and constants, averaged over channels."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if a.ndim == 2:
        a = a[..., None]
        b = b[..., None]
    return float(np.mean([_ssim_channel(a[..., c], b[..., c])
                          for c in range(a.shape[2])]))
