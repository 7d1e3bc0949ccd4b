"""Encoder and decoder networks plus shift-localization utilities.

Three networks cooperate:

* the encoder turns an M-bit message into an S-by-S grayscale tile whose
  brightness varies smoothly and wraps around seamlessly at the borders
  (every convolution uses circular padding, so the tile tiles);
* the shift decoder maps a (possibly cyclically shifted, distorted) tile
  to a localization map whose maximum sits at the shift offset;
* the message decoder reads the M bit probabilities off a re-aligned tile.

Both decoders standardize their input to zero mean and unit variance as a
fixed first layer, so they are insensitive to the overall gain of the
signal — photographs deliver the tile at an arbitrary amplitude.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass, asdict, field

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

BUNDLE_MAGIC = b"SMRK"
BUNDLE_VERSION = 1

_PROB_EPS = 1e-7


# ---------------------------------------------------------------------------
# shift-target tensor and cyclic-shift utilities
# ---------------------------------------------------------------------------

def make_shift_target(S, c):
    """The localization target: +1 on the (2c+1)^2 center square, -1 on the
    four c-by-c corner squares, 0 elsewhere."""
    if not 0 < c < S / 4:
        raise ValueError(f"center half-size c={c} must satisfy 0 < c < S/4 (S={S})")
    t = np.zeros((S, S), dtype=np.float32)
    h = S // 2
    t[h - c: h + c + 1, h - c: h + c + 1] = 1.0
    corner = np.r_[0:c, S - c:S]
    t[np.ix_(corner, corner)] = -1.0
    return t


def cyclic_shift(img, dx, dy):
    """Translate with wraparound: out[x, y] = in[(x-dx) mod S, (y-dy) mod S].

    Works on numpy arrays and torch tensors; the last two axes are shifted.
    """
    if isinstance(img, torch.Tensor):
        return torch.roll(img, shifts=(int(dx), int(dy)), dims=(-2, -1))
    return np.roll(img, (int(dx), int(dy)), axis=(-2, -1))


def _wrap_offset(v, S):
    """Wrap an offset into the half-open range (-S/2, S/2]."""
    lo = -(S // 2) + 1
    return (int(v) - lo) % S + lo


def _circular_centroid(idx, S):
    """Centroid of index set on the circle of circumference S, or None when
    the set is circularly balanced (no meaningful centroid)."""
    theta = idx * (2.0 * np.pi / S)
    sin_sum, cos_sum = np.sin(theta).sum(), np.cos(theta).sum()
    if np.hypot(sin_sum, cos_sum) < 1e-6 * len(idx) + 1e-9:
        return None
    ang = np.arctan2(sin_sum, cos_sum) % (2.0 * np.pi)
    return int(np.floor(ang * S / (2.0 * np.pi) + 0.5)) % S


def locate_shift(ic_out):
    """Cyclic shift estimate: argmax position relative to the matrix center,
    wrapped into (-S/2, S/2].

    When the maximum is a plateau (the exact target has a (2c+1)^2 one),
    the plateau's cyclic centroid is used, so the exact shifted target is
    recovered exactly; circularly balanced ties (e.g. a constant map) fall
    back to the offset closest to (0, 0)."""
    a = np.asarray(ic_out)
    if not np.isfinite(a).all():
        raise ValueError("shift map contains non-finite values")
    S = a.shape[0]
    h = S // 2
    xs, ys = np.nonzero(a == a.max())
    if len(xs) == 1:
        return _wrap_offset(int(xs[0]) - h, S), _wrap_offset(int(ys[0]) - h, S)
    cx = _circular_centroid(xs, S)
    cy = _circular_centroid(ys, S)
    if cx is not None and cy is not None:
        return _wrap_offset(cx - h, S), _wrap_offset(cy - h, S)
    best = None
    for x, y in zip(xs.tolist(), ys.tolist()):
        dx = _wrap_offset(x - h, S)
        dy = _wrap_offset(y - h, S)
        key = (abs(dy), abs(dx), dy, dx)
        if best is None or key < best[0]:
            best = (key, (dx, dy))
    return best[1]


# ---------------------------------------------------------------------------
# network building blocks
# ---------------------------------------------------------------------------

def circular_conv(ch_in, ch_out, kernel=3):
    return nn.Conv2d(ch_in, ch_out, kernel, padding=kernel // 2,
                     padding_mode="circular")


class UNet(nn.Module):
    """Small U-Net on the torus: circular convolutions, average-pool
    downsampling, nearest-neighbor upsampling with skip concatenation."""

    def __init__(self, base=8, levels=3):
        super().__init__()
        self.levels = levels
        self.downs = nn.ModuleList()
        ch, w = 1, base
        for _ in range(levels):
            self.downs.append(nn.Sequential(circular_conv(ch, w), nn.ReLU()))
            ch, w = w, w * 2
        self.bottleneck = nn.Sequential(circular_conv(ch, w), nn.ReLU())
        self.ups = nn.ModuleList()
        for _ in range(levels):
            self.ups.append(nn.Sequential(circular_conv(w + w // 2, w // 2), nn.ReLU()))
            w //= 2
        self.head = nn.Conv2d(w, 1, 1)
        self.pool = nn.AvgPool2d(2)

    def forward(self, x):
        skips = []
        for down in self.downs:
            x = down(x)
            skips.append(x)
            x = self.pool(x)
        x = self.bottleneck(x)
        for up, skip in zip(self.ups, reversed(skips)):
            x = F.interpolate(x, scale_factor=2, mode="nearest")
            x = up(torch.cat([x, skip], dim=1))
        return self.head(x)


class Encoder(nn.Module):
    """Message bits -> S-by-S tile in [0, 1]: a fully connected layer lifts
    the M bits to an S^2 preliminary image, refined by the U-Net, squashed
    by a logistic output. The refinement is residual: the lifted image
    skips around the U-Net so message information (and its gradient) is not
    attenuated by the convolutional stack."""

    def __init__(self, M, S, base=8, levels=3):
        super().__init__()
        self.M, self.S = M, S
        self.lift = nn.Linear(M, S * S)
        self.unet = UNet(base=base, levels=levels)

    def forward(self, m):
        x = self.lift(m).view(-1, 1, self.S, self.S)
        return torch.sigmoid(x + self.unet(x))


class Standardize(nn.Module):
    """Zero-mean unit-variance normalization over each image."""

    def forward(self, x):
        mu = x.mean(dim=(-2, -1), keepdim=True)
        sd = x.std(dim=(-2, -1), keepdim=True)
        return (x - mu) / (sd + 1e-6)


class ShiftDecoder(nn.Module):
    """Tile -> localization map (same U-Net architecture as the encoder's
    refinement stage, linear output)."""

    def __init__(self, base=8, levels=3):
        super().__init__()
        self.norm = Standardize()
        self.unet = UNet(base=base, levels=levels)

    def forward(self, x):
        return self.unet(self.norm(x))


class MessageDecoder(nn.Module):
    """Tile -> M bit probabilities via a small strided conv classifier with
    global average pooling."""

    def __init__(self, M, base=16, blocks=4):
        super().__init__()
        layers = [Standardize(), circular_conv(1, base), nn.ReLU()]
        w = base
        for _ in range(blocks - 1):
            layers += [nn.Conv2d(w, w * 2, 3, stride=2, padding=1), nn.ReLU()]
            w *= 2
        layers += [nn.AdaptiveAvgPool2d(1), nn.Flatten()]
        self.features = nn.Sequential(*layers)
        self.head = nn.Linear(w, M)

    def forward(self, x):
        logits = self.head(self.features(x))
        return torch.clamp(torch.sigmoid(logits), _PROB_EPS, 1.0 - _PROB_EPS)


# ---------------------------------------------------------------------------
# model bundle
# ---------------------------------------------------------------------------

@dataclass
class Hyperparams:
    S: int = 120
    M: int = 50
    c: int = 5
    unet_base: int = 8
    unet_levels: int = 3
    msg_base: int = 16
    msg_blocks: int = 4

    def __post_init__(self):
        if not 0 < self.c < self.S / 4:
            raise ValueError("require 0 < c < S/4")


@dataclass
class ModelBundle:
    """The three trained networks plus their hyperparameters."""

    hyper: Hyperparams
    encoder: Encoder
    shift_decoder: ShiftDecoder
    message_decoder: MessageDecoder
    version: int = BUNDLE_VERSION

    def modules(self):
        return {"encoder": self.encoder,
                "shift_decoder": self.shift_decoder,
                "message_decoder": self.message_decoder}

    def parameters(self):
        for mod in self.modules().values():
            yield from mod.parameters()

    def eval_mode(self):
        for mod in self.modules().values():
            mod.eval()
        return self


def new_bundle(hyper: Hyperparams, seed=0) -> ModelBundle:
    """Freshly initialized bundle, deterministic per seed."""
    torch.manual_seed(seed)
    return ModelBundle(
        hyper=hyper,
        encoder=Encoder(hyper.M, hyper.S, hyper.unet_base, hyper.unet_levels),
        shift_decoder=ShiftDecoder(hyper.unet_base, hyper.unet_levels),
        message_decoder=MessageDecoder(hyper.M, hyper.msg_base, hyper.msg_blocks),
    )


def _as_tile_tensor(img, S, name="input"):
    a = np.asarray(img, dtype=np.float32)
    if a.shape != (S, S):
        raise ValueError(f"{name} must be {S}x{S}, got {a.shape}")
    return torch.from_numpy(a).view(1, 1, S, S)


def encoder_forward(m, bundle: ModelBundle):
    """Message bits -> S-by-S tile as a float array in [0, 1]."""
    bits = list(m)
    if len(bits) != bundle.hyper.M:
        raise ValueError(f"message must have {bundle.hyper.M} bits, got {len(bits)}")
    with torch.no_grad():
        x = torch.tensor(bits, dtype=torch.float32).view(1, -1)
        tile = bundle.encoder(x)
    return tile.view(bundle.hyper.S, bundle.hyper.S).numpy()


def shift_decoder_forward(img, bundle: ModelBundle):
    """Tile-shaped image -> S-by-S localization map."""
    x = _as_tile_tensor(img, bundle.hyper.S)
    with torch.no_grad():
        out = bundle.shift_decoder(x)
    return out.view(bundle.hyper.S, bundle.hyper.S).numpy()


def message_decoder_forward(img, bundle: ModelBundle):
    """Tile-shaped image -> M bit probabilities in (0, 1)."""
    x = _as_tile_tensor(img, bundle.hyper.S)
    with torch.no_grad():
        probs = bundle.message_decoder(x)
    return probs.view(bundle.hyper.M).numpy()


# ---------------------------------------------------------------------------
# archive format: magic, u32 manifest length, JSON manifest, float32 blobs
# ---------------------------------------------------------------------------

class BundleError(Exception):
    """Corrupt, truncated, or incompatible model archive."""


def save_bundle(bundle: ModelBundle, destination):
    """Write the bundle as a single archive file (see README for layout)."""
    tensors = []
    index = {}
    offset = 0
    for mod_name, mod in bundle.modules().items():
        for p_name, tensor in mod.state_dict().items():
            blob = tensor.detach().to(torch.float32).contiguous().numpy().tobytes()
            key = f"{mod_name}.{p_name}"
            index[key] = {"shape": list(tensor.shape), "offset": offset,
                          "nbytes": len(blob)}
            tensors.append(blob)
            offset += len(blob)
    manifest = json.dumps({
        "version": bundle.version,
        "hyperparams": asdict(bundle.hyper),
        "tensors": index,
    }).encode()
    data = BUNDLE_MAGIC + struct.pack("<I", len(manifest)) + manifest + b"".join(tensors)
    if hasattr(destination, "write"):
        destination.write(data)
    else:
        with open(destination, "wb") as f:
            f.write(data)


def load_bundle(source) -> ModelBundle:
    """Load an archive written by :func:`save_bundle`; validates version,
    shapes, and completeness before touching any module."""
    if hasattr(source, "read"):
        data = source.read()
    else:
        with open(source, "rb") as f:
            data = f.read()
    if len(data) < 8 or data[:4] != BUNDLE_MAGIC:
        raise BundleError("not a model archive (bad magic)")
    (mlen,) = struct.unpack("<I", data[4:8])
    if len(data) < 8 + mlen:
        raise BundleError("truncated archive (manifest)")
    try:
        manifest = json.loads(data[8:8 + mlen])
    except ValueError as e:
        raise BundleError(f"corrupt manifest: {e}") from None
    if manifest.get("version") != BUNDLE_VERSION:
        raise BundleError(f"unsupported archive version {manifest.get('version')}")
    hyper = Hyperparams(**manifest["hyperparams"])
    bundle = new_bundle(hyper)
    blob_base = 8 + mlen
    index = manifest["tensors"]
    for mod_name, mod in bundle.modules().items():
        state = {}
        for p_name, ref in mod.state_dict().items():
            key = f"{mod_name}.{p_name}"
            if key not in index:
                raise BundleError(f"archive is missing tensor {key}")
            entry = index[key]
            if tuple(entry["shape"]) != tuple(ref.shape):
                raise BundleError(
                    f"shape mismatch for {key}: archive {entry['shape']}, "
                    f"model {list(ref.shape)}")
            start = blob_base + entry["offset"]
            end = start + entry["nbytes"]
            if end > len(data):
                raise BundleError("truncated archive (tensor data)")
            arr = np.frombuffer(data[start:end], dtype="<f4").reshape(entry["shape"])
            state[p_name] = torch.from_numpy(arr.copy()).to(ref.dtype)
        mod.load_state_dict(state)
    bundle.version = manifest["version"]
    return bundle
