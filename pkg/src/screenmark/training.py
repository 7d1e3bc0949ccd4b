"""Joint training of the encoder and the two decoders.

Every iteration: random messages -> encoder tiles -> differentiable
distortion layer (shift, scale, rotation, noise, blur) -> shift decoder ->
argmax shift estimate -> reverse roll -> message decoder. The total loss
combines tile smoothness, shift-map fidelity against the true-shift
target, and per-bit cross entropy; Adam updates all three networks at
once, with gradients reaching the encoder through the distortion layer.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np
import torch

from .models import (Hyperparams, ModelBundle, new_bundle, make_shift_target,
                     cyclic_shift, locate_shift)

_BCE_EPS = 1e-7


class TrainingDiverged(Exception):
    pass


@dataclass
class DistortionConfig:
    """Simulated screen-photograph channel used during training.

    shift_range of None means the full tile side (any alignment must be
    recoverable). noise_std is in units of the [0,1] pixel range; the
    blur is Gaussian with the given variance in px^2.
    """

    shift_range: int | None = None
    scale_range: tuple = (0.96, 1.04)
    rotation_range_deg: tuple = (-2.0, 2.0)
    noise_std: float = 0.02
    blur_variance: float = 1.0

    def __post_init__(self):
        if self.scale_range[0] > self.scale_range[1]:
            raise ValueError("scale_range must be ordered")
        if self.rotation_range_deg[0] > self.rotation_range_deg[1]:
            raise ValueError("rotation_range_deg must be ordered")
        if self.noise_std < 0 or self.blur_variance < 0:
            raise ValueError("noise_std and blur_variance must be >= 0")


@dataclass
class TrainConfig:
    S: int = 64
    M: int = 50
    c: int = 3
    # Tuned jointly at desk scale: larger smoothness weights suppress the
    # encoder's output amplitude below the distortion noise floor before the
    # decoders latch on, and training never leaves the chance plateau.
    lambda_p: float = 0.1
    lambda_c: float = 1.0
    lambda_m: float = 2.0
    batch_size: int = 32
    iterations: int = 5000
    learning_rate: float = 1e-3
    seed: int = 0
    unet_base: int = 8
    unet_levels: int = 3
    msg_base: int = 16
    msg_blocks: int = 4
    distortion: DistortionConfig = field(default_factory=DistortionConfig)

    def hyperparams(self) -> Hyperparams:
        return Hyperparams(S=self.S, M=self.M, c=self.c,
                           unet_base=self.unet_base, unet_levels=self.unet_levels,
                           msg_base=self.msg_base, msg_blocks=self.msg_blocks)

    @classmethod
    def from_json(cls, path):
        with open(path) as f:
            raw = json.load(f)
        dist = DistortionConfig(**{k: tuple(v) if isinstance(v, list) else v
                                   for k, v in raw.pop("distortion", {}).items()})
        return cls(distortion=dist, **raw)


@dataclass
class TrainLog:
    rows: list = field(default_factory=list)  # dicts, one per iteration

    COLUMNS = ("iteration", "L", "L_p", "L_c", "L_w", "bit_acc", "shift_hit_rate")

    def append(self, **kw):
        self.rows.append({k: kw[k] for k in self.COLUMNS})

    def to_csv(self, path):
        with open(path, "w", newline="") as f:
            w = csv.DictWriter(f, fieldnames=self.COLUMNS)
            w.writeheader()
            w.writerows(self.rows)


# ---------------------------------------------------------------------------
# distortion layer
# ---------------------------------------------------------------------------

def _gaussian_kernel1d(variance, dtype=torch.float32):
    sigma = math.sqrt(variance)
    radius = max(1, int(math.ceil(3.0 * sigma)))
    x = torch.arange(-radius, radius + 1, dtype=dtype)
    k = torch.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def _blur_circular(x, variance):
    if variance <= 0:
        return x
    k = _gaussian_kernel1d(variance, x.dtype)
    r = (len(k) - 1) // 2
    kx = k.view(1, 1, -1, 1)
    ky = k.view(1, 1, 1, -1)
    x = torch.nn.functional.pad(x, (0, 0, r, r), mode="circular")
    x = torch.nn.functional.conv2d(x, kx)
    x = torch.nn.functional.pad(x, (r, r, 0, 0), mode="circular")
    return torch.nn.functional.conv2d(x, ky)


def _resample_affine(x, scales, angles_deg):
    """Per-element scale + rotation about the tile center, sampling the
    cyclically extended image bilinearly (4-point convex combination)."""
    B, _, S, _ = x.shape
    dev, dt = x.device, x.dtype
    center = (S - 1) / 2.0
    gx, gy = torch.meshgrid(torch.arange(S, dtype=dt, device=dev),
                            torch.arange(S, dtype=dt, device=dev), indexing="ij")
    u = (gx - center).view(1, S, S)
    v = (gy - center).view(1, S, S)
    th = torch.deg2rad(angles_deg).view(B, 1, 1)
    s = scales.view(B, 1, 1)
    cos, sin = torch.cos(th), torch.sin(th)
    # inverse map: rotate by -theta, then unscale
    src_x = (cos * u + sin * v) / s + center
    src_y = (-sin * u + cos * v) / s + center
    x0 = torch.floor(src_x)
    y0 = torch.floor(src_y)
    fx = (src_x - x0).unsqueeze(1)
    fy = (src_y - y0).unsqueeze(1)
    x0 = x0.long()
    y0 = y0.long()
    flat = x.view(B, 1, S * S)

    def take(xi, yi):
        idx = ((xi % S) * S + (yi % S)).view(B, 1, S * S)
        return flat.gather(2, idx).view(B, 1, S, S)

    out = (take(x0, y0) * (1 - fx) * (1 - fy)
           + take(x0 + 1, y0) * fx * (1 - fy)
           + take(x0, y0 + 1) * (1 - fx) * fy
           + take(x0 + 1, y0 + 1) * fx * fy)
    return out


def distort_batch(tiles, cfg: DistortionConfig, generator):
    """Batched distortion: (B,1,S,S) -> (distorted, shifts (B,2) int tensor).

    Differentiable in the tiles; all randomness comes from `generator`.
    """
    B, _, S, _ = tiles.shape
    max_shift = S if cfg.shift_range is None else int(cfg.shift_range)
    if max_shift > 0:
        shifts = torch.randint(0, max_shift, (B, 2), generator=generator)
        out = torch.stack([torch.roll(t, (int(dx), int(dy)), dims=(-2, -1))
                           for t, (dx, dy) in zip(tiles, shifts)])
    else:
        shifts = torch.zeros((B, 2), dtype=torch.long)
        out = tiles
    s_lo, s_hi = cfg.scale_range
    r_lo, r_hi = cfg.rotation_range_deg
    if s_lo != 1.0 or s_hi != 1.0 or r_lo != 0.0 or r_hi != 0.0:
        scales = s_lo + (s_hi - s_lo) * torch.rand(B, generator=generator, dtype=out.dtype)
        angles = r_lo + (r_hi - r_lo) * torch.rand(B, generator=generator, dtype=out.dtype)
        out = _resample_affine(out, scales, angles)
    if cfg.noise_std > 0:
        out = out + cfg.noise_std * torch.randn(out.shape, generator=generator, dtype=out.dtype)
    out = _blur_circular(out, cfg.blur_variance)
    return out, shifts


def distortion_layer(tile, cfg: DistortionConfig, rng):
    """Single-tile convenience wrapper; returns (distorted array, (dx, dy))."""
    a = np.asarray(tile, dtype=np.float32)
    S = a.shape[0]
    x = torch.from_numpy(a).view(1, 1, S, S)
    with torch.no_grad():
        out, shifts = distort_batch(x, cfg, rng)
    return out.view(S, S).numpy(), (int(shifts[0, 0]), int(shifts[0, 1]))


# ---------------------------------------------------------------------------
# losses
# ---------------------------------------------------------------------------

def _t(x):
    if isinstance(x, torch.Tensor):
        return x
    return torch.as_tensor(np.asarray(x, dtype=np.float64))


# sqrt has an unbounded derivative at 0, which turns into non-finite
# gradients when the encoder output momentarily collapses toward a constant
# early in training. Below _RMS_EPS the square root is replaced by a linear
# ramp that meets it continuously; above it the value is exact, so the
# loss identities (constant tile -> exactly 0, etc.) still hold.
_RMS_EPS = 1e-16


def _safe_sqrt(m):
    clamped = torch.sqrt(torch.clamp(m, min=_RMS_EPS))
    return torch.where(m >= _RMS_EPS, clamped, m / math.sqrt(_RMS_EPS))


def loss_smoothness(tile):
    """RMS difference between each pixel and its 3x3 neighborhood
    (including itself), neighbors wrapped circularly."""
    t = _t(tile)
    acc = 0.0
    for dx in (-1, 0, 1):
        for dy in (-1, 0, 1):
            acc = acc + (t - torch.roll(t, (dx, dy), dims=(-2, -1))).pow(2).sum(dim=(-2, -1))
    n = 9 * t.shape[-1] * t.shape[-2]
    return _safe_sqrt(acc / n)


def loss_shift(ic_out, target, true_shift):
    """RMS distance between the shift-decoder output and the target map
    cyclically shifted by the true shift."""
    out = _t(ic_out)
    tgt = _t(target).to(out.dtype)
    if out.shape[-2:] != tgt.shape[-2:]:
        raise ValueError(f"shape mismatch: {tuple(out.shape)} vs {tuple(tgt.shape)}")
    shifted = cyclic_shift(tgt, true_shift[0], true_shift[1])
    return _safe_sqrt((out - shifted).pow(2).mean(dim=(-2, -1)))


def loss_message(m, probs):
    """Mean binary cross entropy over the M bits, probabilities clamped."""
    p = _t(probs)
    bits = _t(m).to(p.dtype)
    if bits.shape[-1] != p.shape[-1]:
        raise ValueError(f"length mismatch: {bits.shape[-1]} vs {p.shape[-1]}")
    p = torch.clamp(p, _BCE_EPS, 1.0 - _BCE_EPS)
    return -(bits * torch.log(p) + (1 - bits) * torch.log(1 - p)).mean(dim=-1)


def total_loss(L_p, L_c, L_w, cfg: TrainConfig):
    return cfg.lambda_p * L_p + cfg.lambda_c * L_c + cfg.lambda_m * L_w


# ---------------------------------------------------------------------------
# training loop
# ---------------------------------------------------------------------------

def _roll_batch(x, shifts, sign=1):
    return torch.stack([torch.roll(t, (sign * int(dx), sign * int(dy)), dims=(-2, -1))
                        for t, (dx, dy) in zip(x, shifts)])


def train(cfg: TrainConfig, progress=None):
    """Run the joint training loop; returns (bundle, log).

    Deterministic per cfg.seed. Raises TrainingDiverged on non-finite loss.
    `progress`, if given, is called with (iteration, record dict).
    """
    bundle = new_bundle(cfg.hyperparams(), seed=cfg.seed)
    gen = torch.Generator().manual_seed(cfg.seed + 1)
    target = torch.from_numpy(make_shift_target(cfg.S, cfg.c))
    opt = torch.optim.Adam(bundle.parameters(), lr=cfg.learning_rate)
    sched = torch.optim.lr_scheduler.MultiStepLR(
        opt, milestones=[int(cfg.iterations * 0.6), int(cfg.iterations * 0.85)],
        gamma=0.3)
    log = TrainLog()
    for it in range(cfg.iterations):
        msgs = torch.randint(0, 2, (cfg.batch_size, cfg.M), generator=gen,
                             dtype=torch.float32)
        tiles = bundle.encoder(msgs)
        distorted, true_shifts = distort_batch(tiles, cfg.distortion, gen)
        ic_out = bundle.shift_decoder(distorted)
        tgt = _roll_batch(target.expand(cfg.batch_size, -1, -1).unsqueeze(1),
                          true_shifts)
        L_c = _safe_sqrt((ic_out - tgt).pow(2).mean(dim=(-2, -1))).mean()
        if not torch.isfinite(ic_out).all():
            raise TrainingDiverged(
                f"non-finite shift-decoder output at iteration {it}")
        # realign with the network's own estimate (argmax is not
        # differentiable; the reverse roll is a fixed permutation)
        est = np.array([locate_shift(m.detach().numpy()[0]) for m in ic_out])
        realigned = _roll_batch(distorted, est, sign=-1)
        probs = bundle.message_decoder(realigned)
        L_w = loss_message(msgs, probs).mean()
        L_p = loss_smoothness(tiles.squeeze(1)).mean()
        L = total_loss(L_p, L_c, L_w, cfg)
        if not torch.isfinite(L):
            raise TrainingDiverged(
                f"non-finite loss at iteration {it}: "
                f"L_p={float(L_p)} L_c={float(L_c)} L_w={float(L_w)}")
        opt.zero_grad()
        L.backward()
        opt.step()
        sched.step()
        with torch.no_grad():
            bits = (probs > 0.5).float()
            bit_acc = float((bits == msgs).float().mean())
            hit = float((torch.from_numpy(est % cfg.S) ==
                         (true_shifts % cfg.S)).all(dim=1).float().mean())
        rec = dict(iteration=it, L=float(L.detach()), L_p=float(L_p.detach()),
                   L_c=float(L_c.detach()), L_w=float(L_w.detach()),
                   bit_acc=bit_acc, shift_hit_rate=hit)
        log.append(**rec)
        if progress is not None:
            progress(it, rec)
    bundle.eval_mode()
    return bundle, log


def evaluate_ber(bundle: ModelBundle, cfg: DistortionConfig, n_trials,
                 seed=0, batch_size=32, decoder_stub=None):
    """BER through the simulated distortion layer.

    Returns (ber, trials_with_le3_errors). `decoder_stub(realigned, msgs)`
    replaces the message decoder when given (test hook).
    """
    hp = bundle.hyper
    gen = torch.Generator().manual_seed(seed)
    total_bits = 0
    wrong_bits = 0
    le3 = 0
    done = 0
    with torch.no_grad():
        while done < n_trials:
            B = min(batch_size, n_trials - done)
            msgs = torch.randint(0, 2, (B, hp.M), generator=gen, dtype=torch.float32)
            tiles = bundle.encoder(msgs)
            distorted, _ = distort_batch(tiles, cfg, gen)
            ic_out = bundle.shift_decoder(distorted)
            est = np.array([locate_shift(m.numpy()[0]) for m in ic_out])
            realigned = _roll_batch(distorted, est, sign=-1)
            if decoder_stub is not None:
                probs = decoder_stub(realigned, msgs)
            else:
                probs = bundle.message_decoder(realigned)
            errs = ((probs > 0.5).float() != msgs).sum(dim=1)
            wrong_bits += int(errs.sum())
            total_bits += B * hp.M
            le3 += int((errs <= 3).sum())
            done += B
    return wrong_bits / total_bits, le3
