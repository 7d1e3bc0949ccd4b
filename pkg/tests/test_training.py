import math

import numpy as np
import pytest
import torch

from screenmark import training
from screenmark.models import make_shift_target, cyclic_shift
from screenmark.training import (DistortionConfig, TrainConfig, train,
                                 distortion_layer, loss_smoothness, loss_shift,
                                 loss_message, total_loss, evaluate_ber,
                                 TrainingDiverged)

IDENTITY = dict(shift_range=0, scale_range=(1.0, 1.0),
                rotation_range_deg=(0.0, 0.0), noise_std=0.0, blur_variance=0.0)


def gen(seed=0):
    return torch.Generator().manual_seed(seed)


# --- distortion layer -----------------------------------------------------

def test_identity_config_is_identity():
    tile = np.random.default_rng(0).random((48, 48)).astype(np.float32)
    out, shift = distortion_layer(tile, DistortionConfig(**IDENTITY), gen())
    assert np.array_equal(out, tile)
    assert shift == (0, 0)


def test_distortion_deterministic_per_seed():
    tile = np.random.default_rng(1).random((48, 48)).astype(np.float32)
    cfg = DistortionConfig()
    a, sa = distortion_layer(tile, cfg, gen(5))
    b, sb = distortion_layer(tile, cfg, gen(5))
    assert np.array_equal(a, b) and sa == sb


def test_noise_only_statistics():
    cfg = DistortionConfig(**{**IDENTITY, "noise_std": 0.02})
    tile = np.full((120, 120), 0.5, dtype=np.float32)
    out, _ = distortion_layer(tile, cfg, gen(7))
    d = out - tile
    assert abs(d.mean()) < 0.002
    assert abs(d.std() - 0.02) / 0.02 < 0.10


def test_shift_is_recorded_and_applied():
    cfg = DistortionConfig(**{**IDENTITY, "shift_range": None})
    tile = np.random.default_rng(2).random((32, 32)).astype(np.float32)
    out, (dx, dy) = distortion_layer(tile, cfg, gen(3))
    assert np.allclose(out, cyclic_shift(tile, dx, dy))


def test_distortion_config_validation():
    with pytest.raises(ValueError):
        DistortionConfig(scale_range=(1.1, 0.9))
    with pytest.raises(ValueError):
        DistortionConfig(noise_std=-1)


def test_distortion_is_differentiable():
    cfg = DistortionConfig(shift_range=4, scale_range=(0.96, 1.04),
                           rotation_range_deg=(-2, 2), noise_std=0.01,
                           blur_variance=1.0)
    x = torch.rand(2, 1, 16, 16, requires_grad=True)
    out, _ = training.distort_batch(x, cfg, gen(9))
    out.sum().backward()
    assert x.grad is not None and torch.isfinite(x.grad).all()
    assert x.grad.abs().sum() > 0


# --- losses -----------------------------------------------------------------

def test_smoothness_constant_zero():
    assert float(loss_smoothness(np.full((16, 16), 0.37))) == 0.0


def test_smoothness_checkerboard():
    cb = (np.indices((2, 2)).sum(axis=0) % 2).astype(float)
    assert abs(float(loss_smoothness(cb)) - 2 / 3) <= 1e-9


def test_smoothness_positive_for_nonconstant():
    x = np.zeros((8, 8))
    x[3, 3] = 1.0
    assert float(loss_smoothness(x)) > 0


def test_smoothness_cyclic_shift_invariant():
    rng = np.random.default_rng(3)
    t = rng.random((24, 24))
    base = float(loss_smoothness(t))
    for d in [(1, 0), (5, 17), (-3, 9), (23, 23)]:
        assert abs(float(loss_smoothness(cyclic_shift(t, *d))) - base) < 1e-9


def test_loss_shift_zero_case_exact():
    tgt = make_shift_target(32, 2)
    for d in [(0, 0), (5, -7), (16, 16), (-1, 30)]:
        assert float(loss_shift(cyclic_shift(tgt, *d), tgt, d)) == 0.0


def test_loss_shift_zeros_output_value():
    tgt = make_shift_target(120, 5)
    got = float(loss_shift(np.zeros((120, 120)), tgt, (0, 0)))
    assert abs(got - math.sqrt(221 / 14400)) <= 1e-12


def test_loss_shift_matches_elementwise_oracle():
    rng = np.random.default_rng(4)
    tgt = make_shift_target(16, 1)
    out = rng.random((16, 16))
    d = (3, -2)
    shifted = np.roll(tgt, d, axis=(0, 1))
    oracle = math.sqrt(np.mean((out - shifted) ** 2))
    assert abs(float(loss_shift(out, tgt, d)) - oracle) < 1e-12


def test_loss_shift_shape_mismatch():
    with pytest.raises(ValueError):
        loss_shift(np.zeros((8, 8)), make_shift_target(16, 1), (0, 0))


def test_loss_message_values():
    assert abs(float(loss_message([1], [0.5])) - math.log(2)) <= 1e-9
    # perfect prediction bounded by the clamp
    assert float(loss_message([1, 0], [1.0, 0.0])) <= -math.log(1 - 1e-7) + 1e-12
    # maximally wrong prediction hits the clamp ceiling
    assert abs(float(loss_message([1, 0], [0.0, 1.0])) + math.log(1e-7)) < 1e-3


def test_loss_message_length_mismatch():
    with pytest.raises(ValueError):
        loss_message([1, 0], [0.5])


def test_total_loss_weighted_sum():
    cfg = TrainConfig(lambda_p=0, lambda_c=0, lambda_m=0)
    assert float(total_loss(torch.tensor(1.0), torch.tensor(2.0),
                            torch.tensor(3.0), cfg)) == 0.0
    cfg = TrainConfig(lambda_p=2, lambda_c=0, lambda_m=1)
    got = float(total_loss(torch.tensor(0.5, dtype=torch.float64),
                           torch.tensor(9.9, dtype=torch.float64),
                           torch.tensor(0.7, dtype=torch.float64), cfg))
    assert abs(got - 1.7) < 1e-12


# --- gradient checks ----------------------------------------------------------

def _fd_grad(f, x0, eps=1e-6):
    num = np.zeros_like(x0)
    it = np.nditer(x0, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        xp, xm = x0.copy(), x0.copy()
        xp[i] += eps
        xm[i] -= eps
        num[i] = (float(f(torch.tensor(xp))) - float(f(torch.tensor(xm)))) / (2 * eps)
    return num


def _check(f, x0):
    x = torch.tensor(x0, requires_grad=True)
    f(x).backward()
    analytic = x.grad.numpy()
    numeric = _fd_grad(f, x0)
    rel = np.abs(analytic - numeric).max() / (np.abs(numeric).max() + 1e-300)
    assert rel <= 1e-4


def test_gradient_smoothness():
    _check(loss_smoothness, np.random.default_rng(5).random((8, 8)))


def test_gradient_shift():
    tgt = make_shift_target(8, 1)
    _check(lambda x: loss_shift(x, tgt, (2, 3)),
           np.random.default_rng(6).random((8, 8)))


def test_gradient_message():
    m = np.random.default_rng(7).integers(0, 2, 12).astype(float)
    _check(lambda p: loss_message(m, p),
           np.random.default_rng(8).uniform(0.05, 0.95, 12))


# --- training loop --------------------------------------------------------------

SMOKE = dict(S=16, M=8, c=1, iterations=200, seed=7,
             unet_base=8, msg_base=8, msg_blocks=3)


@pytest.fixture(scope="module")
def smoke_run():
    return train(TrainConfig(**SMOKE))


def test_smoke_training_loss_decreases(smoke_run):
    _, log = smoke_run
    first = np.mean([r["L"] for r in log.rows[:10]])
    last = np.mean([r["L"] for r in log.rows[-10:]])
    assert last < first


def test_training_deterministic():
    cfg = TrainConfig(**{**SMOKE, "iterations": 20})
    _, log1 = train(cfg)
    _, log2 = train(cfg)
    assert log1.rows == log2.rows


def test_training_without_message_loss_gives_chance_accuracy():
    cfg = TrainConfig(**{**SMOKE, "iterations": 60, "lambda_m": 0.0})
    _, log = smoke = train(cfg)
    acc = np.mean([r["bit_acc"] for r in log.rows[-20:]])
    assert 0.3 < acc < 0.7


def test_log_csv(tmp_path, smoke_run):
    _, log = smoke_run
    path = tmp_path / "log.csv"
    log.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "iteration,L,L_p,L_c,L_w,bit_acc,shift_hit_rate"
    assert len(lines) == len(log.rows) + 1


# --- evaluate_ber -----------------------------------------------------------------

def test_evaluate_ber_ground_truth_stub(smoke_run):
    bundle, _ = smoke_run
    ber, le3 = evaluate_ber(bundle, DistortionConfig(), 50, seed=1,
                            decoder_stub=lambda realigned, msgs: msgs)
    assert ber == 0.0 and le3 == 50


def test_evaluate_ber_random_stub(smoke_run):
    bundle, _ = smoke_run
    g = torch.Generator().manual_seed(42)

    def stub(realigned, msgs):
        return torch.rand(msgs.shape, generator=g)

    ber, _ = evaluate_ber(bundle, DistortionConfig(), 500, seed=2,
                          decoder_stub=stub)
    assert abs(ber - 0.5) < 0.05
