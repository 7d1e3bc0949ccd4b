import json

import numpy as np
import pytest

from screenmark.cli import main, parse_corners
from screenmark.images import load_image, save_png


def test_parse_corners_ok():
    pts = parse_corners("0,0;10,0;10,10;0,10")
    assert pts == [(0, 0), (10, 0), (10, 10), (0, 10)]


def test_parse_corners_malformed():
    with pytest.raises(ValueError):
        parse_corners("0,0;10,0;10,10")
    with pytest.raises(ValueError):
        parse_corners("a,b;c,d;e,f;g,h")


@pytest.fixture(scope="module")
def model_path(cli_bundle_path):
    return str(cli_bundle_path)


def test_embed_alpha_zero_identity(model_path, tmp_path):
    screen = np.random.default_rng(0).integers(0, 256, (100, 120, 3),
                                               dtype=np.uint8)
    src = tmp_path / "screen.png"
    out = tmp_path / "marked.png"
    save_png(screen, src)
    rc = main(["embed", "--model", model_path, "--payload", "DEADBEEF",
               "--screen", str(src), "--alpha", "0", "--out", str(out)])
    assert rc == 0
    assert np.array_equal(load_image(out), screen)


def test_embed_bad_hex(model_path, tmp_path, capsys):
    screen = tmp_path / "screen.png"
    save_png(np.zeros((40, 40, 3), dtype=np.uint8), screen)
    rc = main(["embed", "--model", model_path, "--payload", "GG",
               "--screen", str(screen), "--alpha", "0.1",
               "--out", str(tmp_path / "x.png")])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_embed_psnr_doubling(model_path, tmp_path, capsys):
    screen = tmp_path / "screen.png"
    save_png(np.full((240, 320, 3), 255, dtype=np.uint8), screen)
    vals = {}
    for a in (4 / 255, 8 / 255):
        rc = main(["embed", "--model", model_path, "--payload", "01234567",
                   "--screen", str(screen), "--alpha", str(a),
                   "--out", str(tmp_path / "m.png")])
        assert rc == 0
        vals[a] = json.loads(capsys.readouterr().out)["psnr_db"]
    assert abs((vals[4 / 255] - vals[8 / 255]) - 6.02) < 0.6


def test_gen_overlay_tiles(model_path, tmp_path):
    out = tmp_path / "overlay.png"
    rc = main(["gen-overlay", "--model", model_path, "--payload", "0000FFFF",
               "--size", "64x48", "--out", str(out)])
    assert rc == 0
    img = load_image(out)
    assert img.shape[:2] == (48, 64)
    S = 16  # cli test model tile size
    assert np.array_equal(img[:S, :S], img[16:32, 16:32])


def test_extract_runs_and_reports(model_path, tmp_path):
    # an unmarked photo: pipeline completes, BCH almost surely fails (rc 2)
    photo = tmp_path / "photo.png"
    rng = np.random.default_rng(1)
    save_png(rng.integers(200, 256, (120, 120), dtype=np.uint8), photo)
    rep = tmp_path / "report.json"
    rc = main(["extract", "--model", model_path, "--photo", str(photo),
               "--period-min", "10", "--period-max", "40",
               "--median-window", "9", "--out", str(rep),
               "--dump-intermediates", str(tmp_path / "dumps")])
    assert rc in (0, 2)
    doc = json.loads(rep.read_text())
    assert "period" in doc and "bch" in doc
    assert (tmp_path / "dumps" / "i_ph.png").exists()


def test_extract_missing_model(tmp_path, capsys):
    rc = main(["extract", "--model", str(tmp_path / "nope.smk"),
               "--photo", str(tmp_path / "nope.png")])
    assert rc == 1


def test_train_smoke_and_determinism(tmp_path):
    cfg = {"S": 16, "M": 8, "c": 1, "iterations": 20, "seed": 5,
           "unet_base": 8, "msg_base": 8, "msg_blocks": 3}
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    logs = []
    for run in range(2):
        out = tmp_path / f"m{run}.smk"
        log = tmp_path / f"log{run}.csv"
        rc = main(["train", "--config", str(cfg_path), "--out", str(out),
                   "--log", str(log)])
        assert rc == 0 and out.exists()
        logs.append(log.read_bytes())
    assert logs[0] == logs[1]


def test_train_missing_config(tmp_path, capsys):
    rc = main(["train", "--config", str(tmp_path / "nope.json"),
               "--out", str(tmp_path / "m.smk")])
    assert rc == 1


def test_capture_sim_identity(model_path, tmp_path, capsys):
    img = np.random.default_rng(2).integers(0, 256, (40, 50, 3), dtype=np.uint8)
    src = tmp_path / "in.png"
    save_png(img, src)
    scen = tmp_path / "scen.json"
    scen.write_text(json.dumps({"gamma": 1.0}))
    out = tmp_path / "photo.png"
    rc = main(["capture-sim", "--image", str(src), "--scenario", str(scen),
               "--out", str(out)])
    assert rc == 0
    assert np.array_equal(load_image(out), img)
    corners = json.loads(capsys.readouterr().out)["corners"]
    assert corners.startswith("0.00,0.00;49.00,0.00")
