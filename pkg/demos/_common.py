"""Shared helper for the demo scripts: locate or train a model."""

import pathlib

from screenmark.models import load_bundle, save_bundle
from screenmark.training import TrainConfig, train

ART = pathlib.Path(__file__).resolve().parent.parent / "artifacts"
DESK = ART / "desk_model.smk"
FALLBACK = ART / "demo_model.smk"


def get_bundle():
    """Prefer the desk-scale model; otherwise train a small stand-in once
    (a couple of minutes on CPU) and cache it."""
    if DESK.exists():
        print(f"using desk model {DESK}")
        return load_bundle(DESK)
    if FALLBACK.exists():
        print(f"using cached demo model {FALLBACK}")
        return load_bundle(FALLBACK)
    print("no trained model found; training a small demo model "
          "(a few minutes on CPU)...")
    cfg = TrainConfig(S=32, M=50, c=2, iterations=800, seed=1)
    bundle, _ = train(cfg)
    ART.mkdir(exist_ok=True)
    save_bundle(bundle, FALLBACK)
    print(f"cached demo model at {FALLBACK}")
    return bundle
