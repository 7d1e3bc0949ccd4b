import os
from pathlib import Path

import pytest

from screenmark.models import load_bundle, save_bundle
from screenmark.training import TrainConfig, train

ART = Path(__file__).resolve().parent.parent / "artifacts"

# Desk-scale training configuration used by the acceptance criteria; the
# trained bundle is cached on disk because training takes tens of minutes.
DESK_CONFIG = TrainConfig(S=64, M=50, c=3, iterations=6000, seed=7)
DESK_MODEL = ART / "desk_model.smk"

# Tiny configuration for pipeline-shape tests that only need a bundle with
# consistent dimensions, not a well-trained one.
SMOKE_CONFIG = TrainConfig(S=16, M=8, c=1, iterations=60, seed=3,
                           unet_base=8, msg_base=8, msg_blocks=3)
SMOKE_MODEL = ART / "smoke_model.smk"


def _cached_bundle(path, cfg):
    if path.exists():
        return load_bundle(path)
    bundle, _ = train(cfg)
    path.parent.mkdir(exist_ok=True)
    save_bundle(bundle, path)
    return bundle


# Small model with the production 50-bit message length, for exercising the
# CLI/service plumbing (payload hex, BCH wiring) without desk-scale training.
CLI_CONFIG = TrainConfig(S=16, M=50, c=1, iterations=40, seed=4,
                         unet_base=8, msg_base=8, msg_blocks=3)
CLI_MODEL = ART / "cli_model.smk"


@pytest.fixture(scope="session")
def smoke_bundle():
    return _cached_bundle(SMOKE_MODEL, SMOKE_CONFIG)


@pytest.fixture(scope="session")
def cli_bundle_path():
    _cached_bundle(CLI_MODEL, CLI_CONFIG)
    return CLI_MODEL


@pytest.fixture(scope="session")
def desk_bundle():
    return _cached_bundle(DESK_MODEL, DESK_CONFIG)


# One PASS/FAIL line per acceptance criterion, echoed after the run so the
# lines survive output capture (tests/test_acceptance.py fills this in).
criterion_lines = []


def pytest_terminal_summary(terminalreporter):
    if criterion_lines:
        terminalreporter.section("acceptance criteria")
        for line in criterion_lines:
            terminalreporter.line(line)
