"""Round-trip a watermark through the simulated screen-camera channel.

Embeds a payload on a synthetic document, photographs it with perspective,
blur, noise and JPEG compression, then runs the six-step blind extraction
and reports what survived.
"""

import pathlib
import sys

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent))
from _common import get_bundle  # noqa: E402

from screenmark import codec
from screenmark.capture_sim import CaptureScenario, simulate_capture, synth_document
from screenmark.extraction import ExtractionParams, extract_watermark
from screenmark.models import encoder_forward
from screenmark.overlay import tile_overlay, composite

bundle = get_bundle()
rng = np.random.default_rng(42)
W, H = 640, 480

payload = [int(b) for b in rng.integers(0, 2, codec.PAYLOAD_BITS)]
word = codec.bch_encode(payload)
tile = encoder_forward(word, bundle)
marked = composite(synth_document(W, H, rng), tile_overlay(tile, W, H), 8 / 255)

scenario = CaptureScenario(perspective=0.06, defocus_blur_sigma=0.6,
                           sensor_noise_std=0.004, jpeg_quality=60,
                           resample_factor=2.5, seed=7)
photo, corners = simulate_capture(marked, scenario)
print(f"photo {photo.shape[1]}x{photo.shape[0]}, true corners:")
for label, (x, y) in zip(("TL", "TR", "BR", "BL"), corners):
    print(f"  {label} ({x:7.2f}, {y:7.2f})")

# The high-pass window must span at least two tile periods, and we know
# our own tile size, so narrow the period search accordingly.
S = bundle.hyper.S
params = ExtractionParams(median_window=2 * S + 1,
                          period_min=S - 24, period_max=2 * S - 8)
report = extract_watermark(photo, params, bundle,
                           corners=corners, out_size=(W, H))
print(f"\ndetected period : {report.period} px (tile is {bundle.hyper.S})")
print(f"estimated shift : {report.shift}")
errs = sum(a != b for a, b in zip(report.bits, word))
print(f"raw bit errors  : {errs}/{len(word)}")
print(f"BCH             : {report.bch_status}", end="")
if report.bch_status == "ok":
    print(f", {report.corrections} corrections, payload "
          f"{codec.bits_to_hex(report.payload)} "
          f"(match={report.payload == payload})")
else:
    print()
for w in report.warnings:
    print(f"warning: {w}")
