"""Screen-photograph robust watermarking toolkit.

Embeds a 32-bit identity payload (BCH-protected to 50 bits) into a static
semi-transparent tiled overlay, simulates the screen-to-camera channel,
and blindly extracts the payload from photographs.
"""

from .codec import (bch_encode, bch_decode, DecodeFailure, IdentityFields,
                    pack_identity, unpack_identity)
from .models import (Hyperparams, ModelBundle, new_bundle, save_bundle,
                     load_bundle, encoder_forward, shift_decoder_forward,
                     message_decoder_forward, make_shift_target, cyclic_shift,
                     locate_shift)
from .training import (DistortionConfig, TrainConfig, TrainLog, train,
                       evaluate_ber, distortion_layer, loss_smoothness,
                       loss_shift, loss_message, total_loss)
from .overlay import tile_overlay, composite, psnr, ssim
from .extraction import (ExtractionParams, ExtractionReport, extract_watermark,
                         to_grayscale, warp_perspective, detect_background,
                         average_with_period, score_period, find_period,
                         extract_tile)
from .capture_sim import (CaptureScenario, EvalRow, simulate_capture,
                          jpeg_roundtrip, run_eval_matrix, synth_document)

__version__ = "0.1.0"
