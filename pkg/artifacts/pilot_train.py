"""Desk-scale pilot: 3000 iterations, then a 100-trial BER check."""
import time
import screenmark as sm
from screenmark.training import TrainConfig, evaluate_ber

t0 = time.time()
cfg = TrainConfig(S=64, M=50, c=3, iterations=3000, seed=7)
def prog(it, rec):
    if it % 100 == 0 or it == cfg.iterations - 1:
        print(f"it={it} L={rec['L']:.4f} Lp={rec['L_p']:.5f} Lc={rec['L_c']:.4f} "
              f"Lw={rec['L_w']:.4f} acc={rec['bit_acc']:.3f} hit={rec['shift_hit_rate']:.2f} "
              f"t={time.time()-t0:.0f}s", flush=True)
bundle, log = sm.train(cfg, progress=prog)
sm.save_bundle(bundle, "artifacts/pilot.smk")
ber, le3 = evaluate_ber(bundle, cfg.distortion, 100, seed=99)
print(f"PILOT DONE: ber={ber:.4f} le3={le3}/100 elapsed={time.time()-t0:.0f}s", flush=True)
