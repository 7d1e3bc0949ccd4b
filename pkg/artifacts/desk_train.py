"""Train and cache the desk-scale model used by the heavy tests."""
import sys, time
sys.path.insert(0, "/root/pkg/src")
from screenmark.training import TrainConfig, train, evaluate_ber
from screenmark.models import save_bundle

cfg = TrainConfig(S=64, M=50, c=3, iterations=6000, seed=7)
t0 = time.time()


def progress(it, rec):
    if it % 100 == 0 or it == cfg.iterations - 1:
        print(f"it={it} L={rec['L']:.4f} acc={rec['bit_acc']:.3f} "
              f"t={time.time()-t0:.0f}s", flush=True)


bundle, log = train(cfg, progress=progress)
save_bundle(bundle, "/root/pkg/artifacts/desk_model.smk")
ber, le3 = evaluate_ber(bundle, cfg.distortion, 200, seed=99)
print(f"DESK DONE: ber={ber:.4f} le3={le3}/200 elapsed={time.time()-t0:.0f}s", flush=True)
