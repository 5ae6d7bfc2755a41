import time

import numpy as np

from fjs import instances, policy, training
from fjs.fuzzy import TFN, defuzz, z_value

t_start = time.perf_counter()

train_set = [instances.generate(6, 6, seed=s) for s in range(500)]
held_out = [instances.generate(6, 6, seed=10_000 + s) for s in range(50)]

cfg = training.TrainConfig(
    epochs=10, k_train=64, k_test=512, batch_size=16, seed=0,
    ckpt_dir="/root/pkg/.scratch/crit6_run",
)

params0 = policy.init_params(
    np.random.default_rng(np.random.SeedSequence([cfg.seed, 0])), cfg.policy
)

def greedy_mean_defuzz(params):
    vals = []
    for inst in held_out:
        _, _, ms = policy.rollout_batch(inst, params, 1, greedy=True)
        vals.append(defuzz(TFN(*ms[0])))
    return float(np.mean(vals))

base = greedy_mean_defuzz(params0)
print(f"epoch-0 greedy mean defuzz: {base:.4f}", flush=True)

t_train = time.perf_counter()
params, reports = training.train(train_set, held_out, cfg)
train_secs = time.perf_counter() - t_train
print(f"train wall: {train_secs:.1f}s", flush=True)

best = policy.load_params("/root/pkg/.scratch/crit6_run/best.ckpt")
final = greedy_mean_defuzz(best)
improv = (base - final) / base * 100
print(f"best.ckpt greedy mean defuzz: {final:.4f}  improvement: {improv:.2f}%", flush=True)

records = training.evaluate(best, held_out, cfg.k_test, cfg)
bad = 0
for r in records:
    if z_value(r.best) > z_value(r.greedy):
        bad += 1
print(f"best-of-512 > greedy (z) count: {bad}/50", flush=True)
print(f"total wall: {time.perf_counter() - t_start:.1f}s", flush=True)
for r in reports:
    print(f"  epoch {r.epoch}: pseudo {r.train_pseudo_makespan:.2f} nll {r.train_nll:.4f} val {r.val_greedy_makespan} {r.seconds:.1f}s", flush=True)
