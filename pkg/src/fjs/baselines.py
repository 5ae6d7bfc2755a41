"""GA and PSO baselines over job-repetition sequences, plus a bench harness.

Both solvers rank candidate schedules by the z-value of their fuzzy
makespan, decoded through the same list-scheduling simulator as everything
else, so results are directly comparable with the policy's.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import kernels
from .fuzzy import DEFAULT_RANK, RankConfig, TFN, defuzz, z_value
from .instances import Instance
from .sim import decode

BENCH_HEADER = ["instance", "size", "solver", "t1", "t2", "t3", "defuzz", "z_value", "seconds"]


@dataclass(frozen=True)
class GAConfig:
    population: int = 100
    iterations: int = 100
    crossover_prob: float = 0.7
    mutation_prob: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.crossover_prob <= 1.0:
            raise ValueError("crossover_prob must be in [0, 1]")
        if not 0.0 <= self.mutation_prob <= 1.0:
            raise ValueError("mutation_prob must be in [0, 1]")
        if self.population < 2:
            raise ValueError("population must be at least 2")
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")


@dataclass(frozen=True)
class PSOConfig:
    population: int = 100
    iterations: int = 100
    c_global: float = 1.2
    c_local: float = 1.2
    inertia_start: float = 0.9
    inertia_end: float = 0.4
    seed: int = 0

    def __post_init__(self):
        if self.c_global <= 0.0 or self.c_local <= 0.0:
            raise ValueError("learning factors must be positive")
        if self.population < 2:
            raise ValueError("population must be at least 2")
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")


def _fitness(inst: Instance, seqs: np.ndarray, rank: RankConfig) -> np.ndarray:
    ms = kernels.batch_makespans(inst.machines, inst.times, seqs, rank.beta, rank.omega)
    return kernels.z_array(ms, rank.beta, rank.omega)


def _tournament(z: np.ndarray, rng: np.random.Generator) -> int:
    a = int(rng.integers(z.shape[0]))
    b = int(rng.integers(z.shape[0]))
    return a if z[a] <= z[b] else b


def job_order_crossover(p1: np.ndarray, p2: np.ndarray, keep: np.ndarray) -> np.ndarray:
    """Child keeps p1's entries at positions holding jobs in `keep` and fills
    the rest with p2's other jobs in their p2 order."""
    child = np.empty_like(p1)
    hold = keep[p1]
    child[hold] = p1[hold]
    child[~hold] = p2[~keep[p2]]
    return child


def _swap_mutation(seq: np.ndarray, rng: np.random.Generator) -> None:
    # swap two positions holding different jobs; a single-job sequence has none
    if seq[0] == seq[-1] and (seq == seq[0]).all():
        return
    while True:
        i = int(rng.integers(seq.size))
        j = int(rng.integers(seq.size))
        if seq[i] != seq[j]:
            seq[i], seq[j] = seq[j], seq[i]
            return


def ga_solve(inst: Instance, cfg: GAConfig, rank: RankConfig = DEFAULT_RANK):
    """Genetic algorithm; returns (best Schedule, best-so-far z trace).

    Tournament selection of size 2, job-based order crossover, swap
    mutation, elitism of one.  The trace has iterations+1 entries, starting
    with the initial population's best.
    """
    rng = np.random.default_rng(cfg.seed)
    base = np.repeat(np.arange(inst.n), inst.m)
    pop = np.stack([rng.permutation(base) for _ in range(cfg.population)])
    z = _fitness(inst, pop, rank)
    best = int(np.argmin(z))
    best_seq = pop[best].copy()
    best_z = float(z[best])
    trace = [best_z]

    for _ in range(cfg.iterations):
        children = [best_seq.copy()]
        while len(children) < cfg.population:
            i1 = _tournament(z, rng)
            i2 = _tournament(z, rng)
            c1, c2 = pop[i1].copy(), pop[i2].copy()
            if rng.random() < cfg.crossover_prob:
                keep = rng.random(inst.n) < 0.5
                c1 = job_order_crossover(pop[i1], pop[i2], keep)
                c2 = job_order_crossover(pop[i2], pop[i1], keep)
            if rng.random() < cfg.mutation_prob:
                _swap_mutation(c1, rng)
            children.append(c1)
            if len(children) < cfg.population:
                if rng.random() < cfg.mutation_prob:
                    _swap_mutation(c2, rng)
                children.append(c2)
        pop = np.stack(children)
        z = _fitness(inst, pop, rank)
        i = int(np.argmin(z))
        if z[i] < best_z:
            best_z = float(z[i])
            best_seq = pop[i].copy()
        trace.append(best_z)
    return decode(inst, best_seq, rank), trace


def decode_keys(keys: np.ndarray, multiset: np.ndarray) -> np.ndarray:
    """Random-key decode: positions sorted by key ascending receive the
    sorted job-repetition multiset in order.  keys is [pop, N]."""
    order = np.argsort(keys, axis=1, kind="stable")
    seqs = np.empty(keys.shape, dtype=np.int64)
    np.put_along_axis(seqs, order, np.broadcast_to(multiset, keys.shape), axis=1)
    return seqs


def pso_solve(inst: Instance, cfg: PSOConfig, rank: RankConfig = DEFAULT_RANK):
    """Particle swarm over random keys; returns (best Schedule, z trace).

    v <- w*v + c_global*r1*(gbest - x) + c_local*r2*(pbest - x) with fresh
    per-dimension r1, r2 and inertia w sliding linearly from inertia_start
    to inertia_end.  Personal and global bests replace only on strict
    improvement.  The trace has iterations+1 entries.
    """
    rng = np.random.default_rng(cfg.seed)
    num = inst.num_ops
    multiset = np.repeat(np.arange(inst.n), inst.m)
    x = rng.random((cfg.population, num))
    v = np.zeros((cfg.population, num))

    seqs = decode_keys(x, multiset)
    z = _fitness(inst, seqs, rank)
    pbest_x = x.copy()
    pbest_z = z.copy()
    g = int(np.argmin(z))
    gbest_x = x[g].copy()
    gbest_seq = seqs[g].copy()
    gbest_z = float(z[g])
    trace = [gbest_z]

    span = cfg.inertia_start - cfg.inertia_end
    for it in range(cfg.iterations):
        if cfg.iterations > 1:
            w = cfg.inertia_start - span * it / (cfg.iterations - 1)
        else:
            w = cfg.inertia_start
        r1 = rng.random((cfg.population, num))
        r2 = rng.random((cfg.population, num))
        v = w * v + cfg.c_global * r1 * (gbest_x - x) + cfg.c_local * r2 * (pbest_x - x)
        x = x + v
        seqs = decode_keys(x, multiset)
        z = _fitness(inst, seqs, rank)
        better = z < pbest_z
        pbest_x[better] = x[better]
        pbest_z[better] = z[better]
        i = int(np.argmin(z))
        if z[i] < gbest_z:
            gbest_z = float(z[i])
            gbest_x = x[i].copy()
            gbest_seq = seqs[i].copy()
        trace.append(gbest_z)
    return decode(inst, gbest_seq, rank), trace


@dataclass(frozen=True)
class BenchRecord:
    instance: str
    size: str
    solver: str
    makespan: TFN
    defuzz: float
    z_value: float
    seconds: float

    def csv_row(self) -> list:
        return [
            self.instance,
            self.size,
            self.solver,
            repr(float(self.makespan.a1)),
            repr(float(self.makespan.a2)),
            repr(float(self.makespan.a3)),
            repr(float(self.defuzz)),
            repr(float(self.z_value)),
            repr(float(self.seconds)),
        ]


def bench(
    named_instances,
    solvers: dict,
    repeats: int = 30,
    rank: RankConfig = DEFAULT_RANK,
    base_seed: int = 0,
) -> list[BenchRecord]:
    """Time every solver on every instance.

    named_instances is a sequence of (name, Instance); solvers maps a name
    to a callable (instance, seed) -> Schedule.  Each (instance, solver)
    cell reports the componentwise mean makespan and the mean wall time
    over `repeats` seeded runs.
    """
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    records = []
    for ii, (name, inst) in enumerate(named_instances):
        for si, (solver_name, solver) in enumerate(solvers.items()):
            total_ms = np.zeros(3)
            total_sec = 0.0
            for rep in range(repeats):
                seed = int(
                    np.random.SeedSequence([base_seed, ii, si, rep]).generate_state(1)[0]
                )
                t0 = time.perf_counter()
                sched = solver(inst, seed)
                total_sec += time.perf_counter() - t0
                total_ms += np.asarray(sched.makespan)
            mean = TFN(*(total_ms / repeats))
            records.append(
                BenchRecord(
                    instance=name,
                    size=f"{inst.n}x{inst.m}",
                    solver=solver_name,
                    makespan=mean,
                    defuzz=float(defuzz(mean)),
                    z_value=float(z_value(mean, rank)),
                    seconds=total_sec / repeats,
                )
            )
    return records


def write_bench_csv(records, path) -> None:
    import csv

    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(BENCH_HEADER)
            for rec in records:
                writer.writerow(rec.csv_row())
    except OSError as exc:
        raise OSError(f"writing {path}: {exc}") from exc


def _size_key(size: str):
    n, m = size.split("x")
    return int(n), int(m)


def timing_table(records) -> str:
    """Mean seconds per (size, solver) as a TSV table, one row per size."""
    solvers: list[str] = []
    for rec in records:
        if rec.solver not in solvers:
            solvers.append(rec.solver)
    cells: dict = {}
    for rec in records:
        cells.setdefault((rec.size, rec.solver), []).append(rec.seconds)
    sizes = sorted({rec.size for rec in records}, key=_size_key)
    lines = ["size\t" + "\t".join(solvers)]
    for size in sizes:
        row = [size]
        for solver in solvers:
            vals = cells.get((size, solver))
            row.append(f"{np.mean(vals):.6f}" if vals else "")
        lines.append("\t".join(row))
    return "\n".join(lines) + "\n"
