"""Self-labeling EM training loop for the scheduling policy.

Each batch alternates an E-step, which samples K rollouts per instance and
keeps the best-ranked makespan's sequence as that instance's pseudo-label,
with an M-step, one Adam update on the mean negative log-likelihood of the
pseudo-labels.  All randomness derives from one seed, so a run is
reproducible bit for bit.
"""

from __future__ import annotations

import csv
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .fuzzy import TFN, defuzz
from .instances import Instance
from .nn import (
    AdamState,
    NamedParams,
    Tape,
    add,
    adam_step,
    init_adam,
    load_checkpoint,
    save_checkpoint,
    scale,
    zero_grads,
)
from .policy import (
    DEFAULT_POLICY,
    PolicyConfig,
    init_params,
    log_prob_of,
    params_from_arrays,
    rollout_batch,
)

REPORT_HEADER = ["epoch", "train_pseudo_makespan", "train_nll", "val_greedy_makespan", "seconds"]


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    k_train: int = 256
    k_test: int = 512
    batch_size: int = 16
    lr: float = 0.0002
    seed: int = 0
    val_interval: int = 1
    ckpt_dir: Path | str | None = None
    workers: int = 1
    policy: PolicyConfig = field(default_factory=lambda: DEFAULT_POLICY)

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        if self.k_train < 1:
            raise ValueError("k_train must be at least 1")
        if self.k_test < 0:
            raise ValueError("k_test must be non-negative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if self.lr <= 0.0:
            raise ValueError("lr must be positive")
        if self.val_interval < 1:
            raise ValueError("val_interval must be at least 1")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")

    @property
    def rank(self):
        return self.policy.rank


@dataclass(frozen=True)
class EpochReport:
    epoch: int
    train_pseudo_makespan: float
    train_nll: float
    val_greedy_makespan: float | None
    seconds: float

    def csv_row(self) -> list:
        val = "" if self.val_greedy_makespan is None else repr(float(self.val_greedy_makespan))
        return [
            self.epoch,
            repr(float(self.train_pseudo_makespan)),
            repr(float(self.train_nll)),
            val,
            repr(float(self.seconds)),
        ]


@dataclass(frozen=True)
class EvalRecord:
    greedy: TFN
    best: TFN
    seconds: float


def e_step(
    inst: Instance,
    params: NamedParams,
    k: int,
    rng: np.random.Generator,
    cfg: PolicyConfig = DEFAULT_POLICY,
):
    """Sample k rollouts and keep the best: (sequence, its makespan).

    Best means minimal z_value of the fuzzy makespan; the first of tied
    candidates wins.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    seqs, _, ms = rollout_batch(inst, params, k, rng=rng, cfg=cfg)
    z = kernels.z_array(ms, cfg.rank.beta, cfg.rank.omega)
    best = int(np.argmin(z))
    return seqs[best].copy(), TFN(*ms[best])


def m_step(
    batch,
    params: NamedParams,
    optim: AdamState,
    cfg: PolicyConfig = DEFAULT_POLICY,
) -> float:
    """One Adam update on loss = -(1/B) sum log p(pseudo-label); returns the
    pre-update loss.  `batch` is a sequence of (instance, sequence) pairs."""
    if len(batch) == 0:
        raise ValueError("m_step needs a non-empty batch")
    tape = Tape()
    total = None
    for inst, seq in batch:
        term = log_prob_of(inst, params, seq, cfg, tape)
        total = term if total is None else add(tape, total, term)
    loss = scale(tape, total, -1.0 / len(batch))
    zero_grads(params)
    tape.backward(loss)
    adam_step(params, None, optim)
    return float(loss.data)


def evaluate(
    params: NamedParams,
    instances,
    k: int,
    cfg: TrainConfig,
) -> list[EvalRecord]:
    """Per instance: one greedy rollout plus k sampled rollouts; the reported
    best is the minimal-z makespan among all of them (greedy included)."""
    beta, omega = cfg.rank.beta, cfg.rank.omega
    records = []
    for idx, inst in enumerate(instances):
        t0 = time.perf_counter()
        _, _, gms = rollout_batch(inst, params, 1, greedy=True, cfg=cfg.policy)
        candidates = gms
        if k >= 1:
            rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 3, idx]))
            _, _, sms = rollout_batch(inst, params, k, rng=rng, cfg=cfg.policy)
            candidates = np.vstack([gms, sms])
        z = kernels.z_array(candidates, beta, omega)
        best = candidates[int(np.argmin(z))]
        records.append(
            EvalRecord(TFN(*gms[0]), TFN(*best), time.perf_counter() - t0)
        )
    return records


def _pseudo_labels(dataset, indices, params, cfg: TrainConfig, epoch: int, pool):
    """E-step for one batch: pseudo-labels under frozen parameters."""

    def one(di: int):
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 2, epoch, int(di)]))
        return e_step(dataset[di], params, cfg.k_train, rng, cfg.policy)

    if pool is None:
        return [one(di) for di in indices]
    return list(pool.map(one, indices))


def _read_report(path: Path) -> list[EpochReport]:
    """Parse report.csv back into EpochReport rows (empty on missing file)."""
    if not path.exists():
        return []
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != REPORT_HEADER:
            raise ValueError(f"{path}: unexpected report header {header}")
        for rec in reader:
            rows.append(
                EpochReport(
                    epoch=int(rec[0]),
                    train_pseudo_makespan=float(rec[1]),
                    train_nll=float(rec[2]),
                    val_greedy_makespan=float(rec[3]) if rec[3] else None,
                    seconds=float(rec[4]),
                )
            )
    return rows


def _write_report(path: Path, reports) -> None:
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(REPORT_HEADER)
            for rep in reports:
                writer.writerow(rep.csv_row())
    except OSError as exc:
        raise OSError(f"writing {path}: {exc}") from exc


def _save_ckpt(path: Path, tensors) -> None:
    try:
        save_checkpoint(path, tensors)
    except OSError as exc:
        raise OSError(f"writing {path}: {exc}") from exc


def _split_double(x: float):
    """float64 -> two float32 words that sum back exactly (double-float trick)."""
    hi = np.float32(x)
    if not np.isfinite(hi):
        return hi, np.float32(0.0)
    lo = np.float32(np.float64(x) - np.float64(hi))
    return hi, lo


def _training_state_arrays(params, optim: AdamState, epoch: int, best_val: float) -> dict:
    arrays = {name: t.data for name, t in params.items()}
    for name, m in optim.m.items():
        arrays[f"optim.m.{name}"] = m
    for name, v in optim.v.items():
        arrays[f"optim.v.{name}"] = v
    arrays["optim.step"] = np.float32(optim.step)
    arrays["meta.epoch"] = np.float32(epoch)
    hi, lo = _split_double(best_val)
    arrays["meta.best_val.hi"] = hi
    arrays["meta.best_val.lo"] = lo
    return arrays


def load_training_state(path, cfg: TrainConfig):
    """Read an epoch checkpoint back: (params, optimizer, epoch, best_val)."""
    arrays = load_checkpoint(path)
    params = params_from_arrays(arrays, cfg.policy)
    optim = init_adam(params, lr=cfg.lr)
    for name in params:
        m_key, v_key = f"optim.m.{name}", f"optim.v.{name}"
        if m_key not in arrays or v_key not in arrays:
            raise ValueError(f"checkpoint {path} has no optimizer state for {name}")
        optim.m[name] = np.asarray(arrays[m_key], dtype=np.float32).reshape(params[name].data.shape)
        optim.v[name] = np.asarray(arrays[v_key], dtype=np.float32).reshape(params[name].data.shape)
    if "optim.step" not in arrays or "meta.epoch" not in arrays:
        raise ValueError(f"checkpoint {path} is not a resumable training state")
    optim.step = int(arrays["optim.step"])
    epoch = int(arrays["meta.epoch"])
    best_val = float(np.float64(arrays["meta.best_val.hi"]) + np.float64(arrays["meta.best_val.lo"]))
    return params, optim, epoch, best_val


def train(dataset, val_set, cfg: TrainConfig, resume_from=None):
    """Run the full loop; returns (trained params, list of EpochReport).

    With cfg.ckpt_dir set, each epoch writes `epoch_<k>.ckpt` (parameters
    plus optimizer state), `best.ckpt` tracks the lowest validation mean
    defuzzified greedy makespan (model only), and `report.csv` accumulates
    one row per epoch.
    """
    dataset = list(dataset)
    val_set = list(val_set) if val_set is not None else []
    if not dataset:
        raise ValueError("training needs at least one instance")

    if resume_from is not None:
        params, optim, start_epoch, best_val = load_training_state(resume_from, cfg)
        start_epoch += 1
    else:
        params = init_params(
            np.random.default_rng(np.random.SeedSequence([cfg.seed, 0])), cfg.policy
        )
        optim = init_adam(params, lr=cfg.lr)
        start_epoch = 1
        best_val = float("inf")

    ckpt_dir = Path(cfg.ckpt_dir) if cfg.ckpt_dir is not None else None
    if ckpt_dir is not None:
        ckpt_dir.mkdir(parents=True, exist_ok=True)

    pool = ThreadPoolExecutor(max_workers=cfg.workers) if cfg.workers > 1 else None
    reports: list[EpochReport] = []
    if resume_from is not None and ckpt_dir is not None:
        reports = [
            r for r in _read_report(ckpt_dir / "report.csv") if r.epoch < start_epoch
        ]
    try:
        for epoch in range(start_epoch, cfg.epochs + 1):
            t0 = time.perf_counter()
            order = np.random.default_rng(
                np.random.SeedSequence([cfg.seed, 1, epoch])
            ).permutation(len(dataset))

            nll_sum = 0.0
            pseudo_sum = 0.0
            for lo in range(0, len(order), cfg.batch_size):
                chunk = order[lo : lo + cfg.batch_size]
                labels = _pseudo_labels(dataset, chunk, params, cfg, epoch, pool)
                batch = [(dataset[di], seq) for di, (seq, _) in zip(chunk, labels)]
                loss = m_step(batch, params, optim, cfg.policy)
                nll_sum += loss * len(chunk)
                pseudo_sum += sum(defuzz(ms) for _, ms in labels)

            val = None
            if val_set and (epoch % cfg.val_interval == 0 or epoch == cfg.epochs):
                recs = evaluate(params, val_set, 0, cfg)
                val = float(np.mean([defuzz(r.greedy) for r in recs]))

            report = EpochReport(
                epoch=epoch,
                train_pseudo_makespan=float(pseudo_sum / len(dataset)),
                train_nll=float(nll_sum / len(dataset)),
                val_greedy_makespan=val,
                seconds=time.perf_counter() - t0,
            )
            reports.append(report)

            if val is not None and val < best_val:
                best_val = val
                if ckpt_dir is not None:
                    _save_ckpt(ckpt_dir / "best.ckpt", {n: t.data for n, t in params.items()})
            if ckpt_dir is not None:
                _save_ckpt(
                    ckpt_dir / f"epoch_{epoch}.ckpt",
                    _training_state_arrays(params, optim, epoch, best_val),
                )
                _write_report(ckpt_dir / "report.csv", reports)
    finally:
        if pool is not None:
            pool.shutdown()
    return params, reports
