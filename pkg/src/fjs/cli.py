"""Command line entry point: generate, train, solve, and bench subcommands.

Option precedence is flags > FJS_* environment variables > built-in
defaults.  Every command that writes artifacts drops a JSON run manifest
next to them (command, resolved config, seed, artifact list, version,
wall time), so a run can be reproduced from the manifest alone.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import (
    GAConfig,
    PSOConfig,
    bench,
    ga_solve,
    pso_solve,
    timing_table,
    write_bench_csv,
)
from .fuzzy import defuzz, z_value
from .instances import ParseError, generate, read_instance, write_instance
from .kernels import USING_NUMBA, z_array
from .policy import DEFAULT_POLICY, load_params, rollout_batch
from .sim import check_schedule, decode, export_gantt
from .training import TrainConfig, train


def fmt_tfn(t) -> str:
    """(57,83,108)-style rendering; integral components print as integers."""
    parts = []
    for x in t:
        xf = float(x)
        parts.append(str(int(xf)) if xf == int(xf) else f"{xf:g}")
    return "(" + ",".join(parts) + ")"


def _resolve(value, env_key: str, default, cast):
    """flags > FJS_* environment > default."""
    if value is not None:
        return value
    raw = os.environ.get(env_key)
    if raw is not None:
        try:
            return cast(raw)
        except ValueError:
            raise ValueError(f"environment {env_key}={raw!r} is not a valid {cast.__name__}")
    return default


def _write_manifest(path: Path, command: str, config: dict, seed, artifacts, t0: float) -> None:
    doc = {
        "command": command,
        "config": config,
        "seed": seed,
        "artifacts": [str(a) for a in artifacts],
        "version": __version__,
        "seconds": time.perf_counter() - t0,
        "using_numba": USING_NUMBA,
    }
    try:
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"writing {path}: {exc}") from exc


def _load_instance_dir(d: Path):
    """(name, Instance) pairs for every instance file in a directory."""
    if not d.is_dir():
        raise ValueError(f"{d} is not a directory")
    files = sorted(
        p
        for p in d.iterdir()
        if p.suffix in (".txt", ".json")
        and p.name != "manifest.json"
        and not p.name.endswith(".manifest.json")
    )
    if not files:
        raise ValueError(f"no instance files in {d}")
    return [(p.stem, read_instance(p)) for p in files]


def cmd_generate(args) -> int:
    t0 = time.perf_counter()
    n = _resolve(args.n, "FJS_N", 6, int)
    m = _resolve(args.m, "FJS_M", 6, int)
    count = _resolve(args.count, "FJS_COUNT", 1, int)
    seed = _resolve(args.seed, "FJS_SEED", 0, int)
    if count < 1:
        raise ValueError("count must be at least 1")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for i in range(count):
        inst = generate(n, m, seed=seed + i)
        path = out / f"inst_{i:04d}.txt"
        write_instance(inst, path)
        files.append(path)
    config = {"n": n, "m": m, "count": count, "seed": seed, "out": str(out)}
    _write_manifest(out / "manifest.json", "generate", config, seed, files, t0)
    if args.json:
        print(json.dumps({"files": [str(f) for f in files], "config": config}))
    else:
        print("file\tseed")
        for i, f in enumerate(files):
            print(f"{f}\t{seed + i}")
    return 0


def cmd_train(args) -> int:
    t0 = time.perf_counter()
    cfg = TrainConfig(
        epochs=_resolve(args.epochs, "FJS_EPOCHS", 30, int),
        k_train=_resolve(args.k, "FJS_K", 256, int),
        k_test=_resolve(args.k_test, "FJS_K_TEST", 512, int),
        batch_size=_resolve(args.batch, "FJS_BATCH", 16, int),
        lr=_resolve(args.lr, "FJS_LR", 0.0002, float),
        seed=_resolve(args.seed, "FJS_SEED", 0, int),
        val_interval=_resolve(args.val_interval, "FJS_VAL_INTERVAL", 1, int),
        workers=_resolve(args.workers, "FJS_WORKERS", os.cpu_count() or 1, int),
        ckpt_dir=Path(args.out),
    )
    data = _load_instance_dir(Path(args.data))
    val = _load_instance_dir(Path(args.val)) if args.val else []
    _, reports = train(
        [inst for _, inst in data],
        [inst for _, inst in val],
        cfg,
        resume_from=args.resume,
    )
    out = Path(args.out)
    artifacts = [out / "report.csv", out / "best.ckpt"] + [
        out / f"epoch_{r.epoch}.ckpt" for r in reports
    ]
    artifacts = [a for a in artifacts if a.exists()]
    config = {
        "data": str(args.data),
        "val": str(args.val) if args.val else None,
        "epochs": cfg.epochs,
        "k": cfg.k_train,
        "k_test": cfg.k_test,
        "batch": cfg.batch_size,
        "lr": cfg.lr,
        "seed": cfg.seed,
        "val_interval": cfg.val_interval,
        "workers": cfg.workers,
        "resume": str(args.resume) if args.resume else None,
        "out": str(out),
    }
    _write_manifest(out / "manifest.json", "train", config, cfg.seed, artifacts, t0)
    if args.json:
        print(
            json.dumps(
                {
                    "config": config,
                    "reports": [
                        {
                            "epoch": r.epoch,
                            "train_pseudo_makespan": r.train_pseudo_makespan,
                            "train_nll": r.train_nll,
                            "val_greedy_makespan": r.val_greedy_makespan,
                            "seconds": r.seconds,
                        }
                        for r in reports
                    ],
                }
            )
        )
    else:
        print("epoch\ttrain_pseudo_makespan\ttrain_nll\tval_greedy_makespan\tseconds")
        for r in reports:
            val_s = "" if r.val_greedy_makespan is None else f"{r.val_greedy_makespan:.4f}"
            print(
                f"{r.epoch}\t{r.train_pseudo_makespan:.4f}\t{r.train_nll:.4f}"
                f"\t{val_s}\t{r.seconds:.3f}"
            )
    return 0


def _best_of(inst, params, k: int, seed: int, cfg=DEFAULT_POLICY):
    """Greedy rollout plus k samples; returns (best Schedule, greedy TFN, seconds)."""
    beta, omega = cfg.rank.beta, cfg.rank.omega
    t0 = time.perf_counter()
    gseqs, _, gms = rollout_batch(inst, params, 1, greedy=True, cfg=cfg)
    seqs, ms = gseqs, gms
    if k >= 1:
        rng = np.random.default_rng(np.random.SeedSequence([seed, 3, 0]))
        sseqs, _, sms = rollout_batch(inst, params, k, rng=rng, cfg=cfg)
        seqs = np.vstack([gseqs, sseqs])
        ms = np.vstack([gms, sms])
    best = int(np.argmin(z_array(ms, beta, omega)))
    sched = decode(inst, seqs[best], cfg.rank)
    return sched, gms[0], time.perf_counter() - t0


def cmd_solve(args) -> int:
    t0 = time.perf_counter()
    k = _resolve(args.k, "FJS_K", 512, int)
    seed = _resolve(args.seed, "FJS_SEED", 0, int)
    if k < 0:
        raise ValueError("k must be non-negative")
    params = load_params(args.model)
    inst = read_instance(args.instance)
    sched, greedy_ms, seconds = _best_of(inst, params, k, seed)
    violations = check_schedule(sched, inst)
    if violations:
        raise ValueError(f"decoded schedule failed validation: {violations[0]}")

    artifacts = []
    if args.gantt:
        gantt_path = Path(args.gantt)
        doc = export_gantt(sched, inst)
        try:
            with open(gantt_path, "w") as fh:
                json.dump(doc, fh, indent=2)
                fh.write("\n")
        except OSError as exc:
            raise OSError(f"writing {gantt_path}: {exc}") from exc
        artifacts.append(gantt_path)
        config = {
            "model": str(args.model),
            "instance": str(args.instance),
            "k": k,
            "seed": seed,
            "gantt": str(gantt_path),
        }
        _write_manifest(
            gantt_path.with_suffix(".manifest.json"), "solve", config, seed, artifacts, t0
        )

    ms = sched.makespan
    if args.json:
        print(
            json.dumps(
                {
                    "makespan": [float(x) for x in ms],
                    "defuzz": float(defuzz(ms)),
                    "z_value": float(z_value(ms)),
                    "greedy_makespan": [float(x) for x in greedy_ms],
                    "seconds": seconds,
                    "k": k,
                }
            )
        )
    else:
        print(f"makespan\t{fmt_tfn(ms)}")
        print(f"defuzz\t{float(defuzz(ms)):g}")
        print(f"z_value\t{float(z_value(ms)):g}")
        print(f"seconds\t{seconds:.4f}")
    return 0


def cmd_bench(args) -> int:
    t0 = time.perf_counter()
    repeats = _resolve(args.repeats, "FJS_REPEATS", 30, int)
    seed = _resolve(args.seed, "FJS_SEED", 0, int)
    k = _resolve(args.k, "FJS_K", 0, int)
    names = [s.strip() for s in args.solvers.split(",") if s.strip()]
    if not names:
        raise ValueError("no solvers requested")
    known = {"emarm", "ga", "pso"}
    unknown = [s for s in names if s not in known]
    if unknown:
        raise ValueError(f"unknown solver: {', '.join(unknown)} (choose from emarm, ga, pso)")

    solvers = {}
    for name in names:
        if name == "ga":
            solvers["ga"] = lambda inst, s: ga_solve(inst, GAConfig(seed=s))[0]
        elif name == "pso":
            solvers["pso"] = lambda inst, s: pso_solve(inst, PSOConfig(seed=s))[0]
        else:
            if not args.model:
                raise ValueError("solver emarm needs --model")
            params = load_params(args.model)

            def emarm(inst, s, _params=params):
                sched, _, _ = _best_of(inst, _params, k, s)
                return sched

            solvers["emarm"] = emarm

    instances = _load_instance_dir(Path(args.instances))
    records = bench(instances, solvers, repeats=repeats, base_seed=seed)
    out = Path(args.out)
    if out.parent and not out.parent.exists():
        out.parent.mkdir(parents=True, exist_ok=True)
    write_bench_csv(records, out)
    table = timing_table(records)
    timing_path = out.with_suffix(".timing.tsv")
    try:
        timing_path.write_text(table)
    except OSError as exc:
        raise OSError(f"writing {timing_path}: {exc}") from exc

    config = {
        "instances": str(args.instances),
        "solvers": names,
        "repeats": repeats,
        "model": str(args.model) if args.model else None,
        "k": k,
        "seed": seed,
        "out": str(out),
    }
    _write_manifest(
        out.with_suffix(".manifest.json"), "bench", config, seed, [out, timing_path], t0
    )
    if args.json:
        print(
            json.dumps(
                {
                    "config": config,
                    "records": [
                        {
                            "instance": r.instance,
                            "size": r.size,
                            "solver": r.solver,
                            "makespan": [float(x) for x in r.makespan],
                            "defuzz": r.defuzz,
                            "z_value": r.z_value,
                            "seconds": r.seconds,
                        }
                        for r in records
                    ],
                }
            )
        )
    else:
        sys.stdout.write(table)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fjs",
        description="Fuzzy job shop scheduling: instance generation, policy "
        "training, solving, and benchmarking.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write random instances")
    g.add_argument("--n", type=int, help="jobs (default 6, env FJS_N)")
    g.add_argument("--m", type=int, help="machines (default 6, env FJS_M)")
    g.add_argument("--count", type=int, help="instances to write (default 1, env FJS_COUNT)")
    g.add_argument("--seed", type=int, help="base seed; file i uses seed+i (env FJS_SEED)")
    g.add_argument("--out", required=True, help="output directory")
    g.add_argument("--json", action="store_true", help="machine-readable stdout")
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("train", help="run the self-labeling training loop")
    t.add_argument("--data", required=True, help="directory of training instances")
    t.add_argument("--val", help="directory of validation instances")
    t.add_argument("--epochs", type=int, help="default 30 (env FJS_EPOCHS)")
    t.add_argument("--k", type=int, help="rollouts per instance, default 256 (env FJS_K)")
    t.add_argument("--k-test", type=int, help="evaluation rollouts, default 512 (env FJS_K_TEST)")
    t.add_argument("--batch", type=int, help="default 16 (env FJS_BATCH)")
    t.add_argument("--lr", type=float, help="default 0.0002 (env FJS_LR)")
    t.add_argument("--seed", type=int, help="default 0 (env FJS_SEED)")
    t.add_argument("--val-interval", type=int, help="epochs between validations (env FJS_VAL_INTERVAL)")
    t.add_argument("--workers", type=int, help="concurrent rollout workers (env FJS_WORKERS)")
    t.add_argument("--resume", help="epoch checkpoint to continue from")
    t.add_argument("--out", required=True, help="checkpoint/report directory")
    t.add_argument("--json", action="store_true", help="machine-readable stdout")
    t.set_defaults(func=cmd_train)

    s = sub.add_parser("solve", help="schedule one instance with a trained model")
    s.add_argument("--model", required=True, help="checkpoint file")
    s.add_argument("--instance", required=True, help="instance file")
    s.add_argument("--k", type=int, help="sample rollouts beyond greedy, default 512 (env FJS_K)")
    s.add_argument("--seed", type=int, help="sampling seed (env FJS_SEED)")
    s.add_argument("--gantt", help="write Gantt JSON here")
    s.add_argument("--json", action="store_true", help="machine-readable stdout")
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="time solvers over an instance directory")
    b.add_argument("--instances", required=True, help="instance directory")
    b.add_argument("--solvers", default="emarm,ga,pso", help="comma list: emarm,ga,pso")
    b.add_argument("--repeats", type=int, help="runs per cell, default 30 (env FJS_REPEATS)")
    b.add_argument("--model", help="checkpoint for emarm")
    b.add_argument("--k", type=int, help="emarm sample rollouts beyond greedy, default 0 (env FJS_K)")
    b.add_argument("--seed", type=int, help="base seed (env FJS_SEED)")
    b.add_argument("--out", default="bench.csv", help="CSV path (default bench.csv)")
    b.add_argument("--json", action="store_true", help="machine-readable stdout")
    b.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
