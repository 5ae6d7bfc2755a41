"""Job shop instances: representation, random generation, graph, file I/O.

An instance is n jobs by m machines where every job visits every machine
exactly once.  Operations are numbered densely: ``op_id = job*m + position``.
Processing times are TFNs stored as a [n, m, 3] float64 array.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .fuzzy import TFN


class ParseError(ValueError):
    """Raised for malformed instance files; the message names the location."""


@dataclass(frozen=True)
class OperationRef:
    """One operation: the ``position``-th step of ``job``, on ``machine``."""

    op_id: int
    job: int
    position: int
    machine: int
    time: TFN


@dataclass
class Instance:
    """An n-jobs by m-machines problem with fuzzy processing times.

    ``machines[j, p]`` is the machine of job j's p-th operation and
    ``times[j, p]`` its TFN components.  Arrays are frozen after
    validation; instances are safe to share across workers.
    """

    n: int
    m: int
    machines: np.ndarray
    times: np.ndarray
    seed: int | None = None

    def __post_init__(self) -> None:
        machines = np.ascontiguousarray(self.machines, dtype=np.int64)
        times = np.ascontiguousarray(self.times, dtype=np.float64)
        if machines.shape != (self.n, self.m):
            raise ValueError(f"machines shape {machines.shape} != ({self.n}, {self.m})")
        if times.shape != (self.n, self.m, 3):
            raise ValueError(f"times shape {times.shape} != ({self.n}, {self.m}, 3)")
        for j in range(self.n):
            if sorted(machines[j]) != list(range(self.m)):
                raise ValueError(f"job {j} machine list is not a permutation of 0..{self.m - 1}")
        if not (times[..., 0] > 0).all():
            raise ValueError("all processing times need a1 > 0")
        if not ((times[..., 0] <= times[..., 1]) & (times[..., 1] <= times[..., 2])).all():
            raise ValueError("all processing times need a1 <= a2 <= a3")
        machines.setflags(write=False)
        times.setflags(write=False)
        self.machines = machines
        self.times = times

    @property
    def num_ops(self) -> int:
        return self.n * self.m

    def op(self, job: int, position: int) -> OperationRef:
        return OperationRef(
            op_id=job * self.m + position,
            job=job,
            position=position,
            machine=int(self.machines[job, position]),
            time=TFN(*self.times[job, position]),
        )

    def op_by_id(self, op_id: int) -> OperationRef:
        return self.op(op_id // self.m, op_id % self.m)

    @property
    def ops(self) -> tuple[tuple[OperationRef, ...], ...]:
        """The n x m grid of operations."""
        return tuple(tuple(self.op(j, p) for p in range(self.m)) for j in range(self.n))


@dataclass(frozen=True)
class DisjunctiveGraph:
    """Conjunctive job-order arcs plus per-machine cliques over op ids."""

    num_ops: int
    conjunctive_edges: tuple[tuple[int, int], ...]
    machine_cliques: tuple[tuple[int, ...], ...]

    def dense_undirected(self) -> np.ndarray:
        """Boolean [N, N] adjacency: conjunctive arcs (both directions),
        machine-clique pairs, and self-loops."""
        adj = np.eye(self.num_ops, dtype=bool)
        for u, v in self.conjunctive_edges:
            adj[u, v] = True
            adj[v, u] = True
        for clique in self.machine_cliques:
            idx = np.asarray(clique)
            adj[np.ix_(idx, idx)] = True
        return adj


def build_graph(inst: Instance) -> DisjunctiveGraph:
    """Disjunctive graph of an instance: job chains and machine cliques."""
    edges = []
    for j in range(inst.n):
        base = j * inst.m
        for p in range(inst.m - 1):
            edges.append((base + p, base + p + 1))
    cliques: list[list[int]] = [[] for _ in range(inst.m)]
    for j in range(inst.n):
        for p in range(inst.m):
            cliques[inst.machines[j, p]].append(j * inst.m + p)
    return DisjunctiveGraph(
        num_ops=inst.num_ops,
        conjunctive_edges=tuple(edges),
        machine_cliques=tuple(tuple(c) for c in cliques),
    )


def generate(n: int, m: int, seed: int, spread: tuple[float, float] = (0.85, 1.30)) -> Instance:
    """Seeded random instance.

    Per job the machine order is a uniform random permutation.  Per
    operation the modal time a2 is a uniform integer in [1, 99]; a1 =
    round(a2*u) with u ~ uniform[lo, 1), clamped to [1, a2]; a3 =
    round(a2*v) with v ~ uniform(1, hi], clamped to >= a2.  Deterministic
    in (n, m, seed, spread).
    """
    lo, hi = spread
    if n < 1 or m < 1:
        raise ValueError(f"need n >= 1 and m >= 1, got {n}x{m}")
    if not (0.0 < lo <= 1.0 <= hi):
        raise ValueError(f"spread must satisfy 0 < lo <= 1 <= hi, got {spread}")
    rng = np.random.default_rng(seed)
    machines = np.empty((n, m), dtype=np.int64)
    times = np.empty((n, m, 3), dtype=np.float64)
    for j in range(n):
        machines[j] = rng.permutation(m)
        for p in range(m):
            a2 = float(rng.integers(1, 100))
            u = rng.uniform(lo, 1.0)
            v = rng.uniform(1.0, hi)
            a1 = min(max(1.0, float(int(a2 * u + 0.5))), a2)
            a3 = max(float(int(a2 * v + 0.5)), a2)
            times[j, p] = (a1, a2, a3)
    return Instance(n=n, m=m, machines=machines, times=times, seed=seed)


def _fmt_real(x: float) -> str:
    return repr(int(x)) if float(x).is_integer() else repr(float(x))


def write_instance(inst: Instance, path: str | Path) -> None:
    """Write an instance; format chosen by extension (.json or text)."""
    path = Path(path)
    if path.suffix == ".json":
        doc = {
            "n": inst.n,
            "m": inst.m,
            "jobs": [
                [
                    {"machine": int(inst.machines[j, p]), "t": [float(c) for c in inst.times[j, p]]}
                    for p in range(inst.m)
                ]
                for j in range(inst.n)
            ],
            "seed": inst.seed,
        }
        path.write_text(json.dumps(doc) + "\n", encoding="utf-8")
        return
    lines = [f"{inst.n} {inst.m}"]
    for j in range(inst.n):
        groups = []
        for p in range(inst.m):
            a1, a2, a3 = inst.times[j, p]
            groups.append(f"{inst.machines[j, p]} {_fmt_real(a1)} {_fmt_real(a2)} {_fmt_real(a3)}")
        lines.append("  ".join(groups))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _parse_text(text: str) -> Instance:
    raw_lines = text.splitlines()
    lines = [(i + 1, ln) for i, ln in enumerate(raw_lines) if ln.strip()]
    if not lines:
        raise ParseError("line 1: empty file, expected 'n m' header")
    header_no, header = lines[0]
    parts = header.split()
    if len(parts) != 2:
        raise ParseError(f"line {header_no}: header must be 'n m', got {header!r}")
    try:
        n, m = int(parts[0]), int(parts[1])
    except ValueError:
        raise ParseError(f"line {header_no}: header must hold two integers, got {header!r}") from None
    if n < 1 or m < 1:
        raise ParseError(f"line {header_no}: need n >= 1 and m >= 1, got {n} {m}")
    body = lines[1:]
    if len(body) != n:
        raise ParseError(f"line {header_no}: expected {n} job lines, found {len(body)}")
    machines = np.empty((n, m), dtype=np.int64)
    times = np.empty((n, m, 3), dtype=np.float64)
    for j, (line_no, line) in enumerate(body):
        tokens = line.split()
        if len(tokens) != 4 * m:
            raise ParseError(f"line {line_no}: expected {4 * m} fields (m groups of 'machine a1 a2 a3'), got {len(tokens)}")
        for p in range(m):
            raw = tokens[4 * p : 4 * p + 4]
            try:
                k = int(raw[0])
                a1, a2, a3 = (float(x) for x in raw[1:])
            except ValueError:
                raise ParseError(f"line {line_no}: bad operation group {' '.join(raw)!r}") from None
            if not 0 <= k < m:
                raise ParseError(f"line {line_no}: machine {k} out of range [0, {m})")
            if a1 <= 0:
                raise ParseError(f"line {line_no}: processing time needs a1 > 0, got {a1}")
            if not a1 <= a2 <= a3:
                raise ParseError(f"line {line_no}: processing time needs a1 <= a2 <= a3, got ({a1}, {a2}, {a3})")
            machines[j, p] = k
            times[j, p] = (a1, a2, a3)
        if sorted(machines[j]) != list(range(m)):
            raise ParseError(f"line {line_no}: machine list is not a permutation of 0..{m - 1}")
    return Instance(n=n, m=m, machines=machines, times=times)


def _parse_json(text: str) -> Instance:
    doc = json.loads(text)
    try:
        n, m, jobs = int(doc["n"]), int(doc["m"]), doc["jobs"]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"json instance missing field: {exc}") from None
    if len(jobs) != n:
        raise ParseError(f"json instance: expected {n} jobs, found {len(jobs)}")
    machines = np.empty((n, m), dtype=np.int64)
    times = np.empty((n, m, 3), dtype=np.float64)
    for j, job in enumerate(jobs):
        if len(job) != m:
            raise ParseError(f"json instance: job {j} has {len(job)} ops, expected {m}")
        for p, op in enumerate(job):
            machines[j, p] = int(op["machine"])
            times[j, p] = [float(x) for x in op["t"]]
    try:
        return Instance(n=n, m=m, machines=machines, times=times, seed=doc.get("seed"))
    except ValueError as exc:
        raise ParseError(f"json instance: {exc}") from None


def read_instance(path: str | Path) -> Instance:
    """Read an instance file; format chosen by extension (.json or text)."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".json":
        return _parse_json(text)
    try:
        return _parse_text(text)
    except ParseError:
        raise
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def sequence_space_size(n: int, m: int) -> int:
    """Number of distinct job-repetition sequences: (n*m)! / (m!)^n."""
    return math.factorial(n * m) // (math.factorial(m) ** n)
