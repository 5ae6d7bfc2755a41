"""List scheduling of job sequences with fuzzy times.

A sequence of job ids (each job id repeated m times) decodes to a
semi-active schedule: each decision schedules the named job's next
unstarted operation as early as its predecessor and its machine allow,
where "as early as" is the whole-operand fuzzy max, never the
componentwise max.  ``decode`` runs on the compiled kernels; ``step``
is the readable scalar reference used by tests and feature code.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .fuzzy import TFN, ZERO, DEFAULT_RANK, RankConfig, add, fuzzy_max, z_value
from .instances import Instance, sequence_space_size


@dataclass
class ScheduleState:
    """Mutable state of a partially decoded sequence.

    next_pos[j] is the index of job j's ready operation (m when done);
    job_fc / machine_fc are running fuzzy completion times; op_start /
    op_end hold one TFN row per scheduled op (NaN until scheduled).
    """

    inst: Instance
    next_pos: np.ndarray
    job_fc: np.ndarray
    machine_fc: np.ndarray
    sequence: list[int]
    op_start: np.ndarray
    op_end: np.ndarray

    @property
    def is_complete(self) -> bool:
        return bool((self.next_pos == self.inst.m).all())

    def is_scheduled(self, op_id: int) -> bool:
        return op_id % self.inst.m < self.next_pos[op_id // self.inst.m]

    def start_of(self, op_id: int) -> TFN | None:
        return TFN(*self.op_start[op_id]) if self.is_scheduled(op_id) else None

    def end_of(self, op_id: int) -> TFN | None:
        return TFN(*self.op_end[op_id]) if self.is_scheduled(op_id) else None


@dataclass(frozen=True)
class Schedule:
    """A fully decoded sequence with per-op fuzzy start and end times."""

    sequence: tuple[int, ...]
    starts: np.ndarray
    ends: np.ndarray
    makespan: TFN


def init_state(inst: Instance) -> ScheduleState:
    n, m = inst.n, inst.m
    return ScheduleState(
        inst=inst,
        next_pos=np.zeros(n, dtype=np.int64),
        job_fc=np.zeros((n, 3), dtype=np.float64),
        machine_fc=np.zeros((m, 3), dtype=np.float64),
        sequence=[],
        op_start=np.full((n * m, 3), np.nan),
        op_end=np.full((n * m, 3), np.nan),
    )


def step(state: ScheduleState, job: int, inst: Instance, cfg: RankConfig = DEFAULT_RANK) -> ScheduleState:
    """Schedule job's ready operation in place and return the state."""
    pos = int(state.next_pos[job])
    if pos >= inst.m:
        raise ValueError(f"job {job} is finished, no ready operation to schedule")
    machine = int(inst.machines[job, pos])
    pred = TFN(*state.job_fc[job]) if pos > 0 else ZERO
    start = fuzzy_max(pred, TFN(*state.machine_fc[machine]), cfg)
    end = add(start, TFN(*inst.times[job, pos]))
    op = job * inst.m + pos
    state.op_start[op] = start
    state.op_end[op] = end
    state.job_fc[job] = end
    state.machine_fc[machine] = end
    state.next_pos[job] = pos + 1
    state.sequence.append(job)
    return state


def _validate_sequence(inst: Instance, sequence) -> np.ndarray:
    seq = np.asarray(sequence, dtype=np.int64)
    if seq.ndim != 1 or seq.shape[0] != inst.num_ops:
        raise ValueError(f"sequence length {seq.size} != {inst.num_ops} operations")
    counts = np.bincount(seq[(seq >= 0) & (seq < inst.n)], minlength=inst.n)
    if ((seq < 0) | (seq >= inst.n)).any():
        bad = int(seq[(seq < 0) | (seq >= inst.n)][0])
        raise ValueError(f"job id {bad} out of range [0, {inst.n})")
    for j in range(inst.n):
        if counts[j] != inst.m:
            raise ValueError(f"job {j} appears {counts[j]} times, expected {inst.m}")
    return seq


def decode(inst: Instance, sequence, cfg: RankConfig = DEFAULT_RANK) -> Schedule:
    """Decode a complete job sequence into a Schedule."""
    seq = _validate_sequence(inst, sequence)
    starts, ends, ms = kernels.decode_fold(inst.machines, inst.times, seq, cfg.beta, cfg.omega)
    starts.setflags(write=False)
    ends.setflags(write=False)
    return Schedule(sequence=tuple(int(j) for j in seq), starts=starts, ends=ends, makespan=TFN(*ms))


def _scheduling_order(sequence, m: int) -> list[int]:
    """Op ids in the order the sequence schedules them."""
    seen: dict[int, int] = {}
    order = []
    for j in sequence:
        p = seen.get(j, 0)
        seen[j] = p + 1
        order.append(j * m + p)
    return order


def fuzzy_makespan(sched, cfg: RankConfig = DEFAULT_RANK) -> TFN:
    """Fold fuzzy_max over scheduled op ends, in scheduling order."""
    if isinstance(sched, Schedule):
        ends, order = sched.ends, _scheduling_order(sched.sequence, _infer_m(sched))
    else:
        ends, order = sched.op_end, _scheduling_order(sched.sequence, sched.inst.m)
    if not order:
        return ZERO
    best = TFN(*ends[order[0]])
    for op in order[1:]:
        best = fuzzy_max(best, TFN(*ends[op]), cfg)
    return best


def _infer_m(sched: Schedule) -> int:
    jobs = set(sched.sequence)
    return len(sched.sequence) // len(jobs)


def brute_force_optimum(inst: Instance, cfg: RankConfig = DEFAULT_RANK, limit: int = 20000) -> tuple[Schedule, int]:
    """Exhaustive search over all distinct job sequences.

    Returns the first sequence (in lexicographic enumeration order)
    minimizing z_value of the makespan, plus the number enumerated.
    """
    total = sequence_space_size(inst.n, inst.m)
    if total > limit:
        raise ValueError(f"{total} sequences exceed limit {limit}, refusing brute force")
    seqs = np.empty((total, inst.num_ops), dtype=np.int64)
    buf = np.empty(inst.num_ops, dtype=np.int64)
    counts = [inst.m] * inst.n
    row = 0

    def rec(depth: int) -> None:
        nonlocal row
        if depth == inst.num_ops:
            seqs[row] = buf
            row += 1
            return
        for j in range(inst.n):
            if counts[j]:
                counts[j] -= 1
                buf[depth] = j
                rec(depth + 1)
                counts[j] += 1

    rec(0)
    spans = kernels.batch_makespans(inst.machines, inst.times, seqs, cfg.beta, cfg.omega)
    z = kernels.z_array(spans, cfg.beta, cfg.omega)
    best = int(np.argmin(z))
    return decode(inst, seqs[best], cfg), total


def export_gantt(schedule: Schedule, inst: Instance) -> dict:
    """Gantt document: per machine, bars in machine processing order."""
    if len(schedule.sequence) != inst.num_ops:
        raise ValueError(f"schedule has {len(schedule.sequence)} decisions, expected {inst.num_ops}")
    bars: list[list[dict]] = [[] for _ in range(inst.m)]
    for op in _scheduling_order(schedule.sequence, inst.m):
        j, p = op // inst.m, op % inst.m
        bars[inst.machines[j, p]].append(
            {
                "op_id": op,
                "job": j,
                "start": [float(x) for x in schedule.starts[op]],
                "end": [float(x) for x in schedule.ends[op]],
            }
        )
    return {
        "n": inst.n,
        "m": inst.m,
        "machines": bars,
        "makespan": [float(x) for x in schedule.makespan],
    }


def check_schedule(schedule: Schedule, inst: Instance, cfg: RankConfig = DEFAULT_RANK, tol: float = 1e-9) -> list[str]:
    """Feasibility audit of a decoded schedule; returns violations.

    Precedence and machine ordering are verified on the ranking scalar
    (z_value), the quantity the start-time max actually maximizes; TFN
    supports of consecutive ops may legitimately interleave.
    """
    bad: list[str] = []
    n, m = inst.n, inst.m
    z_start = kernels.z_array(schedule.starts, cfg.beta, cfg.omega)
    z_end = kernels.z_array(schedule.ends, cfg.beta, cfg.omega)
    if not np.allclose(schedule.ends, schedule.starts + inst.times.reshape(-1, 3), rtol=0, atol=tol):
        bad.append("op end != op start + processing time")
    if (z_start < -tol).any():
        bad.append("negative start time")
    for j in range(n):
        for p in range(m - 1):
            if z_start[j * m + p + 1] < z_end[j * m + p] - tol:
                bad.append(f"job {j}: op {p + 1} starts before op {p} ends (z ranking)")
    order = _scheduling_order(schedule.sequence, m)
    last_end: dict[int, float] = {}
    for op in order:
        k = int(inst.machines[op // m, op % m])
        if k in last_end and z_start[op] < last_end[k] - tol:
            bad.append(f"machine {k}: op {op} starts before its predecessor ends (z ranking)")
        last_end[k] = z_end[op]
    z_ms = z_value(schedule.makespan, cfg)
    if (z_end > z_ms + tol).any():
        bad.append("an op ends after the makespan (z ranking)")
    return bad
