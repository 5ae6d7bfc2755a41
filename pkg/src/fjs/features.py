"""Hand-crafted descriptors fed to the policy network.

Two families: an 18-entry static prior per operation (raw fuzzy time,
its defuzzified value, job progress fractions, and quartile contrasts
against the op's job and machine), and an 11-entry dynamic context per
job (defuzzified completion-time gaps and ratios against the current
state).  These are the readable scalar references; batched rollouts use
the matching kernels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fuzzy import TFN, DEFAULT_RANK, RankConfig, defuzz, quartiles_defuzz, z_value
from .instances import Instance
from .sim import ScheduleState

OP_PRIOR_DIM = 18
JOB_CONTEXT_DIM = 11


@dataclass(frozen=True)
class OpPrior:
    op_id: int
    x: np.ndarray


@dataclass(frozen=True)
class JobContext:
    job: int
    c: np.ndarray


def op_prior_matrix(inst: Instance) -> np.ndarray:
    """[N, 18] static operation descriptors, row order = op_id."""
    n, m = inst.n, inst.m
    t = inst.times
    d = (t[..., 0] + 2.0 * t[..., 1] + t[..., 2]) / 4.0
    x = np.zeros((n * m, OP_PRIOR_DIM))
    mach_quart = np.zeros((m, 3))
    for k in range(m):
        vals = [TFN(*inst.times[j, p]) for j in range(n) for p in range(m) if inst.machines[j, p] == k]
        mach_quart[k] = quartiles_defuzz(vals)
    for j in range(n):
        total = float(d[j].sum())
        jq = np.asarray(quartiles_defuzz([TFN(*inst.times[j, p]) for p in range(m)]))
        done = 0.0
        for p in range(m):
            o = j * m + p
            done += d[j, p]
            mq = mach_quart[inst.machines[j, p]]
            x[o, 0:3] = inst.times[j, p]
            x[o, 3] = d[j, p]
            x[o, 4] = done / total
            x[o, 5] = (total - done) / total
            x[o, 6:9] = jq
            x[o, 9:12] = mq
            x[o, 12:15] = d[j, p] - jq
            x[o, 15:18] = d[j, p] - mq
    return x


def op_priors(inst: Instance) -> list[OpPrior]:
    mat = op_prior_matrix(inst)
    return [OpPrior(op_id=i, x=mat[i]) for i in range(mat.shape[0])]


def job_context_matrix(inst: Instance, state: ScheduleState, cfg: RankConfig = DEFAULT_RANK) -> np.ndarray:
    """[n, 11] dynamic per-job descriptors; finished jobs are all zero."""
    n, m = inst.n, inst.m
    jd = np.array([defuzz(TFN(*state.job_fc[i])) for i in range(n)])
    md = np.array([defuzz(TFN(*state.machine_fc[k])) for k in range(m)])
    zj = np.array([z_value(TFN(*state.job_fc[i]), cfg) for i in range(n)])
    zm = np.array([z_value(TFN(*state.machine_fc[k]), cfg) for k in range(m)])
    denom_j = jd[int(np.argmax(zj))]
    denom_m = md[int(np.argmax(zm))]
    mean_j = defuzz(TFN(*state.job_fc.sum(axis=0))) / n
    mean_m = defuzz(TFN(*state.machine_fc.sum(axis=0))) / m
    qj = np.asarray(quartiles_defuzz([TFN(*state.job_fc[i]) for i in range(n)]))
    qm = np.asarray(quartiles_defuzz([TFN(*state.machine_fc[k]) for k in range(m)]))
    ctx = np.zeros((n, JOB_CONTEXT_DIM))
    for i in range(n):
        pos = int(state.next_pos[i])
        if pos >= m:
            continue
        pd = jd[i]
        mk = md[int(inst.machines[i, pos])]
        ctx[i, 0] = pd - mk
        ctx[i, 1] = pd / denom_j if denom_j != 0.0 else 0.0
        ctx[i, 2] = pd - mean_j
        ctx[i, 3:6] = pd - qj
        ctx[i, 6] = mk / denom_m if denom_m != 0.0 else 0.0
        ctx[i, 7] = mk - mean_m
        ctx[i, 8:11] = mk - qm
    return ctx


def job_contexts(inst: Instance, state: ScheduleState, cfg: RankConfig = DEFAULT_RANK) -> list[JobContext]:
    mat = job_context_matrix(inst, state, cfg)
    return [JobContext(job=i, c=mat[i]) for i in range(mat.shape[0])]
