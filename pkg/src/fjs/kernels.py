"""Hot numeric kernels: numba-jitted loops with a pure-numpy fallback.

The sequence-decode fold, the batched rollout state update, and the
per-step context features are the inner loops behind metaheuristic
fitness evaluation and policy rollouts; they run millions of times per
experiment.  At import time the active implementation is selected:
numba ``@njit`` versions when numba is importable and ``FJS_NO_NUMBA``
is unset, otherwise vectorized numpy fallbacks.  The ``*_numpy``
variants stay importable either way so the two paths can be compared
(see benchmarks/kernel_bench.py and the equivalence tests).

Array conventions (one instance): ``machines`` is [n, m] int64 where
row j lists the machine of job j's p-th operation; ``times`` is
[n, m, 3] float64 TFN components.  Batched rollout state is a set of
parallel arrays over B rollouts: ``next_pos`` [B, n] int64, ``job_fc``
[B, n, 3], ``machine_fc`` [B, m, 3], ``makespan`` [B, 3], all float64.
"""

from __future__ import annotations

import os

import numpy as np


def _numba_enabled() -> bool:
    if os.environ.get("FJS_NO_NUMBA", "").strip().lower() in ("1", "true", "yes"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


USING_NUMBA = _numba_enabled()


# ---------------------------------------------------------------------------
# plain-numpy helpers shared by callers (not dispatched)

def z_array(t: np.ndarray, beta: float, omega: float) -> np.ndarray:
    """Z ranking value of TFN components stacked on the last axis [..., 3]."""
    a1, a2, a3 = t[..., 0], t[..., 1], t[..., 2]
    v_max = a2 + (a3 - a2) / 2.0
    v_min = a2 - (a2 - a1) / 2.0
    return beta * v_max + (1.0 - beta) * v_min + omega * (a3 - a1)


def defuzz_array(t: np.ndarray) -> np.ndarray:
    """Defuzzified value of TFN components stacked on the last axis [..., 3]."""
    return (t[..., 0] + 2.0 * t[..., 1] + t[..., 2]) / 4.0


# ---------------------------------------------------------------------------
# loop implementations (numba-compilable, also valid plain python)

def _z1(a1, a2, a3, beta, omega):
    v_max = a2 + (a3 - a2) / 2.0
    v_min = a2 - (a2 - a1) / 2.0
    return beta * v_max + (1.0 - beta) * v_min + omega * (a3 - a1)


def _lerp_at(s, r):
    # s sorted ascending; linear interpolation at fractional rank r >= 0
    lo = int(r)
    hi = lo + 1 if lo + 1 < s.shape[0] else lo
    return s[lo] + (s[hi] - s[lo]) * (r - lo)


def _decode_fold_loops(machines, times, seq, beta, omega):
    n, m = machines.shape
    N = seq.shape[0]
    starts = np.zeros((N, 3))
    ends = np.zeros((N, 3))
    ms = np.zeros(3)
    z_ms = 0.0
    job_fc = np.zeros((n, 3))
    mach_fc = np.zeros((m, 3))
    next_pos = np.zeros(n, dtype=np.int64)
    for t in range(N):
        j = seq[t]
        p = next_pos[j]
        k = machines[j, p]
        zj = _z1(job_fc[j, 0], job_fc[j, 1], job_fc[j, 2], beta, omega)
        zk = _z1(mach_fc[k, 0], mach_fc[k, 1], mach_fc[k, 2], beta, omega)
        if zj >= zk:
            s1, s2, s3 = job_fc[j, 0], job_fc[j, 1], job_fc[j, 2]
        else:
            s1, s2, s3 = mach_fc[k, 0], mach_fc[k, 1], mach_fc[k, 2]
        e1 = s1 + times[j, p, 0]
        e2 = s2 + times[j, p, 1]
        e3 = s3 + times[j, p, 2]
        o = j * m + p
        starts[o, 0], starts[o, 1], starts[o, 2] = s1, s2, s3
        ends[o, 0], ends[o, 1], ends[o, 2] = e1, e2, e3
        job_fc[j, 0], job_fc[j, 1], job_fc[j, 2] = e1, e2, e3
        mach_fc[k, 0], mach_fc[k, 1], mach_fc[k, 2] = e1, e2, e3
        next_pos[j] = p + 1
        ze = _z1(e1, e2, e3, beta, omega)
        if ze > z_ms:
            ms[0], ms[1], ms[2] = e1, e2, e3
            z_ms = ze
    return starts, ends, ms


def _batch_makespans_loops(machines, times, seqs, beta, omega):
    B, N = seqs.shape
    n, m = machines.shape
    out = np.zeros((B, 3))
    for b in range(B):
        job_fc = np.zeros((n, 3))
        mach_fc = np.zeros((m, 3))
        next_pos = np.zeros(n, dtype=np.int64)
        m1 = m2 = m3 = 0.0
        z_ms = 0.0
        for t in range(N):
            j = seqs[b, t]
            p = next_pos[j]
            k = machines[j, p]
            zj = _z1(job_fc[j, 0], job_fc[j, 1], job_fc[j, 2], beta, omega)
            zk = _z1(mach_fc[k, 0], mach_fc[k, 1], mach_fc[k, 2], beta, omega)
            if zj >= zk:
                s1, s2, s3 = job_fc[j, 0], job_fc[j, 1], job_fc[j, 2]
            else:
                s1, s2, s3 = mach_fc[k, 0], mach_fc[k, 1], mach_fc[k, 2]
            e1 = s1 + times[j, p, 0]
            e2 = s2 + times[j, p, 1]
            e3 = s3 + times[j, p, 2]
            job_fc[j, 0], job_fc[j, 1], job_fc[j, 2] = e1, e2, e3
            mach_fc[k, 0], mach_fc[k, 1], mach_fc[k, 2] = e1, e2, e3
            next_pos[j] = p + 1
            ze = _z1(e1, e2, e3, beta, omega)
            if ze > z_ms:
                m1, m2, m3 = e1, e2, e3
                z_ms = ze
        out[b, 0], out[b, 1], out[b, 2] = m1, m2, m3
    return out


def _advance_loops(next_pos, job_fc, machine_fc, makespan, chosen, machines, times, beta, omega):
    B = chosen.shape[0]
    for b in range(B):
        j = chosen[b]
        p = next_pos[b, j]
        k = machines[j, p]
        zj = _z1(job_fc[b, j, 0], job_fc[b, j, 1], job_fc[b, j, 2], beta, omega)
        zk = _z1(machine_fc[b, k, 0], machine_fc[b, k, 1], machine_fc[b, k, 2], beta, omega)
        if zj >= zk:
            s1, s2, s3 = job_fc[b, j, 0], job_fc[b, j, 1], job_fc[b, j, 2]
        else:
            s1, s2, s3 = machine_fc[b, k, 0], machine_fc[b, k, 1], machine_fc[b, k, 2]
        e1 = s1 + times[j, p, 0]
        e2 = s2 + times[j, p, 1]
        e3 = s3 + times[j, p, 2]
        job_fc[b, j, 0], job_fc[b, j, 1], job_fc[b, j, 2] = e1, e2, e3
        machine_fc[b, k, 0], machine_fc[b, k, 1], machine_fc[b, k, 2] = e1, e2, e3
        next_pos[b, j] = p + 1
        ze = _z1(e1, e2, e3, beta, omega)
        zm = _z1(makespan[b, 0], makespan[b, 1], makespan[b, 2], beta, omega)
        if ze > zm:
            makespan[b, 0], makespan[b, 1], makespan[b, 2] = e1, e2, e3


def _step_contexts_loops(next_pos, job_fc, machine_fc, machines, beta, omega):
    B, n = next_pos.shape
    m = machine_fc.shape[1]
    ctx = np.zeros((B, n, 11))
    for b in range(B):
        jd = np.empty(n)
        sj1 = sj2 = sj3 = 0.0
        best_zj = 0.0
        bj = 0
        for i in range(n):
            a1, a2, a3 = job_fc[b, i, 0], job_fc[b, i, 1], job_fc[b, i, 2]
            jd[i] = (a1 + 2.0 * a2 + a3) / 4.0
            sj1 += a1
            sj2 += a2
            sj3 += a3
            z = _z1(a1, a2, a3, beta, omega)
            if i == 0 or z > best_zj:
                best_zj = z
                bj = i
        md = np.empty(m)
        sm1 = sm2 = sm3 = 0.0
        best_zm = 0.0
        bm = 0
        for k in range(m):
            a1, a2, a3 = machine_fc[b, k, 0], machine_fc[b, k, 1], machine_fc[b, k, 2]
            md[k] = (a1 + 2.0 * a2 + a3) / 4.0
            sm1 += a1
            sm2 += a2
            sm3 += a3
            z = _z1(a1, a2, a3, beta, omega)
            if k == 0 or z > best_zm:
                best_zm = z
                bm = k
        denom_j = jd[bj]
        denom_m = md[bm]
        mean_j = ((sj1 + 2.0 * sj2 + sj3) / 4.0) / n
        mean_m = ((sm1 + 2.0 * sm2 + sm3) / 4.0) / m
        js = np.sort(jd)
        qj1 = _lerp_at(js, 0.25 * (n - 1))
        qj2 = _lerp_at(js, 0.50 * (n - 1))
        qj3 = _lerp_at(js, 0.75 * (n - 1))
        msrt = np.sort(md)
        qm1 = _lerp_at(msrt, 0.25 * (m - 1))
        qm2 = _lerp_at(msrt, 0.50 * (m - 1))
        qm3 = _lerp_at(msrt, 0.75 * (m - 1))
        for i in range(n):
            if next_pos[b, i] >= m:
                continue
            pd = jd[i]
            k = machines[i, next_pos[b, i]]
            mk = md[k]
            ctx[b, i, 0] = pd - mk
            ctx[b, i, 1] = pd / denom_j if denom_j != 0.0 else 0.0
            ctx[b, i, 2] = pd - mean_j
            ctx[b, i, 3] = pd - qj1
            ctx[b, i, 4] = pd - qj2
            ctx[b, i, 5] = pd - qj3
            ctx[b, i, 6] = mk / denom_m if denom_m != 0.0 else 0.0
            ctx[b, i, 7] = mk - mean_m
            ctx[b, i, 8] = mk - qm1
            ctx[b, i, 9] = mk - qm2
            ctx[b, i, 10] = mk - qm3
    return ctx


# ---------------------------------------------------------------------------
# vectorized numpy fallbacks

def decode_fold_numpy(machines, times, seq, beta, omega):
    n, m = machines.shape
    N = seq.shape[0]
    starts = np.zeros((N, 3))
    ends = np.zeros((N, 3))
    job_fc = np.zeros((n, 3))
    mach_fc = np.zeros((m, 3))
    next_pos = np.zeros(n, dtype=np.int64)
    ms = np.zeros(3)
    z_ms = 0.0
    for t in range(N):
        j = seq[t]
        p = next_pos[j]
        k = machines[j, p]
        pred = job_fc[j]
        avail = mach_fc[k]
        start = pred if z_array(pred, beta, omega) >= z_array(avail, beta, omega) else avail
        end = start + times[j, p]
        o = j * m + p
        starts[o] = start
        ends[o] = end
        job_fc[j] = end
        mach_fc[k] = end
        next_pos[j] = p + 1
        ze = float(z_array(end, beta, omega))
        if ze > z_ms:
            ms[:] = end
            z_ms = ze
    return starts, ends, ms


def batch_makespans_numpy(machines, times, seqs, beta, omega):
    B, N = seqs.shape
    n, m = machines.shape
    job_fc = np.zeros((B, n, 3))
    mach_fc = np.zeros((B, m, 3))
    next_pos = np.zeros((B, n), dtype=np.int64)
    ms = np.zeros((B, 3))
    z_ms = np.zeros(B)
    rows = np.arange(B)
    for t in range(N):
        j = seqs[:, t]
        p = next_pos[rows, j]
        k = machines[j, p]
        pred = job_fc[rows, j]
        avail = mach_fc[rows, k]
        take_pred = z_array(pred, beta, omega) >= z_array(avail, beta, omega)
        start = np.where(take_pred[:, None], pred, avail)
        end = start + times[j, p]
        job_fc[rows, j] = end
        mach_fc[rows, k] = end
        next_pos[rows, j] = p + 1
        ze = z_array(end, beta, omega)
        repl = ze > z_ms
        ms[repl] = end[repl]
        z_ms[repl] = ze[repl]
    return ms


def advance_numpy(next_pos, job_fc, machine_fc, makespan, chosen, machines, times, beta, omega):
    rows = np.arange(chosen.shape[0])
    j = chosen
    p = next_pos[rows, j]
    k = machines[j, p]
    pred = job_fc[rows, j]
    avail = machine_fc[rows, k]
    take_pred = z_array(pred, beta, omega) >= z_array(avail, beta, omega)
    start = np.where(take_pred[:, None], pred, avail)
    end = start + times[j, p]
    job_fc[rows, j] = end
    machine_fc[rows, k] = end
    next_pos[rows, j] = p + 1
    repl = z_array(end, beta, omega) > z_array(makespan, beta, omega)
    makespan[repl] = end[repl]


def _quartile_rows(d):
    # linear interpolation at ranks q*(k-1), rows independently; d is [B, k]
    B, k = d.shape
    s = np.sort(d, axis=1)
    out = np.empty((B, 3))
    for col, q in enumerate((0.25, 0.5, 0.75)):
        r = q * (k - 1)
        lo = int(r)
        hi = lo + 1 if lo + 1 < k else lo
        out[:, col] = s[:, lo] + (s[:, hi] - s[:, lo]) * (r - lo)
    return out


def step_contexts_numpy(next_pos, job_fc, machine_fc, machines, beta, omega):
    B, n = next_pos.shape
    m = machine_fc.shape[1]
    rows = np.arange(B)
    done = next_pos >= m
    pos = np.minimum(next_pos, m - 1)
    ready_mach = machines[np.arange(n)[None, :], pos]

    jd = defuzz_array(job_fc)
    md = defuzz_array(machine_fc)
    mk = np.take_along_axis(md, ready_mach, axis=1)

    denom_j = jd[rows, np.argmax(z_array(job_fc, beta, omega), axis=1)]
    denom_m = md[rows, np.argmax(z_array(machine_fc, beta, omega), axis=1)]
    mean_j = defuzz_array(job_fc.sum(axis=1)) / n
    mean_m = defuzz_array(machine_fc.sum(axis=1)) / m
    qj = _quartile_rows(jd)
    qm = _quartile_rows(md)

    ctx = np.empty((B, n, 11))
    ctx[:, :, 0] = jd - mk
    np.divide(jd, denom_j[:, None], out=ctx[:, :, 1], where=denom_j[:, None] != 0.0)
    ctx[:, :, 1][np.broadcast_to(denom_j[:, None] == 0.0, (B, n))] = 0.0
    ctx[:, :, 2] = jd - mean_j[:, None]
    ctx[:, :, 3:6] = jd[:, :, None] - qj[:, None, :]
    np.divide(mk, denom_m[:, None], out=ctx[:, :, 6], where=denom_m[:, None] != 0.0)
    ctx[:, :, 6][np.broadcast_to(denom_m[:, None] == 0.0, (B, n))] = 0.0
    ctx[:, :, 7] = mk - mean_m[:, None]
    ctx[:, :, 8:11] = mk[:, :, None] - qm[:, None, :]
    ctx[done] = 0.0
    return ctx


# ---------------------------------------------------------------------------
# dispatch

if USING_NUMBA:
    from numba import njit

    _jit = njit(cache=True, nogil=True)
    _z1 = _jit(_z1)
    _lerp_at = _jit(_lerp_at)
    decode_fold = _jit(_decode_fold_loops)
    batch_makespans = _jit(_batch_makespans_loops)
    advance = _jit(_advance_loops)
    step_contexts = _jit(_step_contexts_loops)
else:
    decode_fold = decode_fold_numpy
    batch_makespans = batch_makespans_numpy
    advance = advance_numpy
    step_contexts = step_contexts_numpy
