import os
import subprocess
import sys

import numpy as np
import pytest

from fjs import DEFAULT_RANK, TFN, decode, defuzz, generate, init_state, step, z_value
from fjs import kernels
from fjs.features import job_context_matrix
from fjs.kernels import (
    advance_numpy,
    batch_makespans_numpy,
    decode_fold_numpy,
    defuzz_array,
    step_contexts_numpy,
    z_array,
)

from conftest import random_sequence, random_tfns

BETA, OMEGA = DEFAULT_RANK.beta, DEFAULT_RANK.omega


def test_array_helpers_match_scalars(rng):
    t = random_tfns(rng, 500)
    z = z_array(t, BETA, OMEGA)
    d = defuzz_array(t)
    for i in range(0, 500, 25):
        assert z[i] == z_value(TFN(*t[i]), DEFAULT_RANK)
        assert d[i] == defuzz(TFN(*t[i]))


def _scalar_decode(inst, seq):
    st = init_state(inst)
    for j in seq:
        step(st, int(j), inst)
    return st


@pytest.mark.parametrize("n,m,seed", [(2, 2, 1), (3, 3, 2), (5, 4, 3), (6, 6, 4)])
def test_decode_fold_matches_scalar_steps(n, m, seed):
    inst = generate(n, m, seed=seed)
    rng = np.random.default_rng(seed + 100)
    for _ in range(5):
        seq = random_sequence(inst, rng)
        starts, ends, ms = kernels.decode_fold(inst.machines, inst.times, seq, BETA, OMEGA)
        st = _scalar_decode(inst, seq)
        np.testing.assert_array_equal(starts, st.op_start)
        np.testing.assert_array_equal(ends, st.op_end)
        from fjs import fuzzy_makespan

        assert TFN(*ms) == fuzzy_makespan(st)


def test_batch_makespans_matches_decode(rng):
    inst = generate(4, 4, seed=11)
    seqs = np.stack([random_sequence(inst, rng) for _ in range(32)])
    spans = kernels.batch_makespans(inst.machines, inst.times, seqs, BETA, OMEGA)
    for b in range(32):
        assert TFN(*spans[b]) == decode(inst, seqs[b]).makespan


def test_numpy_fallbacks_agree_with_dispatched(rng):
    inst = generate(5, 5, seed=21)
    seq = random_sequence(inst, rng)
    got = decode_fold_numpy(inst.machines, inst.times, seq, BETA, OMEGA)
    want = kernels.decode_fold(inst.machines, inst.times, seq, BETA, OMEGA)
    for g, w in zip(got, want):
        np.testing.assert_array_equal(g, w)

    seqs = np.stack([random_sequence(inst, rng) for _ in range(16)])
    np.testing.assert_array_equal(
        batch_makespans_numpy(inst.machines, inst.times, seqs, BETA, OMEGA),
        kernels.batch_makespans(inst.machines, inst.times, seqs, BETA, OMEGA),
    )


def _batch_state(inst, rng, batch, steps):
    n, m = inst.n, inst.m
    next_pos = np.zeros((batch, n), dtype=np.int64)
    job_fc = np.zeros((batch, n, 3))
    machine_fc = np.zeros((batch, m, 3))
    makespan = np.zeros((batch, 3))
    states = []
    for b in range(batch):
        st = init_state(inst)
        for j in random_sequence(inst, rng)[:steps]:
            step(st, int(j), inst)
        states.append(st)
        next_pos[b] = st.next_pos
        job_fc[b] = st.job_fc
        machine_fc[b] = st.machine_fc
    return next_pos, job_fc, machine_fc, makespan, states


def test_advance_matches_scalar_step(rng):
    inst = generate(4, 3, seed=31)
    next_pos, job_fc, machine_fc, makespan, states = _batch_state(inst, rng, 8, 5)
    chosen = np.array(
        [int(rng.choice(np.flatnonzero(next_pos[b] < inst.m))) for b in range(8)],
        dtype=np.int64,
    )
    kernels.advance(next_pos, job_fc, machine_fc, makespan, chosen, inst.machines, inst.times, BETA, OMEGA)
    for b, st in enumerate(states):
        step(st, int(chosen[b]), inst)
        np.testing.assert_array_equal(job_fc[b], st.job_fc)
        np.testing.assert_array_equal(machine_fc[b], st.machine_fc)
        np.testing.assert_array_equal(next_pos[b], st.next_pos)


def test_advance_numpy_matches_dispatched(rng):
    inst = generate(4, 3, seed=41)
    built = _batch_state(inst, rng, 8, 4)
    a = tuple(arr.copy() for arr in built[:4])
    b = tuple(arr.copy() for arr in built[:4])
    chosen = np.array(
        [int(rng.choice(np.flatnonzero(built[0][i] < inst.m))) for i in range(8)],
        dtype=np.int64,
    )
    kernels.advance(*a, chosen, inst.machines, inst.times, BETA, OMEGA)
    advance_numpy(*b, chosen, inst.machines, inst.times, BETA, OMEGA)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)


def test_step_contexts_matches_reference(rng):
    for n, m, seed in [(3, 3, 51), (5, 4, 52), (2, 6, 53)]:
        inst = generate(n, m, seed=seed)
        for steps in (0, 1, n * m // 2, n * m - 1):
            next_pos, job_fc, machine_fc, _, states = _batch_state(inst, rng, 4, steps)
            ctx = kernels.step_contexts(next_pos, job_fc, machine_fc, inst.machines, BETA, OMEGA)
            ctx_np = step_contexts_numpy(next_pos, job_fc, machine_fc, inst.machines, BETA, OMEGA)
            np.testing.assert_allclose(ctx, ctx_np, rtol=0, atol=1e-12)
            for b, st in enumerate(states):
                ref = job_context_matrix(inst, st)
                np.testing.assert_allclose(ctx[b], ref, rtol=0, atol=1e-12)


def test_env_flag_switches_to_numpy_path():
    env = dict(os.environ, FJS_NO_NUMBA="1")
    code = (
        "import fjs, fjs.kernels as k;"
        "assert not fjs.USING_NUMBA;"
        "assert k.decode_fold is k.decode_fold_numpy"
    )
    subprocess.run([sys.executable, "-c", code], check=True, env=env)


def test_dispatch_uses_numba_by_default():
    if os.environ.get("FJS_NO_NUMBA", "").lower() in ("1", "true", "yes"):
        pytest.skip("numba disabled in this environment")
    assert kernels.USING_NUMBA
    assert kernels.decode_fold is not decode_fold_numpy
