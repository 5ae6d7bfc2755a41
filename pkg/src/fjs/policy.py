"""Graph-attention scheduling policy over fuzzy job shop states.

Operations are embedded once per instance with two graph attention layers
on the disjunctive graph; each decision step scores the ready operation of
every unfinished job against a state summary built from the job contexts,
and a masked softmax turns the scores into a distribution over jobs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .features import JOB_CONTEXT_DIM, OP_PRIOR_DIM, job_context_matrix, op_prior_matrix
from .fuzzy import DEFAULT_RANK, RankConfig
from .instances import Instance, build_graph
from .nn import (
    NamedParams,
    Tape,
    Tensor,
    add,
    cast,
    concat,
    fnn,
    gather_rows,
    gat_layer,
    init_uniform,
    leaky_relu,
    load_checkpoint,
    log,
    matmul,
    mha,
    relu,
    reshape,
    save_checkpoint,
    softmax_masked,
    take_along_last,
    tsum,
)
from . import kernels
from .sim import Schedule, ScheduleState, _validate_sequence, decode


@dataclass(frozen=True)
class PolicyConfig:
    """Layer sizes; defaults give a 146-dim embedding and 274-dim decision input."""

    prior_dim: int = OP_PRIOR_DIM
    context_dim: int = JOB_CONTEXT_DIM
    gat1_heads: int = 3
    gat1_size: int = 64
    gat2_heads: int = 3
    gat2_size: int = 128
    state_out: int = 128
    mha_heads: int = 3
    fnn_hidden: int = 128
    slope: float = 0.15
    rank: RankConfig = field(default_factory=lambda: DEFAULT_RANK)

    @property
    def gat2_in(self) -> int:
        return self.prior_dim + self.gat1_heads * self.gat1_size

    @property
    def embed_dim(self) -> int:
        return self.prior_dim + self.gat2_size

    @property
    def state_hidden(self) -> int:
        return self.mha_heads * self.mha_head_size

    @property
    def mha_head_size(self) -> int:
        # the context projection is split evenly across the summary heads
        return (self.gat1_heads * self.gat1_size) // self.mha_heads

    @property
    def decision_in(self) -> int:
        return self.embed_dim + self.state_out


DEFAULT_POLICY = PolicyConfig()


def expected_shapes(cfg: PolicyConfig = DEFAULT_POLICY) -> dict:
    """Parameter name to shape map, in canonical (insertion) order."""
    shapes: dict = {}
    for h in range(cfg.gat1_heads):
        shapes[f"gat1.h{h}.wl"] = (cfg.prior_dim, cfg.gat1_size)
        shapes[f"gat1.h{h}.wr"] = (cfg.prior_dim, cfg.gat1_size)
        shapes[f"gat1.h{h}.a"] = (cfg.gat1_size,)
    for h in range(cfg.gat2_heads):
        shapes[f"gat2.h{h}.wl"] = (cfg.gat2_in, cfg.gat2_size)
        shapes[f"gat2.h{h}.wr"] = (cfg.gat2_in, cfg.gat2_size)
        shapes[f"gat2.h{h}.a"] = (cfg.gat2_size,)
    shapes["state.w1"] = (cfg.context_dim, cfg.state_hidden)
    shapes["state.w2"] = (cfg.state_hidden, cfg.state_out)
    shapes["fnn.w1"] = (cfg.decision_in, cfg.fnn_hidden)
    shapes["fnn.b1"] = (cfg.fnn_hidden,)
    shapes["fnn.w2"] = (cfg.fnn_hidden, 1)
    return shapes


def init_params(seed, cfg: PolicyConfig = DEFAULT_POLICY) -> NamedParams:
    """Fresh trainable parameters; weights uniform within +-sqrt(1/fan_in), biases zero."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    params: NamedParams = {}
    for name, shape in expected_shapes(cfg).items():
        if name == "fnn.b1":
            data = np.zeros(shape, dtype=np.float32)
        else:
            fan_in = shape[0] if len(shape) > 1 else shape[0]
            data = init_uniform(rng, shape, fan_in)
        params[name] = Tensor(data, requires_grad=True)
    return params


def params_from_arrays(arrays: dict, cfg: PolicyConfig = DEFAULT_POLICY) -> NamedParams:
    """Wrap a name->array map as trainable tensors, validating names and shapes."""
    shapes = expected_shapes(cfg)
    missing = [n for n in shapes if n not in arrays]
    if missing:
        raise ValueError(f"missing parameters: {', '.join(missing)}")
    unknown = [
        n for n in arrays
        if n not in shapes and not n.startswith("optim.") and not n.startswith("meta.")
    ]
    if unknown:
        raise ValueError(f"unexpected parameters: {', '.join(sorted(unknown))}")
    params: NamedParams = {}
    for name, shape in shapes.items():
        arr = np.asarray(arrays[name], dtype=np.float32)
        if arr.shape != shape:
            raise ValueError(f"parameter {name} has shape {arr.shape}, expected {shape}")
        params[name] = Tensor(arr, requires_grad=True)
    return params


def save_params(path, params: NamedParams) -> None:
    save_checkpoint(path, params)


def load_params(path, cfg: PolicyConfig = DEFAULT_POLICY) -> NamedParams:
    """Read model parameters from a checkpoint, ignoring optimizer and meta entries."""
    return params_from_arrays(load_checkpoint(path), cfg)


def encode(
    inst: Instance,
    params: NamedParams,
    cfg: PolicyConfig = DEFAULT_POLICY,
    tape: Tape | None = None,
    priors: np.ndarray | None = None,
) -> Tensor:
    """Operation embeddings [num_ops, embed_dim]; columns 0..prior_dim-1 are the raw priors."""
    if priors is None:
        priors = op_prior_matrix(inst)
    x = Tensor(np.asarray(priors, dtype=np.float32))
    adj = build_graph(inst).dense_undirected()
    heads1 = [
        (params[f"gat1.h{h}.wl"], params[f"gat1.h{h}.wr"], params[f"gat1.h{h}.a"])
        for h in range(cfg.gat1_heads)
    ]
    heads2 = [
        (params[f"gat2.h{h}.wl"], params[f"gat2.h{h}.wr"], params[f"gat2.h{h}.a"])
        for h in range(cfg.gat2_heads)
    ]
    g1 = relu(tape, gat_layer(tape, x, adj, heads1, "concat", cfg.slope))
    h1 = concat(tape, [x, g1], axis=-1)
    g2 = relu(tape, gat_layer(tape, h1, adj, heads2, "average", cfg.slope))
    return concat(tape, [x, g2], axis=-1)


def _decision_probs(tape, e, ctx, ready_ops, mask, params, cfg):
    """Job-selection probabilities from embeddings and per-job contexts.

    e is [num_ops, embed] (float32), ctx is [..., n, context_dim] (float64,
    cast here so sampling and replay share the one rounding point), ready_ops
    and mask are [..., n].  Returns [..., n] float32 probabilities with exact
    zeros on masked jobs.
    """
    c = cast(tape, ctx, np.float32)
    cw = matmul(tape, c, params["state.w1"])
    att = mha(tape, cw, cfg.mha_heads, cfg.mha_head_size)
    s = relu(tape, matmul(tape, add(tape, cw, att), params["state.w2"]))
    e_ready = gather_rows(tape, e, ready_ops)
    din = concat(tape, [e_ready, s], axis=-1)
    z = fnn(tape, din, params["fnn.w1"], params["fnn.b1"], params["fnn.w2"], cfg.slope)
    logits = reshape(tape, z, z.data.shape[:-1])
    return softmax_masked(tape, logits, mask)


def step_probs(
    inst: Instance,
    state: ScheduleState,
    params: NamedParams,
    cfg: PolicyConfig = DEFAULT_POLICY,
    e: Tensor | None = None,
) -> np.ndarray:
    """Probability over jobs for the next decision in a single in-progress state."""
    if state.is_complete:
        raise ValueError("schedule is complete, no decision to make")
    if e is None:
        e = encode(inst, params, cfg)
    ctx = job_context_matrix(inst, state, cfg.rank)[None, :, :]
    ready = np.minimum(state.next_pos, inst.m - 1)
    ops = (np.arange(inst.n) * inst.m + ready)[None, :]
    mask = (state.next_pos < inst.m)[None, :]
    p = _decision_probs(None, e, Tensor(ctx), ops, mask, params, cfg)
    return p.data[0]


def rollout_batch(
    inst: Instance,
    params: NamedParams,
    width: int,
    rng: np.random.Generator | None = None,
    greedy: bool = False,
    cfg: PolicyConfig = DEFAULT_POLICY,
):
    """Run `width` policy rollouts side by side.

    Returns (sequences [width, num_ops] int64, log_probs [width] float64,
    makespans [width, 3] float64).  Greedy mode takes the argmax job each
    step (ties resolve to the lowest job id); sample mode draws from the
    step distribution using `rng`.
    """
    if width < 1:
        raise ValueError("width must be at least 1")
    if not greedy and rng is None:
        raise ValueError("sampling needs an rng; pass rng= or set greedy=True")
    n, m = inst.n, inst.m
    num_ops = n * m
    beta, omega = cfg.rank.beta, cfg.rank.omega
    e = encode(inst, params, cfg)

    next_pos = np.zeros((width, n), dtype=np.int64)
    job_fc = np.zeros((width, n, 3))
    machine_fc = np.zeros((width, m, 3))
    makespan = np.zeros((width, 3))
    seqs = np.empty((width, num_ops), dtype=np.int64)
    log_probs = np.zeros(width)
    rows = np.arange(width)
    base_ops = np.arange(n) * m

    for t in range(num_ops):
        ctx = kernels.step_contexts(next_pos, job_fc, machine_fc, inst.machines, beta, omega)
        ready_ops = base_ops[None, :] + np.minimum(next_pos, m - 1)
        mask = next_pos < m
        p = _decision_probs(None, e, Tensor(ctx), ready_ops, mask, params, cfg).data
        if greedy:
            choice = np.argmax(p, axis=1)
        else:
            choice = _sample_rows(p, rng.random(width))
        log_probs += np.log(p[rows, choice].astype(np.float64))
        seqs[:, t] = choice
        kernels.advance(
            next_pos, job_fc, machine_fc, makespan, choice,
            inst.machines, inst.times, beta, omega,
        )
    return seqs, log_probs, makespan


def _sample_rows(p: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF draw per row; float tail mass can land past the last
    positive entry, so those picks snap back to it."""
    cum = np.cumsum(p, axis=1)
    choice = np.minimum((cum < u[:, None]).sum(axis=1), p.shape[1] - 1)
    hit = p[np.arange(p.shape[0]), choice]
    for b in np.flatnonzero(hit <= 0.0):
        positive = np.flatnonzero(p[b] > 0.0)
        before = positive[positive <= choice[b]]
        choice[b] = before[-1] if before.size else positive[0]
    return choice


def rollout(
    inst: Instance,
    params: NamedParams,
    rng: np.random.Generator | None = None,
    greedy: bool = False,
    cfg: PolicyConfig = DEFAULT_POLICY,
):
    """Single rollout; returns (sequence tuple, log_prob, decoded Schedule)."""
    seqs, lps, _ = rollout_batch(inst, params, 1, rng=rng, greedy=greedy, cfg=cfg)
    seq = tuple(int(j) for j in seqs[0])
    return seq, float(lps[0]), decode(inst, seq, cfg.rank)


def log_prob_of(
    inst: Instance,
    params: NamedParams,
    sequence,
    cfg: PolicyConfig = DEFAULT_POLICY,
    tape: Tape | None = None,
):
    """Log-probability of a complete job sequence under the policy.

    Teacher-forced replay: the decision states are reconstructed with the
    same kernels a rollout uses, then all steps are scored in one batched
    pass so the result is differentiable through `params` when a tape is
    given.  Returns a scalar float64 Tensor (or a float without a tape).
    """
    seq = _validate_sequence(inst, sequence)
    n, m = inst.n, inst.m
    num_ops = n * m
    beta, omega = cfg.rank.beta, cfg.rank.omega

    next_pos = np.zeros((1, n), dtype=np.int64)
    job_fc = np.zeros((1, n, 3))
    machine_fc = np.zeros((1, m, 3))
    makespan = np.zeros((1, 3))
    ctxs = np.empty((num_ops, n, JOB_CONTEXT_DIM))
    ready = np.empty((num_ops, n), dtype=np.int64)
    masks = np.empty((num_ops, n), dtype=bool)
    base_ops = np.arange(n) * m
    for t in range(num_ops):
        ctxs[t] = kernels.step_contexts(
            next_pos, job_fc, machine_fc, inst.machines, beta, omega
        )[0]
        ready[t] = base_ops + np.minimum(next_pos[0], m - 1)
        masks[t] = next_pos[0] < m
        kernels.advance(
            next_pos, job_fc, machine_fc, makespan, seq[t : t + 1],
            inst.machines, inst.times, beta, omega,
        )

    e = encode(inst, params, cfg, tape)
    p = _decision_probs(tape, e, Tensor(ctxs), ready, masks, params, cfg)
    chosen = take_along_last(tape, p, seq)
    total = tsum(tape, log(tape, cast(tape, chosen, np.float64)))
    return total if tape is not None else float(total.data)
