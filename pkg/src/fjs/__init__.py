"""Fuzzy job shop scheduling: exact TFN arithmetic, list-scheduling
simulation, a self-labeling neural constructor, and metaheuristic
baselines, with numba-compiled hot kernels (set FJS_NO_NUMBA=1 for the
pure numpy path)."""

from .fuzzy import (
    TFN,
    ZERO,
    DEFAULT_RANK,
    RankConfig,
    add,
    alpha_cut,
    defuzz,
    fuzzy_max,
    membership,
    quartiles_defuzz,
    rank_sakawa,
    z_value,
)
from .instances import (
    DisjunctiveGraph,
    Instance,
    OperationRef,
    ParseError,
    build_graph,
    generate,
    read_instance,
    sequence_space_size,
    write_instance,
)
from .sim import (
    Schedule,
    ScheduleState,
    brute_force_optimum,
    check_schedule,
    decode,
    export_gantt,
    fuzzy_makespan,
    init_state,
    step,
)
from .features import (
    JOB_CONTEXT_DIM,
    OP_PRIOR_DIM,
    JobContext,
    OpPrior,
    job_context_matrix,
    job_contexts,
    op_prior_matrix,
    op_priors,
)
from .kernels import USING_NUMBA

__version__ = "0.1.0"

__all__ = [
    "TFN", "ZERO", "DEFAULT_RANK", "RankConfig",
    "add", "alpha_cut", "defuzz", "fuzzy_max", "membership",
    "quartiles_defuzz", "rank_sakawa", "z_value",
    "DisjunctiveGraph", "Instance", "OperationRef", "ParseError",
    "build_graph", "generate", "read_instance", "sequence_space_size", "write_instance",
    "Schedule", "ScheduleState", "brute_force_optimum", "check_schedule",
    "decode", "export_gantt", "fuzzy_makespan", "init_state", "step",
    "JOB_CONTEXT_DIM", "OP_PRIOR_DIM", "JobContext", "OpPrior",
    "job_context_matrix", "job_contexts", "op_prior_matrix", "op_priors",
    "USING_NUMBA",
    "__version__",
]
