"""k-induction model checking for symbolic finite transition systems,
with a counterexample-guided extension that turns failed induction steps
into reachability targets."""

from .engine import (
    ComparisonRecord,
    EngineConfig,
    Outcome,
    ProofSource,
    TargetRecheck,
    VerificationReport,
    compare,
    run,
    run_extended,
    run_plain,
    stitch,
)
from .errors import (
    ConfigError,
    DiscrepancyError,
    InternalError,
    KindmcError,
    ParseError,
    ProtocolError,
    SortError,
    ValidationError,
)
from .frontend import (
    BenchmarkSpec,
    accumulator,
    chain_bug,
    const_check,
    diamond_parity,
    format_system,
    generate_benchmark,
    parse,
    parse_file,
)
from .ir import (
    Prop,
    Sort,
    State,
    Trace,
    TransitionSystem,
    VarDecl,
    VarRole,
    eval_expr,
    replay_trace,
    states_equal,
)
from .oracle import OracleResult, OracleVerdict, bfs_check, reachable
from .solver import Solver, SolverConfig, SolverStatus, SolverVerdict, resolve_config

__version__ = "0.1.0"

__all__ = [
    "BenchmarkSpec",
    "ComparisonRecord",
    "ConfigError",
    "DiscrepancyError",
    "EngineConfig",
    "InternalError",
    "KindmcError",
    "OracleResult",
    "OracleVerdict",
    "Outcome",
    "ParseError",
    "ProofSource",
    "Prop",
    "ProtocolError",
    "Solver",
    "SolverConfig",
    "SolverStatus",
    "SolverVerdict",
    "Sort",
    "SortError",
    "State",
    "TargetRecheck",
    "Trace",
    "TransitionSystem",
    "ValidationError",
    "VarDecl",
    "VarRole",
    "VerificationReport",
    "accumulator",
    "bfs_check",
    "chain_bug",
    "compare",
    "const_check",
    "diamond_parity",
    "eval_expr",
    "format_system",
    "generate_benchmark",
    "parse",
    "parse_file",
    "reachable",
    "replay_trace",
    "resolve_config",
    "run",
    "run_extended",
    "run_plain",
    "states_equal",
    "stitch",
]
