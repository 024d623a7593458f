"""Provably correct reconciliation of diverged filesystem replicas.

Replicas describe their changes as canonical command sets; the engine
checks that the sets share a base filesystem, generates mergers (maximal
canonical subsets of everything submitted) in near-linear time, and
turns a chosen merger into per-replica rollback/apply instructions.
"""

from .canonical import (
    CanonicalSet,
    UpIndex,
    build_up_index,
    canonize,
    is_canonical,
    is_initial_segment,
    order_canonical,
)
from .command import (
    Command,
    in_conflict,
    invert_sequence,
    must_precede,
    semantically_equal_on,
)
from .errors import (
    BrokenSequence,
    CommandRejected,
    FormatError,
    NotAMerger,
    NotCanonical,
    NotCanonicalInput,
    NotCanonicalSubset,
    NotRefluent,
    PreconditionFailed,
    ScriptExhausted,
    ScriptOutOfRange,
    SyncError,
    TreeBroken,
)
from .fsmodel import DIRECTORY, EMPTY, Filesystem, Path, Value, file_value
from .merge import (
    ConflictGraph,
    DecisionOracle,
    Merger,
    OpCounters,
    conflict_graph,
    enumerate_mergers,
    generate_merger,
    greedy_merger,
    merger_extending,
    union_of,
)
from .reconcile import (
    AsyncOutcome,
    SyncPlan,
    async_merge,
    diff,
    make_plan,
    validate_merger,
    verify_convergence,
)
from .refluence import (
    NodeProfile,
    check_applicable,
    check_jointly_refluent,
    check_pairwise_refluent,
    witness_filesystem,
)

__all__ = [name for name in dir() if not name.startswith("_")]
