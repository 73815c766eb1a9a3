"""Context-oriented behavioral programs: runtime, examples, and checker.

A program is a set of scenario threads, each bound to a query over a mutable
context store.  Threads synchronize through requested/waited/blocked event
bids; the engine repeatedly selects a requested-and-unblocked event, applies
its effect to the store, spawns one live copy per new query result, and
resumes the copies that asked about the event.  The verifier walks the same
transition relation exhaustively to find deadlocks or assertion violations.
"""

from .behavior import DONE, CBTDefinition, LiveCopy, Sync, advance, collect_statements, spawn_live_copies
from .context import (ContextStore, EffectMap, Query, QueryBinding, QueryDiff,
                      QueryResult, UpdateCommand, apply_effect, bind,
                      diff_queries, load_context_tables, run_query)
from .engine import (DEADLOCK, PROGRESSED, QUIESCENT, STEP_LIMIT, SUPER_STEP,
                     Arbiter, Engine, EngineState, Program, Trace, TraceEntry,
                     enqueue_external, force_event, initialize, run, step)
from .errors import BoundExceededError, ConfigurationError, EngineInvariantError
from .events import (ALL, NONE, Complement, Event, EventSet, ExplicitSet,
                     LabelMatch, SyncStatement, UnionSet, ctx_ended, explicit,
                     matches, register_payload_predicate, selectable, sync, union)
from .verifier import (Assertion, Limits, Verdict, count_states,
                       enumerate_maximal_traces, state_key, verify)

__all__ = [
    "ALL", "NONE", "Arbiter", "Assertion", "BoundExceededError",
    "CBTDefinition", "Complement", "ConfigurationError", "ContextStore",
    "DEADLOCK", "DONE", "EffectMap", "Engine", "EngineInvariantError",
    "EngineState", "Event", "EventSet", "ExplicitSet", "LabelMatch", "Limits",
    "LiveCopy", "PROGRESSED", "Program", "QUIESCENT", "Query", "QueryBinding",
    "QueryDiff", "QueryResult", "STEP_LIMIT", "SUPER_STEP", "Sync",
    "SyncStatement", "Trace", "TraceEntry", "UnionSet", "UpdateCommand",
    "Verdict", "advance", "apply_effect", "bind", "collect_statements",
    "count_states", "ctx_ended", "diff_queries", "enqueue_external",
    "enumerate_maximal_traces", "explicit", "force_event", "initialize",
    "load_context_tables", "matches", "register_payload_predicate", "run",
    "run_query", "selectable", "spawn_live_copies", "state_key", "step",
    "sync", "union", "verify",
]

__version__ = "0.1.0"
