"""Context-bound thread definitions and their running live copies.

A CBT is a deterministic reactive state machine bound to a query: one live
copy runs per query result, seeded with that result.  The machine is driven
by a pure step function that, given the paused state and the event that
resumed the copy, returns the next synchronization statement (or finishes).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

from .context import ContextStore, Query, QueryBinding, QueryDiff, QueryResult, bind
from .errors import EngineInvariantError
from .events import Event, SyncStatement, ctx_ended


@dataclass(frozen=True)
class Sync:
    """Pause in ``next_state`` after submitting ``statement``."""

    statement: SyncStatement
    next_state: str


class _Done:
    """Terminal outcome: the live copy is removed and never resumed."""

    def __repr__(self):
        return "DONE"


DONE = _Done()

StepOutcome = Sync | _Done
StepFn = Callable[[str, QueryResult, ContextStore, Event | None], StepOutcome]


@dataclass(frozen=True)
class CBTDefinition:
    name: str
    query_name: str
    init_state: str
    step_fn: StepFn
    query_params: tuple[tuple[str, Any], ...] = ()
    interruptible: bool = False

    @staticmethod
    def make(name: str, query_name: str, init_state: str, step_fn: StepFn,
             query_params: Mapping[str, Any] | None = None,
             interruptible: bool = False) -> "CBTDefinition":
        return CBTDefinition(name, query_name, init_state, step_fn,
                             tuple(sorted((query_params or {}).items())), interruptible)

    def binding(self, queries: Mapping[str, Query]) -> QueryBinding:
        return bind(queries[self.query_name], dict(self.query_params))

    def binding_id(self, queries: Mapping[str, Query]) -> str:
        return self.binding(queries).binding_id


@dataclass(frozen=True)
class LiveCopy:
    """A paused instance of a CBT: ``<definition, state, seed>`` plus its bid."""

    cbt: CBTDefinition
    state: str
    seed: QueryResult
    pending: SyncStatement
    binding_id: str = field(compare=False)

    @property
    def id(self) -> str:
        return f"{self.cbt.name}:{self.seed.key}"

    def ended_notice(self) -> Event:
        return ctx_ended(self.binding_id, self.seed.key)


def start_live_copy(cbt: CBTDefinition, seed: QueryResult, ctx: ContextStore,
                    binding_id: str) -> LiveCopy | None:
    """Run a fresh copy to its first synchronization point.

    Returns None when the copy finishes without ever synchronizing.  New
    copies never see the event whose transition spawned them.
    """

    outcome = cbt.step_fn(cbt.init_state, seed, ctx, None)
    if outcome is DONE:
        return None
    if not isinstance(outcome, Sync):
        raise EngineInvariantError(f"step function of {cbt.name!r} returned {outcome!r}")
    return LiveCopy(cbt, outcome.next_state, seed, outcome.statement, binding_id)


def spawn_live_copies(cbts: list[CBTDefinition], diff: QueryDiff, ctx: ContextStore,
                      binding_ids: Mapping[str, str]) -> list[LiveCopy]:
    """One copy per (definition, newly added result), advanced to its first sync.

    Order is deterministic: definition registration order, then result key.
    """

    spawned: list[LiveCopy] = []
    for cbt in cbts:
        binding_id = binding_ids[cbt.name]
        added = diff.added(binding_id)
        for key in sorted(added):
            copy = start_live_copy(cbt, added[key], ctx, binding_id)
            if copy is not None:
                spawned.append(copy)
    return spawned


def advance(copy: LiveCopy, event: Event, ctx_after: ContextStore) -> LiveCopy | None:
    """React to a selected event.

    The copy moves only if the event is one it requested or waited for; any
    other event leaves it paused where it was.  Interruptible copies also
    finish when their own end-of-context notice arrives.  Returns None when
    the copy is done.
    """

    if copy.cbt.interruptible and event == copy.ended_notice():
        return None
    if not copy.pending.resumes_on(event):
        return copy
    outcome = copy.cbt.step_fn(copy.state, copy.seed, ctx_after, event)
    if outcome is DONE:
        return None
    if not isinstance(outcome, Sync):
        raise EngineInvariantError(f"step function of {copy.cbt.name!r} returned {outcome!r}")
    return LiveCopy(copy.cbt, outcome.next_state, copy.seed, outcome.statement, copy.binding_id)


def collect_statements(copies: list[LiveCopy]) -> list[SyncStatement]:
    """The pending statements, in live-copy id order."""

    return [c.pending for c in sorted(copies, key=lambda c: c.id)]


def table_machine(states: Mapping[str, SyncStatement],
                  edges: Mapping[tuple[str, str], str | None]) -> StepFn:
    """Build a step function from a plain state table.

    ``states`` maps state ids to the statement submitted there; ``edges`` maps
    ``(state, event label)`` to the successor state, with None meaning the
    machine finishes.  A missing edge for a resuming event also finishes the
    machine, which suits the common request-once-then-stop shape.
    """

    def step(state: str, seed: QueryResult, ctx: ContextStore, last: Event | None) -> StepOutcome:
        if last is None:
            return Sync(states[state], state)
        nxt = edges.get((state, last.label))
        if nxt is None:
            return DONE
        return Sync(states[nxt], nxt)

    return step
