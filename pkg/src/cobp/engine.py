"""The synchronization cycle: select, apply effect, diff queries, spawn, resume.

One step of the engine either delivers a pending end-of-context notice, lets
the arbiter pick a requested-and-unblocked event, or (when nothing internal
is selectable) admits the first unblocked external event as a super-step.
After a selection the effect runs first, then every paused copy observes the
selected event against the updated store, and new copies spawn for results
that appeared.  Results that disappeared are announced through unblockable
``CTX.Ended`` notices delivered before any further program event.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

from .behavior import CBTDefinition, LiveCopy, advance, spawn_live_copies
from .context import (ContextStore, EffectMap, Query, QueryBinding, QueryDiff,
                      UpdateCommand, apply_effect, diff_queries)
from .errors import ConfigurationError, EngineInvariantError
from .events import (CONTEXT_NS, PROGRAM_NS, Event, SyncStatement, canon_json,
                     ctx_ended, selectable)

log = logging.getLogger("cobp.engine")

PROGRESSED = "progressed"
SUPER_STEP = "super-step"
QUIESCENT = "quiescent"
DEADLOCK = "deadlock"
STEP_LIMIT = "step-limit"


@dataclass(frozen=True)
class Program:
    """A complete behavioral program: definitions plus its data repository."""

    cbts: tuple[CBTDefinition, ...]
    queries: Mapping[str, Query]
    updates: Mapping[str, UpdateCommand]
    effects: EffectMap
    _binding_ids: dict = field(init=False, repr=False, compare=False)
    _bindings: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        names = [c.name for c in self.cbts]
        if len(set(names)) != len(names):
            raise ConfigurationError("duplicate CBT names in program")
        binding_ids: dict[str, str] = {}
        bindings: list[QueryBinding] = []
        seen: set[str] = set()
        for cbt in self.cbts:
            if cbt.query_name not in self.queries:
                raise ConfigurationError(
                    f"CBT {cbt.name!r} is bound to unknown query {cbt.query_name!r}")
            binding = cbt.binding(self.queries)
            binding_ids[cbt.name] = binding.binding_id
            if binding.binding_id not in seen:
                seen.add(binding.binding_id)
                bindings.append(binding)
        object.__setattr__(self, "_binding_ids", binding_ids)
        object.__setattr__(self, "_bindings", tuple(bindings))

    @property
    def binding_ids(self) -> dict[str, str]:
        return self._binding_ids

    @property
    def bindings(self) -> tuple[QueryBinding, ...]:
        return self._bindings

    def extended(self, extra: Iterable[CBTDefinition]) -> "Program":
        return Program(self.cbts + tuple(extra), self.queries, self.updates, self.effects)


@dataclass(frozen=True)
class Arbiter:
    """Event-selection policy among the selectable events."""

    strategy: str = "random"
    priority_labels: tuple[str, ...] = ()

    def __post_init__(self):
        if self.strategy not in ("random", "first", "priority"):
            raise ConfigurationError(f"unknown arbiter strategy {self.strategy!r}")

    def choose(self, candidates: list[Event], rng: random.Random | None) -> Event:
        if self.strategy == "first":
            return candidates[0]
        if self.strategy == "priority":
            ranks = {label: i for i, label in enumerate(self.priority_labels)}
            fallback = len(self.priority_labels)
            return min(candidates, key=lambda e: (ranks.get(e.label, fallback), e.sort_key))
        if rng is None:
            raise EngineInvariantError("random arbiter needs generator state")
        return candidates[rng.randrange(len(candidates))]


@dataclass(frozen=True)
class EngineState:
    """Everything between two synchronization points.  Immutable."""

    ctx: ContextStore
    copies: tuple[LiveCopy, ...]
    external_queue: tuple[Event, ...] = ()
    pending_notices: tuple[Event, ...] = ()
    step_count: int = 0
    rng_state: tuple | None = None


@dataclass(frozen=True)
class StepResult:
    event: Event | None
    state: EngineState
    status: str
    requested: tuple[Event, ...] = ()
    blocked_labels: tuple[str, ...] = ()
    spawned_ids: tuple[str, ...] = ()
    ended_keys: tuple[str, ...] = ()


@dataclass(frozen=True)
class TraceEntry:
    step: int
    event: Event
    requested: tuple[Event, ...]
    blocked_labels: tuple[str, ...]
    spawned_ids: tuple[str, ...]
    ended_keys: tuple[str, ...]
    ctx_digest: str

    def to_json(self) -> dict:
        return {
            "step": self.step,
            "selectedEvent": self.event.to_json(),
            "requested": [e.to_json() for e in self.requested],
            "blockedLabels": list(self.blocked_labels),
            "spawnedIds": list(self.spawned_ids),
            "endedKeys": list(self.ended_keys),
            "ctxDigest": self.ctx_digest,
        }


@dataclass
class Trace:
    entries: list[TraceEntry] = field(default_factory=list)
    final_status: str = QUIESCENT

    def events(self) -> list[Event]:
        return [e.event for e in self.entries]

    def labels(self) -> list[str]:
        return [e.event.display() for e in self.entries]

    def program_events(self) -> list[Event]:
        return [e.event for e in self.entries if e.event.ns == PROGRAM_NS]

    def to_jsonl(self) -> str:
        lines = [canon_json(entry.to_json()) for entry in self.entries]
        lines.append(canon_json({"step": len(self.entries), "status": self.final_status}))
        return "\n".join(lines) + "\n"


def initialize(program: Program, ctx_init: ContextStore,
               arbiter: Arbiter | None = None, seed: int = 0) -> EngineState:
    """Spawn the initial live copies and advance each to its first sync point."""

    rng_state = None
    if arbiter is None or arbiter.strategy == "random":
        rng_state = random.Random(seed).getstate()
    diff = QueryDiff()
    for binding in program.bindings:
        diff.per_query[binding.binding_id] = (binding.run(ctx_init), {})
    copies = spawn_live_copies(list(program.cbts), diff, ctx_init, program.binding_ids)
    return EngineState(ctx_init, tuple(copies), rng_state=rng_state)


def enqueue_external(state: EngineState, event: Event) -> EngineState:
    """Append an environment event to the FIFO inbox."""

    if event.ns != PROGRAM_NS:
        raise ConfigurationError("external events must be program-namespace")
    return replace(state, external_queue=state.external_queue + (event,))


def _requested_overview(statements: list[SyncStatement]) -> tuple[tuple[Event, ...], tuple[str, ...]]:
    seen: dict[str, Event] = {}
    for stmt in statements:
        for event in stmt.requested:
            seen.setdefault(event.sort_key, event)
    requested = tuple(seen[k] for k in sorted(seen))
    blocked = sorted({e.label for e in requested
                      if any(s.blocked.matches(e) for s in statements)})
    return requested, tuple(blocked)


def _merge_spawned(advanced: list[LiveCopy], spawned: list[LiveCopy]) -> tuple[list[LiveCopy], list[str]]:
    existing = {c.id: c for c in advanced}
    merged = list(advanced)
    fresh_ids = []
    for copy in spawned:
        previous = existing.get(copy.id)
        if previous is None:
            existing[copy.id] = copy
            merged.append(copy)
            fresh_ids.append(copy.id)
        elif previous.state == copy.state and previous.pending == copy.pending:
            continue  # re-spawn coincides with a still-paused identical copy
        else:
            raise EngineInvariantError(
                f"live copy id {copy.id!r} respawned while an advanced copy exists")
    return merged, fresh_ids


def _transition(program: Program, state: EngineState, event: Event,
                rng_state, status: str, external_index: int | None,
                requested: tuple[Event, ...], blocked_labels: tuple[str, ...],
                arbitrated: bool) -> StepResult:
    if arbitrated and __debug__:
        stmts = [c.pending for c in state.copies]
        assert any(event in s.requested for s in stmts), "selected event was not requested"
        assert not any(s.blocked.matches(event) for s in stmts), "selected event was blocked"

    ctx_after = apply_effect(state.ctx, program.effects, event, program.updates)
    notices: list[Event] = []
    ended_keys: list[str] = []
    if ctx_after is state.ctx:
        diff = QueryDiff()
    else:
        diff = diff_queries(state.ctx, ctx_after, program.bindings)
        for binding in program.bindings:
            for key in sorted(diff.removed(binding.binding_id)):
                notices.append(ctx_ended(binding.binding_id, key))
                ended_keys.append(f"{binding.binding_id}:{key}")

    advanced = []
    for copy in state.copies:
        nxt = advance(copy, event, ctx_after)
        if nxt is not None:
            advanced.append(nxt)
    spawned = spawn_live_copies(list(program.cbts), diff, ctx_after, program.binding_ids)
    merged, fresh_ids = _merge_spawned(advanced, spawned)

    queue = state.external_queue
    if external_index is not None:
        queue = queue[:external_index] + queue[external_index + 1:]

    next_state = EngineState(
        ctx=ctx_after,
        copies=tuple(merged),
        external_queue=queue,
        pending_notices=state.pending_notices + tuple(notices),
        step_count=state.step_count + 1,
        rng_state=rng_state,
    )
    log.debug("step %d: %s (%s)", state.step_count, event.display(), status)
    return StepResult(event, next_state, status, requested, blocked_labels,
                      tuple(fresh_ids), tuple(ended_keys))


def force_event(program: Program, state: EngineState, event: Event) -> StepResult:
    """Transition on one specific selectable event; the verifier branches here."""

    statements = [c.pending for c in state.copies]
    requested, blocked_labels = _requested_overview(statements)
    return _transition(program, state, event, state.rng_state, PROGRESSED, None,
                       requested, blocked_labels, arbitrated=True)


def step(program: Program, state: EngineState, arbiter: Arbiter) -> StepResult:
    """One transition, or a terminal classification when none is possible."""

    statements = [c.pending for c in state.copies]
    requested, blocked_labels = _requested_overview(statements)

    if state.pending_notices:
        notice = state.pending_notices[0]
        advanced = []
        for copy in state.copies:
            nxt = advance(copy, notice, state.ctx)
            if nxt is not None:
                advanced.append(nxt)
        next_state = replace(state, copies=tuple(advanced),
                             pending_notices=state.pending_notices[1:],
                             step_count=state.step_count + 1)
        return StepResult(notice, next_state, PROGRESSED, requested, blocked_labels)

    candidates = selectable(statements)
    if candidates:
        rng_state = state.rng_state
        if arbiter.strategy == "random":
            rng = random.Random()
            rng.setstate(state.rng_state)
            event = arbiter.choose(candidates, rng)
            rng_state = rng.getstate()
        else:
            event = arbiter.choose(candidates, None)
        return _transition(program, state, event, rng_state, PROGRESSED, None,
                           requested, blocked_labels, arbitrated=True)

    # Super-step: no internal event is selectable, admit the environment.
    for index, event in enumerate(state.external_queue):
        if not any(s.blocked.matches(event) for s in statements):
            return _transition(program, state, event, state.rng_state, SUPER_STEP,
                               index, requested, blocked_labels, arbitrated=False)

    if requested:
        return StepResult(None, state, DEADLOCK, requested, blocked_labels)
    return StepResult(None, state, QUIESCENT, requested, blocked_labels)


def run(program: Program, state: EngineState, arbiter: Arbiter,
        max_steps: int = 10000) -> tuple[Trace, EngineState]:
    """Step until quiescent, deadlocked, or out of budget; return the trace."""

    if max_steps < 0:
        raise ConfigurationError("max_steps must be >= 0")
    trace = Trace()
    trace.final_status = STEP_LIMIT
    for _ in range(max_steps):
        result = step(program, state, arbiter)
        if result.status in (QUIESCENT, DEADLOCK):
            trace.final_status = result.status
            break
        trace.entries.append(TraceEntry(
            step=state.step_count,
            event=result.event,
            requested=result.requested,
            blocked_labels=result.blocked_labels,
            spawned_ids=result.spawned_ids,
            ended_keys=result.ended_keys,
            ctx_digest=result.state.ctx.digest(),
        ))
        state = result.state
    return trace, state


class Engine:
    """Convenience wrapper owning a current state and a serialized inbox.

    ``post_external`` is the only method safe to call from other threads;
    everything else belongs to the single driving thread.
    """

    def __init__(self, program: Program, ctx_init: ContextStore,
                 arbiter: Arbiter | None = None, seed: int = 0):
        import threading

        self.program = program
        self.arbiter = arbiter or Arbiter("random")
        self.state = initialize(program, ctx_init, self.arbiter, seed)
        self._inbox: list[Event] = []
        self._lock = threading.Lock()

    def post_external(self, event: Event) -> None:
        if event.ns != PROGRAM_NS:
            raise ConfigurationError("external events must be program-namespace")
        with self._lock:
            self._inbox.append(event)

    def _drain_inbox(self) -> None:
        with self._lock:
            pending, self._inbox = self._inbox, []
        for event in pending:
            self.state = enqueue_external(self.state, event)

    def step(self) -> StepResult:
        self._drain_inbox()
        result = step(self.program, self.state, self.arbiter)
        self.state = result.state
        return result

    def run(self, max_steps: int = 10000) -> Trace:
        self._drain_inbox()
        trace, self.state = run(self.program, self.state, self.arbiter, max_steps)
        return trace
