"""Explicit-state traversal of a program's synchronization-point graph.

The traversal branches over every arbiter choice (each selectable event) and
prunes by a canonical state digest, so it checks safety properties: absence
of deadlock and user assertions.  Environment nondeterminism must be encoded
as simulation threads requesting the alternative events; queued externals
are delivered deterministically and do not branch.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass
from typing import Callable, Iterable

from .context import ContextStore
from .engine import (DEADLOCK, SUPER_STEP, Arbiter, EngineState, Program,
                     StepResult, force_event, initialize, step)
from .errors import BoundExceededError, ConfigurationError
from .events import PROGRAM_NS, Event, canon_json, selectable

_FIRST = Arbiter("first")


@dataclass(frozen=True)
class Assertion:
    """A named safety predicate over (state, last event); False is a violation."""

    name: str
    predicate: Callable[[EngineState, Event | None], bool]


@dataclass
class Verdict:
    outcome: str  # ok | deadlock | violation | boundExceeded
    violated: str | None = None
    counterexample: list[Event] | None = None
    states_visited: int = 0
    elapsed_ms: float = 0.0

    def to_json(self) -> dict:
        doc = {
            "outcome": self.outcome,
            "statesVisited": self.states_visited,
            "elapsedMs": round(self.elapsed_ms, 3),
            "counterexample": None,
        }
        if self.violated is not None:
            doc["assertion"] = self.violated
        if self.counterexample is not None:
            doc["counterexample"] = [e.to_json() for e in self.counterexample]
        return doc


@dataclass(frozen=True)
class Limits:
    max_states: int = 1_000_000
    max_depth: int = 10_000

    def __post_init__(self):
        if self.max_states <= 0 or self.max_depth <= 0:
            raise ConfigurationError("traversal bounds must be positive")


def state_key(state: EngineState) -> str:
    """Canonical digest of a synchronization point.

    Live copies are keyed order-independently.  Pending statements are folded
    in as well: a statement can depend on the store at the moment the copy
    paused, so two states with equal copy triples may still differ.
    """

    copies = sorted(
        (c.cbt.name, c.state, c.seed.key, c.pending.canon()) for c in state.copies
    )
    doc = [
        state.ctx.digest(),
        copies,
        [e.sort_key for e in state.pending_notices],
        [e.sort_key for e in state.external_queue],
    ]
    return hashlib.sha256(canon_json(doc).encode("utf-8")).hexdigest()


def successors(program: Program, state: EngineState) -> list[StepResult]:
    """Every possible next step: one per arbiter choice, else notice/external."""

    if state.pending_notices:
        return [step(program, state, _FIRST)]
    candidates = selectable(c.pending for c in state.copies)
    if not candidates:
        result = step(program, state, _FIRST)
        return [result] if result.status == SUPER_STEP else []
    return [force_event(program, state, event) for event in candidates]


def classify_terminal(program: Program, state: EngineState) -> str:
    result = step(program, state, _FIRST)
    return result.status


def verify(program: Program, ctx_init: ContextStore,
           env_model: Iterable = (),
           assertions: Iterable[Assertion] = (),
           limits: Limits | None = None,
           search: str = "dfs") -> Verdict:
    """Search all reachable synchronization points for deadlocks or violations.

    Returns the first counterexample in deterministic (canonical event order)
    search order, ``ok`` if the space closes cleanly, or ``boundExceeded``
    when the limits cut the search short.
    """

    limits = limits or Limits()
    assertions = list(assertions)
    if search not in ("dfs", "bfs"):
        raise ConfigurationError(f"unknown search order {search!r}")
    merged = program.extended(tuple(env_model)) if env_model else program
    started = time.monotonic()

    init = initialize(merged, ctx_init, Arbiter("first"))

    def verdict(outcome: str, violated=None, path=None, visited=0) -> Verdict:
        return Verdict(outcome, violated, path,
                       states_visited=visited,
                       elapsed_ms=(time.monotonic() - started) * 1000.0)

    for check in assertions:
        if not check.predicate(init, None):
            return verdict("violation", check.name, [], 1)

    visited = {state_key(init)}
    frontier: list[tuple[EngineState, tuple[Event, ...]]] = [(init, ())]
    truncated = False
    pop = frontier.pop if search == "dfs" else (lambda: frontier.pop(0))

    while frontier:
        state, path = pop()
        succs = successors(merged, state)
        if not succs:
            if classify_terminal(merged, state) == DEADLOCK:
                return verdict("deadlock", None, list(path), len(visited))
            continue
        if len(path) >= limits.max_depth:
            truncated = True
            continue
        fresh = []
        for result in succs:
            new_path = path + (result.event,)
            for check in assertions:
                if not check.predicate(result.state, result.event):
                    return verdict("violation", check.name, list(new_path), len(visited))
            key = state_key(result.state)
            if key in visited:
                continue
            if len(visited) >= limits.max_states:
                truncated = True
                continue
            visited.add(key)
            fresh.append((result.state, new_path))
        # keep DFS exploration in canonical event order
        frontier.extend(reversed(fresh) if search == "dfs" else fresh)

    if truncated:
        return verdict("boundExceeded", None, None, len(visited))
    return verdict("ok", None, None, len(visited))


def count_states(program: Program, ctx_init: ContextStore,
                 env_model: Iterable = (), limits: Limits | None = None) -> int:
    """Size of the reachable synchronization-point graph, assertions ignored."""

    limits = limits or Limits()
    merged = program.extended(tuple(env_model)) if env_model else program
    init = initialize(merged, ctx_init, Arbiter("first"))
    visited = {state_key(init)}
    frontier = [(init, 0)]
    while frontier:
        state, depth = frontier.pop()
        if depth >= limits.max_depth:
            raise BoundExceededError("depth bound hit while counting states", len(visited))
        for result in successors(merged, state):
            key = state_key(result.state)
            if key in visited:
                continue
            if len(visited) >= limits.max_states:
                raise BoundExceededError("state bound hit while counting states", len(visited))
            visited.add(key)
            frontier.append((result.state, depth + 1))
    return len(visited)


def enumerate_maximal_traces(program: Program, ctx_init: ContextStore,
                             env_model: Iterable = (),
                             limits: Limits | None = None,
                             program_events_only: bool = True) -> frozenset[tuple[str, ...]]:
    """All maximal runs (to quiescence or deadlock), as display-name sequences.

    Works on the deduplicated state graph with memoized suffix sets, so the
    cost is bounded by the graph, not by the trace count.  A cycle means the
    program has unbounded runs and enumeration is refused.
    """

    limits = limits or Limits()
    merged = program.extended(tuple(env_model)) if env_model else program
    init = initialize(merged, ctx_init, Arbiter("first"))

    suffixes: dict[str, frozenset[tuple[str, ...]]] = {}
    expanded: dict[str, list[tuple[str | None, str]]] = {}  # key -> [(display, succ key)]
    states: dict[str, EngineState] = {}

    init_key = state_key(init)
    states[init_key] = init
    on_path: set[str] = set()
    stack: list[tuple[str, bool]] = [(init_key, False)]

    while stack:
        key, processed = stack.pop()
        if processed:
            on_path.discard(key)
            options = expanded[key]
            if not options:
                suffixes[key] = frozenset({()})
                continue
            acc: set[tuple[str | None, ...]] = set()
            for display, succ_key in options:
                for tail in suffixes[succ_key]:
                    acc.add((display,) + tail)
            suffixes[key] = frozenset(acc)
            continue
        if key in suffixes or key in expanded:
            continue
        if len(states) > limits.max_states:
            raise BoundExceededError("state bound hit while enumerating traces", len(states))
        on_path.add(key)
        stack.append((key, True))
        options = []
        for result in successors(merged, states[key]):
            event = result.event
            display = None if (program_events_only and event.ns != PROGRAM_NS) else event.display()
            succ_key = state_key(result.state)
            if succ_key in on_path:
                raise BoundExceededError("cyclic state graph: runs are unbounded", len(states))
            options.append((display, succ_key))
            if succ_key not in suffixes and succ_key not in expanded:
                states[succ_key] = result.state
                stack.append((succ_key, False))
        expanded[key] = options

    def strip(seq: tuple[str | None, ...]) -> tuple[str, ...]:
        return tuple(s for s in seq if s is not None)

    return frozenset(strip(seq) for seq in suffixes[init_key])
