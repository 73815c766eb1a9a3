"""Events, event-set matchers, and synchronization statements.

Events are immutable values: a namespace, a label, and a JSON-like payload.
Equality is structural.  Scenario code only ever constructs events in the
``program`` namespace; the ``context`` namespace is reserved for notifications
synthesized by the engine (currently only ``CTX.Ended``).

Event sets are declarative matchers used for the wait-for and block parts of
a synchronization statement.  Requested events are always concrete so the
arbiter can enumerate them; wait/block sets may be intensional (``ALL``,
complements, label patterns) and are never enumerated.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable

from .errors import ConfigurationError

PROGRAM_NS = "program"
CONTEXT_NS = "context"

ENDED_LABEL = "CTX.Ended"


def canon_json(value: Any) -> str:
    """Canonical JSON used everywhere equality or hashing is needed."""

    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


@dataclass(frozen=True, eq=False)
class Event:
    label: str
    payload: Any = None
    ns: str = PROGRAM_NS
    _canon: str = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.ns not in (PROGRAM_NS, CONTEXT_NS):
            raise ConfigurationError(f"unknown event namespace {self.ns!r}")
        object.__setattr__(self, "_canon", canon_json([self.ns, self.label, self.payload]))

    def __eq__(self, other) -> bool:
        return isinstance(other, Event) and self._canon == other._canon

    def __hash__(self) -> int:
        return hash(self._canon)

    @property
    def sort_key(self) -> str:
        return self._canon

    def display(self) -> str:
        """Short human-readable form, e.g. ``die(5,4)`` or ``Cold(1)``."""

        if self.payload in (None, {}, []):
            return self.label
        values: list[Any] = []
        if isinstance(self.payload, dict):
            for key in sorted(self.payload):
                value = self.payload[key]
                if isinstance(value, list):
                    values.extend(value)
                else:
                    values.append(value)
        elif isinstance(self.payload, list):
            values.extend(self.payload)
        else:
            values.append(self.payload)
        return f"{self.label}({','.join(str(v) for v in values)})"

    def to_json(self) -> dict:
        return {"ns": self.ns, "label": self.label, "payload": self.payload}

    @staticmethod
    def from_json(doc: dict) -> "Event":
        return Event(doc["label"], doc.get("payload"), doc.get("ns", PROGRAM_NS))

    def __repr__(self) -> str:  # keep traces and errors readable
        return f"Event({self.display()})" if self.ns == PROGRAM_NS else f"Event({self.ns}:{self.display()})"


def ctx_ended(query: str, key: str) -> Event:
    """The engine-synthesized notice that ``key`` left ``query``'s results."""

    return Event(ENDED_LABEL, {"query": query, "key": key}, ns=CONTEXT_NS)


# --- payload predicates, registered by id so matchers stay serializable ----

_PREDICATES: dict[str, Callable[[Any], bool]] = {}


def register_payload_predicate(pid: str, fn: Callable[[Any], bool]) -> None:
    existing = _PREDICATES.get(pid)
    if existing is not None and existing is not fn:
        raise ConfigurationError(f"payload predicate {pid!r} already registered")
    _PREDICATES[pid] = fn


def payload_predicate(pid: str) -> Callable[[Any], bool]:
    try:
        return _PREDICATES[pid]
    except KeyError:
        raise ConfigurationError(f"unknown payload predicate {pid!r}") from None


# --- event sets -------------------------------------------------------------

class EventSet:
    """Base class for matchers.  Membership is total and deterministic."""

    def matches(self, event: Event) -> bool:
        raise NotImplementedError

    def canon(self) -> Any:
        raise NotImplementedError

    def __eq__(self, other) -> bool:
        return isinstance(other, EventSet) and self.canon() == other.canon()

    def __hash__(self) -> int:
        return hash(canon_json(self.canon()))


class _AllEvents(EventSet):
    def matches(self, event: Event) -> bool:
        return True

    def canon(self):
        return ["all"]

    def __repr__(self):
        return "ALL"


class _NoEvents(EventSet):
    def matches(self, event: Event) -> bool:
        return False

    def canon(self):
        return ["none"]

    def __repr__(self):
        return "NONE"


ALL = _AllEvents()
NONE = _NoEvents()


class ExplicitSet(EventSet):
    def __init__(self, events: Iterable[Event]):
        self.events = frozenset(events)

    def matches(self, event: Event) -> bool:
        return event in self.events

    def canon(self):
        return ["explicit", sorted(e.sort_key for e in self.events)]

    def __repr__(self):
        return f"ExplicitSet({{{', '.join(sorted(e.display() for e in self.events))}}})"


class Complement(EventSet):
    def __init__(self, inner: EventSet):
        self.inner = inner

    def matches(self, event: Event) -> bool:
        return not self.inner.matches(event)

    def canon(self):
        return ["not", self.inner.canon()]

    def __repr__(self):
        return f"Complement({self.inner!r})"


class UnionSet(EventSet):
    def __init__(self, parts: Iterable[EventSet]):
        self.parts = tuple(parts)

    def matches(self, event: Event) -> bool:
        return any(p.matches(event) for p in self.parts)

    def canon(self):
        return ["any", [p.canon() for p in self.parts]]

    def __repr__(self):
        return f"UnionSet({list(self.parts)!r})"


class LabelMatch(EventSet):
    """Matches by label, optionally filtered by a registered payload predicate."""

    def __init__(self, label: str, predicate_id: str | None = None):
        self.label = label
        self.predicate_id = predicate_id

    def matches(self, event: Event) -> bool:
        if event.label != self.label:
            return False
        if self.predicate_id is None:
            return True
        return bool(payload_predicate(self.predicate_id)(event.payload))

    def canon(self):
        return ["label", self.label, self.predicate_id]

    def __repr__(self):
        pid = f", {self.predicate_id!r}" if self.predicate_id else ""
        return f"LabelMatch({self.label!r}{pid})"


def explicit(*events: Event) -> EventSet:
    return ExplicitSet(events)


def union(*parts: EventSet) -> EventSet:
    return UnionSet(parts)


def matches(event_set: EventSet, event: Event) -> bool:
    return event_set.matches(event)


# --- synchronization statements ---------------------------------------------

@dataclass(frozen=True, eq=False)
class SyncStatement:
    """One live copy's bid at a synchronization point.

    ``requested`` is an ordered tuple of concrete events (no duplicates, no
    patterns); ``waited`` and ``blocked`` are matchers.
    """

    requested: tuple[Event, ...] = ()
    waited: EventSet = NONE
    blocked: EventSet = NONE

    def __post_init__(self):
        if len(set(self.requested)) != len(self.requested):
            raise ConfigurationError("requested events must not repeat")
        for event in self.requested:
            if not isinstance(event, Event):
                raise ConfigurationError("requested entries must be concrete events")

    def resumes_on(self, event: Event) -> bool:
        return event in self.requested or self.waited.matches(event)

    def canon(self):
        return [
            [e.sort_key for e in self.requested],
            self.waited.canon(),
            self.blocked.canon(),
        ]

    def __eq__(self, other) -> bool:
        return isinstance(other, SyncStatement) and self.canon() == other.canon()

    def __hash__(self) -> int:
        return hash(canon_json(self.canon()))


def sync(request: Event | Iterable[Event] = (),
         wait_for: EventSet | Event = NONE,
         block: EventSet | Event = NONE) -> SyncStatement:
    """Convenience constructor accepting single events where sets are meant."""

    if isinstance(request, Event):
        request = (request,)
    if isinstance(wait_for, Event):
        wait_for = explicit(wait_for)
    if isinstance(block, Event):
        block = explicit(block)
    return SyncStatement(tuple(request), wait_for, block)


def selectable(statements: Iterable[SyncStatement]) -> list[Event]:
    """Requested-and-not-blocked events, deduplicated, in canonical order."""

    statements = list(statements)
    candidates: dict[str, Event] = {}
    for stmt in statements:
        for event in stmt.requested:
            candidates.setdefault(event.sort_key, event)
    out = []
    for key in sorted(candidates):
        event = candidates[key]
        if not any(stmt.blocked.matches(event) for stmt in statements):
            out.append(event)
    return out
