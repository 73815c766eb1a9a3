"""The context store, query/update repository, effects, and result diffing.

The store is a set of named tables of keyed records, held immutably: update
commands return a new snapshot and never touch the old one.  Queries are pure
functions of a snapshot; the engine watches their results and reacts to keys
appearing or disappearing.  Events change the store only through the effect
map, which routes each event label to a list of update commands.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping

from .errors import ConfigurationError
from .events import Event, canon_json


class ContextStore:
    """Immutable tables of keyed records.  All mutators return new stores."""

    __slots__ = ("_tables", "_digest")

    def __init__(self, tables: Mapping[str, Mapping[str, Mapping[str, Any]]] | None = None):
        self._tables = {
            name: {key: dict(record) for key, record in rows.items()}
            for name, rows in (tables or {}).items()
        }
        self._digest: str | None = None

    # -- read side

    def table_names(self) -> list[str]:
        return sorted(self._tables)

    def rows(self, table: str) -> dict[str, dict[str, Any]]:
        return self._tables.get(table, {})

    def row(self, table: str, key: str) -> dict[str, Any] | None:
        return self._tables.get(table, {}).get(key)

    def has_row(self, table: str, key: str) -> bool:
        return key in self._tables.get(table, {})

    def digest(self) -> str:
        if self._digest is None:
            payload = canon_json(self._tables)
            self._digest = hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]
        return self._digest

    def to_tables(self) -> dict:
        return {name: {k: dict(r) for k, r in rows.items()} for name, rows in self._tables.items()}

    # -- write side (copy on write; used by update commands)

    def _clone(self) -> "ContextStore":
        fresh = ContextStore.__new__(ContextStore)
        fresh._tables = {name: dict(rows) for name, rows in self._tables.items()}
        fresh._digest = None
        return fresh

    def with_row(self, table: str, key: str, record: Mapping[str, Any]) -> "ContextStore":
        fresh = self._clone()
        fresh._tables.setdefault(table, {})[key] = dict(record)
        return fresh

    def without_row(self, table: str, key: str) -> "ContextStore":
        fresh = self._clone()
        fresh._tables.get(table, {}).pop(key, None)
        return fresh

    def with_fields(self, table: str, key: str, **fields: Any) -> "ContextStore":
        record = self.row(table, key)
        if record is None:
            raise ConfigurationError(f"no row {key!r} in table {table!r}")
        updated = dict(record)
        updated.update(fields)
        return self.with_row(table, key, updated)

    def __eq__(self, other) -> bool:
        return isinstance(other, ContextStore) and self._tables == other._tables

    def __hash__(self) -> int:
        return hash(self.digest())

    def __repr__(self) -> str:
        sizes = {name: len(rows) for name, rows in sorted(self._tables.items())}
        return f"ContextStore({sizes})"


def load_context_tables(doc: Mapping[str, Any]) -> ContextStore:
    """Build a store from an init document: ``{table: {keyField, rows}}``.

    Record keys are taken from the declared key field of each table and must
    be unique within it.
    """

    tables: dict[str, dict[str, dict[str, Any]]] = {}
    for table, spec in doc.items():
        try:
            key_field = spec["keyField"]
            rows = spec["rows"]
        except (TypeError, KeyError):
            raise ConfigurationError(f"table {table!r} needs 'keyField' and 'rows'") from None
        out: dict[str, dict[str, Any]] = {}
        for record in rows:
            if key_field not in record:
                raise ConfigurationError(f"row in table {table!r} is missing key field {key_field!r}")
            key = str(record[key_field])
            if key in out:
                raise ConfigurationError(f"duplicate key {key!r} in table {table!r}")
            out[key] = dict(record)
        tables[table] = out
    return ContextStore(tables)


@dataclass(frozen=True)
class QueryResult:
    """One answer to a query: a stable key plus the record handed to copies."""

    key: str
    value: Any = None


@dataclass(frozen=True)
class Query:
    """A named pure function from store snapshots (plus bound params) to results."""

    name: str
    fn: Callable[[ContextStore, Mapping[str, Any]], Iterable[QueryResult]]


@dataclass(frozen=True)
class QueryBinding:
    """A query instantiated with concrete parameters.

    The binding id keys diffs and ``CTX.Ended`` notices, so two bindings of
    the same query with different parameters are tracked independently.
    """

    query: Query
    params: tuple[tuple[str, Any], ...] = ()

    @property
    def binding_id(self) -> str:
        if not self.params:
            return self.query.name
        return f"{self.query.name}[{canon_json(dict(self.params))}]"

    def run(self, store: ContextStore) -> dict[str, QueryResult]:
        results = {}
        for result in self.query.fn(store, dict(self.params)):
            if result.key in results:
                raise ConfigurationError(
                    f"query {self.query.name!r} produced duplicate key {result.key!r}")
            results[result.key] = result
        return results


def bind(query: Query, params: Mapping[str, Any] | None = None) -> QueryBinding:
    return QueryBinding(query, tuple(sorted((params or {}).items())))


def run_query(store: ContextStore, query: Query | QueryBinding,
              params: Mapping[str, Any] | None = None) -> dict[str, QueryResult]:
    binding = query if isinstance(query, QueryBinding) else bind(query, params)
    return binding.run(store)


@dataclass(frozen=True)
class UpdateCommand:
    name: str
    fn: Callable[[ContextStore, Mapping[str, Any]], ContextStore]


@dataclass
class EffectMap:
    """Routes event labels to update commands.  Unlisted labels do nothing."""

    rules: dict[str, Callable[[Event], list[tuple[str, Mapping[str, Any]]]]] = field(default_factory=dict)

    def on(self, label: str, rule: Callable[[Event], list[tuple[str, Mapping[str, Any]]]]) -> "EffectMap":
        self.rules[label] = rule
        return self

    def has_effect(self, label: str) -> bool:
        return label in self.rules


def apply_effect(store: ContextStore, effects: EffectMap, event: Event,
                 updates: Mapping[str, UpdateCommand]) -> ContextStore:
    """Run the event's update commands in listed order; identity if unlisted."""

    rule = effects.rules.get(event.label)
    if rule is None:
        return store
    for name, args in rule(event):
        command = updates.get(name)
        if command is None:
            raise ConfigurationError(f"effect of {event.label!r} names unknown update {name!r}")
        store = command.fn(store, args)
    return store


@dataclass
class QueryDiff:
    """Added/removed result sets per binding id between two snapshots."""

    per_query: dict[str, tuple[dict[str, QueryResult], dict[str, QueryResult]]] = field(default_factory=dict)

    def added(self, binding_id: str) -> dict[str, QueryResult]:
        return self.per_query.get(binding_id, ({}, {}))[0]

    def removed(self, binding_id: str) -> dict[str, QueryResult]:
        return self.per_query.get(binding_id, ({}, {}))[1]

    def is_empty(self) -> bool:
        return all(not a and not r for a, r in self.per_query.values())


def diff_queries(before: ContextStore, after: ContextStore,
                 bindings: Iterable[Query | QueryBinding]) -> QueryDiff:
    """Key-level result diff of each binding between two snapshots."""

    diff = QueryDiff()
    for item in bindings:
        binding = item if isinstance(item, QueryBinding) else bind(item)
        old = binding.run(before)
        new = binding.run(after)
        added = {k: v for k, v in new.items() if k not in old}
        removed = {k: v for k, v in old.items() if k not in new}
        diff.per_query[binding.binding_id] = (added, removed)
    return diff
