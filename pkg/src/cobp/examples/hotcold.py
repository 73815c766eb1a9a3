"""Tap controllers: the plain hot-cold program and its many-room extension.

The plain variant pours Cold and Hot three times each; an optional
interleaving thread forbids two pours of the same kind in a row.  The
extended variant scales the same three definitions over any number of rooms:
pouring is gated on each room's button, and only kitchens interleave.
"""

from __future__ import annotations

from ..behavior import DONE, CBTDefinition, Sync
from ..context import ContextStore, EffectMap, Query, QueryResult
from ..engine import Program
from ..errors import ConfigurationError
from ..events import Event, explicit, sync
from . import ExampleProgram, register_example


def pulse_query(store, params):
    """Constant single-result query: always active, seed carries nothing."""

    return [QueryResult("1", {})]


PULSE = {"pulse": Query("pulse", pulse_query)}


def _pour_n(name: str, label: str, times: int) -> CBTDefinition:
    """Request ``label`` a fixed number of times, then finish."""

    def step_fn(state, seed, ctx, last):
        remaining = int(state) if last is None else int(state) - 1
        if remaining == 0:
            return DONE
        return Sync(sync(request=Event(label)), str(remaining))

    return CBTDefinition.make(name, "pulse", str(times), step_fn)


def _alternator(name: str, query_name: str, labels=("Cold", "Hot"),
                payload_key: str | None = None) -> CBTDefinition:
    """Block the other label until this one happens, starting by blocking
    ``labels[1]`` so ``labels[0]`` goes first."""

    first, second = labels

    def event_for(label, seed):
        if payload_key is None:
            return Event(label)
        return Event(label, {payload_key: seed.value["id"]})

    def step(state, seed, ctx, last):
        nxt = state
        if last is not None:
            nxt = "blockFirst" if state == "blockSecond" else "blockSecond"
        if nxt == "blockSecond":
            stmt = sync(wait_for=explicit(event_for(first, seed)),
                        block=explicit(event_for(second, seed)))
        else:
            stmt = sync(wait_for=explicit(event_for(second, seed)),
                        block=explicit(event_for(first, seed)))
        return Sync(stmt, nxt)

    return CBTDefinition.make(name, query_name, "blockSecond", step)


def build_hot_cold(with_interleave: bool) -> ExampleProgram:
    cbts = [_pour_n("three-cold", "Cold", 3), _pour_n("three-hot", "Hot", 3)]
    if with_interleave:
        cbts.append(_alternator("interleave", "pulse"))
    program = Program(tuple(cbts), PULSE, {}, EffectMap())

    def three_each(trace_labels):
        return trace_labels.count("Cold") == 3 and trace_labels.count("Hot") == 3

    name = "hotcold-interleave" if with_interleave else "hotcold"
    return ExampleProgram(
        name=name,
        program=program,
        ctx_init=ContextStore(),
        expected_properties={"three-of-each": three_each},
    )


ROOM_TYPES = ("kitchen", "bathroom", "bedroom", "living room", "hall", "office")
TAP_TYPES = ("kitchen", "bathroom")


def _room_event(label: str, room_id) -> Event:
    return Event(label, {"room": room_id})


def _gated_pour(name: str, label: str, times: int) -> CBTDefinition:
    """Wait for the room's button, pour ``times`` times, then wait again."""

    def step_fn(state, seed, ctx, last):
        room = seed.value["id"]
        if state == "await-push":
            if last is not None and last.label == "Push":
                return Sync(sync(request=_room_event(label, room)), str(times))
            return Sync(sync(wait_for=explicit(_room_event("Push", room))), "await-push")
        remaining = int(state) - 1
        if remaining == 0:
            return Sync(sync(wait_for=explicit(_room_event("Push", room))), "await-push")
        return Sync(sync(request=_room_event(label, room)), str(remaining))

    return CBTDefinition.make(name, "room-with-taps", "await-push", step_fn)


def _press_buttons() -> CBTDefinition:
    """Environment stand-in: presses each tap room's button once."""

    def step_fn(state, seed, ctx, last):
        if last is None:
            return Sync(sync(request=_room_event("Push", seed.value["id"])), "pressed")
        return DONE

    return CBTDefinition.make("press-button", "room-with-taps", "press", step_fn)


def _rows_query(name, predicate):
    def fn(store, params):
        return [QueryResult(key, dict(row))
                for key, row in sorted(store.rows("room").items())
                if predicate(row)]
    return Query(name, fn)


EXT_QUERIES = {
    "room-with-taps": _rows_query("room-with-taps", lambda r: r["type"] in TAP_TYPES),
    "kitchen": _rows_query("kitchen", lambda r: r["type"] == "kitchen"),
}


def build_ext_hot_cold(rooms: list[tuple[int, str]]) -> ExampleProgram:
    """Rooms are (id, type) pairs; pouring history is per room."""

    seen = set()
    table = {}
    for room_id, room_type in rooms:
        if room_id in seen:
            raise ConfigurationError(f"duplicate room id {room_id!r}")
        seen.add(room_id)
        table[str(room_id)] = {"id": room_id, "type": room_type}
    ctx = ContextStore({"room": table})

    cbts = (
        _gated_pour("pour-cold", "Cold", 3),
        _gated_pour("pour-hot", "Hot", 3),
        _alternator("interleave", "kitchen", ("Cold", "Hot"), payload_key="room"),
    )
    program = Program(cbts, EXT_QUERIES, {}, EffectMap())
    return ExampleProgram(
        name="ext-hotcold",
        program=program,
        ctx_init=ctx,
        env_model=(_press_buttons(),),
    )


register_example("hotcold", lambda: build_hot_cold(False))
register_example("hotcold-interleave", lambda: build_hot_cold(True))
register_example("ext-hotcold", lambda: build_ext_hot_cold(
    [(1, "kitchen"), (2, "bathroom"), (3, "bedroom")]))
