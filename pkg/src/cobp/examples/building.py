"""Smart-building automation: occupancy-driven lights, emergencies, workers.

Occupancy is a piece of context maintained by two dedicated threads: one
marks a room nonempty on motion, the other marks it empty after a parameter-
ized quiet period against a simulated clock.  Device behaviors (lights,
announcements) bind to occupancy queries and stay out of the when-logic.
An emergency pins every light by blocking all light-off events for as long
as an emergency record exists.

Time and motion are simulation threads in the environment model, so runs and
verification explore their interleavings without real sensors.
"""

from __future__ import annotations

from ..behavior import DONE, CBTDefinition, Sync
from ..context import ContextStore, EffectMap, Query, QueryResult, UpdateCommand
from ..engine import Program
from ..errors import ConfigurationError
from ..events import (Event, LabelMatch, ctx_ended, explicit,
                      register_payload_predicate, sync)
from ..verifier import Assertion
from . import ExampleProgram, register_example
from .hotcold import PULSE

ROOM_KINDS = ("office", "kitchen", "restroom")
CLOCK_STEP = 60          # seconds per simulated clock tick
QUIET_SECONDS = 3 * 60   # no-movement horizon for marking a room empty

register_payload_predicate(
    "device-is-light", lambda payload: isinstance(payload, dict) and payload.get("device") == "light")


def device_event(label: str, room_id: str) -> Event:
    return Event(label, {"room": room_id, "device": "light"})


def room_event(label: str, room_id: str) -> Event:
    return Event(label, {"room": room_id})


def now(store: ContextStore) -> int:
    return store.row("clock", "clock")["now"]


def _rows_query(name, table, predicate=None):
    def fn(store, params):
        out = []
        for key, row in sorted(store.rows(table).items()):
            if predicate is None or predicate(row):
                out.append(QueryResult(key, dict(row)))
        return out
    return Query(name, fn)


def _queries() -> dict[str, Query]:
    def no_movement(store, params):
        horizon = params["seconds"]
        current = now(store)
        return [QueryResult(key, dict(row))
                for key, row in sorted(store.rows("room").items())
                if current - row["lastMovement"] > horizon]

    queries = {
        "room": _rows_query("room", "room"),
        "empty-room": _rows_query("empty-room", "room", lambda r: r["isEmpty"] == 1),
        "nonempty-room": _rows_query("nonempty-room", "room", lambda r: r["isEmpty"] == 0),
        "emergency": _rows_query("emergency", "emergency"),
        "worker-in-a-room": _rows_query("worker-in-a-room", "worker",
                                        lambda r: r.get("room") is not None),
        "no-movement": Query("no-movement", no_movement),
    }
    queries.update(PULSE)
    return queries


def _updates() -> dict[str, UpdateCommand]:
    def room_nonempty(store, args):
        return store.with_fields("room", args["room"], isEmpty=0)

    def room_empty(store, args):
        return store.with_fields("room", args["room"], isEmpty=1)

    def update_movement(store, args):
        return store.with_fields("room", args["room"], lastMovement=now(store))

    def advance_clock(store, args):
        return store.with_fields("clock", "clock", now=now(store) + CLOCK_STEP)

    def add_emergency(store, args):
        return store.with_row("emergency", args["id"], {"id": args["id"]})

    def remove_emergency(store, args):
        return store.without_row("emergency", args["id"])

    def set_worker_room(store, args):
        return store.with_fields("worker", args["worker"], room=args["room"])

    return {name: UpdateCommand(name, fn) for name, fn in [
        ("room_nonempty", room_nonempty), ("room_empty", room_empty),
        ("update_movement", update_movement), ("advance_clock", advance_clock),
        ("add_emergency", add_emergency), ("remove_emergency", remove_emergency),
        ("set_worker_room", set_worker_room),
    ]}


def _effects() -> EffectMap:
    effects = EffectMap()
    effects.on("motionDetected", lambda e: [("update_movement", {"room": e.payload["room"]})])
    effects.on("roomIsNonempty", lambda e: [("room_nonempty", {"room": e.payload["room"]})])
    effects.on("roomIsEmpty", lambda e: [("room_empty", {"room": e.payload["room"]})])
    effects.on("clockTick", lambda e: [("advance_clock", {})])
    effects.on("emergencyStarted", lambda e: [("add_emergency", {"id": e.payload["id"]})])
    effects.on("emergencyEnded", lambda e: [("remove_emergency", {"id": e.payload["id"]})])
    effects.on("workerEntered", lambda e: [("set_worker_room",
                                            {"worker": e.payload["worker"],
                                             "room": e.payload["room"]})])
    effects.on("workerLeft", lambda e: [("set_worker_room",
                                         {"worker": e.payload["worker"], "room": None})])
    return effects


def _request_once(name: str, query_name: str, make_event, interruptible=True,
                  query_params=None) -> CBTDefinition:
    def step_fn(state, seed, ctx, last):
        if last is None:
            return Sync(sync(request=make_event(seed)), "ask")
        return DONE

    return CBTDefinition.make(name, query_name, "ask", step_fn,
                              query_params=query_params, interruptible=interruptible)


def _light_on_cbt() -> CBTDefinition:
    return _request_once("light-on", "nonempty-room",
                         lambda seed: device_event("on", seed.value["id"]))


def _light_off_cbt() -> CBTDefinition:
    return _request_once("light-off", "empty-room",
                         lambda seed: device_event("off", seed.value["id"]))


def _emergency_lights_cbt() -> CBTDefinition:
    """While any emergency lasts, no light may be switched off."""

    def step_fn(state, seed, ctx, last):
        if last is None:
            return Sync(sync(block=LabelMatch("off", "device-is-light"),
                             wait_for=explicit(ctx_ended("emergency", seed.key))), "hold")
        return DONE

    return CBTDefinition.make("emergency-lights", "emergency", "hold", step_fn)


def _mark_nonempty_cbt() -> CBTDefinition:
    def step_fn(state, seed, ctx, last):
        room = seed.value["id"]
        if last is None:
            return Sync(sync(wait_for=explicit(room_event("motionDetected", room))), "watch")
        if state == "watch":
            return Sync(sync(request=room_event("roomIsNonempty", room)), "mark")
        return DONE

    return CBTDefinition.make("mark-nonempty", "empty-room", "watch", step_fn,
                              interruptible=True)


def _mark_empty_cbt() -> CBTDefinition:
    def step_fn(state, seed, ctx, last):
        room = seed.value["id"]
        if last is None:
            return Sync(sync(request=room_event("roomIsEmpty", room),
                             wait_for=explicit(room_event("motionDetected", room))), "mark")
        return DONE

    return CBTDefinition.make("mark-empty", "no-movement", "mark", step_fn,
                              query_params={"seconds": QUIET_SECONDS}, interruptible=True)


def _announce_worker_cbt() -> CBTDefinition:
    return _request_once("announce-worker", "worker-in-a-room",
                         lambda seed: Event("announce", {"name": seed.value["name"]}))


def _script_cbt(name: str, events: list[Event]) -> CBTDefinition:
    """Environment stand-in requesting a fixed sequence of events, in order."""

    def step_fn(state, seed, ctx, last):
        index = int(state) if last is None else int(state) + 1
        if index >= len(events):
            return DONE
        return Sync(sync(request=events[index]), str(index))

    return CBTDefinition.make(name, "pulse", "0", step_fn)


def _sim_motion_cbt(moves: int) -> CBTDefinition:
    """Per-room movement simulator: ``moves`` motion events at free times."""

    def step_fn(state, seed, ctx, last):
        left = int(state) if last is None else int(state) - 1
        if left <= 0:
            return DONE
        return Sync(sync(request=room_event("motionDetected", seed.value["id"])), str(left))

    return CBTDefinition.make("sim-motion", "room", str(moves), step_fn)


def build_smart_building(rooms, workers=(), emergency_script=(),
                         sim_minutes: int = 10, sim_moves: int = 1) -> ExampleProgram:
    """``rooms`` are (id, kind) pairs; rooms start empty with the clock at 0.

    ``workers`` are (worker id, name, room id) visits requested by the
    environment; ``emergency_script`` is a sequence of ("start"|"end", id).
    """

    room_table = {}
    for room_id, kind in rooms:
        if kind not in ROOM_KINDS:
            raise ConfigurationError(f"unknown room kind {kind!r}")
        room_table[str(room_id)] = {"id": str(room_id), "kind": kind,
                                    "isEmpty": 1, "lastMovement": 0}
    worker_table = {str(w): {"id": str(w), "name": name, "room": None}
                    for w, name, _ in workers}
    ctx = ContextStore({
        "room": room_table,
        "worker": worker_table,
        "emergency": {},
        "clock": {"clock": {"id": "clock", "now": 0}},
    })

    program = Program((
        _light_on_cbt(),
        _light_off_cbt(),
        _emergency_lights_cbt(),
        _mark_nonempty_cbt(),
        _mark_empty_cbt(),
        _announce_worker_cbt(),
    ), _queries(), _updates(), _effects())

    env: list[CBTDefinition] = []
    if sim_minutes > 0:
        env.append(_script_cbt("sim-clock", [Event("clockTick")] * sim_minutes))
    if sim_moves > 0:
        env.append(_sim_motion_cbt(sim_moves))
    if emergency_script:
        label = {"start": "emergencyStarted", "end": "emergencyEnded"}
        env.append(_script_cbt("sim-emergency",
                               [Event(label[kind], {"id": eid})
                                for kind, eid in emergency_script]))
    if workers:
        env.append(_script_cbt("sim-workers",
                               [Event("workerEntered", {"worker": str(w), "room": str(r)})
                                for w, _, r in workers]))

    def lights_track_occupancy(state, last):
        if last is None or last.label not in ("on", "off"):
            return True
        room = state.ctx.row("room", last.payload["room"])
        want_empty = 1 if last.label == "off" else 0
        return room is not None and room["isEmpty"] == want_empty

    def no_off_during_emergency(state, last):
        if last is None or last.label != "off":
            return True
        return not state.ctx.rows("emergency")

    return ExampleProgram(
        name="smart-building",
        program=program,
        ctx_init=ctx,
        env_model=tuple(env),
        assertions=(
            Assertion("lights-track-occupancy", lights_track_occupancy),
            Assertion("no-off-during-emergency", no_off_during_emergency),
        ),
    )


register_example("smart-building-1room", lambda: build_smart_building(
    [("r1", "office")], sim_minutes=10, sim_moves=1))
register_example("smart-building-2room", lambda: build_smart_building(
    [("r1", "office"), ("r2", "kitchen")], sim_minutes=10, sim_moves=1))
