"""A grid robot steered by request/block arbitration.

A movement thread keeps requesting the three possible maneuvers (one cell
forward, quarter turns left and right) and per-direction avoidance threads
block the maneuver toward any adjacent wall for as long as the corresponding
obstacle query has a result.  The environment model senses after every move:
it blocks further movement until a scan event has refreshed the obstacle
distances in the context.

Optional extensions add a delivery task (drive to a source cell, then to a
destination, signalled by target bookkeeping in the context) and a battery
that drains per forward move and sends the robot to a charging socket.
"""

from __future__ import annotations

from ..behavior import DONE, CBTDefinition, Sync
from ..context import ContextStore, EffectMap, Query, QueryResult, UpdateCommand
from ..engine import Program
from ..errors import ConfigurationError
from ..events import Event, LabelMatch, ctx_ended, explicit, sync
from . import ExampleProgram, register_example

HEADINGS = ("N", "E", "S", "W")
HEADING_DELTA = {"N": (-1, 0), "E": (0, 1), "S": (1, 0), "W": (0, -1)}
LEFT_OF = {"N": "W", "W": "S", "S": "E", "E": "N"}
RIGHT_OF = {"N": "E", "E": "S", "S": "W", "W": "N"}

MOVE_FORWARD = Event("move", {"v": [1, 0]})
TURN_LEFT = Event("move", {"v": [0, -90]})
TURN_RIGHT = Event("move", {"v": [0, 90]})
ALL_MOVES = (MOVE_FORWARD, TURN_LEFT, TURN_RIGHT)

FAR = 99  # stands in for "no obstacle in sight"
LOW_BATTERY = 20


class World:
    """Static occupancy grid; never part of the context store."""

    def __init__(self, lines: list[str]):
        self.lines = tuple(lines)
        self.walls = {
            (r, c)
            for r, line in enumerate(lines)
            for c, ch in enumerate(line)
            if ch == "#"
        }
        self.height = len(lines)
        self.width = max(len(line) for line in lines) if lines else 0

    def is_wall(self, cell) -> bool:
        row, col = cell
        if not (0 <= row < self.height and 0 <= col < self.width):
            return True  # outside the map counts as solid
        return cell in self.walls

    def clearance(self, row: int, col: int, heading: str) -> int:
        """Free cells from (row, col) toward ``heading`` before a wall."""

        dr, dc = HEADING_DELTA[heading]
        dist = 0
        while dist < FAR and not self.is_wall((row + dr * (dist + 1), col + dc * (dist + 1))):
            dist += 1
        return dist

    def scan(self, row: int, col: int, heading: str) -> dict:
        return {
            "a": self.clearance(row, col, heading),
            "l": self.clearance(row, col, LEFT_OF[heading]),
            "r": self.clearance(row, col, RIGHT_OF[heading]),
        }


def _robot_row(store: ContextStore) -> dict:
    return store.row("robot", "1")


def _rows_query(name, table, predicate):
    def fn(store, params):
        return [QueryResult(key, dict(row))
                for key, row in sorted(store.rows(table).items())
                if predicate(row)]
    return Query(name, fn)


def _queries(battery: bool) -> dict[str, Query]:
    queries = {
        "robot": _rows_query("robot", "robot", lambda r: True),
        "obstacle-ahead": _rows_query("obstacle-ahead", "robot", lambda r: r["oAhead"] < 1),
        "obstacle-left": _rows_query("obstacle-left", "robot", lambda r: r["oLeft"] < 1),
        "obstacle-right": _rows_query("obstacle-right", "robot", lambda r: r["oRight"] < 1),
        "target": _rows_query("target", "target", lambda r: True),
        "delivery": _rows_query("delivery", "delivery", lambda r: True),
    }
    if battery:
        queries["low-battery"] = _rows_query(
            "low-battery", "robot", lambda r: r.get("battery", FAR) < LOW_BATTERY)
    return queries


def _updates(world: World, battery: bool, socket) -> dict[str, UpdateCommand]:
    def apply_move(store, args):
        robot = dict(_robot_row(store))
        linear, angular = args["v"]
        if linear:
            dr, dc = HEADING_DELTA[robot["heading"]]
            robot["row"] += dr * linear
            robot["col"] += dc * linear
            if battery:
                robot["battery"] = robot.get("battery", 100) - 1
        elif angular < 0:
            robot["heading"] = LEFT_OF[robot["heading"]]
        elif angular > 0:
            robot["heading"] = RIGHT_OF[robot["heading"]]
        return store.with_row("robot", "1", robot)

    def set_obstacles(store, args):
        return store.with_fields("robot", "1",
                                 oAhead=args["a"], oLeft=args["l"], oRight=args["r"])

    def insert_target(store, args):
        row, col = args["pos"]
        return store.with_row("target", f"{row},{col}", {"row": row, "col": col})

    def delete_target(store, args):
        row, col = args["pos"]
        store = store.without_row("target", f"{row},{col}")
        if battery and socket is not None and (row, col) == tuple(socket):
            store = store.with_fields("robot", "1", battery=100)
        return store

    return {name: UpdateCommand(name, fn) for name, fn in [
        ("apply_move", apply_move), ("set_obstacles", set_obstacles),
        ("insert_target", insert_target), ("delete_target", delete_target),
    ]}


def _effects() -> EffectMap:
    effects = EffectMap()
    effects.on("move", lambda e: [("apply_move", {"v": e.payload["v"]})])
    effects.on("scan", lambda e: [("set_obstacles", dict(e.payload))])
    effects.on("newTarget", lambda e: [("insert_target", {"pos": e.payload["pos"]})])
    effects.on("targetReached", lambda e: [("delete_target", {"pos": e.payload["pos"]})])
    return effects


def _movement_cbt(stop_on_delivered: bool) -> CBTDefinition:
    wait = LabelMatch("delivered") if stop_on_delivered else None

    def step_fn(state, seed, ctx, last):
        if last is not None and last.label == "delivered":
            return DONE
        stmt = sync(request=ALL_MOVES) if wait is None else sync(request=ALL_MOVES, wait_for=wait)
        return Sync(stmt, "go")

    return CBTDefinition.make("movement", "robot", "go", step_fn)


def _avoid_cbt(name: str, query_name: str, move: Event) -> CBTDefinition:
    """Block one maneuver for as long as the obstacle context lasts."""

    def step_fn(state, seed, ctx, last):
        if last is None:
            return Sync(sync(block=explicit(move),
                             wait_for=explicit(ctx_ended(query_name, seed.key))), "hold")
        return DONE

    return CBTDefinition.make(name, query_name, "hold", step_fn)


def _scanner_cbt(world: World) -> CBTDefinition:
    """After every move, refresh the obstacle fields before movement resumes."""

    def step_fn(state, seed, ctx, last):
        if state == "idle":
            if last is None:
                return Sync(sync(wait_for=LabelMatch("move")), "idle")
            robot = _robot_row(ctx)
            reading = world.scan(robot["row"], robot["col"], robot["heading"])
            return Sync(sync(request=Event("scan", reading),
                             block=explicit(*ALL_MOVES)), "sensing")
        return Sync(sync(wait_for=LabelMatch("move")), "idle")

    return CBTDefinition.make("scanner", "robot", "idle", step_fn)


def _plan_moves(world: World, robot: dict, goal) -> list[Event] | None:
    """Deterministic shortest maneuver plan to the goal cell, walls respected.

    Turns toward a wall are never planned, mirroring the avoidance blocks.
    Returns [] when already there, None when the goal is unreachable.
    """

    start = (robot["row"], robot["col"], robot["heading"])
    goal = tuple(goal)
    if (start[0], start[1]) == goal:
        return []
    frontier = [start]
    seen = {start: None}
    while frontier:
        nxt = []
        for pose in frontier:
            row, col, heading = pose
            options = []
            dr, dc = HEADING_DELTA[heading]
            if not world.is_wall((row + dr, col + dc)):
                options.append((MOVE_FORWARD, (row + dr, col + dc, heading)))
            if world.clearance(row, col, LEFT_OF[heading]) >= 1:
                options.append((TURN_LEFT, (row, col, LEFT_OF[heading])))
            if world.clearance(row, col, RIGHT_OF[heading]) >= 1:
                options.append((TURN_RIGHT, (row, col, RIGHT_OF[heading])))
            for move, succ in options:
                if succ in seen:
                    continue
                seen[succ] = (pose, move)
                if (succ[0], succ[1]) == goal:
                    path = [move]
                    back = pose
                    while seen[back] is not None:
                        prev, mv = seen[back]
                        path.append(mv)
                        back = prev
                    path.reverse()
                    return path
                nxt.append(succ)
        frontier = nxt
    return None


def _go_to_target_cbt(world: World) -> CBTDefinition:
    """Steer along the planned path by blocking every other maneuver."""

    def step_fn(state, seed, ctx, last):
        if last is not None and last.label == "targetReached":
            return DONE
        goal = (seed.value["row"], seed.value["col"])
        robot = _robot_row(ctx)
        path = _plan_moves(world, robot, goal)
        if path is None:
            return Sync(sync(), "stranded")
        if not path:
            reached = Event("targetReached", {"pos": [goal[0], goal[1]]})
            return Sync(sync(request=reached, block=explicit(*ALL_MOVES)), "claim")
        others = [m for m in ALL_MOVES if m != path[0]]
        return Sync(sync(wait_for=explicit(path[0]), block=explicit(*others)), "steer")

    return CBTDefinition.make("go-to-target", "target", "steer", step_fn)


def _deliver_cbt() -> CBTDefinition:
    """Chase the source first, then the destination, then announce."""

    def target_event(pos):
        return Event("newTarget", {"pos": [pos[0], pos[1]]})

    def step_fn(state, seed, ctx, last):
        src = tuple(seed.value["src"])
        dst = tuple(seed.value["dst"])
        hold = explicit(*ALL_MOVES)
        if state == "pickup":
            if last is None:
                return Sync(sync(request=target_event(src), block=hold), "pickup")
            return Sync(sync(wait_for=explicit(ctx_ended("target", f"{src[0]},{src[1]}"))),
                        "to-source")
        if state == "to-source":
            return Sync(sync(request=target_event(dst), block=hold), "dropoff")
        if state == "dropoff":
            return Sync(sync(wait_for=explicit(ctx_ended("target", f"{dst[0]},{dst[1]}"))),
                        "to-destination")
        if state == "to-destination":
            return Sync(sync(request=Event("delivered", {"id": seed.key}), block=hold), "announce")
        return DONE

    return CBTDefinition.make("deliver", "delivery", "pickup", step_fn)


def _recharge_cbt(socket) -> CBTDefinition:
    def step_fn(state, seed, ctx, last):
        if last is None:
            return Sync(sync(request=Event("newTarget", {"pos": [socket[0], socket[1]]})), "ask")
        return DONE

    return CBTDefinition.make("recharge", "low-battery", "ask", step_fn)


def build_grid_robot(world_lines: list[str], start: tuple[int, int, str],
                     extensions=(), package=None, socket=None,
                     battery_init: int = 100) -> ExampleProgram:
    """``world_lines`` uses '#' for walls; ``start`` is (row, col, heading)."""

    world = World(list(world_lines))
    extensions = frozenset(extensions)
    unknown = extensions - {"delivery", "battery"}
    if unknown:
        raise ConfigurationError(f"unknown robot extensions: {sorted(unknown)}")
    battery = "battery" in extensions
    delivery = "delivery" in extensions
    row, col, heading = start
    if world.is_wall((row, col)):
        raise ConfigurationError("robot start cell is occupied")

    reading = world.scan(row, col, heading)
    robot = {"id": 1, "row": row, "col": col, "heading": heading,
             "oAhead": reading["a"], "oLeft": reading["l"], "oRight": reading["r"]}
    if battery:
        robot["battery"] = battery_init
    tables = {"robot": {"1": robot}, "target": {}, "delivery": {}}
    if delivery:
        if package is None:
            raise ConfigurationError("delivery extension needs a package (src, dst)")
        src, dst = package
        tables["delivery"] = {"pkg": {"id": "pkg",
                                      "src": [src[0], src[1]], "dst": [dst[0], dst[1]]}}
    ctx = ContextStore(tables)

    cbts = [
        _movement_cbt(stop_on_delivered=delivery),
        _avoid_cbt("avoid-ahead", "obstacle-ahead", MOVE_FORWARD),
        _avoid_cbt("avoid-left", "obstacle-left", TURN_LEFT),
        _avoid_cbt("avoid-right", "obstacle-right", TURN_RIGHT),
    ]
    if delivery or battery:
        cbts.append(_go_to_target_cbt(world))
    if delivery:
        cbts.append(_deliver_cbt())
    if battery:
        if socket is None:
            raise ConfigurationError("battery extension needs a socket cell")
        cbts.append(_recharge_cbt(socket))

    program = Program(tuple(cbts), _queries(battery), _updates(world, battery, socket), _effects())
    return ExampleProgram(
        name="robot",
        program=program,
        ctx_init=ctx,
        env_model=(_scanner_cbt(world),),
        expected_properties={
            "never-in-wall": lambda ctx_store: not world.is_wall(
                (_robot_row(ctx_store)["row"], _robot_row(ctx_store)["col"])),
        },
    )


OPEN_WORLD = [
    "##########",
    "#........#",
    "#........#",
    "#..##....#",
    "#..##....#",
    "#........#",
    "#....##..#",
    "#....##..#",
    "#........#",
    "##########",
]

CORRIDOR_WORLD = [
    "######",
    "#....#",
    "######",
]

DELIVERY_WORLD = [
    "#######",
    "#.....#",
    "#.....#",
    "#.....#",
    "#######",
]

register_example("robot", lambda: build_grid_robot(OPEN_WORLD, (1, 1, "E")))
register_example("robot-corner", lambda: build_grid_robot(CORRIDOR_WORLD, (1, 1, "E")))
register_example("robot-delivery", lambda: build_grid_robot(
    DELIVERY_WORLD, (1, 1, "E"), extensions=("delivery",),
    package=((3, 1), (1, 5))))
