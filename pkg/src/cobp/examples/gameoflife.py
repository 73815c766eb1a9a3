"""Conway's Game of Life as a context-bound program, plus the dance variant.

Each rule is bound to a query over the population; one live copy per matching
cell requests that cell's death or birth and blocks the generation-closing
``tick`` until it has fired.  The rule queries are gated on a tick flag that
is raised only for the instant between ``tick`` and ``tock``, so new copies
are seeded from a frozen snapshot and the update stays synchronous.

The evolved variant adds a mating dance: three mutually isolated individuals
around an empty cell circle it clockwise for eight steps, then reproduce into
it.  The ordinary rules are re-scoped to keep their hands off any cell in a
dance neighbourhood.  Dropping the isolation condition reintroduces the
duplication bug that the checker is expected to catch.
"""

from __future__ import annotations

from ..behavior import DONE, CBTDefinition, Sync
from ..context import (ContextStore, EffectMap, Query, QueryResult,
                       UpdateCommand, load_context_tables)
from ..engine import DEADLOCK, QUIESCENT, Arbiter, Program, initialize, step
from ..events import Complement, Event, explicit, sync
from ..verifier import Assertion
from . import ExampleProgram, register_example
from .hotcold import PULSE

Cell = tuple[int, int]

# Ring offsets around a cell, clockwise from east; dancers advance one slot
# per step event.
RING = ((0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1))


def ngb(row: int, col: int) -> frozenset[Cell]:
    return frozenset((row + dr, col + dc) for dr, dc in RING)


def next_dance_cell(center: Cell, dancer: Cell) -> Cell:
    offset = (dancer[0] - center[0], dancer[1] - center[1])
    idx = RING.index(offset)
    dr, dc = RING[(idx + 1) % len(RING)]
    return (center[0] + dr, center[1] + dc)


def population(store: ContextStore) -> frozenset[Cell]:
    return frozenset((row["row"], row["col"]) for row in store.rows("cell").values())


def tick_flag(store: ContextStore) -> int:
    meta = store.row("meta", "state")
    return meta["tick"] if meta else 0


def is_lonely(cell: Cell, pop: frozenset[Cell]) -> bool:
    return not (ngb(*cell) & pop)


def _cell_key(cell: Cell) -> str:
    return f"{cell[0]},{cell[1]}"


def _cell_result(cell: Cell) -> QueryResult:
    return QueryResult(_cell_key(cell), {"row": cell[0], "col": cell[1]})


def _candidates(pop: frozenset[Cell]) -> frozenset[Cell]:
    """Empty cells that could possibly have three populated neighbours."""

    if not pop:
        return frozenset()
    return frozenset().union(*(ngb(*c) for c in pop)) - pop


def dance_centers(pop: frozenset[Cell], require_lonely: bool) -> frozenset[Cell]:
    centers = set()
    for cell in _candidates(pop):
        dancers = ngb(*cell) & pop
        if len(dancers) != 3:
            continue
        if require_lonely and not all(is_lonely(d, pop) for d in dancers):
            continue
        centers.add(cell)
    return frozenset(centers)


def dance_zone(pop: frozenset[Cell], require_lonely: bool) -> frozenset[Cell]:
    """Centers plus their rings; the ordinary rules keep out of this zone."""

    zone: set[Cell] = set()
    for center in dance_centers(pop, require_lonely):
        zone.add(center)
        zone |= ngb(*center)
    return frozenset(zone)


def _make_queries(evolved: bool, buggy: bool) -> dict[str, Query]:
    def gated(fn):
        def query(store, params):
            if tick_flag(store) != 1:
                return []
            pop = population(store)
            zone = dance_zone(pop, not buggy) if evolved else frozenset()
            return [_cell_result(c) for c in sorted(fn(pop) - zone)]
        return query

    def rule1(pop):
        return {c for c in pop if len(ngb(*c) & pop) < 2}

    def rule2(pop):
        return {c for c in pop if 2 <= len(ngb(*c) & pop) <= 3}

    def rule3(pop):
        return {c for c in pop if len(ngb(*c) & pop) > 3}

    def rule4(pop):
        return {c for c in _candidates(pop) if len(ngb(*c) & pop) == 3}

    queries = {
        "rule1": Query("rule1", gated(rule1)),
        "rule2": Query("rule2", gated(rule2)),
        "rule3": Query("rule3", gated(rule3)),
        "rule4": Query("rule4", gated(rule4)),
    }
    if evolved:
        def dance(store, params):
            if tick_flag(store) != 1:
                return []
            pop = population(store)
            return [_cell_result(c) for c in sorted(dance_centers(pop, not buggy))]
        queries["dance"] = Query("dance", dance)
    queries.update(PULSE)
    return queries


def _updates() -> dict[str, UpdateCommand]:
    def add_cell(store, args):
        cell = (args["row"], args["col"])
        return store.with_row("cell", _cell_key(cell), {"row": cell[0], "col": cell[1]})

    def remove_cell(store, args):
        return store.without_row("cell", _cell_key((args["row"], args["col"])))

    def flip_tick(store, args):
        return store.with_fields("meta", "state", tick=1 - tick_flag(store))

    def dance_step(store, args):
        center = (args["row"], args["col"])
        pop = population(store)
        dancers = ngb(*center) & pop
        moved = {next_dance_cell(center, d) for d in dancers}
        for dancer in dancers:
            store = store.without_row("cell", _cell_key(dancer))
        for cell in moved:
            store = store.with_row("cell", _cell_key(cell), {"row": cell[0], "col": cell[1]})
        return store

    return {name: UpdateCommand(name, fn) for name, fn in [
        ("add_cell", add_cell), ("remove_cell", remove_cell),
        ("flip_tick", flip_tick), ("dance_step", dance_step),
    ]}


def _effects() -> EffectMap:
    def cell_args(event):
        row, col = event.payload["cell"]
        return {"row": row, "col": col}

    effects = EffectMap()
    effects.on("die", lambda e: [("remove_cell", cell_args(e))])
    effects.on("reproduce", lambda e: [("add_cell", cell_args(e))])
    effects.on("tick", lambda e: [("flip_tick", {})])
    effects.on("tock", lambda e: [("flip_tick", {})])
    effects.on("step", lambda e: [("dance_step", cell_args(e))])
    return effects


def cell_event(label: str, cell: Cell) -> Event:
    return Event(label, {"cell": [cell[0], cell[1]]})


TICK = Event("tick")
TOCK = Event("tock")


def _tick_cbt(generations: int) -> CBTDefinition:
    """The generation barrier: request tick, then hold everything until tock."""

    def step_fn(state, seed, ctx, last):
        phase, done = state.split(":")
        done = int(done)
        if last is None:
            return Sync(sync(request=TICK), state)
        if phase == "tick":
            return Sync(sync(request=TOCK, block=Complement(explicit(TOCK))), f"tock:{done}")
        if done + 1 >= generations:
            return DONE
        return Sync(sync(request=TICK), f"tick:{done + 1}")

    return CBTDefinition.make("tick", "pulse", "tick:0", step_fn)


def _one_shot_rule(name: str, query_name: str, event_label: str) -> CBTDefinition:
    """Request the cell's event once, blocking tick until it has fired."""

    def step_fn(state, seed, ctx, last):
        if last is None:
            cell = (seed.value["row"], seed.value["col"])
            return Sync(sync(request=cell_event(event_label, cell),
                             block=explicit(TICK)), "armed")
        return DONE

    return CBTDefinition.make(name, query_name, "armed", step_fn)


def _survivor_rule(name: str, query_name: str) -> CBTDefinition:
    """Lives on: no requests, no blocks, never resumes."""

    def step_fn(state, seed, ctx, last):
        return Sync(sync(), "alive")

    return CBTDefinition.make(name, query_name, "alive", step_fn)


DANCE_STEPS = 8


def _dance_cbt() -> CBTDefinition:
    def step_fn(state, seed, ctx, last):
        cell = (seed.value["row"], seed.value["col"])
        if last is None:
            return Sync(sync(request=cell_event("step", cell), block=explicit(TICK)), "step:1")
        if state == "breed":
            return DONE
        taken = int(state.split(":")[1])
        if taken < DANCE_STEPS:
            return Sync(sync(request=cell_event("step", cell), block=explicit(TICK)),
                        f"step:{taken + 1}")
        return Sync(sync(request=cell_event("reproduce", cell), block=explicit(TICK)), "breed")

    return CBTDefinition.make("dance", "dance", "step:1", step_fn)


def seed_doc_to_store(doc) -> ContextStore:
    """Accepts ``{"pop": [[r, c], ...], "tick": 0}`` or the plain table format."""

    if "pop" in doc:
        rows = [{"key": _cell_key((r, c)), "row": r, "col": c} for r, c in doc["pop"]]
        table_doc = {
            "cell": {"keyField": "key", "rows": rows},
            "meta": {"keyField": "id", "rows": [{"id": "state", "tick": doc.get("tick", 0)}]},
        }
        return load_context_tables(table_doc)
    return load_context_tables(doc)


def no_duplication_assertion() -> Assertion:
    """Every dance step must move exactly three dancers around its center."""

    def holds(state, last):
        if last is None or last.label != "step":
            return True
        row, col = last.payload["cell"]
        return len(ngb(row, col) & population(state.ctx)) == 3

    return Assertion("no-duplication", holds)


def build_game_of_life(seed_pop, generations: int, evolved: bool = False,
                       buggy: bool = False) -> ExampleProgram:
    seed_pop = frozenset(tuple(c) for c in seed_pop)
    queries = _make_queries(evolved, buggy)
    cbts = [_tick_cbt(generations)]
    if evolved:
        cbts.append(_dance_cbt())
    cbts += [
        _one_shot_rule("rule1", "rule1", "die"),
        _survivor_rule("rule2", "rule2"),
        _one_shot_rule("rule3", "rule3", "die"),
        _one_shot_rule("rule4", "rule4", "reproduce"),
    ]
    ctx = seed_doc_to_store({"pop": sorted(seed_pop), "tick": 0})
    assertions = (no_duplication_assertion(),) if evolved else ()
    name = "gol-evolved" if evolved else "gol"
    if buggy:
        name = "gol-dance-buggy"
    return ExampleProgram(
        name=name,
        program=Program(tuple(cbts), queries, _updates(), _effects()),
        ctx_init=ctx,
        assertions=assertions,
        ctx_from_doc=seed_doc_to_store,
    )


def generation_snapshots(example: ExampleProgram, max_steps: int = 100000):
    """Populations and paused copies sampled at each generation start.

    A generation starts right after ``tock``; the final resting state is
    appended last, so ``generations + 1`` population snapshots come back.
    """

    program = example.merged()
    state = initialize(program, example.ctx_init, Arbiter("first"))
    snapshots = []
    for _ in range(max_steps):
        result = step(program, state, Arbiter("first"))
        if result.status == QUIESCENT:
            break
        if result.status == DEADLOCK:
            raise RuntimeError("generation run deadlocked")
        state = result.state
        if result.event is not None and result.event.label == "tock":
            copies = frozenset((c.cbt.name, c.seed.key) for c in state.copies)
            snapshots.append((population(state.ctx), copies))
    else:
        raise RuntimeError("generation run did not settle")
    final_copies = frozenset((c.cbt.name, c.seed.key) for c in state.copies)
    snapshots.append((population(state.ctx), final_copies))
    return snapshots


BLINKER = ((5, 4), (5, 5), (5, 6))
TWO_LONELY = ((5, 5), (10, 10))
DANCE_SEED = ((0, 1), (2, 0), (2, 2), (5, 0), (5, 1), (6, 0), (6, 1))

register_example("gol", lambda: build_game_of_life(BLINKER, generations=2))
register_example("gol-evolved", lambda: build_game_of_life(DANCE_SEED, generations=2, evolved=True))
register_example("gol-dance-buggy", lambda: build_game_of_life(
    BLINKER, generations=2, evolved=True, buggy=True))
