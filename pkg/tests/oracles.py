"""Independent reference implementations used to pin expected test values.

Nothing in here imports the package under test.  The b-thread oracle works
directly on the request/block composition rule for plain scenario threads,
and the Conway oracle is a textbook synchronous grid update.  Both are kept
deliberately brute-force.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class BThread:
    """A plain scenario thread: per-state request/block sets and transitions.

    ``states`` maps a state name to ``(requested, blocked)`` label sets and
    ``edges`` maps ``(state, label)`` to the successor state.  Labels with no
    edge from a state leave the thread where it is (the implicit self-loop).
    """

    name: str
    init: str
    states: dict[str, tuple[frozenset[str], frozenset[str]]]
    edges: dict[tuple[str, str], str] = field(default_factory=dict)

    def requested(self, state: str) -> frozenset[str]:
        return self.states[state][0]

    def blocked(self, state: str) -> frozenset[str]:
        return self.states[state][1]

    def advance(self, state: str, label: str) -> str:
        return self.edges.get((state, label), state)


def enabled_labels(threads: list[BThread], snapshot: tuple[str, ...]) -> list[str]:
    requested: set[str] = set()
    blocked: set[str] = set()
    for thread, state in zip(threads, snapshot):
        requested |= thread.requested(state)
        blocked |= thread.blocked(state)
    return sorted(requested - blocked)


def maximal_traces(threads: list[BThread]) -> frozenset[tuple[str, ...]]:
    """All complete runs of the composed threads, to the first stuck state."""

    init = tuple(t.init for t in threads)
    out: set[tuple[str, ...]] = set()
    stack: list[tuple[tuple[str, ...], tuple[str, ...]]] = [(init, ())]
    while stack:
        snapshot, prefix = stack.pop()
        labels = enabled_labels(threads, snapshot)
        if not labels:
            out.add(prefix)
            continue
        for label in labels:
            nxt = tuple(t.advance(s, label) for t, s in zip(threads, snapshot))
            stack.append((nxt, prefix + (label,)))
    return frozenset(out)


def reachable_states(threads: list[BThread]) -> int:
    init = tuple(t.init for t in threads)
    seen = {init}
    frontier = [init]
    while frontier:
        snapshot = frontier.pop()
        for label in enabled_labels(threads, snapshot):
            nxt = tuple(t.advance(s, label) for t, s in zip(threads, snapshot))
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return len(seen)


def counter_thread(name: str, label: str, times: int) -> BThread:
    """Requests ``label`` a fixed number of times, then stops."""

    states = {f"s{i}": (frozenset({label}), frozenset()) for i in range(times)}
    states["done"] = (frozenset(), frozenset())
    edges = {}
    for i in range(times):
        nxt = f"s{i + 1}" if i + 1 < times else "done"
        edges[(f"s{i}", label)] = nxt
    return BThread(name, "s0", states, edges)


def alternator_thread(name: str, first: str, second: str) -> BThread:
    """Blocks ``second`` until ``first`` occurs, and vice versa."""

    states = {
        "blockSecond": (frozenset(), frozenset({second})),
        "blockFirst": (frozenset(), frozenset({first})),
    }
    edges = {
        ("blockSecond", first): "blockFirst",
        ("blockFirst", second): "blockSecond",
    }
    return BThread(name, "blockSecond", states, edges)


def hot_cold_threads(interleave: bool) -> list[BThread]:
    threads = [
        counter_thread("three-cold", "Cold", 3),
        counter_thread("three-hot", "Hot", 3),
    ]
    if interleave:
        threads.append(alternator_thread("interleave", "Cold", "Hot"))
    return threads


# Conway's Game of Life, synchronous update on an unbounded grid.

def neighbours(cell: tuple[int, int]) -> set[tuple[int, int]]:
    row, col = cell
    return {
        (row + dr, col + dc)
        for dr in (-1, 0, 1)
        for dc in (-1, 0, 1)
        if (dr, dc) != (0, 0)
    }


def conway_step(population: frozenset[tuple[int, int]]) -> frozenset[tuple[int, int]]:
    survivors = {
        cell
        for cell in population
        if 2 <= len(neighbours(cell) & population) <= 3
    }
    candidates = set().union(*(neighbours(c) for c in population)) if population else set()
    births = {
        cell
        for cell in candidates - population
        if len(neighbours(cell) & population) == 3
    }
    return frozenset(survivors | births)


def conway_run(seed: frozenset[tuple[int, int]], generations: int) -> list[frozenset[tuple[int, int]]]:
    pops = [frozenset(seed)]
    for _ in range(generations):
        pops.append(conway_step(pops[-1]))
    return pops
