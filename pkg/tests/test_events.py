"""Event values, matchers, and the request/block selection rule."""

import pytest
from hypothesis import given, strategies as st

from cobp import (ALL, NONE, Complement, ConfigurationError, Event, ExplicitSet,
                  LabelMatch, UnionSet, ctx_ended, explicit, matches,
                  register_payload_predicate, selectable, sync, union)

HOT = Event("Hot")
COLD = Event("Cold")
TICK = Event("tick")
TOCK = Event("tock")


def test_equality_is_structural():
    assert Event("die", {"cell": [5, 4]}) == Event("die", {"cell": [5, 4]})
    assert Event("die", {"cell": [5, 4]}) != Event("die", {"cell": [4, 5]})
    assert Event("Hot") != Event("Hot", ns="context")
    assert hash(Event("Hot")) == hash(Event("Hot", None))


def test_unknown_namespace_rejected():
    with pytest.raises(ConfigurationError):
        Event("x", ns="internal")


def test_json_roundtrip():
    event = Event("on", {"room": "r1", "device": "light"})
    assert Event.from_json(event.to_json()) == event


def test_explicit_match_identity():
    assert matches(explicit(HOT), HOT)
    assert not matches(explicit(HOT), COLD)


def test_complement_of_single_event():
    everything_but_tock = Complement(explicit(TOCK))
    assert matches(everything_but_tock, TICK)
    assert not matches(everything_but_tock, TOCK)


def test_none_matches_nothing():
    for event in (HOT, COLD, ctx_ended("q", "k")):
        assert not matches(NONE, event)
    assert matches(ALL, ctx_ended("q", "k"))


def test_label_match_with_predicate():
    register_payload_predicate("is-even", lambda p: p % 2 == 0)
    evens = LabelMatch("n", "is-even")
    assert matches(evens, Event("n", 4))
    assert not matches(evens, Event("n", 3))
    assert not matches(evens, Event("m", 4))


def test_unknown_predicate_is_configuration_error():
    broken = LabelMatch("n", "never-registered")
    with pytest.raises(ConfigurationError):
        matches(broken, Event("n", 1))


def test_requested_duplicates_rejected():
    with pytest.raises(ConfigurationError):
        sync(request=(HOT, HOT))


def test_selectable_unconstrained_requests():
    stmts = [sync(request=COLD), sync(request=HOT)]
    assert set(selectable(stmts)) == {COLD, HOT}


def test_selectable_with_alternator_block():
    stmts = [sync(request=COLD), sync(request=HOT), sync(block=explicit(HOT))]
    assert selectable(stmts) == [COLD]


def test_selectable_empty_when_everything_blocked():
    stmts = [sync(request=(COLD, HOT)), sync(block=ALL)]
    assert selectable(stmts) == []


events_st = st.builds(
    Event,
    st.sampled_from(["Hot", "Cold", "tick", "move"]),
    st.one_of(st.none(), st.integers(-3, 3),
              st.dictionaries(st.sampled_from(["a", "b"]), st.integers(0, 2), max_size=2)),
)


def sets_st(depth=2):
    base = st.one_of(
        st.just(ALL), st.just(NONE),
        st.builds(ExplicitSet, st.lists(events_st, max_size=3)),
        st.builds(LabelMatch, st.sampled_from(["Hot", "Cold", "tick"])),
    )
    if depth == 0:
        return base
    inner = sets_st(depth - 1)
    return st.one_of(base, st.builds(Complement, inner),
                     st.builds(UnionSet, st.lists(inner, max_size=3)))


@given(sets_st(), events_st)
def test_matching_is_pure(event_set, event):
    assert matches(event_set, event) == matches(event_set, event)


@given(sets_st(), events_st)
def test_double_complement_is_identity(event_set, event):
    assert matches(Complement(Complement(event_set)), event) == matches(event_set, event)


@given(sets_st(), sets_st(), events_st)
def test_de_morgan_dual(a, b, event):
    lhs = matches(Complement(union(a, b)), event)
    rhs = matches(Complement(a), event) and matches(Complement(b), event)
    assert lhs == rhs


@given(st.lists(st.builds(
    lambda req, blk: sync(request=req, block=blk),
    st.lists(events_st, max_size=3, unique=True),
    sets_st(1)), max_size=4))
def test_selection_rule_soundness(statements):
    for event in selectable(statements):
        assert any(event in stmt.requested for stmt in statements)
        assert not any(matches(stmt.blocked, event) for stmt in statements)
