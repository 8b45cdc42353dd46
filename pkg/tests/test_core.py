import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uiexplore.core import (
    Action,
    ActionKind,
    IndexOutOfRange,
    InteractionTrace,
    NoActionFound,
    TaskGoal,
    UiElement,
    element_text_repr,
    parse_action,
    render_action,
)
from uiexplore.phash import ZERO

from conftest import make_snapshot


def test_repr_label_and_resource():
    e = UiElement(0, label="Wi-Fi", resource_id="settings:id/wifi")
    assert element_text_repr(e) == "Wi-Fi | settings:id/wifi"


def test_repr_all_empty():
    assert element_text_repr(UiElement(0, clickable=False)) == ""


def test_repr_all_fields():
    e = UiElement(0, label="Phone", description="dialer app", resource_id="launcher:id/phone")
    assert element_text_repr(e) == "Phone | dialer app | launcher:id/phone"


@given(st.text(max_size=8), st.text(max_size=8), st.text(max_size=8))
def test_repr_keeps_each_field_once_in_order(label, desc, rid):
    out = element_text_repr(UiElement(0, label, desc, rid))
    assert out == element_text_repr(UiElement(0, label, desc, rid))
    expected = [f for f in (label, desc, rid) if f]
    assert out == " | ".join(expected)


def test_parse_click_in_prose():
    snap = make_snapshot(["a", "b", "c", "d", "e"])
    assert parse_action("I will tap it. CLICK(3)", snap) == Action.click(3)


def test_parse_done():
    assert parse_action("DONE", make_snapshot(["a"])) == Action.done()


def test_parse_index_out_of_range():
    with pytest.raises(IndexOutOfRange):
        parse_action("CLICK(9)", make_snapshot(["a", "b", "c", "d", "e"]))


def test_parse_no_action():
    with pytest.raises(NoActionFound):
        parse_action("let me think about this")


def test_parse_first_match_and_whitespace():
    assert parse_action("click( 2 ) then BACK") == Action.click(2)
    assert parse_action("Scroll( Down )") == Action(ActionKind.SCROLL, "down")
    assert parse_action('type( "hi \\"there\\"" )') == Action(ActionKind.TYPE_TEXT, 'hi "there"')


def test_action_validation():
    with pytest.raises(ValueError):
        Action(ActionKind.SCROLL, "sideways")
    with pytest.raises(ValueError):
        Action(ActionKind.BACK, 3)


def test_task_goal_validation():
    with pytest.raises(ValueError):
        TaskGoal("  ", "g")
    with pytest.raises(ValueError):
        TaskGoal("x", "g", max_steps=0)
    with pytest.raises(ValueError):
        TaskGoal("x", "g", wall_budget=0)


def test_trace_steps_strictly_increase():
    t = InteractionTrace()
    t.append(1, Action.back(), ZERO)
    with pytest.raises(ValueError):
        t.append(1, Action.back(), ZERO)
    with pytest.raises(ValueError):
        InteractionTrace().append(0, Action.back(), ZERO)


_printable = st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=20)
actions = st.one_of(
    st.integers(0, 10_000).map(Action.click),
    st.tuples(st.integers(-500, 5000), st.integers(-500, 5000)).map(lambda p: Action(ActionKind.CLICK_XY, p)),
    _printable.map(lambda s: Action(ActionKind.TYPE_TEXT, s)),
    st.sampled_from(["up", "down", "left", "right"]).map(lambda d: Action(ActionKind.SCROLL, d)),
    _printable.map(lambda s: Action(ActionKind.OPEN_APP, s)),
    st.sampled_from([Action.back(), Action.home(), Action.done()]),
)


@settings(max_examples=1000)
@given(actions)
def test_render_parse_round_trip(a):
    assert parse_action(render_action(a)) == a


_KEYWORDS = re.compile(r"click|type|scroll|open_app|back|home|done", re.IGNORECASE)
prose = st.text(alphabet=st.characters(whitelist_categories=("L", "Zs", "P")), max_size=40).filter(
    lambda s: not _KEYWORDS.search(s) and not s.endswith("_")
)


@given(actions, prose, prose)
def test_surrounding_prose_is_ignored(a, before, after):
    text = f"{before} {render_action(a)} {after}"
    assert parse_action(text) == a
