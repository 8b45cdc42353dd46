import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uiexplore.core import Action, ActionKind, TaskGoal
from uiexplore.sim import DanglingReference, Environment, InvalidAction, InvalidProbability, SchemaError, UnknownPredicate, load_scenario
from uiexplore.sim.generators import random_graph_document

from conftest import click_label, env_for, scenario

MINIMAL = {
    "schema_version": 1,
    "start_screen": "only",
    "home_screen": "only",
    "screens": {"only": {"elements": [{"id": "a", "label": "A"}]}},
}


def test_minimal_document():
    sc = load_scenario(MINIMAL)
    assert [sid for sid, s in sc.screens.items() if not s.overlay] == ["only"]


def test_dangling_transition():
    doc = dict(MINIMAL, transitions=[{"screen": "only", "element": "a", "target": "nowhere"}])
    with pytest.raises(DanglingReference):
        load_scenario(doc)


def test_schema_and_probability_errors():
    with pytest.raises(SchemaError):
        load_scenario(dict(MINIMAL, schema_version=2))
    with pytest.raises(InvalidProbability):
        load_scenario(dict(MINIMAL, dynamics={"banner_probability": 1.5}))


def test_settings_wifi_structure():
    sc = scenario("settings_wifi")
    base = {sid for sid, s in sc.screens.items() if not s.overlay}
    assert base == {"settings", "wifi", "saved_networks", "wifi_on"}
    assert list(sc.goals) == ["wifi_enabled"]
    assert sc.start_screen == sc.home_screen == "settings"
    assert [e.label for e in sc.screen("settings").elements] == ["Wi-Fi", "Bluetooth", "Display"]
    assert sc.transition("wifi", "use_wifi").set_flags == (("wifi_on", True),)
    assert sc.goals["wifi_enabled"].screen == "wifi_on"


def test_snapshot_counts_and_determinism(wifi_env):
    a, b = wifi_env.snapshot(), wifi_env.snapshot()
    assert len(a.elements) == 3
    assert np.array_equal(a.raster, b.raster)
    assert a.raster.shape == (480, 240)


def test_modal_elements_appended_last():
    env = env_for("modal_prompt")
    click_label(env, "Maps")
    click_label(env, "Search")
    snap = env.snapshot()
    assert len(snap.elements) == 5
    assert [e.label for e in snap.elements[3:]] == ["Search places", "Cancel search"]
    assert not any(e.clickable for e in snap.elements[:3])


def test_back_floor_stays_home(wifi_env):
    wifi_env.execute(Action.back())
    wifi_env.execute(Action.back())
    assert wifi_env.current_screen == "settings" and wifi_env.nav_stack == ["settings"]


def test_modal_then_back_returns_to_origin():
    env = env_for("modal_prompt")
    click_label(env, "Maps")
    click_label(env, "Search")
    assert env.dialog_stack == ["search_box"]
    env.execute(Action.back())
    assert env.current_screen == "maps_main" and env.dialog_stack == []


def test_irreversible_back_skips_origin():
    env = env_for("irreversible")
    click_label(env, "Mail")
    click_label(env, "Compose")
    assert env.current_screen == "compose"
    env.execute(Action.back())
    assert env.current_screen == "launcher"


def test_click_on_static_element_is_invalid():
    env = env_for("irreversible")
    click_label(env, "Mail")
    static = next(e for e in env.observe().elements if not e.clickable)
    with pytest.raises(InvalidAction):
        env.execute(Action.click(static.index))


def test_goal_predicates():
    env = env_for("settings_wifi")
    goal = TaskGoal("Turn on Wi-Fi", "wifi_enabled")
    assert not env.goal_reached(goal)
    click_label(env, "Wi-Fi")
    click_label(env, "Use Wi-Fi")
    assert env.goal_reached(goal) and env.flags == {"wifi_on": True}
    with pytest.raises(UnknownPredicate):
        env.evaluate("nope")


def test_notes_entry_solution_path():
    env = env_for("notes_entry")
    goal = TaskGoal("Write a note saying Buy milk", "note_saved")
    assert not env.goal_reached(goal)
    click_label(env, "Notes")
    click_label(env, "New note")
    env.execute(Action(ActionKind.TYPE_TEXT, "Buy milk"))
    t0 = env.clock.now_ms
    click_label(env, "Save")
    assert env.clock.now_ms > t0
    assert env.goal_reached(goal)


def test_confirm_dialog_flow():
    doc = {
        "schema_version": 1,
        "start_screen": "a",
        "home_screen": "a",
        "screens": {"a": {"elements": [{"id": "del", "label": "Delete"}]}, "b": {"elements": [{"id": "x", "label": "X"}]}},
        "transitions": [{"screen": "a", "element": "del", "target": "b", "attributes": ["confirm_dialog"]}],
    }
    env = Environment(load_scenario(doc))
    click_label(env, "Delete")
    assert env.current_screen == "a" and len(env.dialog_stack) == 1
    click_label(env, "Cancel")
    assert env.screen_id == "a"
    click_label(env, "Delete")
    click_label(env, "Confirm")
    assert env.screen_id == "b"


def test_open_app_and_home():
    env = env_for("linear_nav")
    env.execute(Action(ActionKind.OPEN_APP, "Notes"))
    assert env.current_screen == "notes_list"
    env.execute(Action.home())
    assert env.nav_stack == ["launcher"] and env.dialog_stack == []
    with pytest.raises(InvalidAction):
        env.execute(Action(ActionKind.OPEN_APP, "Nope"))


def test_action_latency_in_configured_range(wifi_env):
    for _ in range(20):
        r = wifi_env.execute(Action(ActionKind.SCROLL, "down"))
        assert 1.0 <= r.elapsed <= 2.0


# --- properties over random graphs ----------------------------------------

GRAPHS = [load_scenario(random_graph_document(seed, n_screens=5)) for seed in range(4)]


def random_actions(env, draw_index):
    snap = env.observe()
    clickable = [e.index for e in snap.elements if e.clickable]
    choice = draw_index % (len(clickable) + 2)
    if choice < len(clickable):
        return Action.click(clickable[choice])
    return Action.back() if choice == len(clickable) else Action.home()


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(range(len(GRAPHS))), st.lists(st.integers(0, 50), max_size=25))
def test_determinism_and_clock(graph, choices):
    sc = GRAPHS[graph]
    a, b = Environment(sc), Environment(sc)
    for c in choices:
        action = random_actions(a, c)
        ra, rb = a.execute(action), b.execute(action)
        assert ra.elapsed > 0
        assert ra.elapsed == rb.elapsed and a.clock.now_ms == b.clock.now_ms
        sa, sb = a.snapshot(), b.snapshot()
        assert np.array_equal(sa.raster, sb.raster) and sa.elements == sb.elements


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(range(len(GRAPHS))), st.lists(st.integers(0, 50), max_size=25))
def test_clock_equals_sum_of_latencies(graph, choices):
    env = Environment(GRAPHS[graph])
    total = 0
    for c in choices:
        total += round(env.execute(random_actions(env, c)).elapsed * 1000)
        env.snapshot()
        total += env.snapshot_ms
    assert env.clock.now_ms == total


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(range(len(GRAPHS))), st.lists(st.integers(0, 50), max_size=25))
def test_stack_soundness(graph, choices):
    env = Environment(GRAPHS[graph])
    for c in choices:
        env.execute(random_actions(env, c))
        assert len(env.nav_stack) >= 1
    env.execute(Action.home())
    assert env.nav_stack == [env.scenario.home_screen] and env.dialog_stack == []


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(0.0, 20.0), min_size=1, max_size=4), st.integers(8, 20))
def test_interrupts_fire_once_at_first_passing_action(times, n_actions):
    doc = random_graph_document(1, n_screens=4)
    doc["interrupts"] = [{"at_s": t, "kind": "message"} for t in times]
    env = Environment(load_scenario(doc))
    fired_at = []
    for _ in range(n_actions):
        before = len([d for d in env.dialog_stack if d.startswith("__interrupt")])
        r = env.execute(Action(ActionKind.SCROLL, "down"))
        after = len([d for d in env.dialog_stack if d.startswith("__interrupt")])
        fired_at += [env.clock.now()] * (after - before)
        assert r.interrupted == (after > before)
    due = sorted(t for t in times if round(t * 1000) <= env.clock.now_ms)
    assert len(fired_at) == len(due)
    # each fired at the first action whose post-time reached it
    for t, when in zip(due, fired_at):
        assert when >= t
