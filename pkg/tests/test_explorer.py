import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uiexplore.core import InteractionTrace, TaskGoal, element_text_repr
from uiexplore.explorer import CancelSignal, ExplorationBudget, collect_clickables, explore
from uiexplore.phash import hamming, phash
from uiexplore.relevance import HistoryKey, rank_candidates
from uiexplore.sim import Environment, load_scenario
from uiexplore.sim.generators import random_graph_document

from conftest import env_for

WIFI = TaskGoal("Turn on Wi-Fi", "wifi_enabled")


def run(env, goal=WIFI, budget=None, history=None, cancel=None, lam=1.0, trace=None):
    start = env.snapshot()
    history = set() if history is None else history
    with env.lock:
        ctx = explore(env, start, goal, budget or ExplorationBudget(60.0), history, trace or InteractionTrace(), cancel, lam)
    return start, ctx, history


class CancelAfter(CancelSignal):
    def __init__(self, polls):
        super().__init__()
        self.polls = polls

    def is_set(self):
        self.polls -= 1
        return self.polls < 0


def test_zero_probes_changes_nothing(wifi_env):
    start = wifi_env.snapshot()
    t0 = wifi_env.clock.now_ms
    with wifi_env.lock:
        ctx = explore(wifi_env, start, WIFI, ExplorationBudget(10.0, max_probes=0), set(), InteractionTrace())
    assert ctx.probes_attempted == 0 and ctx.observations == []
    assert wifi_env.clock.now_ms == t0 and wifi_env.screen_id == "settings"


def test_requires_lock(wifi_env):
    with pytest.raises(RuntimeError):
        explore(wifi_env, wifi_env.snapshot(), WIFI, ExplorationBudget(10.0), set(), InteractionTrace())


def test_settings_wifi_single_probe():
    env = env_for("settings_wifi")
    start, ctx, history = run(env, budget=ExplorationBudget(60.0, max_probes=1))
    assert ctx.probes_attempted == 1
    [obs] = ctx.observations
    assert obs.via_label == "Wi-Fi" and obs.probe_depth == 1
    assert {e.name for e in obs.elements} == {"Saved networks", "Use Wi-Fi"}
    assert HistoryKey(phash(start.raster), "Wi-Fi | settings:id/wifi") in history
    assert env.current_screen == "settings" and env.nav_stack == ["settings"]
    assert [o.level.value for o in ctx.rollback_outcomes] == ["Level1"]


def test_probes_follow_rank_order():
    env = env_for("settings_wifi")
    start = env.observe()
    expected = [element_text_repr(e) for e, _ in rank_candidates(collect_clickables(start), WIFI, set(), phash(start.raster))]
    _, ctx, _ = run(env)
    probed = [line.split("\t")[1] for line in ctx.log if line.startswith("probe")]
    assert probed == expected[: ctx.probes_attempted] and probed[0].startswith("Wi-Fi")


def test_log_format():
    env = env_for("settings_wifi")
    _, ctx, _ = run(env, budget=ExplorationBudget(60.0, max_probes=1))
    probe, rb = ctx.log
    kind, text, depth, h, level = probe.split("\t")
    assert (kind, depth, level) == ("probe", "1", "Level1") and len(h) == 16
    assert rb.split("\t")[:2] == ["rollback", "Level1"]


def test_cancel_after_first_probe():
    env = env_for("settings_wifi")
    _, ctx, _ = run(env, cancel=CancelAfter(1))
    assert ctx.cancelled and ctx.probes_attempted == 1
    assert env.screen_id == "settings"


def test_depth_two_chain():
    env = env_for("settings_wifi")
    _, ctx, _ = run(env, budget=ExplorationBudget(60.0, max_depth=2, max_probes=1))
    depths = [o.probe_depth for o in ctx.observations]
    assert depths[0] == 1 and max(depths) == 2
    assert ctx.rollback_outcomes[0].back_presses == 2
    assert env.screen_id == "settings"


def test_no_revisit_with_large_lambda():
    env = env_for("settings_wifi")
    _, first, history = run(env, budget=ExplorationBudget(60.0, max_probes=1), lam=2.0)
    _, second, _ = run(env, budget=ExplorationBudget(60.0, max_probes=2), history=history, lam=2.0)
    first_probed = {l.split("\t")[1] for l in first.log if l.startswith("probe")}
    second_probed = [l.split("\t")[1] for l in second.log if l.startswith("probe")]
    assert not first_probed & set(second_probed)


def test_dense_screen_lists_all_clickables():
    env = env_for("dense")
    assert len(collect_clickables(env.observe())) == 48
    _, ctx, _ = run(env, goal=TaskGoal("open something", "g"), budget=ExplorationBudget(20.0, max_probes=48))
    assert 1 <= ctx.probes_attempted <= 48


def test_budget_validation():
    for bad in ({"time_budget": 0}, {"time_budget": 1, "max_depth": 0}, {"time_budget": 1, "max_probes": -1}):
        with pytest.raises(ValueError):
            ExplorationBudget(**bad)


GRAPHS = [load_scenario(random_graph_document(seed, n_screens=6)) for seed in range(6)]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 5), st.floats(0.5, 20.0), st.integers(1, 2), st.integers(0, 6))
def test_budget_restoration_and_records(graph, budget_s, depth, probes):
    env = Environment(GRAPHS[graph], seed=graph)
    start, ctx, history = run(env, TaskGoal("find the settings", "never"), ExplorationBudget(budget_s, depth, probes))
    h0 = phash(start.raster)
    assert ctx.probes_attempted <= probes
    # a new probe only starts while budget remains; one probe plus rollback may overrun it
    per_probe = depth * (2.0 + 0.2) + (depth + 1) * (2.0 + 0.2) + 2.0 + 0.2
    assert ctx.elapsed < budget_s + per_probe or ctx.probes_attempted == 0
    assert hamming(phash(env.observe().raster), h0) <= 8
    for obs in ctx.observations:
        assert 1 <= obs.probe_depth <= depth
    assert len(ctx.rollback_outcomes) == ctx.probes_attempted
    stamps = [o.recorded_at for o in ctx.observations]
    assert stamps == sorted(stamps)
    assert len(history) >= ctx.probes_attempted
