import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from uiexplore.core import TaskGoal, UiElement
from uiexplore.phash import Hash64
from uiexplore.relevance import (
    EmbeddingVector,
    HashingEmbedder,
    HistoryKey,
    cosine,
    embed,
    priority_score,
    rank_candidates,
    relevance_score,
    tokenize,
)

from conftest import FIXTURES

REL = json.loads((FIXTURES / "relevance.json").read_text())
H = Hash64(0x0F0F)
WIFI = TaskGoal("Turn on Wi-Fi", "wifi_enabled")


def vec(*values, dim=256):
    v = np.zeros(dim)
    v[: len(values)] = values
    return EmbeddingVector.of(v)


def settings_elements():
    return [
        UiElement(0, "Wi-Fi", "", "settings:id/wifi"),
        UiElement(1, "Bluetooth", "", "settings:id/bluetooth"),
        UiElement(2, "Display", "", "settings:id/display"),
    ]


def test_empty_text_embeds_to_zero():
    e = embed("")
    assert e.norm == 0 and not e.values.any() and e.dim == 256


def test_repeated_token_same_direction():
    assert cosine(embed("wifi"), embed("wifi wifi")) == pytest.approx(1.0)


def test_hyphenated_compound_matches_joined_word():
    assert "wifi" in tokenize("Wi-Fi")
    a = cosine(embed("turn on wifi"), embed("Wi-Fi"))
    b = cosine(embed("turn on wifi"), embed("Bluetooth"))
    assert a == pytest.approx(REL["cosine_turn_on_wifi_vs_wifi"], abs=1e-12)
    assert b == pytest.approx(REL["cosine_turn_on_wifi_vs_bluetooth"], abs=1e-12)
    assert a > b


def test_cosine_examples():
    v = vec(3.0, 4.0)
    assert cosine(v, v) == pytest.approx(1.0)
    assert cosine(vec(1, 0), vec(0, 1)) == 0.0
    assert cosine(vec(1, 0), vec(1, 1)) == pytest.approx(0.70710678, abs=1e-8)
    assert cosine(vec(), vec(1)) == 0.0


def test_norm_is_cached_euclidean():
    e = embed("Saved networks | settings:id/saved_networks")
    assert abs(e.norm - np.linalg.norm(e.values)) < 1e-9


def test_relevance_examples():
    assert relevance_score(UiElement(0, clickable=False), WIFI) == 0.0
    same = UiElement(0, label="Turn on Wi-Fi")
    assert relevance_score(same, WIFI) == pytest.approx(1.0)
    wifi = settings_elements()[0]
    assert relevance_score(wifi, WIFI) == pytest.approx(REL["scores"]["wifi"], abs=1e-12)
    assert REL["scores"]["wifi"] > 0


def test_priority_score_examples():
    assert priority_score(0.9, False, 0.5) == 0.9
    assert priority_score(0.9, True, 0.5) == pytest.approx(0.4)
    assert priority_score(0.2, True, 1.0) == pytest.approx(-0.8)
    with pytest.raises(ValueError):
        priority_score(0.1, True, -1)


def test_rank_empty_and_ties():
    assert rank_candidates([], WIFI, set(), H) == []
    a, b = UiElement(5, "Zebra"), UiElement(2, "Yak")
    ranked = rank_candidates([a, b], WIFI, set(), H)
    assert [e.index for e, _ in ranked] == [2, 5]


def test_rank_settings_wifi_first():
    ranked = rank_candidates(settings_elements(), WIFI, set(), H)
    assert ranked[0][0].label == "Wi-Fi"
    assert ranked[0][1] == pytest.approx(REL["scores"]["wifi"], abs=1e-12)


def test_history_uses_hash_proximity():
    els = settings_elements()
    near = HistoryKey(Hash64(H.bits ^ 0b111), "Wi-Fi | settings:id/wifi")
    far = HistoryKey(Hash64(~H.bits & ((1 << 64) - 1)), "Wi-Fi | settings:id/wifi")
    assert rank_candidates(els, WIFI, {near}, H)[0][0].label != "Wi-Fi"
    assert rank_candidates(els, WIFI, {far}, H)[0][0].label == "Wi-Fi"


def test_history_key_requires_repr():
    with pytest.raises(ValueError):
        HistoryKey(H, "")


words = st.sampled_from(["wifi", "turn", "on", "bluetooth", "display", "sound", "network", "saved", "use", "alpha"])
labels = st.lists(words, min_size=0, max_size=3).map(" ".join)
element_lists = st.lists(st.tuples(labels, st.booleans()), max_size=8).map(
    lambda items: [UiElement(i, label=l, clickable=c) for i, (l, c) in enumerate(items)]
)


class ScaledEmbedder:
    def __init__(self, c):
        self.base = HashingEmbedder()
        self.c = c

    def __call__(self, text):
        return self.base(text).scaled(self.c)


@given(element_lists, st.floats(0.01, 100))
def test_rank_order_invariant_to_scaling(elements, c):
    plain = rank_candidates(elements, WIFI, set(), H)
    scaled = rank_candidates(elements, WIFI, set(), H, embedder=ScaledEmbedder(c))
    assert [e.index for e, _ in plain] == [e.index for e, _ in scaled]


@given(element_lists, st.data())
def test_visited_never_rises(elements, data):
    ranked = rank_candidates(elements, WIFI, set(), H)
    if not ranked:
        return
    pick = data.draw(st.sampled_from([e for e, _ in ranked]))
    key = HistoryKey(H, " | ".join(f for f in (pick.label, pick.description, pick.resource_id) if f))
    before = [e.index for e, _ in ranked].index(pick.index)
    after = [e.index for e, _ in rank_candidates(elements, WIFI, {key}, H)].index(pick.index)
    assert after >= before


@given(element_lists)
def test_rank_is_permutation_of_eligible(elements):
    ranked = rank_candidates(elements, WIFI, set(), H)
    eligible = sorted(e.index for e in elements if e.clickable and e.label)
    assert sorted(e.index for e, _ in ranked) == eligible


@given(st.lists(st.floats(-10, 10), min_size=4, max_size=4), st.lists(st.floats(-10, 10), min_size=4, max_size=4))
def test_cosine_symmetric(a, b):
    va, vb = EmbeddingVector.of(a), EmbeddingVector.of(b)
    assert abs(cosine(va, vb) - cosine(vb, va)) <= 1e-12
    assert -1.0 <= cosine(va, vb) <= 1.0
