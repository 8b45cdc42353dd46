import filecmp

import pytest
import yaml

from uiexplore.sim import load_scenario
from uiexplore.sim.generators import dense_screen_document, distinct_screens, random_graph_document, write_suite

from conftest import SCENARIOS, SUITES


@pytest.mark.parametrize("name", ["default", "tiers"])
def test_bundled_suites_regenerate_identically(tmp_path, name):
    write_suite(tmp_path / name, name)
    cmp = filecmp.dircmp(tmp_path / name, SUITES / name)
    assert not cmp.left_only and not cmp.right_only
    assert not filecmp.cmpfiles(tmp_path / name, SUITES / name, cmp.common, shallow=False)[1]


def test_dense_fixture_regenerates_identically():
    assert yaml.safe_load((SCENARIOS / "dense.scn").read_text()) == dense_screen_document()


@pytest.mark.parametrize("name", ["default", "tiers"])
def test_suite_screens_are_separable(name):
    for path in sorted((SUITES / name).glob("*.scn")):
        assert distinct_screens(yaml.safe_load(path.read_text())) is None, path.name


def test_tier_element_counts():
    expected = {"tier1": 10, "tier2": 25, "tier3": 48}
    for path in sorted((SUITES / "tiers").glob("*.scn")):
        sc = load_scenario(path)
        levels = [s for sid, s in sc.screens.items() if sid.startswith("level_")]
        assert levels and all(sum(e.clickable for e in s.elements) == expected[path.stem.split("_")[0]] for s in levels)


@pytest.mark.parametrize("seed", range(5))
def test_random_graphs_deterministic_and_separable(seed):
    doc = random_graph_document(seed)
    assert doc == random_graph_document(seed)
    assert distinct_screens(doc) is None
