from pathlib import Path

import numpy as np
import pytest

from uiexplore.core import ScreenSnapshot, UiElement
from uiexplore.sim import Environment, load_scenario

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "src" / "uiexplore" / "data"
SCENARIOS = DATA / "scenarios"
SUITES = DATA / "suites"
FIXTURES = Path(__file__).resolve().parent / "fixtures"


def scenario(name: str):
    return load_scenario(SCENARIOS / f"{name}.scn")


def env_for(name: str, seed=None) -> Environment:
    return Environment(scenario(name), seed=seed)


def click_label(env: Environment, label: str):
    from uiexplore.core import Action

    snap = env.observe()
    element = next(e for e in snap.elements if e.name == label and e.clickable)
    return env.execute(Action.click(element.index))


def make_snapshot(labels, clickable=None, size=(240, 480)) -> ScreenSnapshot:
    clickable = clickable or [True] * len(labels)
    elements = [
        UiElement(i, label=l, resource_id=f"app:id/e{i}" if l else "", bounds=(0, 40 * i, 100, 40 * i + 30), clickable=c)
        for i, (l, c) in enumerate(zip(labels, clickable))
    ]
    w, h = size
    return ScreenSnapshot(np.full((h, w), 255, dtype=np.uint8), elements)


@pytest.fixture
def wifi_env():
    return env_for("settings_wifi")


# criterion id -> "PASS ..." / "FAIL ..." lines, filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[key])
