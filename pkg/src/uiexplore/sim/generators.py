"""Procedural scenario documents for benchmarks and property tests.

Every generated document is checked so that distinct screens stay more than
``MIN_SCREEN_DISTANCE`` bits apart (with and without banners) and each task's
target element is the single most relevant element on its screen.
"""

from __future__ import annotations

import itertools
import random
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import yaml

from ..core import TaskGoal, UiElement
from ..phash import hamming, phash
from ..relevance import relevance_score
from .render import render
from .scenario import load_scenario

MIN_SCREEN_DISTANCE = 10
MAX_BANNER_SHIFT = 7
DEAD_END_ID = "app:id/empty_state"
SPAN = 12  # screens with at most this many buttons are read directly by the oracle

APPS = [
    "Calendar", "Camera", "Clock", "Contacts", "Files", "Gallery", "Mail", "Maps",
    "Music", "Notes", "Phone", "Photos", "Podcasts", "Recorder", "Settings", "Weather",
    "Wallet", "Translate", "Fitness", "News",
]

WORDS = """
account accent address agenda album alert anchor archive area audio avatar backup badge
balance banner battery beacon bedtime block bookmark border bracket brightness browser
budget buffer bundle button cache camera canvas caption card carrier cart category
channel chart checkout cipher circle clipboard cloud cluster code collection color column
comment compass contrast cookie counter coupon cover credit crop cursor dashboard data
deadline device dial digest display distance dock domain draft drive echo editor effect
email emoji engine entry event export fabric feed filter flash focus folder font footer
forecast format frame gallery garden gauge gesture glass goal graph grid group guest
handle header health history holiday honey icon image inbox index invoice island journal
keyboard label language layer layout ledger legend library light limit link list locale
lock logo loop magnet mailbox manual margin marker market media memo menu meter metric
mirror mode monitor motion mute network night notice number offer orbit order outline
package page palette panel parcel password pattern pause payment pencil pixel planner
playlist plugin pocket portal poster preset preview privacy profile prompt proxy puzzle
quality queue quota radar radio range rating reader receipt record region reminder report
ribbon ring river route ruler safety sample scale schedule scope screen script season
sensor server session shadow shelf shortcut signal sketch slider snapshot sound source
speaker spell stack station status sticker storage stream studio style summary sunset
switch symbol sync table tablet tag target task template theme ticket timer title token
toolbar topic track traffic trigger tunnel update upload usage vault vector video view
voice volume wallet wave widget window wizard zone
""".split()


def _slug(text: str) -> str:
    return "_".join(text.lower().split())


class _Labels:
    """Unique two-word labels drawn from the word list.

    Words of labels taken with ``reserve=True`` (and the excluded words) never
    appear in any other label, so only targets share tokens with instructions.
    """

    def __init__(self, rng: random.Random, exclude: Sequence[str] = ()):
        self.rng = rng
        self.reserved = {w.lower() for w in exclude}
        self.used = set()

    def take(self, reserve: bool = False) -> str:
        while True:
            a, b = self.rng.sample(WORDS, 2)
            label = f"{a.capitalize()} {b}"
            if a in self.reserved or b in self.reserved or label.lower() in self.used:
                continue
            if reserve and (a in self.used_words() or b in self.used_words()):
                continue
            self.used.add(label.lower())
            if reserve:
                self.reserved.update((a, b))
            return label

    def used_words(self) -> set:
        return {w for label in self.used for w in label.split()}


def _button(i: int, label: str, pkg: str) -> dict:
    return {"id": f"b{i}", "label": label, "resource_id": f"{pkg}:id/{_slug(label)}"}


def _text(i: int, label: str) -> dict:
    return {"id": f"t{i}", "label": label, "clickable": False}


def _salt_layouts(screens: Dict[str, dict], rng: random.Random) -> None:
    for sid, screen in screens.items():
        if not screen.get("overlay"):
            screen["layout_seed"] = f"{sid}-{rng.randint(0, 9999)}"


def distinct_screens(doc: dict, min_distance: int = MIN_SCREEN_DISTANCE) -> Optional[Tuple[str, str]]:
    """First pair of restorable states closer than ``min_distance`` bits, or None.

    States are base screens plus every base screen with a modal it can open.
    Also rejects states whose own banner variant drifts by more than
    ``MAX_BANNER_SHIFT`` bits.
    """
    sc = load_scenario(doc)
    states = {sid: [s] for sid, s in sc.screens.items() if not s.overlay}
    for t in doc.get("transitions") or []:
        if "modal" in t.get("attributes", ()):
            states[f"{t['screen']}+{t['target']}"] = [sc.screen(t["screen"]), sc.screen(t["target"])]
    hashes = {}
    for sid, layers in states.items():
        variants = [phash(render(layers, sc.width, sc.height, b, sc.dynamics.banner_height)) for b in (False, True)]
        if hamming(*variants) > MAX_BANNER_SHIFT:
            return sid, sid
        hashes[sid] = variants
    for (a, ha), (b, hb) in itertools.combinations(hashes.items(), 2):
        if min(hamming(x, y) for x in ha for y in hb) <= min_distance:
            return a, b
    return None


def _strict_top(elements: List[dict], target_label: str, goal: TaskGoal) -> bool:
    scores = {}
    for e in elements:
        ui = UiElement(0, e["label"], "", e.get("resource_id", ""), (0, 0, 1, 1), True)
        scores[e["label"]] = relevance_score(ui, goal)
    best = scores[target_label]
    return all(s < best for label, s in scores.items() if label != target_label)


def menu_task(
    name: str,
    seed: int,
    levels: int,
    density: int,
    positions: Optional[Sequence[int]] = None,
    difficulty: str = "",
    banner_probability: float = 0.0,
    interrupts: Sequence[Tuple[float, str]] = (),
    multipliers: Sequence[Tuple[float, float]] = (),
    fixed_latency: float = 12.0,
    irreversible_decoy: bool = False,
    max_attempts: int = 200,
) -> Tuple[dict, dict]:
    """Scenario + oracle for "open an app and walk a menu chain".

    The chain has ``levels`` menu screens of ``density`` buttons each. One
    button per level advances; every other button opens a dead end marked by
    an empty-state text. The instruction names the app and each target.
    ``irreversible_decoy`` makes the first decoy of the first level replace its
    origin on the back stack, so Back from its dead end returns to the launcher.
    """
    rng = random.Random(seed)
    if positions is None:
        positions = [rng.randint(1, min(density, 4)) for _ in range(levels)]
    if len(positions) != levels or not all(1 <= p <= density for p in positions):
        raise ValueError("one target position per level, within the screen")
    for _ in range(max_attempts):
        doc, oracle = _menu_attempt(name, rng, levels, density, positions, difficulty, fixed_latency, irreversible_decoy)
        dyn = {}
        if banner_probability:
            dyn["banner_probability"] = banner_probability
        if multipliers:
            dyn["reasoning_multipliers"] = [list(m) for m in multipliers]
        if dyn:
            doc["dynamics"] = dyn
        if interrupts:
            doc["interrupts"] = [{"at_s": at, "kind": kind} for at, kind in interrupts]
        if distinct_screens(doc) is None and _targets_lead(doc):
            return doc, oracle
    raise RuntimeError(f"{name}: could not generate visually distinct screens")


def _targets_lead(doc: dict) -> bool:
    goal = TaskGoal(doc["goals"]["reach_goal"]["instruction"], "reach_goal")
    for sid, screen in doc["screens"].items():
        target = screen.get("target")
        if target is not None and not _strict_top(screen["elements"], target, goal):
            return False
    return True


def _menu_attempt(name, rng, levels, density, positions, difficulty, fixed_latency, irreversible_decoy):
    app = rng.choice(APPS)
    others = rng.sample([a for a in APPS if a != app], 5)
    pkg = f"com.example.a{rng.randint(10, 99)}"
    labels = _Labels(rng, exclude=["open", "then", "choose", "and", "nothing", "here", app.lower(), *map(str.lower, APPS)])

    targets = [labels.take(reserve=True) for _ in range(levels)]
    screens: Dict[str, dict] = {}
    transitions: List[dict] = []

    launcher_apps = [app, *others]
    rng.shuffle(launcher_apps)
    screens["launcher"] = {
        "target": app,
        "elements": [{"id": _slug(a), "label": a, "resource_id": f"launcher:id/{_slug(a)}"} for a in launcher_apps],
    }
    for other in others:
        sid = f"{_slug(other)}_home"
        screens[sid] = {"elements": [_button(0, labels.take(), "com.example.other"), _text(1, labels.take())]}
        transitions.append({"screen": "launcher", "element": _slug(other), "target": sid})

    screens["goal"] = {"elements": [_text(0, f"{targets[-1]} saved"), _text(1, labels.take()), _text(2, labels.take())]}
    first = "level_1"
    transitions.append({"screen": "launcher", "element": _slug(app), "target": first})

    for j in range(levels):
        sid = f"level_{j + 1}"
        dead = [f"dead_{j + 1}_{k}" for k in range(2)]
        for d in dead:
            screens[d] = {
                "elements": [
                    {"id": "empty", "label": "Nothing here", "resource_id": DEAD_END_ID, "clickable": False},
                    *[_text(i + 1, labels.take()) for i in range(rng.randint(1, 3))],
                ]
            }
        elements = []
        for i in range(density):
            label = targets[j] if i == positions[j] - 1 else labels.take()
            elements.append(_button(i, label, pkg))
            t = {"screen": sid, "element": f"b{i}", "target": dead[i % 2]}
            if label == targets[j]:
                t["target"] = "goal" if j == levels - 1 else f"level_{j + 2}"
            elif irreversible_decoy and j == 0 and i == (1 if positions[0] == 1 else 0):
                t["attributes"] = ["irreversible"]
            transitions.append(t)
        screens[sid] = {"target": targets[j], "elements": elements}

    _salt_layouts(screens, rng)
    instruction = f"Open {app} then choose " + " and ".join(targets)
    doc = {
        "schema_version": 1,
        "name": name,
        "seed": rng.randint(0, 2**31 - 1),
        "difficulty": difficulty,
        "start_screen": "launcher",
        "home_screen": "launcher",
        "apps": {app: first},
        "screens": screens,
        "transitions": transitions,
        "goals": {"reach_goal": {"screen": "goal", "instruction": instruction}},
    }
    rules = [
        {"when": {"has_resource_id": "system:id/interrupt_title"}, "do": "BACK"},
        {"when": {"has_resource_id": DEAD_END_ID}, "do": "BACK"},
        {"when": {"has_label": app}, "do": f"CLICK({{index:{app}}})"},
    ]
    rules += [{"when": {"hint_mentions": t}, "do": f"CLICK({{index:{t}}})", "hint_aware": True} for t in targets]
    rules += [{"when": {"has_label": t, "elements_at_most": SPAN}, "do": f"CLICK({{index:{t}}})"} for t in targets]
    rules.append({"when": {}, "do": "CLICK({first_untried})"})
    oracle = {"schema_version": 1, "fixed_latency_s": fixed_latency, "default": "BACK", "rules": rules}
    return doc, oracle


def dense_screen_document(seed: int = 48, count: int = 48) -> dict:
    """One screen with ``count`` clickable buttons, each opening a detail page."""
    rng = random.Random(seed)
    labels = _Labels(rng)
    buttons = [_button(i, labels.take(), "com.example.dense") for i in range(count)]
    screens = {"dense": {"elements": buttons}, "detail": {"elements": [_text(0, "Details")]}}
    transitions = [{"screen": "dense", "element": b["id"], "target": "detail"} for b in buttons]
    return {
        "schema_version": 1,
        "name": "dense",
        "seed": seed,
        "start_screen": "dense",
        "home_screen": "dense",
        "screens": screens,
        "transitions": transitions,
        "goals": {"detail": {"screen": "detail", "instruction": "Open any detail page"}},
    }


def random_graph_document(
    seed: int,
    n_screens: int = 8,
    max_buttons: int = 4,
    modal_rate: float = 0.15,
    irreversible_rate: float = 0.1,
    attempts: int = 100,
) -> dict:
    """Random navigation graph with modal and irreversible edges, no interference."""
    rng = random.Random(seed)
    for _ in range(attempts):
        doc = _graph_attempt(rng, seed, n_screens, max_buttons, modal_rate, irreversible_rate)
        if distinct_screens(doc) is None:
            return doc
    raise RuntimeError(f"graph {seed}: could not separate screens")


def _graph_attempt(rng, seed, n_screens, max_buttons, modal_rate, irreversible_rate):
    labels = _Labels(rng)
    ids = [f"s{i}" for i in range(n_screens)]
    screens: Dict[str, dict] = {}
    transitions: List[dict] = []
    for sid in ids:
        n = rng.randint(2, max_buttons)
        screens[sid] = {"elements": [_button(i, labels.take(), f"com.example.{sid}") for i in range(n)]}
    modal_id = "dialog"
    screens[modal_id] = {
        "overlay": True,
        "elements": [_button(0, labels.take(), "com.example.dialog"), _button(1, labels.take(), "com.example.dialog")],
    }
    for sid in ids:
        for e in screens[sid]["elements"]:
            roll = rng.random()
            if roll < modal_rate:
                transitions.append({"screen": sid, "element": e["id"], "target": modal_id, "attributes": ["modal"]})
                continue
            target = rng.choice(ids)
            attrs = ["irreversible"] if roll < modal_rate + irreversible_rate and target != sid else []
            t = {"screen": sid, "element": e["id"], "target": target}
            if attrs:
                t["attributes"] = attrs
            transitions.append(t)
    _salt_layouts(screens, rng)
    return {
        "schema_version": 1,
        "name": f"graph_{seed}",
        "seed": seed,
        "start_screen": "s0",
        "home_screen": "s0",
        "screens": screens,
        "transitions": transitions,
        "goals": {"never": {"flags": {"unreachable": True}, "instruction": "Explore"}},
    }


# --- bundled suites -------------------------------------------------------

DEFAULT_SUITE = (
    # name, levels, density, difficulty, banner p, interrupts, reasoning multipliers
    *[(f"easy_{i:02d}", 1, 8 + i % 5, "easy", 0.3 if i % 3 == 0 else 0.0, (), ()) for i in range(1, 11)],
    *[(f"medium_{i:02d}", 2, 20 + 2 * i, "medium", 0.3 if i % 2 else 0.0, ((40.0, "message"),) if i == 3 else (), ((0.0, 1.0), (30.0, 1.5)) if i == 5 else ()) for i in range(1, 7)],
    *[(f"hard_{i:02d}", 3, 44 + 2 * i, "hard", 0.0, ((60.0, "alarm"),) if i == 2 else (), ()) for i in range(1, 4)],
)
IRREVERSIBLE_DECOYS = ("hard",)

TIER_SUITE = (
    *[(f"tier1_{i}", 1, 10, "easy") for i in range(1, 5)],
    *[(f"tier2_{i}", 2, 25, "medium") for i in range(1, 5)],
    *[(f"tier3_{i}", 3, 48, "hard") for i in range(1, 5)],
)


def _dump(path: Path, doc: dict) -> None:
    path.write_text(yaml.safe_dump(doc, sort_keys=False, width=120))


def write_suite(out_dir: Path, name: str, seed: int = 2024) -> Path:
    """Write one of the bundled suites (``default`` or ``tiers``) and return the suite file."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = random.Random(f"{name}:{seed}")
    entries = []
    if name == "default":
        specs = [
            (n, lv, d, diff, dict(banner_probability=b, interrupts=it, multipliers=mu, irreversible_decoy=diff in IRREVERSIBLE_DECOYS))
            for n, lv, d, diff, b, it, mu in DEFAULT_SUITE
        ]
    elif name == "tiers":
        specs = [(n, lv, d, diff, {}) for n, lv, d, diff in TIER_SUITE]
    else:
        raise ValueError(f"unknown suite {name!r}")
    for task, levels, density, difficulty, extra in specs:
        doc, oracle = menu_task(task, rng.randint(0, 2**31 - 1), levels, density, difficulty=difficulty, **extra)
        _dump(out_dir / f"{task}.scn", doc)
        _dump(out_dir / f"{task}.oracle", oracle)
        entries.append({"scenario": f"{task}.scn", "goal": "reach_goal", "difficulty": difficulty, "oracle": f"{task}.oracle"})
    suite = {"schema_version": 1, "name": name, "repeats": 1, "seeds": [1, 2], "max_steps": 25, "entries": entries}
    path = out_dir / "suite.yaml"
    _dump(path, suite)
    return path
