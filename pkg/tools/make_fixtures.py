"""Regenerate committed test fixtures.

    python3 tools/make_fixtures.py

pHash expectations come from a reference implementation that shares no code
with the package: exact area averaging by integer pixel replication and block
means, then scipy's type-II DCT.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import re
import sys
from pathlib import Path

import numpy as np
import yaml
from PIL import Image
from scipy.fft import dctn

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from uiexplore.bench import emit_report, load_suite, run_suite  # noqa: E402
from uiexplore.cli import run_traced  # noqa: E402
from uiexplore.pipeline import PipelineConfig  # noqa: E402
from uiexplore.sim.generators import dense_screen_document, write_suite  # noqa: E402
from uiexplore.sim.render import render  # noqa: E402
from uiexplore.sim.scenario import load_scenario  # noqa: E402

SCENARIOS = ROOT / "src" / "uiexplore" / "data" / "scenarios"
SUITES = ROOT / "src" / "uiexplore" / "data" / "suites"
FIXTURES = ROOT / "tests" / "fixtures"


# --- reference perceptual hash -------------------------------------------

def ref_downsample(img: np.ndarray, n: int = 32) -> np.ndarray:
    h, w = img.shape
    fy, fx = n // math.gcd(h, n), n // math.gcd(w, n)
    big = np.repeat(np.repeat(img.astype(np.float64), fy, axis=0), fx, axis=1)
    by, bx = big.shape[0] // n, big.shape[1] // n
    return big.reshape(n, by, n, bx).mean(axis=(1, 3))


def ref_phash(img: np.ndarray) -> int:
    coeffs = dctn(ref_downsample(img), type=2, norm=None)
    flat = [coeffs[r, c] for r in range(8) for c in range(8)][1:] + [coeffs[0, 8]]
    vals = np.round(np.array(flat), 6)
    med = np.median(vals)
    bits = 0
    for v in vals:
        bits = (bits << 1) | int(v > med)
    return bits


# --- corpus ---------------------------------------------------------------

def screen_raster(sc, sid, dialogs=(), banner=False):
    layers = [sc.screen(sid)] + [sc.screen(d) for d in dialogs]
    return np.asarray(render(layers, sc.width, sc.height, banner, sc.dynamics.banner_height))


def build_phash_corpus():
    out = FIXTURES / "phash"
    out.mkdir(parents=True, exist_ok=True)
    for old in out.glob("*.png"):
        old.unlink()
    images = {}

    def add(name, raster):
        images[name] = raster
        Image.fromarray(raster).save(out / f"{name}.png")

    pairs = []
    wifi = load_scenario(SCENARIOS / "settings_wifi.scn")
    for sid in ("settings", "wifi", "saved_networks", "wifi_on"):
        add(f"wifi_{sid}", screen_raster(wifi, sid))
        add(f"wifi_{sid}_banner", screen_raster(wifi, sid, banner=True))
        pairs.append((f"wifi_{sid}", f"wifi_{sid}_banner", "same"))
    for a, b in (("settings", "wifi"), ("settings", "saved_networks"), ("settings", "wifi_on"),
                 ("wifi", "saved_networks"), ("wifi", "wifi_on"), ("saved_networks", "wifi_on")):
        pairs.append((f"wifi_{a}", f"wifi_{b}", "diff"))
        pairs.append((f"wifi_{a}_banner", f"wifi_{b}", "diff"))

    maps = load_scenario(SCENARIOS / "modal_prompt.scn")
    add("maps_main", screen_raster(maps, "maps_main"))
    add("maps_main_banner", screen_raster(maps, "maps_main", banner=True))
    add("maps_permission", screen_raster(maps, "maps_main", ("permission",)))
    add("maps_alarm", screen_raster(maps, "maps_main", ("__interrupt_alarm",)))
    add("maps_launcher", screen_raster(maps, "launcher"))
    pairs += [("maps_main", "maps_main_banner", "same"), ("maps_main", "maps_permission", "diff"),
              ("maps_main", "maps_alarm", "diff"), ("maps_main", "maps_launcher", "diff")]

    mail = load_scenario(SCENARIOS / "irreversible.scn")
    for sid in mail.screens:
        if not mail.screens[sid].overlay:
            add(f"mail_{sid}", screen_raster(mail, sid))
            add(f"mail_{sid}_banner", screen_raster(mail, sid, banner=True))
            pairs.append((f"mail_{sid}", f"mail_{sid}_banner", "same"))

    dense = load_scenario(dense_screen_document())
    add("dense", screen_raster(dense, "dense"))
    add("dense_banner", screen_raster(dense, "dense", banner=True))
    pairs += [("dense", "dense_banner", "same"), ("dense", "wifi_settings", "diff")]

    add("wifi_settings_inverted", 255 - images["wifi_settings"])
    pairs.append(("wifi_settings", "wifi_settings_inverted", "diff"))
    add("constant_gray", np.full((480, 240), 128, dtype=np.uint8))

    rows = []
    for a, b, rel in pairs:
        d = bin(ref_phash(images[a]) ^ ref_phash(images[b])).count("1")
        rows.append((a, b, rel, d))
    with open(out / "manifest.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["fixture_a", "fixture_b", "relation", "expected_distance"])
        w.writerows(rows)
    hashes = {name: f"{ref_phash(img):016x}" for name, img in sorted(images.items())}
    (out / "hashes.json").write_text(json.dumps(hashes, indent=1) + "\n")
    for a, b, rel, d in rows:
        print(f"{rel:5s} {d:3d}  {a} / {b}")


# --- relevance ------------------------------------------------------------

def ref_embed(text: str, dim: int = 256) -> np.ndarray:
    v = np.zeros(dim)
    low = text.lower()
    words = re.findall(r"[a-z0-9]+", low)
    for chunk in re.split(r"[^a-z0-9-]+", low):
        parts = [p for p in chunk.split("-")]
        if len(parts) > 1 and all(parts):
            words.append("".join(parts))
    for tok in words:
        v[int.from_bytes(hashlib.blake2b(tok.encode(), digest_size=8).digest(), "big") % dim] += 1
    return v


def ref_cosine(a: str, b: str) -> float:
    x, y = ref_embed(a), ref_embed(b)
    nx, ny = np.linalg.norm(x), np.linalg.norm(y)
    return 0.0 if nx == 0 or ny == 0 else float(x @ y / (nx * ny))


def build_relevance():
    goal = "Turn on Wi-Fi"
    texts = {
        "wifi": "Wi-Fi | settings:id/wifi",
        "bluetooth": "Bluetooth | settings:id/bluetooth",
        "display": "Display | settings:id/display",
    }
    pool = ["Use Wi-Fi | settings:id/use_wifi", "Saved networks | settings:id/saved_networks", "Wi-Fi is on",
            "Bluetooth | settings:id/bluetooth", "Available networks | settings:id/network_list", "HomeNet | settings:id/network_0"]
    doc = {
        "goal": goal,
        "cosine_turn_on_wifi_vs_wifi": ref_cosine("turn on wifi", "Wi-Fi"),
        "cosine_turn_on_wifi_vs_bluetooth": ref_cosine("turn on wifi", "Bluetooth"),
        "scores": {k: ref_cosine(t, goal) for k, t in texts.items()},
        "pool": {t: ref_cosine(t, goal) for t in pool},
    }
    (FIXTURES / "relevance.json").write_text(json.dumps(doc, indent=1) + "\n")
    print(json.dumps(doc, indent=1))


def build_dense():
    (SCENARIOS / "dense.scn").write_text(yaml.safe_dump(dense_screen_document(), sort_keys=False, width=120))


GOLDEN_RUNS = [
    ("settings_wifi", SCENARIOS / "settings_wifi.scn"),
    ("medium_03", SUITES / "default" / "medium_03.scn"),
    ("hard_01", SUITES / "default" / "hard_01.scn"),
]

MINI_SUITE = {
    "schema_version": 1,
    "name": "mini",
    "repeats": 1,
    "seeds": [3],
    "max_steps": 25,
    "entries": [
        {"scenario": "../../../src/uiexplore/data/scenarios/settings_wifi.scn", "goal": "wifi_enabled", "difficulty": "easy"},
        {"scenario": "../../../src/uiexplore/data/suites/default/medium_05.scn", "goal": "reach_goal", "difficulty": "medium"},
        {"scenario": "../../../src/uiexplore/data/suites/default/hard_01.scn", "goal": "reach_goal", "difficulty": "hard"},
    ],
}


def build_suites():
    for name in ("default", "tiers"):
        for old in (SUITES / name).glob("*"):
            old.unlink()
        write_suite(SUITES / name, name)


def build_golden():
    out = FIXTURES / "golden"
    out.mkdir(parents=True, exist_ok=True)
    for name, path in GOLDEN_RUNS:
        for mode in ("sequential", "explore"):
            config = PipelineConfig(exploration_enabled=(mode == "explore"), seed=11)
            _, lines = run_traced(path, None, path.with_suffix(".oracle"), config)
            (out / f"{name}.{mode}.trace").write_text("\n".join(lines) + "\n")
    suite_path = out / "mini_suite.yaml"
    suite_path.write_text(yaml.safe_dump(MINI_SUITE, sort_keys=False))
    report = run_suite(load_suite(suite_path))
    (out / "mini_report.jsonl").write_text(emit_report(report, "machine"))


if __name__ == "__main__":
    build_suites()
    build_dense()
    build_phash_corpus()
    build_relevance()
    build_golden()
