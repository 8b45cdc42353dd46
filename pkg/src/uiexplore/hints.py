"""Turn exploration observations into short prompt hints."""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .core import TaskGoal, UiElement, element_text_repr
from .explorer import ObservationRecord
from .phash import Hash64, hamming
from .relevance import Embedder, relevance_score

HINT_HEADER = "Exploration hints (verified reachable from this screen):"
DEFAULT_DELTA = 10
DEFAULT_K_MAX = 3
DEFAULT_CHAR_BUDGET = 400

_LINE_RE = re.compile(r'^Tapping "(.*)" leads to a screen containing: (.*)$')

Selected = Tuple[UiElement, str, float]


@dataclass(frozen=True)
class Hint:
    via_label: str
    discovered_labels: Tuple[str, ...]
    score: float

    def __post_init__(self):
        if not self.via_label or not self.discovered_labels:
            raise ValueError("a hint needs a via label and at least one discovered label")

    def render(self) -> str:
        return f'Tapping "{self.via_label}" leads to a screen containing: {", ".join(self.discovered_labels)}'


@dataclass(frozen=True, eq=False)
class PromptBundle:
    system_text: str
    task_text: str
    hint_block: str = ""
    screenshot: Optional[np.ndarray] = None

    def text(self) -> str:
        parts = [self.system_text, self.task_text]
        if self.hint_block:
            parts.append(self.hint_block)
        return "\n\n".join(p for p in parts if p)

    def __eq__(self, other):
        if not isinstance(other, PromptBundle):
            return NotImplemented
        return (self.system_text, self.task_text, self.hint_block) == (
            other.system_text,
            other.task_text,
            other.hint_block,
        ) and self.screenshot is other.screenshot


def align_observations(obs: Sequence[ObservationRecord], h_current: Hash64, delta: int = DEFAULT_DELTA) -> List[ObservationRecord]:
    if not 0 <= delta <= 64:
        raise ValueError("delta must be in [0, 64]")
    return [o for o in obs if hamming(o.screen_hash, h_current) < delta]


def select_elements(
    matched: Sequence[ObservationRecord],
    goal: TaskGoal,
    k_max: int = DEFAULT_K_MAX,
    embedder: Optional[Embedder] = None,
) -> List[Selected]:
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    best = {}  # repr -> (score, first-seen order, element, via)
    order = 0
    for o in matched:
        for e in o.elements:
            text = element_text_repr(e)
            if not text:
                continue
            score = relevance_score(e, goal, embedder)
            if text not in best:
                best[text] = (score, order, e, o.via_label)
                order += 1
            elif score > best[text][0]:
                best[text] = (score, best[text][1], e, o.via_label)
    ranked = sorted(best.values(), key=lambda item: (-item[0], item[1]))
    return [(e, via, score) for score, _, e, via in ranked[:k_max]]


def build_hints(selected: Sequence[Selected]) -> List[Hint]:
    """Group selected elements by the element that led to them, best group first."""
    groups = {}
    for element, via, score in sorted(selected, key=lambda s: -s[2]):
        labels, top = groups.get(via, ((), score))
        groups[via] = (labels + (element.name,), top)
    return [Hint(via, labels, top) for via, (labels, top) in groups.items()]


def render_hints(selected: Sequence[Selected], char_budget: int = DEFAULT_CHAR_BUDGET) -> str:
    out = []
    used = 0
    for hint in build_hints(selected):
        line = hint.render()
        extra = len(line) + (1 if out else 0)
        if used + extra > char_budget:
            break
        out.append(line)
        used += extra
    return "\n".join(out)


def augment_prompt(base: PromptBundle, hints_text: str, char_budget: int = DEFAULT_CHAR_BUDGET) -> PromptBundle:
    """Attach hints under the fixed header, dropping trailing lines that overflow the budget."""
    if not hints_text:
        return base
    lines = hints_text.split("\n")
    while lines:
        block = "\n".join([HINT_HEADER, *lines])
        if len(block) <= char_budget:
            return replace(base, hint_block=block)
        lines.pop()
    return base


def parse_hint_block(text: str) -> List[Hint]:
    hints = []
    for line in text.splitlines():
        m = _LINE_RE.match(line.strip())
        if m:
            hints.append(Hint(m.group(1), tuple(m.group(2).split(", ")), 0.0))
    return hints


def hinted_labels(text: str) -> set:
    return {label for h in parse_hint_block(text) for label in h.discovered_labels}
