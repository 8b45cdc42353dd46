"""Decision makers: a scripted oracle for simulation and an HTTP chat-completion client."""

from __future__ import annotations

import base64
import io
import logging
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Protocol, Sequence, Union

import requests
import yaml

from .core import Action, ScreenSnapshot, UiElement, parse_action
from .hints import PromptBundle, hinted_labels

logger = logging.getLogger(__name__)

DEFAULT_MARGIN = 0.2
DEFAULT_FLOOR_S = 5.0
EMA_ALPHA = 0.5

_TRIED_RE = re.compile(r'^\s*\d+\.\s.*-> "(.*)"\s*$', re.MULTILINE)
_PLACEHOLDER_RE = re.compile(r"\{(index:[^{}]+|first_untried)\}")


class ReasonerUnavailable(RuntimeError):
    pass


class OracleScriptError(ValueError):
    pass


@dataclass(frozen=True)
class ReasonerOutput:
    raw_text: str
    decided_action: Action
    reported_latency: float


class Reasoner(Protocol):
    def decide(self, bundle: PromptBundle, snapshot: ScreenSnapshot, step: int = 1) -> ReasonerOutput: ...


# --- scripted oracle ------------------------------------------------------

PREDICATES = (
    "has_label",
    "has_resource_id",
    "hint_mentions",
    "step",
    "step_at_least",
    "elements_at_most",
    "elements_at_least",
)


@dataclass(frozen=True)
class OracleRule:
    when: Mapping[str, Any]
    do: str
    hint_aware: bool = False


@dataclass(frozen=True)
class OracleScript:
    rules: tuple
    default_action: Optional[str] = None
    fixed_latency: float = 10.0

    def __post_init__(self):
        if not self.rules and self.default_action is None:
            raise OracleScriptError("an oracle script needs rules or a default action")
        if self.fixed_latency <= 0:
            raise OracleScriptError("fixed_latency must be positive")

    def hint_blind(self) -> "OracleScript":
        """Same script with every hint-reading rule removed."""
        return OracleScript(tuple(r for r in self.rules if not r.hint_aware), self.default_action, self.fixed_latency)


def oracle_from_dict(doc: Mapping) -> OracleScript:
    if doc.get("schema_version") != 1:
        raise OracleScriptError("unsupported oracle schema_version")
    rules = []
    for i, raw in enumerate(doc.get("rules") or []):
        when = dict(raw.get("when") or {})
        unknown = set(when) - set(PREDICATES)
        if unknown:
            raise OracleScriptError(f"rule {i}: unknown predicates {sorted(unknown)}")
        if "do" not in raw:
            raise OracleScriptError(f"rule {i}: missing 'do'")
        rules.append(OracleRule(when, str(raw["do"]), bool(raw.get("hint_aware", False))))
    default = doc.get("default")
    return OracleScript(tuple(rules), None if default is None else str(default), float(doc.get("fixed_latency_s", 10.0)))


def load_oracle(document: Union[str, Path, Mapping]) -> OracleScript:
    if isinstance(document, Mapping):
        return oracle_from_dict(document)
    if isinstance(document, Path) or (isinstance(document, str) and "\n" not in document and document.endswith((".oracle", ".yaml", ".yml"))):
        document = Path(document).read_text()
    return oracle_from_dict(yaml.safe_load(document))


def tried_labels(task_text: str) -> set:
    """Names of elements already clicked on the main trajectory, from the history lines."""
    return set(_TRIED_RE.findall(task_text))


def _by_name(snapshot: ScreenSnapshot, name: str) -> Optional[UiElement]:
    for e in snapshot.elements:
        if e.clickable and e.name == name:
            return e
    return None


def _matches(when: Mapping[str, Any], bundle: PromptBundle, snapshot: ScreenSnapshot, step: int) -> bool:
    clickable = [e for e in snapshot.elements if e.clickable]
    for key, value in when.items():
        if key == "has_label" and not any(e.label == value for e in snapshot.elements):
            return False
        if key == "has_resource_id" and not any(e.resource_id == value for e in snapshot.elements):
            return False
        if key == "hint_mentions" and value not in hinted_labels(bundle.hint_block):
            return False
        if key == "step" and step != int(value):
            return False
        if key == "step_at_least" and step < int(value):
            return False
        if key == "elements_at_most" and len(clickable) > int(value):
            return False
        if key == "elements_at_least" and len(clickable) < int(value):
            return False
    return True


def _instantiate(template: str, bundle: PromptBundle, snapshot: ScreenSnapshot) -> Optional[str]:
    """Fill element placeholders; None when one cannot be resolved on this screen."""
    failed = False

    def fill(m: re.Match) -> str:
        nonlocal failed
        token = m.group(1)
        if token == "first_untried":
            tried = tried_labels(bundle.task_text)
            element = next((e for e in snapshot.elements if e.clickable and e.name not in tried), None)
        else:
            element = _by_name(snapshot, token[len("index:"):])
        if element is None:
            failed = True
            return ""
        return str(element.index)

    text = _PLACEHOLDER_RE.sub(fill, template)
    return None if failed else text


class ScriptedReasoner:
    """Deterministic rule-based stand-in for a vision-language model."""

    def __init__(self, script: OracleScript):
        self.script = script
        self.calls = 0

    def decide(self, bundle: PromptBundle, snapshot: ScreenSnapshot, step: int = 1) -> ReasonerOutput:
        self.calls += 1
        text = None
        for rule in self.script.rules:
            if _matches(rule.when, bundle, snapshot, step):
                text = _instantiate(rule.do, bundle, snapshot)
                if text is not None:
                    break
        if text is None:
            if self.script.default_action is None:
                raise ReasonerUnavailable("no oracle rule applies and no default action is set")
            text = self.script.default_action
        return ReasonerOutput(text, parse_action(text, snapshot), self.script.fixed_latency)


# --- remote endpoint ------------------------------------------------------

SYSTEM_PROMPT = (
    "You control a phone through its screen. Reply with exactly one action from: "
    'CLICK(<index>), CLICK_XY(<x>,<y>), TYPE("<text>"), SCROLL(<up|down|left|right>), '
    'BACK, HOME, OPEN_APP("<name>"), DONE.'
)


def encode_image(raster, image_format: str = "png") -> str:
    from PIL import Image

    buf = io.BytesIO()
    Image.fromarray(raster).save(buf, format=image_format.upper())
    return base64.b64encode(buf.getvalue()).decode("ascii")


@dataclass
class RemoteReasoner:
    endpoint_url: str
    model: str
    timeout_s: float = 120.0
    retries: int = 1
    image_format: str = "png"
    api_key: Optional[str] = None
    session: requests.Session = field(default_factory=requests.Session, repr=False)

    @classmethod
    def from_config(cls, config: Mapping[str, Any]) -> "RemoteReasoner":
        keys = ("endpoint_url", "model", "timeout_s", "retries", "image_format", "api_key")
        return cls(**{k: config[k] for k in keys if k in config})

    def payload(self, bundle: PromptBundle) -> Dict[str, Any]:
        text = "\n\n".join(p for p in (bundle.system_text or SYSTEM_PROMPT, bundle.task_text, bundle.hint_block) if p)
        content: List[Dict[str, Any]] = [{"type": "text", "text": text}]
        if bundle.screenshot is not None:
            data = encode_image(bundle.screenshot, self.image_format)
            url = f"data:image/{self.image_format};base64,{data}"
            content.append({"type": "image_url", "image_url": {"url": url}})
        return {"model": self.model, "messages": [{"role": "user", "content": content}]}

    def _post(self, body: Dict[str, Any]) -> str:
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        last_error: Optional[Exception] = None
        for attempt in range(self.retries + 1):
            try:
                resp = self.session.post(self.endpoint_url, json=body, headers=headers, timeout=self.timeout_s)
                resp.raise_for_status()
                return resp.json()["choices"][0]["message"]["content"]
            except (requests.RequestException, KeyError, IndexError, ValueError) as exc:
                last_error = exc
                logger.warning("reasoner request attempt %d failed: %s", attempt + 1, exc)
        raise ReasonerUnavailable(f"endpoint {self.endpoint_url} failed: {last_error}")

    def decide(self, bundle: PromptBundle, snapshot: ScreenSnapshot, step: int = 1) -> ReasonerOutput:
        t0 = time.monotonic()
        text = self._post(self.payload(bundle))
        latency = time.monotonic() - t0
        return ReasonerOutput(text, parse_action(text, snapshot), latency)


# --- exploration budget ---------------------------------------------------


def estimate_budget(latency_history: Sequence[float], margin: float = DEFAULT_MARGIN, floor: float = DEFAULT_FLOOR_S) -> float:
    if not 0 < margin < 1:
        raise ValueError("margin must be in (0, 1)")
    if not latency_history:
        return floor
    ema = latency_history[0]
    for x in latency_history[1:]:
        ema = EMA_ALPHA * x + (1 - EMA_ALPHA) * ema
    return ema * (1 - margin)
