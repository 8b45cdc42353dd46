"""Latency-hiding UI exploration for GUI-agent step loops.

While a (slow) reasoning model decides the next action, the agent probes
promising on-screen elements, restores the screen, and feeds what it saw
into the next prompt as short hints.
"""

from .core import Action, ActionKind, InteractionTrace, ScreenSnapshot, TaskGoal, UiElement, parse_action
from .explorer import ExplorationBudget, ExplorationContext, ObservationRecord, explore
from .hints import PromptBundle, align_observations, augment_prompt, render_hints, select_elements
from .phash import Hash64, hamming, phash
from .pipeline import PipelineConfig, StepRecord, TaskReport, Termination, run_mode_comparison, run_task
from .reasoner import RemoteReasoner, ScriptedReasoner, estimate_budget, load_oracle
from .relevance import HashingEmbedder, rank_candidates, relevance_score
from .rollback import RollbackLevel, RollbackOutcome, rollback

__version__ = "0.1.0"

__all__ = [
    "Action",
    "ActionKind",
    "ExplorationBudget",
    "ExplorationContext",
    "Hash64",
    "HashingEmbedder",
    "InteractionTrace",
    "ObservationRecord",
    "PipelineConfig",
    "PromptBundle",
    "RemoteReasoner",
    "RollbackLevel",
    "RollbackOutcome",
    "ScreenSnapshot",
    "ScriptedReasoner",
    "StepRecord",
    "TaskGoal",
    "TaskReport",
    "Termination",
    "UiElement",
    "align_observations",
    "augment_prompt",
    "estimate_budget",
    "explore",
    "hamming",
    "load_oracle",
    "parse_action",
    "phash",
    "rank_candidates",
    "relevance_score",
    "render_hints",
    "rollback",
    "run_mode_comparison",
    "run_task",
    "select_elements",
]
