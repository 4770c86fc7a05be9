"""Python bindings for the discourse engine.

Structured results are returned as plain dicts and lists.
"""

import json as _json

from . import _core
from ._core import (
    BudgetExhausted,
    EmptyMapError,
    GatewayError,
    PreconditionError,
    SchemaError,
    StateError,
    cosine,
    info_diversity,
    rerank_score,
    scripted_gateways,
    template_ids,
    template_text,
)

__all__ = [
    "BudgetExhausted",
    "EmptyMapError",
    "GatewayError",
    "PreconditionError",
    "SchemaError",
    "StateError",
    "Session",
    "cosine",
    "info_diversity",
    "insertion_benchmark",
    "load_wildseek",
    "next_actor",
    "replay",
    "rerank_score",
    "run_budgeted",
    "scripted_gateways",
    "template_ids",
    "template_text",
]


class Session:
    """One discourse session. `config` overrides engine settings by key."""

    def __init__(self, topic, gateways, goal=None, config=None, log_path=None, _core_session=None):
        if _core_session is not None:
            self._s = _core_session
        else:
            self._s = _core.Session(
                topic,
                goal,
                _json.dumps(config) if config else "",
                gateways,
                log_path,
            )

    def step(self):
        return _json.loads(self._s.step_json())

    def inject(self, text):
        self._s.inject(text)

    def snapshot(self):
        return _json.loads(self._s.snapshot_json())

    def mind_map(self):
        return _json.loads(self._s.mind_map_json())

    def report(self):
        return _json.loads(self._s.report_json())

    def report_markdown(self):
        return self._s.report_markdown()

    def events(self):
        return [_json.loads(line) for line in self._s.events_jsonl().splitlines() if line]

    def events_jsonl(self):
        return self._s.events_jsonl()

    @property
    def terminated(self):
        return self._s.terminated

    @property
    def turns(self):
        return self._s.turns


def replay(events_jsonl, gateways):
    """Re-executes a logged session and verifies every event."""
    return Session(None, gateways, _core_session=_core.replay(events_jsonl, gateways))


def next_actor(state):
    return _json.loads(_core.next_actor_json(_json.dumps(state)))


def load_wildseek(path):
    return _json.loads(_core.load_wildseek_json(path))


def run_budgeted(pipeline, topic, goal, budget, gateways):
    return _json.loads(_core.run_budgeted_json(pipeline, topic, goal, budget, gateways))


def insertion_benchmark(tasks_path, method, gateways):
    return _json.loads(_core.insertion_benchmark_json(tasks_path, method, gateways))
