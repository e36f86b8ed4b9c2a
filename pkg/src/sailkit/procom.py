"""Proactive communication: decide whether, when, and how to interrupt the
operator.

Three stages per tick: fold incoming assertions into topics and score their
relevance; update the modeled operator state (cognitive load decays, grows
with each interaction); select an interaction per pending topic.  Numeric
constants live in :class:`ProComConfig` and can be overridden from scenario
config; the relevance ordering (hostile > unknown > friendly > routine) is
what the rest of the system relies on.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

from .agreements import Condition, Event, EventKind, eval_condition
from .ontology import Ontology, is_a

DEFAULT_RULE_TABLE = {
    "HostileContact": 1.0,
    "WaViolation": 1.0,
    "LowBattery": 0.9,
    "UnknownContact": 0.6,
    "FriendlyContact": 0.2,
}
DEFAULT_BASE_RELEVANCE = 0.1


@dataclass(frozen=True)
class ProComConfig:
    theta_base: float = 0.3
    theta_slope: float = 0.5
    decay: float = 0.95          # cognitive-load decay per tick
    kappa: float = 0.15          # load added per interaction
    safety_floor: float = 0.9    # relevance at which delivery is unconditional
    suppress_floor: float = 0.3  # relevance below which topics are dropped
    subscription_override: float = 0.9
    screen_budget: int = 6       # max simultaneously open tiles
    rule_table: dict = field(default_factory=lambda: dict(DEFAULT_RULE_TABLE))

    def theta(self, load: float) -> float:
        return self.theta_base + self.theta_slope * load


@dataclass
class Topic:
    topic_id: str
    key: tuple
    assertion: dict
    first_tick: int
    last_update_tick: int
    relevance: float = 0.0
    status: str = "Open"  # Open | Resolved
    delivered_payload: str | None = None  # JSON of last delivered assertion
    tile_open: bool = False
    decided: str | None = None  # last decision kind for current payload


@dataclass
class UserState:
    cognitive_load: float = 0.0
    sa_topics: set = field(default_factory=set)
    last_interaction_tick: int = -1


@dataclass(frozen=True)
class Decision:
    kind: str  # deliver | defer | suppress | retract
    topic_id: str
    tick: int
    relevance: float = 0.0
    modality: tuple[str, ...] = ()
    assertion: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        return {
            "record": "decision",
            "kind": self.kind,
            "topic_id": self.topic_id,
            "tick": self.tick,
            "relevance": self.relevance,
            "modality": list(self.modality),
            "assertion": self.assertion,
        }


@dataclass(frozen=True)
class SubscriptionPattern:
    """Operator subscription used for the high-relevance override."""

    condition: Condition


def topic_key(assertion: dict, source: str) -> tuple:
    return (
        assertion.get("type"),
        assertion.get("contact") or assertion.get("actor") or source,
    )


class ProCom:
    def __init__(
        self,
        config: ProComConfig,
        ontology: Optional[Ontology],
        team_mode: str = "ManagementByException",
    ) -> None:
        self.config = config
        self.ontology = ontology
        self.team_mode = team_mode
        self.user_state = UserState()
        self.topics: dict[str, Topic] = {}
        self._by_key: dict[tuple, str] = {}
        self._counter = 0

    # -- stage 1: topics and relevance ------------------------------------

    def observe(self, assertion: dict, tick: int, source: str) -> Topic:
        """Fold an assertion into its topic (one topic per correlation key)."""
        if assertion.get("type") == "ContactLost":
            return self._resolve_contact(assertion, tick, source)
        key = topic_key(assertion, source)
        topic_id = self._by_key.get(key)
        if topic_id is None:
            self._counter += 1
            topic_id = f"topic{self._counter}"
            topic = Topic(topic_id, key, dict(assertion), tick, tick)
            self.topics[topic_id] = topic
            self._by_key[key] = topic_id
        else:
            topic = self.topics[topic_id]
            if topic.assertion != assertion:
                topic.assertion = dict(assertion)
                topic.decided = None  # payload changed: re-decide
            topic.last_update_tick = tick
            if topic.status == "Resolved":
                topic.status = "Open"
        return topic

    def _resolve_contact(self, assertion: dict, tick: int, source: str) -> Topic:
        contact = assertion.get("contact")
        for topic in self.topics.values():
            if topic.key[1] == contact and topic.status == "Open":
                topic.status = "Resolved"
                topic.last_update_tick = tick
                return topic
        # ContactLost without a matching open topic folds into its own topic
        key = topic_key(assertion, source)
        self._counter += 1
        topic = Topic(f"topic{self._counter}", key, dict(assertion), tick, tick,
                      status="Resolved")
        self.topics[topic.topic_id] = topic
        self._by_key[key] = topic.topic_id
        return topic

    def resolve_topic(self, topic_id: str, tick: int) -> None:
        topic = self.topics[topic_id]
        topic.status = "Resolved"
        topic.last_update_tick = tick

    def note_operator_query(self, topic_id: str) -> None:
        self.user_state.sa_topics.add(topic_id)

    def assess_relevance(
        self, topic: Topic, subscriptions: Iterable[SubscriptionPattern]
    ) -> float:
        base = DEFAULT_BASE_RELEVANCE
        concept = topic.assertion.get("type")
        if isinstance(concept, str):
            for name, score in self.config.rule_table.items():
                if concept == name or (
                    self.ontology is not None
                    and concept in self.ontology
                    and name in self.ontology
                    and is_a(self.ontology, concept, name)
                ):
                    base = max(base, score)
        probe = Event(topic.last_update_tick, "", EventKind.OBSERVATION_MADE, topic.assertion)
        for sub in subscriptions:
            if eval_condition(sub.condition, probe, self.ontology):
                base = max(base, self.config.subscription_override)
                break
        return base

    # -- stage 2: user state ----------------------------------------------

    def assess_user_state(self, interactions_this_tick: int, tick: int) -> UserState:
        load = self.user_state.cognitive_load * self.config.decay
        load += self.config.kappa * interactions_this_tick
        self.user_state.cognitive_load = min(1.0, max(0.0, load))
        if interactions_this_tick:
            self.user_state.last_interaction_tick = tick
        return self.user_state

    # -- stage 3: interaction selection -----------------------------------

    def select_interaction(self, topic: Topic, relevance: float, tick: int) -> Decision:
        cfg = self.config
        load = self.user_state.cognitive_load
        open_tiles = sum(1 for t in self.topics.values() if t.tile_open)
        is_violation = topic.assertion.get("type") == "WaViolation"
        payload = json.dumps(topic.assertion, sort_keys=True)

        if (
            self.team_mode == "ManagementByException"
            and topic.topic_id in self.user_state.sa_topics
            and topic.delivered_payload == payload
        ):
            return Decision("suppress", topic.topic_id, tick, relevance)

        if relevance >= cfg.safety_floor or relevance >= cfg.theta(load):
            modality = ["text"]
            if relevance >= cfg.safety_floor and open_tiles < cfg.screen_budget:
                modality.insert(0, "tile")
            if is_violation:
                modality.append("voice-stub")
            return Decision(
                "deliver", topic.topic_id, tick, relevance, tuple(modality),
                dict(topic.assertion),
            )
        if relevance >= cfg.suppress_floor:
            return Decision("defer", topic.topic_id, tick, relevance)
        return Decision("suppress", topic.topic_id, tick, relevance)

    # -- per-tick pass -----------------------------------------------------

    def step(
        self, tick: int, subscriptions: Iterable[SubscriptionPattern] = ()
    ) -> list[Decision]:
        subscriptions = list(subscriptions)
        decisions: list[Decision] = []

        # retract tiles of resolved topics
        for topic in self.topics.values():
            if topic.status == "Resolved" and topic.tile_open:
                topic.tile_open = False
                decisions.append(Decision("retract", topic.topic_id, tick))

        delivered = 0
        for topic in self.topics.values():
            if topic.status != "Open":
                continue
            payload = json.dumps(topic.assertion, sort_keys=True)
            if topic.delivered_payload == payload:
                continue  # current payload already shown
            relevance = self.assess_relevance(topic, subscriptions)
            topic.relevance = relevance
            decision = self.select_interaction(topic, relevance, tick)
            if decision.kind == "deliver":
                topic.delivered_payload = payload
                topic.decided = "deliver"
                if "tile" in decision.modality:
                    topic.tile_open = True
                self.user_state.sa_topics.add(topic.topic_id)
                delivered += 1
                decisions.append(decision)
            elif decision.kind != topic.decided:
                # record defer/suppress once per payload version
                topic.decided = decision.kind
                decisions.append(decision)

        self.assess_user_state(delivered, tick)
        return decisions
