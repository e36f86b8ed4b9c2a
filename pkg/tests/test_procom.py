"""Interruption policy: relevance scoring, operator-load model, and
interaction selection."""

import pytest

from sailkit.agreements import Predicate
from sailkit.ontology import load_ontology
from sailkit.procom import ProCom, ProComConfig, SubscriptionPattern
from sailkit.scenario import data_path


@pytest.fixture(scope="module")
def military():
    return load_ontology(data_path("ontologies", "military.ont.json"))


def procom(ontology, team_mode="ManagementByException", **overrides) -> ProCom:
    return ProCom(ProComConfig(**overrides), ontology, team_mode)


class TestRelevance:
    def test_rule_table_ordering(self, military):
        pc = procom(military)
        scores = {}
        for concept in ("HostileContact", "WaViolation", "LowBattery",
                        "UnknownContact", "FriendlyContact"):
            topic = pc.observe({"type": concept, "contact": concept}, 1, "UAV1")
            scores[concept] = pc.assess_relevance(topic, [])
        assert scores["HostileContact"] == 1.0
        assert scores["WaViolation"] == 1.0
        assert scores["LowBattery"] == 0.9
        assert scores["UnknownContact"] == 0.6
        assert scores["FriendlyContact"] == 0.2
        assert scores["HostileContact"] > scores["FriendlyContact"]

    def test_routine_topic_base_relevance(self, military):
        pc = procom(military)
        topic = pc.observe({"type": "WaypointReached", "at": [1, 1]}, 1, "UAV1")
        assert pc.assess_relevance(topic, []) == 0.1

    def test_subscription_override(self, military):
        pc = procom(military)
        topic = pc.observe({"type": "FriendlyContact", "contact": "c1"}, 1, "UAV1")
        subs = [SubscriptionPattern(Predicate("type", "=", "FriendlyContact"))]
        assert pc.assess_relevance(topic, subs) == 0.9

    def test_override_never_lowers(self, military):
        pc = procom(military)
        topic = pc.observe({"type": "HostileContact", "contact": "c1"}, 1, "UAV1")
        subs = [SubscriptionPattern(Predicate("type", "=", "HostileContact"))]
        assert pc.assess_relevance(topic, subs) == 1.0


class TestUserState:
    def test_zero_load_fixed_point(self, military):
        pc = procom(military)
        pc.assess_user_state(0, 1)
        assert pc.user_state.cognitive_load == 0.0

    def test_two_interactions(self, military):
        pc = procom(military)
        pc.assess_user_state(2, 1)
        assert pc.user_state.cognitive_load == pytest.approx(0.30)

    def test_decay_over_fifty_idle_ticks(self, military):
        pc = procom(military)
        pc.user_state.cognitive_load = 1.0
        for tick in range(50):
            pc.assess_user_state(0, tick)
        assert pc.user_state.cognitive_load == pytest.approx(0.95 ** 50)
        assert pc.user_state.cognitive_load == pytest.approx(0.0769, abs=5e-4)

    def test_load_clamped_to_one(self, military):
        pc = procom(military)
        for tick in range(20):
            pc.assess_user_state(10, tick)
        assert pc.user_state.cognitive_load == 1.0


class TestSelection:
    def test_theta_formula(self, military):
        cfg = ProComConfig()
        assert cfg.theta(0.0) == pytest.approx(0.3)
        assert cfg.theta(0.8) == pytest.approx(0.7)
        assert cfg.theta(1.0) == pytest.approx(0.8)

    def test_hostile_delivers_at_any_load(self, military):
        pc = procom(military)
        pc.user_state.cognitive_load = 1.0
        topic = pc.observe({"type": "HostileContact", "contact": "c1"}, 1, "UAV1")
        decision = pc.select_interaction(topic, 1.0, 1)
        assert decision.kind == "deliver"
        assert set(decision.modality) == {"tile", "text"}

    def test_friendly_suppressed_at_zero_load(self, military):
        pc = procom(military)
        topic = pc.observe({"type": "FriendlyContact", "contact": "c1"}, 1, "UAV1")
        assert pc.select_interaction(topic, 0.2, 1).kind == "suppress"

    def test_unknown_deferred_at_high_load(self, military):
        pc = procom(military)
        pc.user_state.cognitive_load = 0.8  # theta = 0.7
        topic = pc.observe({"type": "UnknownContact", "contact": "c1"}, 1, "UAV1")
        assert pc.select_interaction(topic, 0.6, 1).kind == "defer"

    def test_violation_gets_voice_stub(self, military):
        pc = procom(military)
        topic = pc.observe({"type": "WaViolation", "wa_id": "wa-1",
                            "actor": "UAV1"}, 1, "UAV1")
        decision = pc.select_interaction(topic, 1.0, 1)
        assert "voice-stub" in decision.modality

    def test_load_monotonicity(self, military):
        """Raising load never converts a suppress into a deliver."""
        pc = procom(military)
        topic = pc.observe({"type": "UnknownContact", "contact": "c1"}, 1, "UAV1")
        kinds = []
        for load in [i / 20 for i in range(21)]:
            pc.user_state.cognitive_load = load
            kinds.append(pc.select_interaction(topic, 0.6, 1).kind)
        # deliver region comes first, then defer; never deliver after defer
        assert kinds == sorted(kinds, key=("deliver", "defer", "suppress").index)


class TestStep:
    def test_topic_folding(self, military):
        pc = procom(military)
        t1 = pc.observe({"type": "HostileContact", "contact": "c1", "at": [1, 1]},
                        1, "UAV1")
        t2 = pc.observe({"type": "HostileContact", "contact": "c1", "at": [1, 2]},
                        2, "UAV1")
        assert t1.topic_id == t2.topic_id
        assert t2.assertion["at"] == [1, 2]

    def test_unchanged_known_topic_suppressed(self, military):
        pc = procom(military)
        assertion = {"type": "HostileContact", "contact": "c1"}
        pc.observe(assertion, 1, "UAV1")
        first = pc.step(1)
        assert [d.kind for d in first] == ["deliver"]
        pc.observe(dict(assertion), 2, "UAV1")
        assert pc.step(2) == []  # same payload, operator already aware

    def test_changed_payload_redelivered(self, military):
        pc = procom(military)
        pc.observe({"type": "HostileContact", "contact": "c1", "at": [1, 1]}, 1, "UAV1")
        pc.step(1)
        pc.observe({"type": "HostileContact", "contact": "c1", "at": [2, 2]}, 5, "UAV1")
        kinds = [d.kind for d in pc.step(5)]
        assert kinds == ["deliver"]

    def test_retraction_on_resolution(self, military):
        pc = procom(military)
        pc.observe({"type": "HostileContact", "contact": "c1"}, 1, "UAV1")
        (deliver,) = pc.step(1)
        assert "tile" in deliver.modality
        pc.observe({"type": "ContactLost", "contact": "c1"}, 9, "UAV1")
        decisions = pc.step(9)
        assert [d.kind for d in decisions] == ["retract"]
        assert decisions[0].topic_id == deliver.topic_id

    def test_delivery_raises_load(self, military):
        pc = procom(military)
        pc.observe({"type": "HostileContact", "contact": "c1"}, 1, "UAV1")
        pc.step(1)
        assert pc.user_state.cognitive_load == pytest.approx(0.15)

    def test_hostile_latency_bound(self, military):
        """A hostile topic is delivered within 2 ticks of its first event,
        at any prior load."""
        for load in (0.0, 0.5, 1.0):
            pc = procom(military)
            pc.user_state.cognitive_load = load
            pc.observe({"type": "HostileContact", "contact": "c1"}, 10, "UAV1")
            delivered_at = None
            for tick in (10, 11):
                if any(d.kind == "deliver" for d in pc.step(tick)):
                    delivered_at = tick
                    break
            assert delivered_at is not None and delivered_at - 10 <= 2

    def test_screen_budget_caps_tiles(self, military):
        pc = procom(military, screen_budget=2)
        for i in range(4):
            pc.observe({"type": "HostileContact", "contact": f"c{i}"}, 1, "UAV1")
        decisions = pc.step(1)
        tiles = [d for d in decisions if "tile" in d.modality]
        assert len(tiles) == 2
        assert all(d.kind == "deliver" for d in decisions)
