"""Path expressions over published state trees."""

import pytest

from sailkit.query import MalformedQuery, evaluate_path, parse_path, subscription_concept

TREE = {
    "vehicles": {
        "UAV1": {"position": [10, 32], "battery": 0.9},
        "UAV2": {"position": [54, 20], "battery": 1.0},
    },
    "actors": {"Hum1": {"category": "Human"}},
}


class TestParse:
    def test_root_only(self):
        assert parse_path("$") == []

    def test_segments(self):
        assert parse_path("$.vehicles.UAV1.battery") == ["vehicles", "UAV1", "battery"]

    def test_wildcard(self):
        assert parse_path("$.vehicles.*") == ["vehicles", "*"]

    @pytest.mark.parametrize("bad", ["vehicles.*", "$.", "$..x", "$.a b", "$['a']"])
    def test_malformed(self, bad):
        with pytest.raises(MalformedQuery):
            parse_path(bad)


class TestEvaluate:
    def test_root_returns_tree(self):
        assert evaluate_path(TREE, "$") == [TREE]

    def test_child_chain(self):
        assert evaluate_path(TREE, "$.vehicles.UAV1.battery") == [0.9]

    def test_wildcard_document_order(self):
        assert evaluate_path(TREE, "$.vehicles.*") == [
            TREE["vehicles"]["UAV1"], TREE["vehicles"]["UAV2"],
        ]

    def test_missing_key_yields_empty(self):
        assert evaluate_path(TREE, "$.vehicles.UAV9") == []

    def test_wildcard_then_field(self):
        assert evaluate_path(TREE, "$.vehicles.*.battery") == [0.9, 1.0]


class TestSubscriptionConcept:
    def test_named_topic(self):
        assert subscription_concept("$.HostileContact") == "HostileContact"

    def test_wildcard_topic(self):
        assert subscription_concept("$.*") is None

    def test_deep_pattern_rejected(self):
        with pytest.raises(MalformedQuery):
            subscription_concept("$.a.b")
