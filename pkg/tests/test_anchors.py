"""Symbol grounding: registry mechanics plus the two reference agents
(the gated loop walker and the desirability-map forager)."""

import numpy as np
import pytest
from scipy.stats import binomtest

from sailkit.anchors import (
    AnchorApi,
    AnchorKind,
    AnchorRegistry,
    AnchorTrigger,
    Direction,
    DuplicateAnchor,
    SemanticAnchor,
    UnknownInternalVariable,
    UnresolvedSymbol,
    symbol_action,
)
from sailkit.ontology import load_ontology
from sailkit.scenario import data_path
from sailkit.sim import LoopAgent, MapAgent


@pytest.fixture(scope="module")
def demo_ontology():
    return load_ontology(data_path("ontologies", "demo.ont.json"))


def gateway_anchor(agent="loop", symbol="prohibited(turn_left)",
                   variable="t1_permitted", on_active=False,
                   anchor_id="a1") -> SemanticAnchor:
    return SemanticAnchor(
        anchor_id=anchor_id,
        hatcl_symbol=symbol,
        agent_id=agent,
        direction=Direction.INBOUND,
        kind=AnchorKind.GATEWAY,
        binding={"variable": variable, "on_active": on_active},
    )


class TestSymbolParsing:
    def test_deontic_patterns(self):
        assert symbol_action("prohibited(turn_left)") == "turn_left"
        assert symbol_action("obligated(NotifyOperator)") == "NotifyOperator"
        assert symbol_action("HostileContact") is None


class TestRegistry:
    def test_unresolved_symbol(self, demo_ontology):
        registry = AnchorRegistry(demo_ontology)
        registry.attach_api("loop", LoopAgent().api)
        with pytest.raises(UnresolvedSymbol):
            registry.register_anchor(gateway_anchor(symbol="prohibited(warp)"))

    def test_duplicate_anchor(self, demo_ontology):
        registry = AnchorRegistry(demo_ontology)
        registry.attach_api("loop", LoopAgent().api)
        registry.register_anchor(gateway_anchor())
        with pytest.raises(DuplicateAnchor):
            registry.register_anchor(gateway_anchor(anchor_id="a2"))

    def test_unknown_variable(self, demo_ontology):
        registry = AnchorRegistry(demo_ontology)
        registry.attach_api("loop", LoopAgent().api)
        with pytest.raises(UnknownInternalVariable):
            registry.register_anchor(gateway_anchor(variable="warp_drive"))

    def test_no_api_attached(self, demo_ontology):
        registry = AnchorRegistry(demo_ontology)
        with pytest.raises(UnknownInternalVariable):
            registry.register_anchor(gateway_anchor())

    def test_deactivation_restores_saved_value(self, demo_ontology):
        agent = LoopAgent()
        registry = AnchorRegistry(demo_ontology)
        registry.attach_api("loop", agent.api)
        registry.register_anchor(gateway_anchor())
        assert agent.t1_permitted is True
        registry.ground("loop", AnchorTrigger("prohibited(turn_left)", "activate"))
        assert agent.t1_permitted is False
        registry.ground("loop", AnchorTrigger("prohibited(turn_left)", "deactivate"))
        assert agent.t1_permitted is True

    def test_outbound_rule_lifting(self, demo_ontology):
        registry = AnchorRegistry(demo_ontology)
        registry.attach_api("uav", AnchorApi())
        registry.register_anchor(SemanticAnchor(
            anchor_id="p1",
            hatcl_symbol="move_straight",
            agent_id="uav",
            direction=Direction.OUTBOUND,
            kind=AnchorKind.GATEWAY,
            binding={"rules": [
                {"when": {"kind": "detection", "class": "hostile"},
                 "emit": {"type": "HostileContact", "at": "$cell"}},
            ]},
        ))
        assertion = registry.lift("uav", {"kind": "detection", "class": "hostile",
                                          "cell": [3, 4]})
        assert assertion == {"type": "HostileContact", "at": [3, 4]}
        assert registry.lift("uav", {"kind": "detection", "class": "friendly"}) is None

    def test_translating_routine(self, demo_ontology):
        calls = []
        api = AnchorApi()
        api.expose_routine("note", lambda phase, payload: calls.append(phase))
        registry = AnchorRegistry(demo_ontology)
        registry.attach_api("agent", api)
        registry.register_anchor(SemanticAnchor(
            anchor_id="t1",
            hatcl_symbol="turn_right",
            agent_id="agent",
            direction=Direction.INBOUND,
            kind=AnchorKind.TRANSLATING,
            binding={"routine": "note"},
        ))
        registry.ground("agent", AnchorTrigger("turn_right", "activate"))
        registry.ground("agent", AnchorTrigger("turn_right", "deactivate"))
        assert calls == ["activate", "deactivate"]


class TestLoopAgent:
    def _grounded(self, demo_ontology):
        agent = LoopAgent()
        registry = AnchorRegistry(demo_ontology)
        registry.attach_api("loop", agent.api)
        registry.register_anchor(gateway_anchor())
        return agent, registry

    def test_unconstrained_cycle(self, demo_ontology):
        agent, _ = self._grounded(demo_ontology)
        actions = [agent.step() for _ in range(6)]
        assert actions == ["turn_left", "turn_right", "move_straight"] * 2

    def test_no_turn_left_while_prohibited(self, demo_ontology):
        agent, registry = self._grounded(demo_ontology)
        registry.ground("loop", AnchorTrigger("prohibited(turn_left)", "activate"))
        actions = [agent.step() for _ in range(1000)]
        assert "turn_left" not in actions
        assert actions == ["turn_right", "move_straight"] * 500

    def test_turn_left_resumes_within_one_cycle(self, demo_ontology):
        agent, registry = self._grounded(demo_ontology)
        registry.ground("loop", AnchorTrigger("prohibited(turn_left)", "activate"))
        for _ in range(100):
            agent.step()
        registry.ground("loop", AnchorTrigger("prohibited(turn_left)", "deactivate"))
        resumed = [agent.step() for _ in range(3)]
        assert "turn_left" in resumed


class TestMapAgent:
    def test_floored_cells_never_entered(self):
        for seed in range(50):
            agent = MapAgent(seed=seed)
            agent.constrained = True
            for _ in range(60):
                forbidden = set(agent._left_cells())
                cell = agent.step()
                assert cell not in forbidden

    def test_argmax_and_tie_break(self):
        grid = np.zeros((5, 5))
        grid[2, 3] = 0.9   # north of center (x=2, y=3)
        agent = MapAgent(desirability=grid)
        assert agent.step() == (2, 3)
        # all equal now: ties break in N, NE, E, ... order
        agent2 = MapAgent(desirability=np.full((5, 5), 0.5))
        assert agent2.step() == (2, 3)

    def test_departed_cell_consumed(self):
        agent = MapAgent(seed=1)
        start = agent.position
        agent.step()
        assert agent.desirability[start] == 0.0

    def test_left_cells_relative_to_heading(self):
        agent = MapAgent(desirability=np.zeros((7, 7)))
        agent.position = (3, 3)
        agent.heading = (0, 1)  # facing north: left is west
        assert set(agent._left_cells()) == {(2, 3), (2, 4), (2, 2)}
        agent.heading = (1, 0)  # facing east: left is north
        assert set(agent._left_cells()) == {(3, 4), (4, 4), (2, 4)}

    def test_right_bias_sign_test(self):
        """Flooring the left side should push trajectories rightward
        relative to heading; paired sign test over 1,000 seeds."""
        wins = 0
        n = 1000
        for seed in range(n):
            base = MapAgent(seed=seed)
            constrained = MapAgent(seed=seed)
            constrained.constrained = True
            for _ in range(40):
                base.step()
                constrained.step()
            if constrained.net_lateral > base.net_lateral:
                wins += 1
            elif constrained.net_lateral == base.net_lateral:
                n -= 1  # ties carry no sign information
        result = binomtest(wins, n, 0.5, alternative="greater")
        assert result.pvalue < 0.01, (wins, n, result.pvalue)
