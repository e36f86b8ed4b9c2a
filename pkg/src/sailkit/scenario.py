"""Scenario configuration: world layout, actors, pre-accepted agreements,
anchors, team mode, and numeric tuning, assembled into a ready runtime."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from .agents import Component, OperatorProxy, StateService, UavAgent
from .agreements import WorkAgreement
from .anchors import AnchorApi, AnchorKind, AnchorRegistry, Direction, SemanticAnchor
from .bus import PROCOM_ACTOR, Bus
from .ontology import Ontology, load_ontology
from .procom import ProCom, ProComConfig
from .sim import World

#: Standard outbound perception anchor: lifts raw detection/battery records
#: into ontology-level assertions.
PERCEPTION_RULES = [
    {"when": {"kind": "detection", "class": "hostile"},
     "emit": {"type": "HostileContact", "at": "$cell", "confidence": "$conf", "contact": "$contact"}},
    {"when": {"kind": "detection", "class": "unknown"},
     "emit": {"type": "UnknownContact", "at": "$cell", "confidence": "$conf", "contact": "$contact"}},
    {"when": {"kind": "detection", "class": "friendly"},
     "emit": {"type": "FriendlyContact", "at": "$cell", "confidence": "$conf", "contact": "$contact"}},
    {"when": {"kind": "battery"},
     "emit": {"type": "LowBattery", "actor": "$uav", "level": "$level"}},
    {"when": {"kind": "contact_lost"},
     "emit": {"type": "ContactLost", "contact": "$contact"}},
]


class ScenarioError(Exception):
    pass


@dataclass
class Scenario:
    doc: dict
    base_dir: Optional[Path] = None

    @property
    def scenario_id(self) -> str:
        return self.doc.get("id", "unnamed")

    @property
    def seed(self) -> int:
        return self.doc.get("seed", 0)


def data_path(*parts: str) -> Path:
    return Path(resources.files("sailkit").joinpath("data", *parts))


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioError(f"cannot load scenario {path}: {exc}") from exc
    return Scenario(doc, path.parent)


def load_script(path: str | Path) -> list[dict]:
    entries = []
    for line in Path(path).read_text().splitlines():
        if line.strip():
            entries.append(json.loads(line))
    return entries


def _resolve_ontology(scenario: Scenario) -> Ontology:
    ref = scenario.doc.get("ontology", "military.ont.json")
    candidates = []
    if scenario.base_dir is not None:
        candidates.append(scenario.base_dir / ref)
    candidates.append(data_path("ontologies", ref))
    for candidate in candidates:
        if candidate.exists():
            return load_ontology(candidate)
    raise ScenarioError(f"ontology file {ref!r} not found")


def build_runtime(
    scenario: Scenario,
    seed: Optional[int] = None,
    drop_agreements: tuple[str, ...] = (),
) -> Bus:
    """Assemble a bus from a scenario.

    ``drop_agreements`` removes named pre-accepted agreements, for mutation
    controls.
    """
    doc = scenario.doc
    ontology = _resolve_ontology(scenario)
    seed = scenario.seed if seed is None else seed
    world = World.from_doc(doc.get("world", {}), seed=seed) if "world" in doc else None

    procom_cfg = ProComConfig(**doc.get("procom", {}))
    team_mode = doc.get("team_mode", "ManagementByException")
    operator = doc.get("operator", "Hum1")
    procom = ProCom(procom_cfg, ontology, team_mode)

    bus = Bus(
        ontology=ontology,
        world=world,
        team_mode=team_mode,
        operator_id=operator,
        procom=procom,
        scenario_id=scenario.scenario_id,
        seed=seed,
    )

    bus.register_component(OperatorProxy(operator))
    procom_stub = Component()
    procom_stub.actor_id = PROCOM_ACTOR
    bus.register_component(procom_stub)
    if world is not None:
        bus.register_component(StateService(world, bus.roster))
        for uav_id in sorted(world.uavs):
            agent = UavAgent(world.uavs[uav_id], world)
            bus.register_component(agent)
            bus.anchors.attach_api(uav_id, AnchorApi())
            bus.anchors.register_anchor(
                SemanticAnchor(
                    anchor_id=f"perception-{uav_id}",
                    hatcl_symbol="Contact",
                    agent_id=uav_id,
                    direction=Direction.OUTBOUND,
                    kind=AnchorKind.GATEWAY,
                    binding={"rules": PERCEPTION_RULES},
                )
            )

    for anchor_doc in doc.get("anchors", []):
        bus.anchors.register_anchor(
            SemanticAnchor(
                anchor_id=anchor_doc.get("anchor_id", f"anchor-{anchor_doc['symbol']}"),
                hatcl_symbol=anchor_doc["symbol"],
                agent_id=anchor_doc["agent"],
                direction=Direction(anchor_doc["direction"]),
                kind=AnchorKind(anchor_doc["kind"]),
                binding=anchor_doc.get("binding", {}),
            )
        )

    for wa_doc in doc.get("pre_accepted_was", []):
        if wa_doc["wa_id"] in drop_agreements:
            continue
        bus.engine.register_accepted(WorkAgreement.from_doc(wa_doc), provenance="scenario")

    return bus


def run_scenario(
    scenario: Scenario,
    ticks: int,
    seed: Optional[int] = None,
    script: Optional[list[dict]] = None,
    drop_agreements: tuple[str, ...] = (),
) -> Bus:
    bus = build_runtime(scenario, seed=seed, drop_agreements=drop_agreements)
    if script:
        bus.inject_script(script)
    bus.run_until(ticks)
    return bus
