"""Semantic anchors: declared bindings between teaming-level symbols and an
agent's internal control variables.

Agents expose anchorable internals through an explicit :class:`AnchorApi` of
named variables and named translation routines; the teaming layer never
reaches into arbitrary agent state.  Gateway anchors copy a value straight
through; translating anchors invoke a routine the agent registered.
Deactivation restores the previously saved value (one saved-value stack per
variable, popped in reverse activation order).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Optional

from .ontology import Ontology, UnresolvedConcept

_SYMBOL_PATTERN = re.compile(r"^(prohibited|obligated)\(([A-Za-z0-9_\-]+)\)$")


class Direction(str, Enum):
    INBOUND = "Inbound"
    OUTBOUND = "Outbound"
    BIDIRECTIONAL = "Bidirectional"


class AnchorKind(str, Enum):
    GATEWAY = "Gateway"
    TRANSLATING = "Translating"


class AnchorError(Exception):
    pass


class UnresolvedSymbol(AnchorError):
    def __init__(self, symbol: str):
        self.symbol = symbol
        super().__init__(f"symbol {symbol!r} does not resolve in the ontology")


class DuplicateAnchor(AnchorError):
    pass


class UnknownInternalVariable(AnchorError):
    pass


class AnchorDirectionMismatch(AnchorError):
    pass


@dataclass(frozen=True)
class SemanticAnchor:
    anchor_id: str
    hatcl_symbol: str
    agent_id: str
    direction: Direction
    kind: AnchorKind
    # Gateway inbound: {"variable": name, "on_active": value}
    # Translating inbound: {"routine": name}
    # Gateway outbound: {"rules": [{"when": {...}, "emit": {...}}]}
    # Translating outbound: {"routine": name}
    binding: dict


class AnchorApi:
    """The internals one agent chooses to expose for anchoring."""

    def __init__(self) -> None:
        self._getters: dict[str, Callable[[], Any]] = {}
        self._setters: dict[str, Callable[[Any], None]] = {}
        self.routines: dict[str, Callable[..., Any]] = {}

    def expose_variable(
        self, name: str, getter: Callable[[], Any], setter: Callable[[Any], None]
    ) -> None:
        self._getters[name] = getter
        self._setters[name] = setter

    def expose_routine(self, name: str, fn: Callable[..., Any]) -> None:
        self.routines[name] = fn

    def has_variable(self, name: str) -> bool:
        return name in self._getters

    def get(self, name: str) -> Any:
        return self._getters[name]()

    def set(self, name: str, value: Any) -> None:
        self._setters[name](value)


def symbol_action(symbol: str) -> Optional[str]:
    """Inner action of a deontic pattern symbol, else None."""
    m = _SYMBOL_PATTERN.match(symbol)
    return m.group(2) if m else None


def check_symbol(symbol: str, ontology: Optional[Ontology]) -> None:
    if ontology is None:
        return
    name = symbol_action(symbol) or symbol
    if name not in ontology:
        raise UnresolvedSymbol(symbol)


@dataclass(frozen=True)
class AnchorTrigger:
    """An activation or deactivation of a symbol, carried to inbound anchors."""

    symbol: str
    phase: str  # "activate" | "deactivate"
    payload: dict = field(default_factory=dict)


class AnchorRegistry:
    def __init__(self, ontology: Optional[Ontology] = None) -> None:
        self.ontology = ontology
        self._anchors: dict[str, SemanticAnchor] = {}
        self._apis: dict[str, AnchorApi] = {}
        # saved-value stacks per (agent, variable), popped on deactivation
        self._saved: dict[tuple[str, str], list[Any]] = {}

    def attach_api(self, agent_id: str, api: AnchorApi) -> None:
        self._apis[agent_id] = api

    def register_anchor(self, anchor: SemanticAnchor) -> str:
        check_symbol(anchor.hatcl_symbol, self.ontology)
        key = (anchor.agent_id, anchor.hatcl_symbol, anchor.direction)
        for existing in self._anchors.values():
            if (existing.agent_id, existing.hatcl_symbol, existing.direction) == key:
                raise DuplicateAnchor(f"{key} already anchored")
        api = self._apis.get(anchor.agent_id)
        if api is None:
            raise UnknownInternalVariable(f"agent {anchor.agent_id} exposes no anchor API")
        if anchor.kind is AnchorKind.GATEWAY and anchor.direction is not Direction.OUTBOUND:
            variable = anchor.binding.get("variable")
            if not variable or not api.has_variable(variable):
                raise UnknownInternalVariable(f"{anchor.agent_id} exposes no variable {variable!r}")
        if anchor.kind is AnchorKind.TRANSLATING:
            routine = anchor.binding.get("routine")
            if not routine or routine not in api.routines:
                raise UnknownInternalVariable(f"{anchor.agent_id} exposes no routine {routine!r}")
        self._anchors[anchor.anchor_id] = anchor
        return anchor.anchor_id

    def inbound_anchors(self, agent_id: str, symbol: str) -> list[SemanticAnchor]:
        return [
            a
            for a in self._anchors.values()
            if a.agent_id == agent_id
            and a.hatcl_symbol == symbol
            and a.direction in (Direction.INBOUND, Direction.BIDIRECTIONAL)
        ]

    def outbound_anchors(self, agent_id: str) -> list[SemanticAnchor]:
        return [
            a
            for a in self._anchors.values()
            if a.agent_id == agent_id
            and a.direction in (Direction.OUTBOUND, Direction.BIDIRECTIONAL)
        ]

    def ground_inbound(self, anchor: SemanticAnchor, trigger: AnchorTrigger) -> None:
        if anchor.direction not in (Direction.INBOUND, Direction.BIDIRECTIONAL):
            raise AnchorDirectionMismatch(anchor.anchor_id)
        api = self._apis[anchor.agent_id]
        if anchor.kind is AnchorKind.GATEWAY:
            variable = anchor.binding["variable"]
            stack = self._saved.setdefault((anchor.agent_id, variable), [])
            if trigger.phase == "activate":
                stack.append(api.get(variable))
                api.set(variable, anchor.binding["on_active"])
            elif stack:
                api.set(variable, stack.pop())
        else:
            api.routines[anchor.binding["routine"]](trigger.phase, trigger.payload)

    def ground(self, agent_id: str, trigger: AnchorTrigger) -> None:
        for anchor in self.inbound_anchors(agent_id, trigger.symbol):
            self.ground_inbound(anchor, trigger)

    def lift_outbound(self, anchor: SemanticAnchor, internal_event: dict) -> Optional[dict]:
        """Translate an internal event record into an ontology-level assertion,
        or None when the event has no teaming-level meaning."""
        if anchor.direction not in (Direction.OUTBOUND, Direction.BIDIRECTIONAL):
            raise AnchorDirectionMismatch(anchor.anchor_id)
        if anchor.kind is AnchorKind.TRANSLATING:
            api = self._apis[anchor.agent_id]
            return api.routines[anchor.binding["routine"]]("lift", internal_event)
        for rule in anchor.binding.get("rules", []):
            if all(internal_event.get(k) == v for k, v in rule["when"].items()):
                return _fill_template(rule["emit"], internal_event)
        return None

    def lift(self, agent_id: str, internal_event: dict) -> Optional[dict]:
        for anchor in self.outbound_anchors(agent_id):
            assertion = self.lift_outbound(anchor, internal_event)
            if assertion is not None:
                return assertion
        return None


def _fill_template(template: dict, record: dict) -> dict:
    out = {}
    for key, value in template.items():
        if isinstance(value, str) and value.startswith("$"):
            out[key] = record.get(value[1:])
        elif isinstance(value, dict):
            out[key] = _fill_template(value, record)
        else:
            out[key] = value
    return out
