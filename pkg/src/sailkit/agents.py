"""Bus components: the UAV teaming wrapper, the operator proxy, and the
swarm state service.

A component is anything with an ``actor_id``, a ``category`` (Human, TAI, or
SAI), ``capabilities``, and a ``handle_message(msg, ctx)`` returning reply
messages.  The scheduling context ``ctx`` provides the id source and the
shared ontology id; components never touch each other's state directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from . import sim
from .hatcl import HatclMessage, IdSource, Performative, make_message, reply_to
from .query import MalformedQuery, evaluate_path
from .sim import Order, UavState, World, arbitrate_directive


@dataclass
class SchedulingContext:
    ids: IdSource
    ontology_id: str
    tick: int = 0


class Component:
    actor_id: str = ""
    category: str = "SAI"
    capabilities: tuple[str, ...] = ()

    def handle_message(self, msg: HatclMessage, ctx: SchedulingContext) -> list[HatclMessage]:
        return []

    def published_state(self) -> dict:
        return {}


class UavAgent(Component):
    """Teaming wrapper around one UAV: answers queries from its state tree,
    arbitrates directives instead of blindly executing them, and accepts
    work-agreement proposals addressed to it."""

    category = "TAI"
    capabilities = ("Surveil", "FlyTo", "TakePhoto", "NotifyOperator")

    def __init__(self, state: UavState, world: World) -> None:
        self.actor_id = state.uav_id
        self.state = state
        self.world = world
        # our counter-proposal message id -> alternative order document
        self._proposed_alternatives: dict[str, dict] = {}
        # clarification conversation id -> held directive document
        self._held_orders: dict[str, dict] = {}

    def published_state(self) -> dict:
        return {
            "position": list(self.state.position),
            "battery": round(self.state.battery, 4),
            "heading": list(self.state.heading),
            "orders": [o.action for o in self.state.orders],
        }

    def handle_message(self, msg, ctx):
        p = msg.performative
        if p is Performative.QUERY:
            return [self._answer_query(msg, ctx)]
        if p is Performative.REQUEST:
            return self._handle_request(msg, ctx)
        if p is Performative.PROPOSE:
            # auto-accept agreements naming us debtor; counter-proposals and
            # conflict checks stay with arbitration of concrete directives
            ref = msg.content.get("wa_id", msg.message_id)
            return [reply_to(msg, Performative.ACCEPT, {"ref": ref}, ctx.ids)]
        if p is Performative.SUBSCRIBE:
            return [reply_to(msg, Performative.ACCEPT, {"ref": msg.message_id}, ctx.ids)]
        if p is Performative.ACCEPT and msg.in_reply_to in self._proposed_alternatives:
            order_doc = self._proposed_alternatives.pop(msg.in_reply_to)
            self._push_order(order_doc)
            return []
        if p is Performative.INFORM:
            answer = msg.content.get("answer")
            held = self._held_orders.pop(msg.conversation_id, None)
            if held is not None and answer == "proceed":
                self._push_order(held)
            return []
        return []

    def _answer_query(self, msg, ctx):
        try:
            results = evaluate_path(self.published_state(), msg.content)
        except MalformedQuery as exc:
            return reply_to(
                msg, Performative.NOT_UNDERSTOOD,
                {"ref": msg.message_id, "reason": str(exc)}, ctx.ids,
            )
        return reply_to(msg, Performative.INFORM, {"results": results}, ctx.ids)

    def _handle_request(self, msg, ctx):
        try:
            verdict = arbitrate_directive(self.state, msg.content, self.world)
        except sim.UnknownAction as exc:
            return [reply_to(
                msg, Performative.REJECT,
                {"ref": msg.message_id, "reason": f"UnknownAction: {exc}"}, ctx.ids,
            )]
        if verdict.decision == "accept":
            self._push_order(msg.content, source=msg.message_id)
            return [reply_to(
                msg, Performative.ACCEPT,
                {"ref": msg.message_id, "reason": verdict.reason}, ctx.ids,
            )]
        if verdict.decision == "reject":
            return [reply_to(
                msg, Performative.REJECT,
                {"ref": msg.message_id, "reason": verdict.reason}, ctx.ids,
            )]
        if verdict.decision == "propose":
            counter = reply_to(msg, Performative.PROPOSE, verdict.alternative, ctx.ids)
            self._proposed_alternatives[counter.message_id] = verdict.alternative
            return [counter]
        # clarify: hold the directive and ask the sender what to do
        self._held_orders[msg.conversation_id] = dict(msg.content)
        question = make_message(
            Performative.QUERY, self.actor_id, msg.sender,
            "$.orders.preference", ctx.ontology_id, ctx.ids,
            conversation_id=msg.conversation_id,
        )
        return [question]

    def _push_order(self, doc: dict, source: str = "") -> None:
        order = Order(
            action=doc["action"],
            target=tuple(doc.get("to") or doc.get("at") or self.state.position),
            via=[tuple(v) for v in doc.get("via", [])],
            duration=doc.get("duration", 0),
            total_duration=doc.get("duration", 0),
            source_msg=source,
        )
        self.state.orders.append(order)


class OperatorProxy(Component):
    """Human-category stand-in for the commander; collects deliveries and
    forwards them to an attached live session, if any."""

    category = "Human"

    def __init__(self, actor_id: str = "Hum1") -> None:
        self.actor_id = actor_id
        self.deliveries: list[HatclMessage] = []
        self.inbox_log: list[HatclMessage] = []
        self.on_message: Optional[Callable[[HatclMessage], None]] = None
        self.on_delivery: Optional[Callable[[HatclMessage], None]] = None

    def handle_message(self, msg, ctx):
        self.inbox_log.append(msg)
        if self.on_message is not None:
            self.on_message(msg)
        if msg.performative is Performative.INFORM:
            self.deliveries.append(msg)
            if self.on_delivery is not None:
                self.on_delivery(msg)
        return []


class StateService(Component):
    """SAI component publishing the team-level state tree (vehicle roster)."""

    category = "SAI"

    def __init__(self, world: World, roster: dict, actor_id: str = "swarm") -> None:
        self.actor_id = actor_id
        self.world = world
        self.roster = roster

    def published_state(self) -> dict:
        snap = self.world.snapshot() if self.world else {"vehicles": {}}
        return {
            "vehicles": snap["vehicles"],
            "actors": {
                actor_id: {"category": d.category, "capabilities": list(d.capabilities)}
                for actor_id, d in self.roster.items()
            },
        }

    def handle_message(self, msg, ctx):
        if msg.performative is Performative.QUERY:
            try:
                results = evaluate_path(self.published_state(), msg.content)
            except MalformedQuery as exc:
                return [reply_to(
                    msg, Performative.NOT_UNDERSTOOD,
                    {"ref": msg.message_id, "reason": str(exc)}, ctx.ids,
                )]
            return [reply_to(msg, Performative.INFORM, {"results": results}, ctx.ids)]
        if msg.performative is Performative.SUBSCRIBE:
            return [reply_to(msg, Performative.ACCEPT, {"ref": msg.message_id}, ctx.ids)]
        return []
