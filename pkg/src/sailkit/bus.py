"""Component registry, router, and deterministic scheduler.

One tick: inject scripted operator input, step the world, run the agreement
engine over the tick's events, ground transitions through semantic anchors,
drain component inboxes in ascending actor id, then run the proactive
communication pass.  Identical (scenario, seed, operator script) yields a
byte-identical trace.
"""

from __future__ import annotations

import hashlib
import json
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .agents import Component, OperatorProxy, SchedulingContext
from .agreements import (
    AgreementEngine,
    AgreementError,
    Event,
    EventKind,
    Performative,
    WaKind,
    WaState,
    WaTransition,
    WorkAgreement,
    implicit_wa_from,
)
from .anchors import AnchorRegistry, AnchorTrigger
from .hatcl import (
    HatclMessage,
    IdSource,
    decode_wire_object,
    make_message,
    reply_to,
    validate_message,
)
from .ontology import Ontology, validate_content
from .procom import Decision, ProCom, SubscriptionPattern
from .query import subscription_concept
from .sim import World

TEAM_MODES = ("ParallelTask", "ManagementByException", "Training", "Tasking")

PROCOM_ACTOR = "ProCom1"


class BusError(Exception):
    pass


class DuplicateActor(BusError):
    pass


class UnknownReceiver(BusError):
    pass


class InvalidMessage(BusError):
    def __init__(self, diagnostics):
        self.diagnostics = diagnostics
        super().__init__(f"invalid message: {diagnostics}")


@dataclass(frozen=True)
class ActorDescriptor:
    actor_id: str
    category: str  # Human | TAI | SAI
    capabilities: tuple[str, ...] = ()


@dataclass
class Subscription:
    subscriber: str
    concept: Optional[str]  # None matches every topic
    source: str  # actor id or "any"
    wa_id: str
    conversation_id: str


class Trace:
    def __init__(self) -> None:
        self.records: list[dict] = []

    def add(self, record: dict) -> None:
        self.records.append(record)

    def messages(self) -> list[dict]:
        return [r for r in self.records if r["record"] == "message"]

    def to_jsonl(self) -> str:
        return "".join(
            json.dumps(r, sort_keys=True, separators=(",", ":")) + "\n"
            for r in self.records
        )

    def digest(self) -> str:
        return hashlib.sha256(self.to_jsonl().encode()).hexdigest()

    @classmethod
    def from_jsonl(cls, text: str) -> "Trace":
        trace = cls()
        for line in text.splitlines():
            if line.strip():
                trace.add(json.loads(line))
        return trace


def wire_record(msg: HatclMessage, tick: int) -> dict:
    return {
        "record": "message",
        "tick": tick,
        "wire": {
            "Performative": msg.performative.value,
            "Sender": msg.sender,
            "Receiver": msg.receiver,
            "In-reply-to": msg.in_reply_to,
            "Content": msg.content,
            "Protocol": msg.protocol,
            "Ontology": msg.ontology,
            "Message-ID": msg.message_id,
            "Conversation-ID": msg.conversation_id,
        },
    }


class Bus:
    def __init__(
        self,
        ontology: Optional[Ontology] = None,
        world: Optional[World] = None,
        team_mode: str = "ManagementByException",
        operator_id: str = "Hum1",
        engine: Optional[AgreementEngine] = None,
        anchors: Optional[AnchorRegistry] = None,
        procom: Optional[ProCom] = None,
        scenario_id: str = "",
        seed: int = 0,
    ) -> None:
        if team_mode not in TEAM_MODES:
            raise BusError(f"unknown team mode {team_mode!r}")
        self.ontology = ontology
        self.world = world
        self.team_mode = team_mode
        self.operator_id = operator_id
        self.ids = IdSource()
        self.engine = engine or AgreementEngine(ontology, self.ids)
        self.anchors = anchors or AnchorRegistry(ontology)
        self.procom = procom
        self.trace = Trace()
        self.trace.add({"record": "meta", "scenario": scenario_id, "seed": seed,
                        "team_mode": team_mode})
        self.roster: dict[str, ActorDescriptor] = {}
        self.components: dict[str, Component] = {}
        self.inboxes: dict[str, deque] = {}
        self.subscriptions: list[Subscription] = []
        self.tick = 0
        self._pending_events: list[Event] = []
        self._pending_subscribes: dict[str, HatclMessage] = {}
        self._active_symbols: dict[str, str] = {}  # wa_id -> grounded symbol
        self._script: list = []
        self._external: deque = deque()

    # -- registration ------------------------------------------------------

    def register_component(self, component: Component) -> str:
        actor_id = component.actor_id
        if actor_id in self.roster:
            raise DuplicateActor(actor_id)
        self.roster[actor_id] = ActorDescriptor(
            actor_id, component.category, tuple(component.capabilities)
        )
        self.components[actor_id] = component
        self.inboxes[actor_id] = deque()
        return actor_id

    def ctx(self) -> SchedulingContext:
        return SchedulingContext(
            self.ids, self.ontology.id if self.ontology else "", self.tick
        )

    # -- routing -----------------------------------------------------------

    def send(self, msg: HatclMessage) -> dict:
        validate_message(msg)
        if msg.sender not in self.roster:
            raise UnknownReceiver(f"unregistered sender {msg.sender!r}")
        if msg.receiver not in self.roster:
            raise UnknownReceiver(f"unregistered receiver {msg.receiver!r}")
        if self.ontology is not None and not isinstance(msg.content, str):
            diagnostics = validate_content(msg.content, self.ontology)
            if diagnostics:
                raise InvalidMessage([d.term for d in diagnostics])

        self.inboxes[msg.receiver].append(msg)
        self.trace.add(wire_record(msg, self.tick))
        self._pending_events.append(
            Event(
                self.tick,
                msg.sender,
                EventKind.MESSAGE_SENT,
                {
                    "action": "SendInformation"
                    if msg.performative is Performative.INFORM
                    else msg.performative.value,
                    "performative": msg.performative.value,
                    "in_reply_to": msg.in_reply_to,
                    "conversation_id": msg.conversation_id,
                    "receiver": msg.receiver,
                },
            )
        )
        self._agreement_hooks(msg)
        self._fan_out(msg)
        return {"delivered": True, "tick": self.tick, "message_id": msg.message_id}

    def _agreement_hooks(self, msg: HatclMessage) -> None:
        p = msg.performative
        # A debtor declining (Reject/NotUnderstood) or renegotiating (counter-
        # Propose) discharges the implicit agreement its message created:
        # informational debt is voluntary, so a refusal is not a violation.
        if msg.in_reply_to and p in (
            Performative.REJECT, Performative.PROPOSE, Performative.NOT_UNDERSTOOD
        ):
            implicit = self.engine.agreements.get(f"wa-{msg.in_reply_to}")
            if (
                implicit is not None
                and implicit.accepted_by == "implicit"
                and msg.sender == implicit.debtor
                and implicit.state in (WaState.DORMANT, WaState.ACTIVE)
            ):
                prev = implicit.state
                self.engine.cancel(implicit.wa_id, msg.sender)
                self._record_transition(
                    WaTransition(implicit.wa_id, prev, WaState.CANCELLED,
                                 self.tick, reason=f"declined via {p.value}")
                )
        if p in (Performative.QUERY, Performative.SUBSCRIBE, Performative.REQUEST):
            draft = implicit_wa_from(msg, self.engine.default_deadline)
            if draft is not None and draft.wa_id not in self.engine.agreements:
                self.engine.register_accepted(draft, provenance="implicit")
            if p is Performative.SUBSCRIBE:
                self._pending_subscribes[msg.message_id] = msg
        elif p is Performative.PROPOSE and isinstance(msg.content, dict) and "wa_id" in msg.content:
            if msg.content["wa_id"] not in self.engine.agreements:
                draft = WorkAgreement.from_doc(msg.content)
                draft.debtor = draft.debtor or msg.receiver
                draft.creditor = draft.creditor or msg.sender
                draft.proposed_in = msg.conversation_id
                self.engine.agreements[draft.wa_id] = draft
        elif p in (Performative.ACCEPT, Performative.REJECT):
            ref = msg.content.get("ref", "")
            wa = self.engine.agreements.get(ref)
            if wa is not None and wa.state is WaState.PROPOSED:
                try:
                    self.engine.resolve_response(ref, p, msg.sender)
                    self._record_transition(
                        WaTransition(ref, WaState.PROPOSED, wa.state, self.tick,
                                     reason=f"{p.value} by {msg.sender}")
                    )
                except AgreementError:
                    pass
            original = self._pending_subscribes.pop(msg.in_reply_to, None)
            if original is not None and p is Performative.ACCEPT:
                self.subscriptions.append(
                    Subscription(
                        subscriber=original.sender,
                        concept=subscription_concept(original.content),
                        source=original.receiver,
                        wa_id=f"wa-{original.message_id}",
                        conversation_id=original.conversation_id,
                    )
                )
        elif p is Performative.CANCEL:
            ref = msg.content.get("ref", "")
            wa = self.engine.agreements.get(ref)
            if wa is not None and msg.sender in (wa.debtor, wa.creditor):
                if wa.state in (WaState.DORMANT, WaState.ACTIVE):
                    prev = wa.state
                    self.engine.cancel(ref, msg.sender)
                    self._record_transition(
                        WaTransition(ref, prev, WaState.CANCELLED, self.tick,
                                     reason=f"cancelled by {msg.sender}")
                    )

    def _fan_out(self, msg: HatclMessage) -> None:
        if msg.performative is not Performative.INFORM or not isinstance(msg.content, dict):
            return
        concept = msg.content.get("type")
        for sub in self.subscriptions:
            if msg.conversation_id == sub.conversation_id:
                continue  # already a subscription delivery
            if sub.source not in ("any", msg.sender):
                continue
            if msg.receiver == sub.subscriber:
                continue
            if sub.concept is not None:
                if not isinstance(concept, str):
                    continue
                if concept != sub.concept:
                    from .ontology import is_a

                    if not (
                        self.ontology is not None
                        and concept in self.ontology
                        and sub.concept in self.ontology
                        and is_a(self.ontology, concept, sub.concept)
                    ):
                        continue
            copy = HatclMessage(
                performative=Performative.INFORM,
                sender=msg.sender,
                receiver=sub.subscriber,
                content=msg.content,
                ontology=msg.ontology,
                message_id=self.ids.message_id(),
                conversation_id=sub.conversation_id,
            )
            self.send(copy)

    # -- scheduling --------------------------------------------------------

    def inject_script(self, script: Iterable[dict]) -> None:
        """Validate and queue a timed operator script:
        ``[{"tick": n, "message": {<wire object>}}, ...]``."""
        parsed = []
        for i, entry in enumerate(script):
            try:
                msg = decode_wire_object(entry["message"])
            except Exception as exc:
                raise InvalidMessage([f"script line {i}: {exc}"]) from exc
            if msg.receiver not in self.roster:
                raise InvalidMessage([f"script line {i}: unknown receiver {msg.receiver}"])
            parsed.append((entry["tick"], msg))
        self._script = sorted(parsed, key=lambda e: e[0])

    def enqueue_external(self, msg: HatclMessage) -> None:
        """Queue a live operator message for injection at the next tick
        boundary, on the same path as scripted input."""
        validate_message(msg)
        if msg.receiver not in self.roster:
            raise UnknownReceiver(f"unregistered receiver {msg.receiver!r}")
        self._external.append(msg)

    def run_until(self, tick_limit: int) -> Trace:
        while self.tick < tick_limit:
            self.step_tick()
        return self.trace

    def step_tick(self) -> None:
        self.tick += 1

        # 1. scripted operator input for this tick, then queued live input
        for tick, msg in self._script:
            if tick == self.tick:
                self.send(msg)
        while self._external:
            self.send(self._external.popleft())

        # 2. world step
        tick_events: list[Event] = []
        if self.world is not None:
            events, internal = self.world.step(
                lambda actor, action: self.engine.check_action_permitted(
                    actor, action, self.tick
                )
            )
            tick_events.extend(events)
            for actor, record in internal:
                assertion = self.anchors.lift(actor, record)
                if assertion is not None:
                    tick_events.append(
                        Event(self.tick, actor, EventKind.OBSERVATION_MADE, assertion)
                    )
        for event in tick_events:
            self.trace.add({
                "record": "event",
                "tick": event.tick,
                "actor": event.actor,
                "kind": event.kind.value,
                "payload": event.payload,
            })

        # 3. agreement engine over this tick's events plus messages sent
        #    since the previous engine pass
        events = self._pending_events + tick_events
        self._pending_events = []
        for transition in self.engine.step(events, self.tick):
            self._record_transition(transition)

        # 4. inbox drain, ascending actor id
        ctx = self.ctx()
        for actor_id in sorted(self.inboxes):
            inbox = self.inboxes[actor_id]
            component = self.components[actor_id]
            while inbox:
                msg = inbox.popleft()
                try:
                    replies = component.handle_message(msg, ctx) or []
                except Exception as exc:  # handler failure -> NotUnderstood
                    replies = None
                    if msg.performative in (Performative.INFORM, Performative.QUERY):
                        nack = reply_to(
                            msg, Performative.NOT_UNDERSTOOD,
                            {"ref": msg.message_id, "reason": type(exc).__name__},
                            self.ids,
                        )
                        self.send(nack)
                    continue
                for reply in replies:
                    self.send(reply)
                if msg.performative is Performative.INFORM and not any(
                    r.in_reply_to == msg.message_id for r in replies
                ):
                    self.send(
                        reply_to(msg, Performative.UNDERSTOOD,
                                 {"ref": msg.message_id}, self.ids)
                    )

        # 5. proactive communication pass
        if self.procom is not None:
            for event in tick_events:
                if event.kind is EventKind.OBSERVATION_MADE:
                    self.procom.observe(event.payload, self.tick, event.actor)
            patterns = [
                SubscriptionPattern(self._sub_condition(s))
                for s in self.subscriptions
                if s.subscriber == self.operator_id
            ]
            for decision in self.procom.step(self.tick, patterns):
                self.trace.add(decision.to_record())
                if decision.kind == "deliver":
                    inform = make_message(
                        Performative.INFORM,
                        PROCOM_ACTOR,
                        self.operator_id,
                        {
                            "topic": decision.topic_id,
                            "modality": list(decision.modality),
                            "assertion": decision.assertion,
                        },
                        self.ontology.id if self.ontology else "",
                        self.ids,
                    )
                    self.send(inform)

    @staticmethod
    def _sub_condition(sub: Subscription):
        from .agreements import Always, Predicate

        if sub.concept is None:
            return Always()
        return Predicate("type", "=", sub.concept)

    def _record_transition(self, transition: WaTransition) -> None:
        self.trace.add({"record": "wa", **transition.to_record()})
        wa = self.engine.agreements.get(transition.wa_id)
        if wa is None:
            return
        mode = "prohibited" if wa.kind is WaKind.PROHIBITION else "obligated"
        symbol = f"{mode}({wa.consequent.action})"
        if transition.to_state is WaState.ACTIVE:
            self._active_symbols[wa.wa_id] = symbol
            self.anchors.ground(
                wa.debtor, AnchorTrigger(symbol, "activate", {"wa_id": wa.wa_id})
            )
        elif transition.from_state is WaState.ACTIVE and wa.wa_id in self._active_symbols:
            self._active_symbols.pop(wa.wa_id)
            self.anchors.ground(
                wa.debtor, AnchorTrigger(symbol, "deactivate", {"wa_id": wa.wa_id})
            )
        if transition.to_state is WaState.VIOLATED and self.procom is not None:
            self.procom.observe(
                {"type": "WaViolation", "wa_id": wa.wa_id, "actor": wa.debtor,
                 "at_tick": transition.tick},
                self.tick,
                wa.debtor,
            )
