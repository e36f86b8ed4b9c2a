"""Work agreements: deontic contracts between a debtor and a creditor.

An obligation requires the debtor to perform a matching action within a
deadline once the antecedent holds; a prohibition forbids matching actions
while the antecedent holds.  The engine owns the lifecycle state machine,
evaluates agreements against the per-tick event stream, and answers
permission queries.

Intended call pattern: ``step(events, now)`` once per tick with that tick's
events, ticks strictly increasing.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Iterable, Optional, Sequence

from .hatcl import HatclMessage, IdSource, Performative, make_message
from .ontology import Ontology, is_a

DEFAULT_DEADLINE_TICKS = 10

#: Debtor wildcard marking a policy template, instantiated per actor.
POLICY_DEBTOR = "*"


class WaKind(str, Enum):
    OBLIGATION = "obligation"
    PROHIBITION = "prohibition"


class WaState(str, Enum):
    PROPOSED = "Proposed"
    REJECTED = "Rejected"
    DORMANT = "Dormant"
    ACTIVE = "Active"
    SATISFIED = "Satisfied"
    VIOLATED = "Violated"
    CANCELLED = "Cancelled"


TERMINAL_STATES = frozenset(
    {WaState.REJECTED, WaState.SATISFIED, WaState.VIOLATED, WaState.CANCELLED}
)


class EventKind(str, Enum):
    ACTION_PERFORMED = "ActionPerformed"
    OBSERVATION_MADE = "ObservationMade"
    MESSAGE_SENT = "MessageSent"


@dataclass(frozen=True)
class Event:
    tick: int
    actor: str
    kind: EventKind
    payload: dict

    def field_value(self, name: str) -> Any:
        if name == "tick":
            return self.tick
        if name == "actor":
            return self.actor
        if name == "kind":
            return self.kind.value
        return self.payload.get(name)


# --- condition trees -------------------------------------------------------

OPS = ("=", "!=", "<", "<=", ">", ">=")


@dataclass(frozen=True)
class Always:
    pass


@dataclass(frozen=True)
class Never:
    pass


@dataclass(frozen=True)
class Predicate:
    field: str
    op: str
    value: Any


@dataclass(frozen=True)
class AllOf:
    parts: tuple


@dataclass(frozen=True)
class AnyOf:
    parts: tuple


@dataclass(frozen=True)
class Not:
    part: Any


Condition = Any  # Always | Never | Predicate | AllOf | AnyOf | Not


def _values_match(actual: Any, expected: Any, ontology: Optional[Ontology]) -> bool:
    if actual == expected:
        return True
    # Concept-valued fields match by subsumption: a HostileContact event
    # satisfies a predicate asking for Contact.
    if (
        ontology is not None
        and isinstance(actual, str)
        and isinstance(expected, str)
        and actual in ontology
        and expected in ontology
    ):
        return is_a(ontology, actual, expected)
    return False


def eval_predicate(p: Predicate, event: Event, ontology: Optional[Ontology]) -> bool:
    actual = event.field_value(p.field)
    if p.op == "=":
        return _values_match(actual, p.value, ontology)
    if p.op == "!=":
        return not _values_match(actual, p.value, ontology)
    if actual is None:
        return False
    try:
        if p.op == "<":
            return actual < p.value
        if p.op == "<=":
            return actual <= p.value
        if p.op == ">":
            return actual > p.value
        if p.op == ">=":
            return actual >= p.value
    except TypeError:
        return False
    raise ValueError(f"unknown predicate op {p.op!r}")


def eval_condition(c: Condition, event: Event, ontology: Optional[Ontology]) -> bool:
    if isinstance(c, Always):
        return True
    if isinstance(c, Never):
        return False
    if isinstance(c, Predicate):
        return eval_predicate(c, event, ontology)
    if isinstance(c, AllOf):
        return all(eval_condition(p, event, ontology) for p in c.parts)
    if isinstance(c, AnyOf):
        return any(eval_condition(p, event, ontology) for p in c.parts)
    if isinstance(c, Not):
        return not eval_condition(c.part, event, ontology)
    raise TypeError(f"not a condition: {c!r}")


def condition_to_doc(c: Condition) -> dict:
    if isinstance(c, Always):
        return {"always": True}
    if isinstance(c, Never):
        return {"never": True}
    if isinstance(c, Predicate):
        return {"field": c.field, "op": c.op, "value": c.value}
    if isinstance(c, AllOf):
        return {"all": [condition_to_doc(p) for p in c.parts]}
    if isinstance(c, AnyOf):
        return {"any": [condition_to_doc(p) for p in c.parts]}
    if isinstance(c, Not):
        return {"not": condition_to_doc(c.part)}
    raise TypeError(f"not a condition: {c!r}")


def condition_from_doc(doc: dict) -> Condition:
    if "always" in doc:
        return Always()
    if "never" in doc:
        return Never()
    if "all" in doc:
        return AllOf(tuple(condition_from_doc(d) for d in doc["all"]))
    if "any" in doc:
        return AnyOf(tuple(condition_from_doc(d) for d in doc["any"]))
    if "not" in doc:
        return Not(condition_from_doc(doc["not"]))
    if doc.get("op") not in OPS:
        raise ValueError(f"bad condition document: {doc!r}")
    return Predicate(doc["field"], doc["op"], doc["value"])


# --- action patterns -------------------------------------------------------


@dataclass(frozen=True)
class ActionPattern:
    action: str
    where: tuple[Predicate, ...] = ()

    def matches_event(self, event: Event, ontology: Optional[Ontology]) -> bool:
        if event.kind not in (EventKind.ACTION_PERFORMED, EventKind.MESSAGE_SENT):
            return False
        name = event.payload.get("action")
        if not isinstance(name, str) or not _values_match(name, self.action, ontology):
            return False
        return all(eval_predicate(p, event, ontology) for p in self.where)

    def matches_instance(self, instance: dict, ontology: Optional[Ontology]) -> bool:
        """Match an action occurrence document {'action': name, ...fields}."""
        probe = Event(0, instance.get("actor", ""), EventKind.ACTION_PERFORMED, instance)
        name = instance.get("action")
        if not isinstance(name, str) or not _values_match(name, self.action, ontology):
            return False
        return all(eval_predicate(p, probe, ontology) for p in self.where)


def action_pattern_to_doc(p: ActionPattern) -> dict:
    return {
        "action": p.action,
        "where": [condition_to_doc(w) for w in p.where],
    }


def action_pattern_from_doc(doc: dict) -> ActionPattern:
    where = tuple(condition_from_doc(d) for d in doc.get("where", []))
    if not all(isinstance(w, Predicate) for w in where):
        raise ValueError("action pattern constraints must be plain predicates")
    return ActionPattern(doc["action"], where)


# --- agreements ------------------------------------------------------------


@dataclass
class WorkAgreement:
    wa_id: str
    kind: WaKind
    debtor: str
    creditor: str
    antecedent: Condition
    consequent: ActionPattern
    deadline_ticks: Optional[int] = None
    state: WaState = WaState.PROPOSED
    proposed_in: str = ""
    accepted_by: str | None = None  # voluntary-restriction provenance
    activation_tick: Optional[int] = None

    def to_doc(self) -> dict:
        return {
            "wa_id": self.wa_id,
            "kind": self.kind.value,
            "debtor": self.debtor,
            "creditor": self.creditor,
            "antecedent": condition_to_doc(self.antecedent),
            "consequent": action_pattern_to_doc(self.consequent),
            "deadline_ticks": self.deadline_ticks,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "WorkAgreement":
        return cls(
            wa_id=doc["wa_id"],
            kind=WaKind(doc["kind"]),
            debtor=doc["debtor"],
            creditor=doc["creditor"],
            antecedent=condition_from_doc(doc["antecedent"]),
            consequent=action_pattern_from_doc(doc["consequent"]),
            deadline_ticks=doc.get("deadline_ticks"),
        )


@dataclass(frozen=True)
class WaTransition:
    wa_id: str
    from_state: WaState
    to_state: WaState
    tick: int
    citing: tuple[Event, ...] = ()
    reason: str = ""

    def to_record(self) -> dict:
        return {
            "wa_id": self.wa_id,
            "from": self.from_state.value,
            "to": self.to_state.value,
            "tick": self.tick,
            "reason": self.reason,
            "citing": [
                {"tick": e.tick, "actor": e.actor, "kind": e.kind.value, "payload": e.payload}
                for e in self.citing
            ],
        }


@dataclass(frozen=True)
class PermissionCheck:
    permitted: bool
    citing: str | None = None  # wa_id of the forbidding prohibition


PERMITTED = PermissionCheck(True)


class AgreementError(Exception):
    pass


class InvalidAgreement(AgreementError):
    def __init__(self, diagnostics: list[str]):
        self.diagnostics = diagnostics
        super().__init__("; ".join(diagnostics))


class NotProposed(AgreementError):
    pass


class WrongResponder(AgreementError):
    pass


class NotCancellable(AgreementError):
    def __init__(self, state: WaState):
        self.state = state
        super().__init__(f"cannot cancel agreement in state {state.value}")


class NotParty(AgreementError):
    pass


class UnknownAgreement(AgreementError):
    pass


class AgreementEngine:
    """Single-owner lifecycle engine; mutate only from the scheduling thread."""

    def __init__(
        self,
        ontology: Optional[Ontology] = None,
        ids: Optional[IdSource] = None,
        default_deadline: int = DEFAULT_DEADLINE_TICKS,
    ) -> None:
        self.ontology = ontology
        self.ids = ids or IdSource()
        self.default_deadline = default_deadline
        self.agreements: dict[str, WorkAgreement] = {}

    # -- registration ------------------------------------------------------

    def _validate_draft(self, wa: WorkAgreement) -> None:
        problems: list[str] = []
        if wa.debtor == wa.creditor:
            problems.append("debtor equals creditor")
        if wa.kind is WaKind.OBLIGATION and wa.deadline_ticks is None:
            problems.append("obligation requires a finite deadline")
        if wa.kind is WaKind.PROHIBITION and wa.deadline_ticks is not None:
            problems.append("prohibition deadline must be unbounded")
        if wa.wa_id in self.agreements:
            problems.append(f"duplicate wa_id {wa.wa_id}")
        if self.ontology is not None and wa.consequent.action not in self.ontology:
            problems.append(f"consequent action {wa.consequent.action!r} unresolved")
        if problems:
            raise InvalidAgreement(problems)

    def propose(
        self, draft: WorkAgreement, conversation_id: str = ""
    ) -> tuple[WorkAgreement, HatclMessage]:
        """Register a draft as Proposed and build the Propose message to the debtor."""
        if not draft.wa_id:
            draft.wa_id = self.ids.next("wa-")
        self._validate_draft(draft)
        draft.state = WaState.PROPOSED
        msg = make_message(
            Performative.PROPOSE,
            sender=draft.creditor,
            receiver=draft.debtor,
            content=draft.to_doc(),
            ontology=self.ontology.id if self.ontology else "",
            ids=self.ids,
            conversation_id=conversation_id or None,
        )
        draft.proposed_in = msg.conversation_id
        self.agreements[draft.wa_id] = draft
        return draft, msg

    def register_accepted(
        self, draft: WorkAgreement, provenance: str = "pre-accepted"
    ) -> WorkAgreement:
        """Register an agreement that skips negotiation (scenario config, policies,
        implicit agreements); acceptance provenance is still recorded."""
        self._validate_draft(draft)
        draft.state = WaState.DORMANT
        draft.accepted_by = provenance
        self.agreements[draft.wa_id] = draft
        return draft

    def register_policy(
        self, template: WorkAgreement, actors: Iterable[str]
    ) -> list[WorkAgreement]:
        """Instantiate a debtor-wildcard template for each actor except the creditor."""
        if template.debtor != POLICY_DEBTOR:
            raise InvalidAgreement(["policy template debtor must be '*'"])
        instances = []
        for actor in actors:
            if actor == template.creditor:
                continue
            inst = replace_wa(template, wa_id=f"{template.wa_id}@{actor}", debtor=actor)
            instances.append(self.register_accepted(inst, provenance="policy"))
        return instances

    # -- negotiation -------------------------------------------------------

    def resolve_response(
        self, wa_id: str, response: Performative, responder: str
    ) -> WaState:
        wa = self._get(wa_id)
        if wa.state is not WaState.PROPOSED:
            raise NotProposed(f"{wa_id} is {wa.state.value}, not Proposed")
        if responder != wa.debtor:
            raise WrongResponder(f"only debtor {wa.debtor} may answer {wa_id}")
        if response is Performative.ACCEPT:
            wa.state = WaState.DORMANT
            wa.accepted_by = responder
        elif response is Performative.REJECT:
            wa.state = WaState.REJECTED
        else:
            raise AgreementError(f"response must be Accept or Reject, got {response}")
        return wa.state

    def cancel(self, wa_id: str, requester: str) -> WaState:
        wa = self._get(wa_id)
        if requester not in (wa.debtor, wa.creditor):
            raise NotParty(f"{requester} is not a party to {wa_id}")
        if wa.state not in (WaState.DORMANT, WaState.ACTIVE):
            raise NotCancellable(wa.state)
        wa.state = WaState.CANCELLED
        return wa.state

    def _get(self, wa_id: str) -> WorkAgreement:
        try:
            return self.agreements[wa_id]
        except KeyError:
            raise UnknownAgreement(wa_id) from None

    # -- evaluation --------------------------------------------------------

    def step(self, events: Sequence[Event], now: int) -> list[WaTransition]:
        """Advance all agreements one tick given that tick's events."""
        transitions: list[WaTransition] = []

        def move(wa: WorkAgreement, to: WaState, citing=(), reason="") -> None:
            transitions.append(
                WaTransition(wa.wa_id, wa.state, to, now, tuple(citing), reason)
            )
            wa.state = to

        for wa in self.agreements.values():
            if wa.state is WaState.DORMANT:
                if isinstance(wa.antecedent, Always):
                    wa.activation_tick = now
                    move(wa, WaState.ACTIVE, reason="antecedent holds")
                else:
                    hits = [
                        e for e in events
                        if eval_condition(wa.antecedent, e, self.ontology)
                    ]
                    if hits:
                        wa.activation_tick = hits[0].tick
                        move(wa, WaState.ACTIVE, citing=hits[:1], reason="antecedent holds")

        for wa in self.agreements.values():
            if wa.state is not WaState.ACTIVE:
                continue
            debtor_hits = [
                e for e in events
                if e.actor == wa.debtor and wa.consequent.matches_event(e, self.ontology)
            ]
            if wa.kind is WaKind.OBLIGATION:
                assert wa.activation_tick is not None and wa.deadline_ticks is not None
                due = wa.activation_tick + wa.deadline_ticks
                in_time = [e for e in debtor_hits if e.tick < due]
                if in_time:
                    move(wa, WaState.SATISFIED, citing=in_time[:1], reason="consequent performed")
                elif now >= due:
                    move(wa, WaState.VIOLATED, reason=f"deadline {due} passed")
            else:  # prohibition
                if debtor_hits:
                    move(wa, WaState.VIOLATED, citing=debtor_hits[:1], reason="forbidden action performed")
                elif not isinstance(wa.antecedent, Always) and not any(
                    eval_condition(wa.antecedent, e, self.ontology) for e in events
                ):
                    wa.activation_tick = None
                    move(wa, WaState.DORMANT, reason="antecedent no longer holds")

        return transitions

    def check_action_permitted(
        self, actor: str, action: dict, now: int
    ) -> PermissionCheck:
        """Forbidden iff an Active prohibition on this actor matches the action
        occurrence; ties cite the lexicographically smallest wa_id."""
        matching = [
            wa.wa_id
            for wa in self.agreements.values()
            if wa.kind is WaKind.PROHIBITION
            and wa.state is WaState.ACTIVE
            and wa.debtor == actor
            and wa.consequent.matches_instance(action, self.ontology)
        ]
        if matching:
            return PermissionCheck(False, min(matching))
        return PERMITTED

    def snapshot(self) -> list[dict]:
        return [
            {**wa.to_doc(), "state": wa.state.value, "accepted_by": wa.accepted_by}
            for wa in self.agreements.values()
        ]


def replace_wa(wa: WorkAgreement, **changes) -> WorkAgreement:
    base = dict(
        wa_id=wa.wa_id,
        kind=wa.kind,
        debtor=wa.debtor,
        creditor=wa.creditor,
        antecedent=wa.antecedent,
        consequent=wa.consequent,
        deadline_ticks=wa.deadline_ticks,
    )
    base.update(changes)
    return WorkAgreement(**base)


# --- implicit agreements ---------------------------------------------------


def implicit_wa_from(
    msg: HatclMessage, default_deadline: int = DEFAULT_DEADLINE_TICKS
) -> Optional[WorkAgreement]:
    """Single-purpose agreement implied by a Query, Subscribe, or Request.

    The receiver becomes debtor to the sender: answer the query, serve the
    subscription, or perform the requested action.  Other performatives
    create no informational debt.
    """
    from .query import subscription_concept

    if msg.performative is Performative.QUERY:
        consequent = ActionPattern(
            "SendInformation", (Predicate("in_reply_to", "=", msg.message_id),)
        )
        antecedent: Condition = Always()
    elif msg.performative is Performative.SUBSCRIBE:
        concept = subscription_concept(msg.content)
        antecedent = (
            Always() if concept is None else Predicate("type", "=", concept)
        )
        consequent = ActionPattern(
            "SendInformation", (Predicate("conversation_id", "=", msg.conversation_id),)
        )
    elif msg.performative is Performative.REQUEST:
        action = msg.content.get("action")
        if not isinstance(action, str):
            return None
        where = tuple(
            Predicate(k, "=", v)
            for k, v in sorted(msg.content.items())
            if k != "action" and isinstance(v, (str, int, float, list))
        )
        antecedent = Always()
        consequent = ActionPattern(action, where)
    else:
        return None
    return WorkAgreement(
        wa_id=f"wa-{msg.message_id}",
        kind=WaKind.OBLIGATION,
        debtor=msg.receiver,
        creditor=msg.sender,
        antecedent=antecedent,
        consequent=consequent,
        deadline_ticks=default_deadline,
        proposed_in=msg.conversation_id,
    )
