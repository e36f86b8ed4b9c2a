"""Speech-act messages: wire codec, reply threading, and the conversation protocol.

A message is a nine-field value object.  The wire form is one JSON object per
message with capitalized field names ("Performative", "Sender", ...); one
object per WebSocket text frame, one per line in ``.hatcl.jsonl`` traces.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Union

Content = Union[str, dict]

WIRE_FIELDS = (
    "Performative",
    "Sender",
    "Receiver",
    "In-reply-to",
    "Content",
    "Protocol",
    "Ontology",
    "Message-ID",
    "Conversation-ID",
)


class Performative(str, Enum):
    INFORM = "Inform"
    QUERY = "Query"
    SUBSCRIBE = "Subscribe"
    REQUEST = "Request"
    PROPOSE = "Propose"
    ACCEPT = "Accept"
    REJECT = "Reject"
    UNDERSTOOD = "Understood"
    NOT_UNDERSTOOD = "NotUnderstood"
    CANCEL = "Cancel"


#: Performatives whose content is a reference to an earlier message or
#: agreement: ``{"ref": <id>, "reason": <optional text>}``.
REFERENCING = frozenset(
    {
        Performative.ACCEPT,
        Performative.REJECT,
        Performative.CANCEL,
        Performative.UNDERSTOOD,
        Performative.NOT_UNDERSTOOD,
    }
)

#: Legal reply performatives, total over all ten performatives.  Subscribe is
#: answered Accept/Reject; the subsequent update stream is sent as fresh
#: Informs in the same conversation, not as replies.
PROTOCOL_NEXT: dict[Performative, frozenset[Performative]] = {
    Performative.QUERY: frozenset(
        {Performative.INFORM, Performative.NOT_UNDERSTOOD, Performative.REJECT}
    ),
    Performative.SUBSCRIBE: frozenset({Performative.ACCEPT, Performative.REJECT}),
    Performative.REQUEST: frozenset(
        {Performative.ACCEPT, Performative.REJECT, Performative.PROPOSE}
    ),
    Performative.PROPOSE: frozenset(
        {Performative.ACCEPT, Performative.REJECT, Performative.PROPOSE}
    ),
    Performative.INFORM: frozenset(
        {Performative.UNDERSTOOD, Performative.NOT_UNDERSTOOD}
    ),
    Performative.ACCEPT: frozenset(),
    Performative.REJECT: frozenset(),
    Performative.UNDERSTOOD: frozenset(),
    Performative.NOT_UNDERSTOOD: frozenset(),
    Performative.CANCEL: frozenset(),
}


class HatclError(Exception):
    pass


class MessageDecodeError(HatclError):
    pass


class MissingField(MessageDecodeError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"missing field {name!r}")


class UnknownPerformative(MessageDecodeError):
    def __init__(self, value: Any):
        self.value = value
        super().__init__(f"unknown performative {value!r}")


class MalformedContent(MessageDecodeError):
    def __init__(self, performative: Performative, reason: str):
        self.performative = performative
        self.reason = reason
        super().__init__(f"malformed content for {performative.value}: {reason}")


class InvalidReplyPerformative(HatclError):
    def __init__(self, original: Performative, attempted: Performative):
        self.original = original
        self.attempted = attempted
        super().__init__(
            f"{attempted.value} is not a legal reply to {original.value}"
        )


@dataclass(frozen=True)
class HatclMessage:
    performative: Performative
    sender: str
    receiver: str
    content: Content
    ontology: str
    message_id: str
    conversation_id: str
    in_reply_to: str = ""
    protocol: str = ""


class IdSource:
    """Deterministic id factory shared by one runtime."""

    def __init__(self) -> None:
        self._counters: dict[str, itertools.count] = {}

    def next(self, kind: str) -> str:
        counter = self._counters.setdefault(kind, itertools.count(1))
        return f"{kind}{next(counter)}"

    def message_id(self) -> str:
        return self.next("msg")

    def conversation_id(self) -> str:
        return "cnv-" + self.next("")


def check_content(performative: Performative, content: Content) -> None:
    """Raise MalformedContent if the content kind does not fit the performative."""
    if performative in (Performative.QUERY, Performative.SUBSCRIBE):
        if not isinstance(content, str) or not content.startswith("$"):
            raise MalformedContent(performative, "expected a '$'-rooted path expression")
    elif performative in REFERENCING:
        if not isinstance(content, dict) or not isinstance(content.get("ref"), str):
            raise MalformedContent(performative, "expected {'ref': <id>, ...}")
    else:  # Inform, Request, Propose carry documents
        if not isinstance(content, dict):
            raise MalformedContent(performative, "expected a document object")


def validate_message(msg: HatclMessage) -> None:
    check_content(msg.performative, msg.content)


def encode_message(msg: HatclMessage) -> str:
    obj = {
        "Performative": msg.performative.value,
        "Sender": msg.sender,
        "Receiver": msg.receiver,
        "In-reply-to": msg.in_reply_to,
        "Content": msg.content,
        "Protocol": msg.protocol,
        "Ontology": msg.ontology,
        "Message-ID": msg.message_id,
        "Conversation-ID": msg.conversation_id,
    }
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def decode_message(text: str) -> HatclMessage:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MessageDecodeError(f"not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise MessageDecodeError("wire form must be a JSON object")
    return decode_wire_object(obj)


def decode_wire_object(obj: dict) -> HatclMessage:
    for name in WIRE_FIELDS:
        if name not in obj:
            raise MissingField(name)
    raw = obj["Performative"]
    try:
        performative = Performative(raw)
    except ValueError:
        raise UnknownPerformative(raw) from None
    content = obj["Content"]
    check_content(performative, content)
    return HatclMessage(
        performative=performative,
        sender=obj["Sender"],
        receiver=obj["Receiver"],
        in_reply_to=obj["In-reply-to"],
        content=content,
        protocol=obj["Protocol"],
        ontology=obj["Ontology"],
        message_id=obj["Message-ID"],
        conversation_id=obj["Conversation-ID"],
    )


def protocol_next(performative: Performative) -> frozenset[Performative]:
    return PROTOCOL_NEXT[performative]


def reply_to(
    original: HatclMessage,
    performative: Performative,
    content: Content,
    ids: IdSource,
) -> HatclMessage:
    """Build a threaded reply: swapped endpoints, same conversation, fresh id."""
    if performative not in PROTOCOL_NEXT[original.performative]:
        raise InvalidReplyPerformative(original.performative, performative)
    check_content(performative, content)
    return HatclMessage(
        performative=performative,
        sender=original.receiver,
        receiver=original.sender,
        in_reply_to=original.message_id,
        content=content,
        protocol=original.protocol,
        ontology=original.ontology,
        message_id=ids.message_id(),
        conversation_id=original.conversation_id,
    )


def make_message(
    performative: Performative,
    sender: str,
    receiver: str,
    content: Content,
    ontology: str,
    ids: IdSource,
    conversation_id: str | None = None,
) -> HatclMessage:
    """Build a conversation-opening message with fresh ids."""
    check_content(performative, content)
    return HatclMessage(
        performative=performative,
        sender=sender,
        receiver=receiver,
        content=content,
        ontology=ontology,
        message_id=ids.message_id(),
        conversation_id=conversation_id or ids.conversation_id(),
    )
