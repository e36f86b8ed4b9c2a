"""Middleware for human-agent teaming: speech-act messaging, work
agreements, semantic anchoring, proactive communication, and a deterministic
scheduling bus over a grid-world UAV simulation."""

from .agreements import (
    AgreementEngine,
    Event,
    EventKind,
    WaKind,
    WaState,
    WaTransition,
    WorkAgreement,
)
from .anchors import AnchorApi, AnchorRegistry, SemanticAnchor
from .bus import Bus, Trace
from .hatcl import (
    HatclMessage,
    IdSource,
    Performative,
    decode_message,
    encode_message,
    make_message,
    reply_to,
)
from .ontology import Ontology, builtin_top, load_ontology
from .procom import ProCom, ProComConfig
from .scenario import Scenario, build_runtime, load_scenario, run_scenario
from .sim import World

__version__ = "0.1.0"

__all__ = [
    "AgreementEngine",
    "AnchorApi",
    "AnchorRegistry",
    "Bus",
    "Event",
    "EventKind",
    "HatclMessage",
    "IdSource",
    "Ontology",
    "Performative",
    "ProCom",
    "ProComConfig",
    "Scenario",
    "SemanticAnchor",
    "Trace",
    "WaKind",
    "WaState",
    "WaTransition",
    "WorkAgreement",
    "World",
    "builtin_top",
    "build_runtime",
    "decode_message",
    "encode_message",
    "load_ontology",
    "load_scenario",
    "make_message",
    "reply_to",
    "run_scenario",
    "__version__",
]
