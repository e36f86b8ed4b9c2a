"""Command-line entry points: run a scenario, replay a trace, verify
agreement verdicts offline, and serve the network gateway."""

from __future__ import annotations

import argparse
import json
import sys
from collections import defaultdict
from pathlib import Path
from typing import Optional

from .agreements import (
    AgreementEngine,
    AgreementError,
    Event,
    EventKind,
    WaState,
    WaTransition,
    WorkAgreement,
    implicit_wa_from,
)
from .bus import Trace
from .hatcl import Performative, decode_wire_object
from .scenario import (
    Scenario,
    ScenarioError,
    _resolve_ontology,
    load_scenario,
    load_script,
    run_scenario,
)


def offline_verdicts(trace: Trace, scenario: Scenario) -> list[WaTransition]:
    """Recompute every work-agreement transition from a recorded trace.

    Rebuilds a fresh engine from the scenario's pre-accepted agreements, then
    replays the trace's message and event records tick by tick, applying the
    same registration hooks the live router uses (implicit agreements from
    Query/Subscribe/Request, negotiation via Propose/Accept/Reject, Cancel).
    """
    ontology = _resolve_ontology(scenario)
    engine = AgreementEngine(ontology)
    for wa_doc in scenario.doc.get("pre_accepted_was", []):
        engine.register_accepted(WorkAgreement.from_doc(wa_doc), provenance="scenario")

    by_tick: dict[int, list[dict]] = defaultdict(list)
    max_tick = 0
    for rec in trace.records:
        if rec.get("record") in ("message", "event"):
            tick = rec["tick"]
            by_tick[tick].append(rec)
            max_tick = max(max_tick, tick)

    transitions: list[WaTransition] = []
    for now in range(1, max_tick + 1):
        events: list[Event] = []
        for rec in by_tick.get(now, []):
            if rec["record"] == "event":
                events.append(
                    Event(rec["tick"], rec["actor"], EventKind(rec["kind"]),
                          rec["payload"])
                )
                continue
            msg = decode_wire_object(rec["wire"])
            p = msg.performative
            events.append(
                Event(
                    rec["tick"],
                    msg.sender,
                    EventKind.MESSAGE_SENT,
                    {
                        "action": "SendInformation"
                        if p is Performative.INFORM
                        else p.value,
                        "performative": p.value,
                        "in_reply_to": msg.in_reply_to,
                        "conversation_id": msg.conversation_id,
                        "receiver": msg.receiver,
                    },
                )
            )
            if msg.in_reply_to and p in (
                Performative.REJECT, Performative.PROPOSE,
                Performative.NOT_UNDERSTOOD,
            ):
                implicit = engine.agreements.get(f"wa-{msg.in_reply_to}")
                if (
                    implicit is not None
                    and implicit.accepted_by == "implicit"
                    and msg.sender == implicit.debtor
                    and implicit.state in (WaState.DORMANT, WaState.ACTIVE)
                ):
                    prev = implicit.state
                    engine.cancel(implicit.wa_id, msg.sender)
                    transitions.append(
                        WaTransition(implicit.wa_id, prev, WaState.CANCELLED,
                                     now, reason=f"declined via {p.value}")
                    )
            if p in (Performative.QUERY, Performative.SUBSCRIBE,
                     Performative.REQUEST):
                draft = implicit_wa_from(msg, engine.default_deadline)
                if draft is not None and draft.wa_id not in engine.agreements:
                    engine.register_accepted(draft, provenance="implicit")
            elif p is Performative.PROPOSE and isinstance(msg.content, dict) \
                    and "wa_id" in msg.content:
                if msg.content["wa_id"] not in engine.agreements:
                    draft = WorkAgreement.from_doc(msg.content)
                    draft.debtor = draft.debtor or msg.receiver
                    draft.creditor = draft.creditor or msg.sender
                    engine.agreements[draft.wa_id] = draft
            elif p in (Performative.ACCEPT, Performative.REJECT):
                ref = msg.content.get("ref", "")
                wa = engine.agreements.get(ref)
                if wa is not None and wa.state is WaState.PROPOSED:
                    try:
                        engine.resolve_response(ref, p, msg.sender)
                        transitions.append(
                            WaTransition(ref, WaState.PROPOSED, wa.state, now,
                                         reason=f"{p.value} by {msg.sender}")
                        )
                    except AgreementError:
                        pass
            elif p is Performative.CANCEL:
                ref = msg.content.get("ref", "")
                wa = engine.agreements.get(ref)
                if wa is not None and msg.sender in (wa.debtor, wa.creditor) \
                        and wa.state in (WaState.DORMANT, WaState.ACTIVE):
                    prev = wa.state
                    engine.cancel(ref, msg.sender)
                    transitions.append(
                        WaTransition(ref, prev, WaState.CANCELLED, now,
                                     reason=f"cancelled by {msg.sender}")
                    )
        transitions.extend(engine.step(events, now))
    return transitions


def _load_trace(path: str) -> Trace:
    return Trace.from_jsonl(Path(path).read_text())


def cmd_run(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    script = load_script(args.script) if args.script else None
    bus = run_scenario(scenario, ticks=args.ticks, seed=args.seed, script=script)
    text = bus.trace.to_jsonl()
    if args.trace:
        Path(args.trace).write_text(text)
    messages = len(bus.trace.messages())
    print(f"scenario={scenario.scenario_id} ticks={bus.tick} "
          f"messages={messages} digest={bus.trace.digest()}")
    return 0


def cmd_replay(args: argparse.Namespace) -> int:
    trace = _load_trace(args.trace)
    counts: dict[str, int] = defaultdict(int)
    for rec in trace.records:
        kind = rec.get("record", "?")
        counts[kind] += 1
        tick = rec.get("tick", 0)
        if kind == "meta":
            print(f"meta scenario={rec.get('scenario')} seed={rec.get('seed')} "
                  f"team_mode={rec.get('team_mode')}")
        elif kind == "message":
            w = rec["wire"]
            print(f"[{tick:4d}] {w['Sender']} -> {w['Receiver']} "
                  f"{w['Performative']} {w['Message-ID']} "
                  f"({w['Conversation-ID']})")
        elif kind == "event":
            print(f"[{tick:4d}] event {rec['actor']} {rec['kind']} "
                  f"{json.dumps(rec['payload'], sort_keys=True)}")
        elif kind == "wa":
            print(f"[{tick:4d}] wa {rec['wa_id']}: {rec['from']} -> {rec['to']}"
                  f" ({rec['reason']})")
        elif kind == "decision":
            print(f"[{tick:4d}] procom {rec.get('kind')} "
                  f"topic={rec.get('topic_id')}")
    summary = " ".join(f"{k}={v}" for k, v in sorted(counts.items()))
    print(f"records: {summary} digest={trace.digest()}")
    return 0


def cmd_check(args: argparse.Namespace) -> int:
    trace = _load_trace(args.trace)
    scenario = load_scenario(args.scenario)
    transitions = offline_verdicts(trace, scenario)
    violations = 0
    for t in transitions:
        print(f"tick={t.tick} {t.wa_id}: {t.from_state.value} -> "
              f"{t.to_state.value} ({t.reason})")
        if t.to_state is WaState.VIOLATED:
            violations += 1
    print(f"violations: {violations}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .gateway import create_app

    scenario = load_scenario(args.scenario)
    script = load_script(args.script) if args.script else None
    app = create_app(
        scenario,
        seed=args.seed,
        script=script,
        tick_rate=0.0 if args.headless else args.tick_rate,
        tick_limit=args.ticks,
        console_dir=Path(args.console) if args.console else None,
    )
    host, _, port = args.bind.partition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sailkit",
        description="Human-agent teaming middleware: scenario runner, trace "
                    "tools, and operator gateway.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario and record a trace")
    p_run.add_argument("scenario")
    p_run.add_argument("--ticks", type=int, default=200)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--trace", default=None, help="write trace JSONL here")
    p_run.add_argument("--script", default=None, help="timed operator script")
    p_run.set_defaults(func=cmd_run)

    p_replay = sub.add_parser("replay", help="pretty-print a recorded trace")
    p_replay.add_argument("trace")
    p_replay.set_defaults(func=cmd_replay)

    p_check = sub.add_parser(
        "check", help="recompute work-agreement verdicts from a trace"
    )
    p_check.add_argument("trace")
    p_check.add_argument("scenario")
    p_check.set_defaults(func=cmd_check)

    p_serve = sub.add_parser("serve", help="serve the operator gateway")
    p_serve.add_argument("scenario")
    p_serve.add_argument("--bind", default="127.0.0.1:8000")
    p_serve.add_argument("--tick-rate", type=float, default=5.0)
    p_serve.add_argument("--headless", action="store_true",
                         help="no free-running tick loop; step via /api/tick")
    p_serve.add_argument("--ticks", type=int, default=None,
                         help="stop the tick loop after this many ticks")
    p_serve.add_argument("--seed", type=int, default=None)
    p_serve.add_argument("--script", default=None)
    p_serve.add_argument("--console", default=None,
                         help="directory with built console assets to serve at /")
    p_serve.set_defaults(func=cmd_serve)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
