"""Engine-versus-oracle equivalence on randomized agreement sets and traces.

The oracle (tests/wa_oracle.py) shares no code with the engine: it works on
plain JSON documents and re-derives all states from scratch at every tick.
"""

import random

import pytest

from sailkit.agreements import (
    AgreementEngine,
    Event,
    EventKind,
    WaState,
    WorkAgreement,
)
from wa_oracle import oracle_forbidden, oracle_states

ACTIONS = ["Go", "Stop", "Scan", "Lift"]
TYPES = ["Trigger", "Alarm", "Noise", "Calm"]
ACTORS = ["A1", "A2", "A3"]
AREAS = ["north", "south"]


def random_condition(rng: random.Random, depth: int = 0) -> dict:
    roll = rng.random()
    if depth >= 3 or roll < 0.45:
        field_name, value = rng.choice(
            [("type", rng.choice(TYPES)), ("area", rng.choice(AREAS)),
             ("level", rng.randint(0, 3))]
        )
        op = rng.choice(["=", "!=", "<", ">="]) if field_name == "level" else \
            rng.choice(["=", "!="])
        return {"field": field_name, "op": op, "value": value}
    if roll < 0.6:
        return {"always": True}
    if roll < 0.75:
        return {"all": [random_condition(rng, depth + 1) for _ in range(2)]}
    if roll < 0.9:
        return {"any": [random_condition(rng, depth + 1) for _ in range(2)]}
    return {"not": random_condition(rng, depth + 1)}


def random_wa(rng: random.Random, index: int) -> dict:
    kind = rng.choice(["obligation", "prohibition"])
    where = []
    if rng.random() < 0.5:
        where.append({"field": "area", "op": "=", "value": rng.choice(AREAS)})
    return {
        "wa_id": f"wa-{index}",
        "kind": kind,
        "debtor": rng.choice(ACTORS),
        "creditor": "Hum1",
        "antecedent": random_condition(rng),
        "consequent": {"action": rng.choice(ACTIONS), "where": where},
        "deadline_ticks": rng.randint(1, 8) if kind == "obligation" else None,
    }


def random_event(rng: random.Random, tick: int) -> dict:
    if rng.random() < 0.5:
        payload = {"type": rng.choice(TYPES), "area": rng.choice(AREAS),
                   "level": rng.randint(0, 3)}
        kind = "ObservationMade"
    else:
        payload = {"action": rng.choice(ACTIONS), "area": rng.choice(AREAS)}
        kind = rng.choice(["ActionPerformed", "MessageSent"])
    return {"tick": tick, "actor": rng.choice(ACTORS), "kind": kind,
            "payload": payload}


def run_case(rng: random.Random) -> None:
    was = [random_wa(rng, i) for i in range(rng.randint(1, 5))]
    horizon = rng.randint(1, 50)
    events_by_tick: dict[int, list[dict]] = {}
    total = 0
    for tick in range(1, horizon + 1):
        count = rng.randint(0, 2)
        if total + count > 50:
            count = 0
        group = [random_event(rng, tick) for _ in range(count)]
        total += count
        if group:
            events_by_tick[tick] = group

    engine = AgreementEngine()
    for doc in was:
        engine.register_accepted(WorkAgreement.from_doc(doc))

    # the oracle re-scan is quadratic; verify at a few random ticks plus the
    # final one rather than at all fifty
    check_ticks = {horizon} | {rng.randint(1, horizon) for _ in range(3)}
    for now in range(1, horizon + 1):
        group = [
            Event(e["tick"], e["actor"], EventKind(e["kind"]), e["payload"])
            for e in events_by_tick.get(now, [])
        ]
        engine.step(group, now)
        if now not in check_ticks:
            continue
        expected = oracle_states(was, events_by_tick, now)
        actual = {wid: wa.state.value for wid, wa in engine.agreements.items()}
        assert actual == expected, (
            f"divergence at tick {now}: engine={actual} oracle={expected} "
            f"was={was} events={events_by_tick}"
        )
        # permission soundness on a random probe
        probe = {"action": rng.choice(ACTIONS), "area": rng.choice(AREAS)}
        actor = rng.choice(ACTORS)
        verdict = engine.check_action_permitted(actor, probe, now)
        citing = oracle_forbidden(was, events_by_tick, actor, probe, now)
        assert verdict.permitted == (citing is None)
        assert verdict.citing == citing


class TestOracleEquivalence:
    @pytest.mark.parametrize("chunk", range(20))
    def test_random_cases(self, chunk):
        rng = random.Random(9000 + chunk)
        for _ in range(500):
            run_case(rng)

    def test_terminality_monotone(self):
        # once terminal, a state never changes under further random stimuli
        rng = random.Random(4242)
        for _ in range(200):
            was = [random_wa(rng, i) for i in range(3)]
            engine = AgreementEngine()
            for doc in was:
                engine.register_accepted(WorkAgreement.from_doc(doc))
            frozen: dict[str, str] = {}
            for now in range(1, 40):
                group = [
                    Event(now, e["actor"], EventKind(e["kind"]), e["payload"])
                    for e in (random_event(rng, now) for _ in range(2))
                ]
                engine.step(group, now)
                for wid, wa in engine.agreements.items():
                    if wid in frozen:
                        assert wa.state.value == frozen[wid]
                    elif wa.state in (WaState.SATISFIED, WaState.VIOLATED,
                                      WaState.REJECTED, WaState.CANCELLED):
                        frozen[wid] = wa.state.value
