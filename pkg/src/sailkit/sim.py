"""Deterministic discrete-tick 2D surveillance world.

Grid coordinates are (x, y) with y growing north; movement is 8-directional,
one cell per tick, distances are Chebyshev.  Everything stochastic draws from
one seeded generator owned by the world, so (seed, scenario) fixes the full
trajectory.

Also hosts the two reference agents used to demonstrate semantic anchoring:
a fixed-cycle loop agent gated by a ``t1_permitted`` variable, and a
desirability-map agent whose left-of-heading cells can be floored.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from shapely.geometry import LineString, Point, Polygon

from .agreements import Event, EventKind, PermissionCheck, PERMITTED
from .anchors import AnchorApi

MOVE_COST = 0.001
RECHARGE_RATE = 0.05
DETECTION_RADIUS = 3
MISCLASSIFY_RATE = 0.10
CONFIDENCE_RANGE = (0.7, 1.0)
FINISH_FIRST_THRESHOLD = 5
LOW_BATTERY_THRESHOLD = 0.2

#: Fixed neighbor preference: N, NE, E, SE, S, SW, W, NW.
NEIGHBOR_ORDER = [(0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1)]

CLASS_CONCEPTS = {
    "Hostile": "HostileContact",
    "Unknown": "UnknownContact",
    "Friendly": "FriendlyContact",
}


def chebyshev(a: tuple, b: tuple) -> int:
    return max(abs(a[0] - b[0]), abs(a[1] - b[1]))


@dataclass
class Region:
    name: str
    kind: str  # village | hostile_fire | base
    polygon: Polygon

    def covers(self, cell: tuple) -> bool:
        return self.polygon.covers(Point(cell))

    @classmethod
    def from_doc(cls, doc: dict) -> "Region":
        return cls(doc["name"], doc.get("kind", "area"), Polygon(doc["polygon"]))


@dataclass
class Entity:
    entity_id: str
    position: tuple
    true_class: str  # Friendly | Unknown | Hostile
    path: list[tuple] = field(default_factory=list)
    spawn_tick: int = 0
    despawn_tick: Optional[int] = None
    spawned: bool = False
    _path_index: int = 0


@dataclass
class Order:
    action: str
    target: tuple
    via: list[tuple] = field(default_factory=list)
    duration: int = 0  # remaining ticks at target (TakePhoto)
    total_duration: int = 0  # as requested, for reporting on completion
    source_msg: str = ""


@dataclass
class UavState:
    uav_id: str
    position: tuple
    battery: float = 1.0
    heading: tuple = (0, 1)
    patrol: list[tuple] = field(default_factory=list)
    patrol_index: int = 0
    orders: list[Order] = field(default_factory=list)
    notify_on_hostile: bool = True
    low_battery_reported: bool = False
    last_position: Optional[tuple] = None


class World:
    def __init__(
        self,
        grid: tuple[int, int] = (64, 64),
        base: Optional[Region] = None,
        regions: Optional[list[Region]] = None,
        seed: int = 0,
    ) -> None:
        self.width, self.height = grid
        self.base = base
        self.regions = regions or []
        self.rng = random.Random(seed)
        self.entities: dict[str, Entity] = {}
        self.uavs: dict[str, UavState] = {}
        self.tick = 0
        # (uav, entity) -> observed concept, fixed at first classification
        self.contacts: dict[tuple[str, str], str] = {}

    @classmethod
    def from_doc(cls, doc: dict, seed: int = 0) -> "World":
        regions = [Region.from_doc(r) for r in doc.get("regions", [])]
        base = None
        if "base" in doc:
            x0, y0, x1, y1 = doc["base"]
            base = Region("Base", "base", Polygon([(x0, y0), (x1, y0), (x1, y1), (x0, y1)]))
        world = cls(tuple(doc.get("grid", (64, 64))), base, regions, seed)
        for e in doc.get("entities", []):
            world.entities[e["id"]] = Entity(
                e["id"],
                tuple(e["spawn"]),
                e["class"],
                [tuple(p) for p in e.get("path", [])],
                e.get("spawn_tick", 0),
                e.get("despawn_tick"),
            )
        for u in doc.get("uavs", []):
            world.uavs[u["id"]] = UavState(
                u["id"],
                tuple(u["start"]),
                u.get("battery", 1.0),
                patrol=[tuple(p) for p in u.get("patrol", [])],
                notify_on_hostile=u.get("notify_on_hostile", True),
            )
        return world

    # -- geometry ----------------------------------------------------------

    def in_bounds(self, cell: tuple) -> bool:
        return 0 <= cell[0] < self.width and 0 <= cell[1] < self.height

    def region_of(self, cell: tuple) -> str:
        for region in self.regions:
            if region.covers(cell):
                return region.name
        return "open"

    def in_base(self, cell: tuple) -> bool:
        return self.base is not None and self.base.covers(cell)

    def base_center(self) -> tuple:
        if self.base is None:
            return (self.width // 2, self.height // 2)
        c = self.base.polygon.centroid
        return (int(round(c.x)), int(round(c.y)))

    # -- stepping ----------------------------------------------------------

    def step(
        self, permission_check: Optional[Callable[[str, dict], PermissionCheck]] = None
    ) -> tuple[list[Event], list[tuple[str, dict]]]:
        """Advance one tick.  Returns (teaming-level events, internal records).

        Internal records are raw agent-internal observations (detections,
        battery levels); semantic anchors lift them to assertions upstream.
        """
        self.tick += 1
        check = permission_check or (lambda actor, action: PERMITTED)
        events: list[Event] = []
        internal: list[tuple[str, dict]] = []

        self._step_entities(internal)
        for uav_id in sorted(self.uavs):
            self._step_uav(self.uavs[uav_id], check, events, internal)
        return events, internal

    def _step_entities(self, internal: list) -> None:
        for entity in self.entities.values():
            if not entity.spawned and entity.spawn_tick <= self.tick and (
                entity.despawn_tick is None or self.tick < entity.despawn_tick
            ):
                entity.spawned = True
            if entity.spawned and entity.despawn_tick is not None and self.tick >= entity.despawn_tick:
                entity.spawned = False
                for (uav_id, ent_id) in list(self.contacts):
                    if ent_id == entity.entity_id:
                        internal.append(
                            (uav_id, {"kind": "contact_lost", "contact": ent_id})
                        )
                        del self.contacts[(uav_id, ent_id)]
                continue
            if entity.spawned and entity.path:
                target = entity.path[entity._path_index % len(entity.path)]
                if entity.position == target:
                    entity._path_index += 1
                    target = entity.path[entity._path_index % len(entity.path)]
                entity.position = _step_toward(entity.position, target)

    def _step_uav(self, uav: UavState, check, events: list, internal: list) -> None:
        # photo work at the current location takes the whole tick
        if uav.orders and uav.orders[0].action == "TakePhoto" and uav.position == uav.orders[0].target:
            order = uav.orders[0]
            order.duration -= 1
            done = order.duration <= 0
            payload = {"action": "TakePhoto", "at": list(uav.position), "completed": done}
            if done:
                payload["duration"] = order.total_duration
            events.append(
                Event(self.tick, uav.uav_id, EventKind.ACTION_PERFORMED, payload)
            )
            if done:
                uav.orders.pop(0)
        elif uav.battery > 0:
            self._move_uav(uav, check, events)

        if self.in_base(uav.position):
            uav.battery = min(1.0, uav.battery + RECHARGE_RATE)
        if uav.battery < LOW_BATTERY_THRESHOLD and not uav.low_battery_reported:
            uav.low_battery_reported = True
            internal.append(
                (uav.uav_id, {"kind": "battery", "level": round(uav.battery, 4), "uav": uav.uav_id})
            )

        self._detect(uav, events, internal)

    def _objective(self, uav: UavState) -> Optional[tuple]:
        if uav.orders:
            order = uav.orders[0]
            if order.via:
                if uav.position == tuple(order.via[0]):
                    order.via.pop(0)
                if order.via:
                    return tuple(order.via[0])
            return order.target
        if uav.patrol:
            return uav.patrol[uav.patrol_index % len(uav.patrol)]
        return None

    def _move_uav(self, uav: UavState, check, events: list) -> None:
        target = self._objective(uav)
        if target is None:
            return
        if uav.position == target:
            self._arrived(uav, events)
            return
        # prefer progress toward the target, but allow lateral slides around
        # forbidden regions
        options = []
        for dx, dy in NEIGHBOR_ORDER:
            cell = (uav.position[0] + dx, uav.position[1] + dy)
            if self.in_bounds(cell):
                options.append(cell)
        options.sort(key=lambda c: (chebyshev(c, target),
                                    (c[0] - target[0]) ** 2 + (c[1] - target[1]) ** 2))
        refused = None
        for cell in options:
            if chebyshev(cell, target) > chebyshev(uav.position, target):
                break  # never move strictly away from the objective
            if cell == uav.last_position:
                continue  # don't oscillate while sliding around a region
            verdict = check(
                uav.uav_id,
                {"action": "FlyTo", "actor": uav.uav_id, "to": list(cell),
                 "area": self.region_of(cell)},
            )
            if verdict.permitted:
                step = (cell[0] - uav.position[0], cell[1] - uav.position[1])
                uav.heading = step
                frm = uav.position
                uav.last_position = frm
                uav.position = cell
                uav.battery = max(0.0, uav.battery - MOVE_COST)
                events.append(
                    Event(self.tick, uav.uav_id, EventKind.ACTION_PERFORMED,
                          {"action": "FlyTo", "from": list(frm), "to": list(cell),
                           "area": self.region_of(cell)})
                )
                if uav.position == target:
                    self._arrived(uav, events)
                return
            refused = verdict
        if refused is not None:
            events.append(
                Event(self.tick, uav.uav_id, EventKind.ACTION_PERFORMED,
                      {"action": "Refuse", "refused": "FlyTo", "citing": refused.citing})
            )

    def _arrived(self, uav: UavState, events: list) -> None:
        uav.last_position = None  # a fresh objective may legitimately reverse
        if uav.orders:
            order = uav.orders[0]
            if order.action == "FlyTo" and uav.position == order.target:
                uav.orders.pop(0)
                events.append(
                    Event(self.tick, uav.uav_id, EventKind.ACTION_PERFORMED,
                          {"action": "FlyTo", "to": list(uav.position), "arrived": True,
                           "area": self.region_of(uav.position)})
                )
        elif uav.patrol:
            events.append(
                Event(self.tick, uav.uav_id, EventKind.OBSERVATION_MADE,
                      {"type": "WaypointReached", "at": list(uav.position)})
            )
            uav.patrol_index = (uav.patrol_index + 1) % len(uav.patrol)

    def _detect(self, uav: UavState, events: list, internal: list) -> None:
        for entity_id in sorted(self.entities):
            entity = self.entities[entity_id]
            if not entity.spawned:
                continue
            if chebyshev(uav.position, entity.position) > DETECTION_RADIUS:
                continue
            key = (uav.uav_id, entity_id)
            if key in self.contacts:
                continue
            confidence = round(self.rng.uniform(*CONFIDENCE_RANGE), 3)
            observed = entity.true_class
            if self.rng.random() < MISCLASSIFY_RATE:
                observed = "Unknown"
            concept = CLASS_CONCEPTS[observed]
            self.contacts[key] = concept
            internal.append(
                (uav.uav_id,
                 {"kind": "detection", "class": observed.lower(),
                  "cell": list(entity.position), "conf": confidence,
                  "contact": entity_id})
            )
            if concept == "HostileContact" and uav.notify_on_hostile:
                events.append(
                    Event(self.tick, uav.uav_id, EventKind.ACTION_PERFORMED,
                          {"action": "NotifyOperator", "contact": entity_id,
                           "at": list(entity.position)})
                )

    def snapshot(self) -> dict:
        return {
            "tick": self.tick,
            "vehicles": {
                u.uav_id: {
                    "position": list(u.position),
                    "battery": round(u.battery, 4),
                    "orders": [o.action for o in u.orders],
                }
                for u in self.uavs.values()
            },
            "entities": {
                e.entity_id: {"position": list(e.position), "spawned": e.spawned}
                for e in self.entities.values()
            },
        }


def _step_toward(pos: tuple, target: tuple) -> tuple:
    dx = (target[0] > pos[0]) - (target[0] < pos[0])
    dy = (target[1] > pos[1]) - (target[1] < pos[1])
    return (pos[0] + dx, pos[1] + dy)


# --- soft-directive arbitration --------------------------------------------


@dataclass(frozen=True)
class Arbitration:
    decision: str  # accept | reject | propose | clarify
    reason: str = ""
    alternative: Optional[dict] = None
    finish_first: bool = False


class UnknownAction(Exception):
    pass


def _crosses(a: tuple, b: tuple, region: Region) -> bool:
    if a == b:
        return region.covers(a)
    return LineString([a, b]).intersects(region.polygon)


def _route_cost(points: list[tuple]) -> int:
    return sum(chebyshev(points[i], points[i + 1]) for i in range(len(points) - 1))


def arbitrate_directive(uav: UavState, request: dict, world: World) -> Arbitration:
    """Decide how a UAV answers a directive instead of blindly executing it.

    Order of concerns: incapability (battery), conflict with the stay-safe
    team goal (hostile-fire crossing, counter-proposed around), sequencing
    against unfinished orders, then acceptance.
    """
    action = request.get("action")
    if action not in ("FlyTo", "TakePhoto", "Surveil"):
        raise UnknownAction(str(action))
    target = tuple(request["to"]) if "to" in request else tuple(request.get("at", uav.position))

    round_trip = chebyshev(uav.position, target) + chebyshev(target, world.base_center())
    if uav.battery < round_trip * MOVE_COST:
        return Arbitration("reject", "Incapability: LowBattery")

    fire_zones = [r for r in world.regions if r.kind == "hostile_fire"]
    for zone in fire_zones:
        if _crosses(uav.position, target, zone) and "via" not in request:
            via = _find_detour(uav.position, target, zone, world)
            if via is not None:
                return Arbitration(
                    "propose",
                    "ConflictWithTeamGoal: hostile fire on direct route",
                    alternative={"action": "FlyTo", "to": list(target), "via": [list(via)]},
                )
            return Arbitration("reject", "ConflictWithTeamGoal: no safe route")

    if uav.orders:
        remaining = _remaining_cost(uav, uav.orders[0])
        if remaining <= FINISH_FIRST_THRESHOLD:
            return Arbitration("accept", "finish-first", finish_first=True)
        return Arbitration("clarify", f"unfinished order needs {remaining} more ticks")

    return Arbitration("accept")


def _remaining_cost(uav: UavState, order: Order) -> int:
    travel = chebyshev(uav.position, order.target)
    return travel + (order.duration if order.action == "TakePhoto" else 0)


def _find_detour(
    start: tuple, target: tuple, zone: Region, world: World
) -> Optional[tuple]:
    minx, miny, maxx, maxy = zone.polygon.bounds
    margin = 2
    candidates = [
        (int(minx) - margin, int(miny) - margin),
        (int(maxx) + margin, int(miny) - margin),
        (int(maxx) + margin, int(maxy) + margin),
        (int(minx) - margin, int(maxy) + margin),
    ]
    for via in candidates:
        if not world.in_bounds(via):
            continue
        if not _crosses(start, via, zone) and not _crosses(via, target, zone):
            return via
    return None


# --- reference agents (semantic-anchor demonstrations) ---------------------


class LoopAgent:
    """Cycles turn_left, turn_right, move_straight; the left turn is gated by
    the anchorable ``t1_permitted`` variable."""

    SEQUENCE = ("turn_left", "turn_right", "move_straight")

    def __init__(self) -> None:
        self.t1_permitted = True
        self._index = 0
        self.api = AnchorApi()
        self.api.expose_variable(
            "t1_permitted",
            lambda: self.t1_permitted,
            lambda v: setattr(self, "t1_permitted", v),
        )

    def step(self) -> str:
        while True:
            action = self.SEQUENCE[self._index]
            self._index = (self._index + 1) % len(self.SEQUENCE)
            if action == "turn_left" and not self.t1_permitted:
                continue
            return action


class MapAgent:
    """Greedy forager over a desirability map in [0, 1].

    Moves to the argmax-desirability 8-neighbor (ties broken N, NE, E, SE, S,
    SW, W, NW), consuming each departed cell.  While the left-side constraint
    is active, the three cells left of heading within radius 1 are floored
    before choosing, and never selected.
    """

    def __init__(self, size: int = 31, seed: int = 0, floor_value: float = 0.0,
                 desirability: Optional[np.ndarray] = None) -> None:
        rng = np.random.default_rng(seed)
        self.desirability = (
            desirability.copy() if desirability is not None
            else rng.uniform(0.0, 1.0, size=(size, size))
        )
        self.size = self.desirability.shape[0]
        self.position = (self.size // 2, self.size // 2)
        self.heading = (0, 1)
        self.floor_value = floor_value
        self.constrained = False
        self.net_lateral = 0.0  # + is rightward relative to heading
        self.api = AnchorApi()
        self.api.expose_routine("left_side_floor", self._left_side_floor)

    def _left_side_floor(self, phase: str, payload: dict) -> None:
        self.constrained = phase == "activate"

    def _left_cells(self) -> list[tuple]:
        hx, hy = self.heading
        lx, ly = -hy, hx  # 90 degrees counterclockwise
        px, py = self.position
        cells = [
            (px + lx, py + ly),
            (px + lx + hx, py + ly + hy),
            (px + lx - hx, py + ly - hy),
        ]
        return [c for c in cells if 0 <= c[0] < self.size and 0 <= c[1] < self.size]

    def step(self) -> tuple:
        floored: set = set()
        if self.constrained:
            floored = set(self._left_cells())
            for cell in floored:
                self.desirability[cell] = self.floor_value
        px, py = self.position
        best = None
        best_value = -1.0
        for dx, dy in NEIGHBOR_ORDER:
            cell = (px + dx, py + dy)
            if not (0 <= cell[0] < self.size and 0 <= cell[1] < self.size):
                continue
            if cell in floored:
                continue
            value = float(self.desirability[cell])
            if value > best_value:
                best, best_value = cell, value
        if best is None:
            return self.position
        move = (best[0] - px, best[1] - py)
        hx, hy = self.heading
        self.net_lateral += move[0] * hy - move[1] * hx  # + = rightward
        self.desirability[self.position] = 0.0  # consumed
        self.position = best
        self.heading = move
        return best
