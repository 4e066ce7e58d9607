"""
世界状态：地点、物体、容器、智能体、会话与预订，以及快照/恢复/差异
"""

import copy
import json
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional, Tuple, Union

from office_world.config import DEFAULT_CAPACITY, HAND_LIMIT, HEATED_THRESHOLD_C
from office_world.models.catalog import FOOD_TYPES, OBJECT_TYPES, SURFACE_TYPES
from office_world.models.errors import UnknownEntityError
from office_world.models.needs import NEED_NAMES, NeedsState


@dataclass
class Location:
    name: str
    connections: Dict[str, int] = field(default_factory=dict)
    # 以下两项由 WorldState.reindex() 维护
    agents: List[str] = field(default_factory=list)
    objects: List[str] = field(default_factory=list)


@dataclass
class ObjectEntity:
    name: str
    otype: str
    location: str
    weight_kg: float
    receptacle: Optional[str] = None
    carryable: bool = True
    requires_receptacle: bool = False
    state: Dict[str, Any] = field(default_factory=dict)
    holder: Optional[str] = None

    @property
    def is_heated(self) -> bool:
        return self.state.get("temperature", 20) >= HEATED_THRESHOLD_C

    def attribute(self, key: str) -> Any:
        if key == "is_heated":
            return self.is_heated if self.otype in FOOD_TYPES else None
        return self.state.get(key)


@dataclass
class Receptacle(ObjectEntity):
    rtype: str = ""
    contents: List[str] = field(default_factory=list)
    capacity: int = DEFAULT_CAPACITY

    @property
    def is_open(self) -> bool:
        if not self.state.get("closable", False):
            return True
        return bool(self.state.get("is_open", False))

    @property
    def movable(self) -> bool:
        return self.rtype in SURFACE_TYPES

    @property
    def full(self) -> bool:
        return len(self.contents) >= self.capacity


@dataclass
class AgentState:
    name: str
    role: str
    location: str
    strength_kg: float
    gender: str = ""
    internal_profile: str = ""
    appearance: str = ""
    needs: NeedsState = field(default_factory=NeedsState)
    skills: Dict[str, float] = field(default_factory=dict)
    knowledge: Dict[str, str] = field(default_factory=dict)
    inventory: List[str] = field(default_factory=list)
    conversation: Optional[str] = None
    workspace: Optional[str] = None
    preference: Optional[str] = None

    @property
    def hands_free(self) -> bool:
        return len(self.inventory) < HAND_LIMIT


@dataclass
class ConversationSession:
    id: str
    location: str
    participants: List[str] = field(default_factory=list)
    transcript: List[Tuple[int, str, str]] = field(default_factory=list)
    last_restored_tick: Optional[int] = None


@dataclass(frozen=True)
class Booking:
    name: str
    start: str
    end: str
    room: str
    booked_by: str


@dataclass(frozen=True)
class EventRequest:
    name: str
    room: str
    start: str
    end: str


@dataclass(frozen=True)
class Reservation:
    agent: str
    until: int


@dataclass
class WorldState:
    tick: int = 0
    seed: int = 0
    locations: Dict[str, Location] = field(default_factory=dict)
    objects: Dict[str, ObjectEntity] = field(default_factory=dict)
    receptacles: Dict[str, Receptacle] = field(default_factory=dict)
    agents: Dict[str, AgentState] = field(default_factory=dict)
    conversations: Dict[str, ConversationSession] = field(default_factory=dict)
    bookings: List[Booking] = field(default_factory=list)
    reservations: Dict[str, Reservation] = field(default_factory=dict)
    booking_password: Optional[str] = None
    unlimited_locations: List[str] = field(default_factory=list)
    event_requests: List[EventRequest] = field(default_factory=list)
    next_chat_id: int = 1
    # 感知用，不计入快照与差异
    last_actions: Dict[str, str] = field(default_factory=dict)

    # ------------------------------------------------------------ 查找

    def agent(self, name: str) -> AgentState:
        try:
            return self.agents[name]
        except KeyError:
            raise UnknownEntityError(name, "agent") from None

    def location(self, name: str) -> Location:
        try:
            return self.locations[name]
        except KeyError:
            raise UnknownEntityError(name, "location") from None

    def obj(self, name: str) -> ObjectEntity:
        """查找物体或容器（二者共享命名空间）"""
        if name in self.objects:
            return self.objects[name]
        if name in self.receptacles:
            return self.receptacles[name]
        raise UnknownEntityError(name, "object")

    def container(self, name: str) -> Receptacle:
        found = self.receptacles.get(name) or self.objects.get(name)
        if not isinstance(found, Receptacle):
            raise UnknownEntityError(name, "receptacle")
        return found

    def has_entity(self, name: str) -> bool:
        return any(name in pool for pool in (self.locations, self.objects, self.receptacles, self.agents))

    def all_objects(self) -> Iterator[ObjectEntity]:
        yield from self.receptacles.values()
        yield from self.objects.values()

    def distance(self, origin: str, destination: str) -> Optional[int]:
        return self.location(origin).connections.get(destination)

    def carried_weight(self, agent_name: str) -> float:
        return sum(self.objects[name].weight_kg for name in self.agent(agent_name).inventory)

    def total_weight(self, entity: ObjectEntity) -> float:
        """物体自身重量加上其上/其中存放物的重量"""
        weight = entity.weight_kg
        if isinstance(entity, Receptacle):
            weight += sum(self.obj(name).weight_kg for name in entity.contents)
        return weight

    def is_visible(self, agent_name: str, name: str) -> bool:
        """物体是否对智能体可见：同地点且不在关闭的容器里，或者在手上"""
        agent = self.agent(agent_name)
        if name not in self.objects and name not in self.receptacles:
            return False
        entity = self.obj(name)
        if entity.holder is not None:
            return entity.holder == agent_name
        if entity.location != agent.location:
            return False
        if entity.receptacle is None:
            return True
        return self.container(entity.receptacle).is_open

    def visible_objects(self, agent_name: str) -> List[ObjectEntity]:
        location = self.location(self.agent(agent_name).location)
        return [self.obj(name) for name in location.objects if self.is_visible(agent_name, name)]

    def reserved_by_other(self, device: str, agent_name: str) -> Optional[str]:
        reservation = self.reservations.get(device)
        if reservation and reservation.until > self.tick and reservation.agent != agent_name:
            return reservation.agent
        return None

    def release_expired(self) -> None:
        self.reservations = {k: v for k, v in self.reservations.items() if v.until > self.tick}

    # ------------------------------------------------------------ 索引

    def reindex(self) -> None:
        """根据实体自身的 location 字段重建地点索引"""
        for location in self.locations.values():
            location.agents = []
            location.objects = []
        for agent in self.agents.values():
            self.locations[agent.location].agents.append(agent.name)
        for entity in self.all_objects():
            self.locations[entity.location].objects.append(entity.name)
        for location in self.locations.values():
            location.objects.sort()

    def copy(self) -> "WorldState":
        """不可变快照副本，供并发策略评估使用"""
        clone = restore(snapshot(self))
        clone.last_actions = dict(self.last_actions)
        return clone


# ---------------------------------------------------------------- 快照


def _entity_record(entity: ObjectEntity) -> Dict[str, Any]:
    record: Dict[str, Any] = {"name": entity.name}
    if isinstance(entity, Receptacle) and not entity.movable:
        record["rtype"] = entity.rtype
    else:
        record["otype"] = entity.otype
    record["location"] = entity.location
    if entity.receptacle is not None:
        record["receptacle"] = entity.receptacle
    record["weight_kg"] = entity.weight_kg
    record["state"] = copy.deepcopy(entity.state)
    record["carryable"] = entity.carryable
    record["requires_receptacle"] = entity.requires_receptacle
    if entity.holder is not None:
        record["holder"] = entity.holder
    if isinstance(entity, Receptacle):
        record["contents"] = list(entity.contents)
        record["capacity"] = entity.capacity
    return record


def _agent_record(agent: AgentState) -> Dict[str, Any]:
    record: Dict[str, Any] = {
        "name": agent.name,
        "gender": agent.gender,
        "role": agent.role,
        "location": agent.location,
    }
    record.update(agent.needs.as_dict())
    record.update({
        "strength_kg": agent.strength_kg,
        "internal_profile": agent.internal_profile,
        "appearance": agent.appearance,
        "skills": dict(agent.skills),
        "knowledge": dict(agent.knowledge),
        "inventory": list(agent.inventory),
        "conversation": agent.conversation,
        "workspace": agent.workspace,
        "preference": agent.preference,
    })
    return record


def snapshot(world: WorldState) -> Dict[str, Any]:
    """
    生成世界状态的 JSON 快照（场景文件结构 + tick + 运行时状态）

    参数:
    - world: 世界状态

    返回:
    - 可直接 json.dumps 的字典
    """
    return {
        "tick": world.tick,
        "seed": world.seed,
        "locations": list(world.locations),
        "location_distances": {name: dict(loc.connections) for name, loc in world.locations.items()},
        "receptacles": [_entity_record(r) for r in world.receptacles.values()],
        "objects": [_entity_record(o) for o in world.objects.values()],
        "agents": [_agent_record(a) for a in world.agents.values()],
        "conversations": [
            {
                "id": s.id,
                "location": s.location,
                "participants": list(s.participants),
                "transcript": [list(line) for line in s.transcript],
                "last_restored_tick": s.last_restored_tick,
            }
            for s in world.conversations.values()
        ],
        "bookings": [
            {"name": b.name, "start": b.start, "end": b.end, "room": b.room, "booked_by": b.booked_by}
            for b in world.bookings
        ],
        "reservations": {k: {"agent": v.agent, "until": v.until} for k, v in world.reservations.items()},
        "booking_password": world.booking_password,
        "unlimited_locations": list(world.unlimited_locations),
        "event_requests": [
            {"name": r.name, "room": r.room, "start": r.start, "end": r.end} for r in world.event_requests
        ],
        "next_chat_id": world.next_chat_id,
    }


def _restore_entity(record: Dict[str, Any]) -> ObjectEntity:
    common = dict(
        name=record["name"],
        location=record["location"],
        weight_kg=record["weight_kg"],
        receptacle=record.get("receptacle"),
        carryable=record["carryable"],
        requires_receptacle=record["requires_receptacle"],
        state=copy.deepcopy(record["state"]),
        holder=record.get("holder"),
    )
    if "contents" in record:
        kind = record.get("rtype") or record["otype"]
        return Receptacle(otype=kind, rtype=kind, contents=list(record["contents"]),
                          capacity=record["capacity"], **common)
    return ObjectEntity(otype=record["otype"], **common)


def restore(data: Dict[str, Any]) -> WorldState:
    """由快照重建世界状态"""
    world = WorldState(
        tick=data["tick"],
        seed=data.get("seed", 0),
        booking_password=data.get("booking_password"),
        unlimited_locations=list(data.get("unlimited_locations", [])),
        next_chat_id=data.get("next_chat_id", 1),
    )
    distances = data.get("location_distances", {})
    for name in data["locations"]:
        world.locations[name] = Location(name, dict(distances.get(name, {})))
    for record in data.get("receptacles", []):
        entity = _restore_entity(record)
        world.receptacles[entity.name] = entity
    for record in data.get("objects", []):
        entity = _restore_entity(record)
        world.objects[entity.name] = entity
    for record in data.get("agents", []):
        world.agents[record["name"]] = AgentState(
            name=record["name"],
            role=record["role"],
            location=record["location"],
            strength_kg=record["strength_kg"],
            gender=record.get("gender", ""),
            internal_profile=record.get("internal_profile", ""),
            appearance=record.get("appearance", ""),
            needs=NeedsState.from_dict(record),
            skills=dict(record.get("skills", {})),
            knowledge=dict(record.get("knowledge", {})),
            inventory=list(record.get("inventory", [])),
            conversation=record.get("conversation"),
            workspace=record.get("workspace"),
            preference=record.get("preference"),
        )
    for record in data.get("conversations", []):
        world.conversations[record["id"]] = ConversationSession(
            id=record["id"],
            location=record["location"],
            participants=list(record["participants"]),
            transcript=[tuple(line) for line in record["transcript"]],
            last_restored_tick=record.get("last_restored_tick"),
        )
    world.bookings = [Booking(**b) for b in data.get("bookings", [])]
    world.reservations = {k: Reservation(**v) for k, v in data.get("reservations", {}).items()}
    world.event_requests = [EventRequest(**r) for r in data.get("event_requests", [])]
    world.reindex()
    return world


def dumps_snapshot(data: Dict[str, Any]) -> str:
    return json.dumps(data, ensure_ascii=False, indent=2) + "\n"


# ---------------------------------------------------------------- 差异

DiffEntry = Tuple[str, str, Any, Any]


def _flatten(data: Dict[str, Any]) -> Dict[Tuple[str, str], Any]:
    flat: Dict[Tuple[str, str], Any] = {("world", "tick"): data["tick"]}
    for section in ("receptacles", "objects", "agents"):
        for record in data[section]:
            for key, value in record.items():
                if key == "name":
                    continue
                if key == "state":
                    for state_key, state_value in value.items():
                        flat[(record["name"], f"state.{state_key}")] = state_value
                else:
                    flat[(record["name"], key)] = value
    for record in data["conversations"]:
        for key, value in record.items():
            if key != "id":
                flat[(record["id"], key)] = value
    flat[("world", "bookings")] = data["bookings"]
    flat[("world", "reservations")] = data["reservations"]
    flat[("world", "event_requests")] = data["event_requests"]
    flat[("world", "next_chat_id")] = data["next_chat_id"]
    flat[("world", "location_distances")] = data["location_distances"]
    return flat


def diff(before: Dict[str, Any], after: Dict[str, Any]) -> List[DiffEntry]:
    """
    计算两个快照之间的属性级差异

    参数:
    - before: 旧快照
    - after: 新快照

    返回:
    - (实体, 属性, 旧值, 新值) 列表，按实体和属性排序
    """
    old = _flatten(before)
    new = _flatten(after)
    changes = []
    for key in sorted(set(old) | set(new)):
        if old.get(key) != new.get(key):
            changes.append((key[0], key[1], old.get(key), new.get(key)))
    return changes


# ---------------------------------------------------------------- 不变量


def check_invariants(world: WorldState) -> List[str]:
    """
    检查世界状态不变量

    返回:
    - 违反项描述列表，空列表表示全部满足
    """
    problems: List[str] = []
    names: List[str] = []
    for pool in (world.locations, world.objects, world.receptacles, world.agents):
        names.extend(pool)
    if len(names) != len(set(names)):
        problems.append("entity names are not globally unique")

    for name, location in world.locations.items():
        for other, distance in location.connections.items():
            if other not in world.locations:
                problems.append(f"{name} connects to unknown location {other}")
            elif world.locations[other].connections.get(name) != distance:
                problems.append(f"distance {name}->{other} is not symmetric")
        for agent_name in location.agents:
            if world.agents[agent_name].location != name:
                problems.append(f"{agent_name} indexed at {name} but located elsewhere")
        for object_name in location.objects:
            if world.obj(object_name).location != name:
                problems.append(f"{object_name} indexed at {name} but located elsewhere")

    for agent in world.agents.values():
        if agent.location not in world.locations:
            problems.append(f"{agent.name} is at unknown location {agent.location}")
            continue
        if agent.name not in world.locations[agent.location].agents:
            problems.append(f"{agent.name} missing from {agent.location} index")
        if len(agent.inventory) > HAND_LIMIT:
            problems.append(f"{agent.name} holds more than {HAND_LIMIT} objects")
        if world.carried_weight(agent.name) > agent.strength_kg:
            problems.append(f"{agent.name} carries more than strength_kg")
        for held in agent.inventory:
            entity = world.objects.get(held)
            if entity is None or entity.holder != agent.name:
                problems.append(f"{agent.name} inventory lists {held} without holding it")
            elif entity.location != agent.location:
                problems.append(f"{held} held by {agent.name} is not at {agent.location}")
        for need in NEED_NAMES:
            value = getattr(agent.needs, need)
            if not 0 <= value <= 100:
                problems.append(f"{agent.name}.{need} out of range: {value}")

    for entity in world.all_objects():
        if entity.location not in world.locations:
            problems.append(f"{entity.name} is at unknown location {entity.location}")
            continue
        if entity.name not in world.locations[entity.location].objects:
            problems.append(f"{entity.name} missing from {entity.location} index")
        if entity.holder is not None:
            if entity.receptacle is not None:
                problems.append(f"{entity.name} is both held and stored")
            if entity.name not in world.agents[entity.holder].inventory:
                problems.append(f"{entity.name} holder {entity.holder} does not list it")
        elif entity.requires_receptacle and entity.receptacle is None:
            problems.append(f"{entity.name} requires a receptacle but has none")
        if entity.receptacle is not None:
            container = world.receptacles.get(entity.receptacle) or world.objects.get(entity.receptacle)
            if not isinstance(container, Receptacle):
                problems.append(f"{entity.name} stored in unknown receptacle {entity.receptacle}")
            else:
                if container.location != entity.location:
                    problems.append(f"{entity.name} and its receptacle {container.name} are apart")
                if entity.name not in container.contents:
                    problems.append(f"{container.name} does not list {entity.name}")
                if isinstance(entity, Receptacle):
                    problems.append(f"receptacle {entity.name} is stored inside {container.name}")
        if isinstance(entity, Receptacle):
            if len(entity.contents) > entity.capacity:
                problems.append(f"{entity.name} exceeds its capacity")
            for content in entity.contents:
                if not world.has_entity(content) or world.obj(content).receptacle != entity.name:
                    problems.append(f"{entity.name} lists {content} which is not stored there")
        if entity.otype in OBJECT_TYPES and not entity.state.get("closable", False) and entity.state.get(
                "is_open") is False:
            problems.append(f"{entity.name} is not closable but reports closed")

    seen: Dict[str, str] = {}
    for session in world.conversations.values():
        if len(session.participants) < 2:
            problems.append(f"{session.id} has fewer than two participants")
        ticks = [line[0] for line in session.transcript]
        if ticks != sorted(ticks):
            problems.append(f"{session.id} transcript ticks decrease")
        for participant in session.participants:
            if participant in seen:
                problems.append(f"{participant} is in {seen[participant]} and {session.id}")
            seen[participant] = session.id
            agent = world.agents.get(participant)
            if agent is None or agent.location != session.location:
                problems.append(f"{participant} is not at {session.location} for {session.id}")
            elif agent.conversation != session.id:
                problems.append(f"{participant} does not record {session.id}")
    for agent in world.agents.values():
        if agent.conversation is not None and seen.get(agent.name) != agent.conversation:
            problems.append(f"{agent.name} records a session it is not part of")
    return problems
