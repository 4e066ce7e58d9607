"""
场景读写：解析、校验并实例化场景 JSON 文件
"""

import json
import os
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Dict, Iterable, List, Optional

import jsonschema

from office_world.config import DATA_DIR, DEFAULT_CAPACITY, SCENARIO_SCHEMA_FILE, SURFACE_CAPACITY
from office_world.models.catalog import OBJECT_TYPES, ROLES, SURFACE_TYPES
from office_world.models.errors import ScenarioError
from office_world.models.needs import NEED_NAMES, NeedsModel, NeedsState
from office_world.models.world import (
    AgentState,
    EventRequest,
    Location,
    ObjectEntity,
    Receptacle,
    WorldState,
)
from office_world.utils.logger import get_logger

logger = get_logger("Scenario")

PASSWORD_KEY = "booking_password"


@dataclass
class ReceptacleConfig:
    name: str
    location: str
    rtype: str
    weight_kg: float
    state: Dict[str, Any]


@dataclass
class ObjectConfig:
    name: str
    otype: str
    location: str
    weight_kg: float
    state: Dict[str, Any]
    receptacle: Optional[str] = None
    carryable: Optional[bool] = None
    requires_receptacle: Optional[bool] = None


@dataclass
class AgentConfig:
    name: str
    gender: str
    role: str
    location: str
    fullness: float
    hydration: float
    energy: float
    social_fulfillment: float
    strength_kg: float
    internal_profile: str
    appearance: str
    bladder: Optional[float] = None


@dataclass
class ScenarioConfig:
    locations: List[str]
    location_distances: Dict[str, Dict[str, int]]
    receptacles: List[ReceptacleConfig] = field(default_factory=list)
    objects: List[ObjectConfig] = field(default_factory=list)
    agents: List[AgentConfig] = field(default_factory=list)
    settings: Optional[Dict[str, Any]] = None

    def setting(self, key: str, default: Any = None) -> Any:
        return (self.settings or {}).get(key, default)

    def capacity_of(self, name: str, surface: bool = False) -> int:
        default = SURFACE_CAPACITY if surface else DEFAULT_CAPACITY
        return self.setting("capacities", {}).get(name, default)


@dataclass(frozen=True)
class Diagnostic:
    level: str  # error | warning
    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.level}: {self.path}: {self.message}"


# ---------------------------------------------------------------- 解析


@lru_cache(maxsize=1)
def _schema() -> Dict[str, Any]:
    with open(SCENARIO_SCHEMA_FILE, "r", encoding="utf-8") as f:
        return json.load(f)


def _json_path(parts: Iterable[Any]) -> str:
    path = "$"
    for part in parts:
        path += f"[{part}]" if isinstance(part, int) else f".{part}"
    return path


def _check_references(config: ScenarioConfig) -> None:
    locations = set(config.locations)
    names: Dict[str, str] = {name: "$.locations" for name in config.locations}

    def claim(name: str, path: str) -> None:
        if name in names:
            raise ScenarioError(f"duplicate name {name} (also at {names[name]})", path)
        names[name] = path

    def need_location(name: str, path: str) -> None:
        if name not in locations:
            raise ScenarioError(f"unknown location {name}", path)

    for origin, neighbours in config.location_distances.items():
        need_location(origin, f"$.location_distances.{origin}")
        for other in neighbours:
            need_location(other, f"$.location_distances.{origin}.{other}")
    for i, receptacle in enumerate(config.receptacles):
        claim(receptacle.name, f"$.receptacles[{i}]")
        need_location(receptacle.location, f"$.receptacles[{i}].location")
    surfaces = {o.name for o in config.objects if o.otype in SURFACE_TYPES}
    containers = {r.name for r in config.receptacles} | surfaces
    for i, obj in enumerate(config.objects):
        claim(obj.name, f"$.objects[{i}]")
        need_location(obj.location, f"$.objects[{i}].location")
        if obj.receptacle is not None and obj.receptacle not in containers:
            raise ScenarioError(f"unknown receptacle {obj.receptacle}", f"$.objects[{i}].receptacle")
    agents = set()
    for i, agent in enumerate(config.agents):
        claim(agent.name, f"$.agents[{i}]")
        need_location(agent.location, f"$.agents[{i}].location")
        agents.add(agent.name)

    for key in ("initial_needs", "preferences", "workspaces"):
        for name in config.setting(key, {}):
            if name != "*" and name not in agents:
                raise ScenarioError(f"unknown agent {name}", f"$.settings.{key}.{name}")
    for name, location in config.setting("workspaces", {}).items():
        need_location(location, f"$.settings.workspaces.{name}")
    for i, location in enumerate(config.setting("unlimited_locations", [])):
        need_location(location, f"$.settings.unlimited_locations[{i}]")
    for i, request in enumerate(config.setting("event_requests", [])):
        need_location(request["room"], f"$.settings.event_requests[{i}].room")
    for name in config.setting("capacities", {}):
        if name not in containers:
            raise ScenarioError(f"unknown receptacle {name}", f"$.settings.capacities.{name}")


def parse(text: str) -> ScenarioConfig:
    """
    解析场景 JSON 文本

    参数:
    - text: JSON 文本

    返回:
    - ScenarioConfig

    异常:
    - ScenarioError: JSON 格式错误（带行号）、结构不符（带 JSON 路径）或引用无法解析
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"malformed JSON at line {e.lineno} column {e.colno}: {e.msg}") from None

    validator = jsonschema.Draft7Validator(_schema())
    errors = sorted(validator.iter_errors(data), key=lambda e: (len(e.absolute_path), _json_path(e.absolute_path)))
    if errors:
        first = errors[0]
        diagnostics = [Diagnostic("error", _json_path(e.absolute_path), e.message) for e in errors]
        raise ScenarioError(first.message, _json_path(first.absolute_path), diagnostics)

    config = ScenarioConfig(
        locations=list(data["locations"]),
        location_distances={k: dict(v) for k, v in data["location_distances"].items()},
        receptacles=[ReceptacleConfig(**r) for r in data["receptacles"]],
        objects=[ObjectConfig(**o) for o in data["objects"]],
        agents=[AgentConfig(**a) for a in data["agents"]],
        settings=data.get("settings"),
    )
    _check_references(config)
    return config


def load_scenario(path: str) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as f:
        return parse(f.read())


def bundled_path(name: str) -> str:
    """内置场景/目标文件路径；name 可省略 .json 后缀"""
    filename = name if name.endswith(".json") else f"{name}.json"
    return os.path.join(DATA_DIR, filename)


# ---------------------------------------------------------------- 序列化

_RECEPTACLE_KEYS = ("name", "location", "rtype", "weight_kg", "state")
_OBJECT_KEYS = ("name", "otype", "location", "receptacle", "weight_kg", "carryable", "requires_receptacle", "state")
_AGENT_KEYS = ("name", "gender", "role", "location", "fullness", "hydration", "energy", "social_fulfillment",
               "bladder", "strength_kg", "internal_profile", "appearance")


def _ordered(record: Any, keys: Iterable[str]) -> Dict[str, Any]:
    result = {}
    for key in keys:
        value = getattr(record, key)
        if value is None:
            continue
        result[key] = dict(sorted(value.items())) if key == "state" else value
    return result


def _sorted_tree(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _sorted_tree(value[k]) for k in sorted(value)}
    if isinstance(value, list):
        return [_sorted_tree(v) for v in value]
    return value


def serialize(config: ScenarioConfig) -> str:
    """按规范键顺序输出场景 JSON（parse 后再 serialize 结果不变）"""
    order = {name: i for i, name in enumerate(config.locations)}
    distances = {}
    for origin in sorted(config.location_distances, key=lambda n: order.get(n, len(order))):
        neighbours = config.location_distances[origin]
        distances[origin] = {k: neighbours[k] for k in sorted(neighbours, key=lambda n: order.get(n, len(order)))}
    data: Dict[str, Any] = {
        "locations": list(config.locations),
        "location_distances": distances,
        "receptacles": [_ordered(r, _RECEPTACLE_KEYS) for r in config.receptacles],
        "objects": [_ordered(o, _OBJECT_KEYS) for o in config.objects],
        "agents": [_ordered(a, _AGENT_KEYS) for a in config.agents],
    }
    if config.settings is not None:
        data["settings"] = _sorted_tree(config.settings)
    return json.dumps(data, ensure_ascii=False, indent=2) + "\n"


# ---------------------------------------------------------------- 校验


def _booking_goals(goals: Any) -> bool:
    if goals is None:
        return False
    return any(condition.booking is not None for task in goals.tasks for condition in task.conditions)


def validate(config: ScenarioConfig, goals: Any = None) -> List[Diagnostic]:
    """
    检查场景的一致性

    参数:
    - config: 已解析的场景
    - goals: 可选的 GoalSpec，用于检查预订任务是否配置了口令

    返回:
    - 诊断列表（空列表表示有效）；连通性问题为 warning，其余为 error
    """
    diagnostics: List[Diagnostic] = []
    distances = config.location_distances

    for origin, neighbours in distances.items():
        for other, distance in neighbours.items():
            path = f"$.location_distances.{origin}.{other}"
            if other == origin:
                diagnostics.append(Diagnostic("error", path, f"{origin} lists itself as a neighbour"))
                continue
            reverse = distances.get(other, {}).get(origin)
            if reverse is None:
                diagnostics.append(Diagnostic("error", path, f"{origin}->{other}={distance} has no reverse entry"))
            elif reverse != distance:
                diagnostics.append(Diagnostic(
                    "error", path, f"asymmetric distance {origin}->{other}={distance}, {other}->{origin}={reverse}"))

    if config.locations:
        seen = {config.locations[0]}
        queue = deque([config.locations[0]])
        while queue:
            current = queue.popleft()
            neighbours = set(distances.get(current, {})) | {o for o, n in distances.items() if current in n}
            for other in sorted(neighbours - seen):
                seen.add(other)
                queue.append(other)
        unreachable = [name for name in config.locations if name not in seen]
        if unreachable:
            diagnostics.append(Diagnostic(
                "warning", "$.location_distances", f"location graph is disconnected: {', '.join(unreachable)}"))

    containers: Dict[str, Any] = {r.name: r for r in config.receptacles}
    containers.update({o.name: o for o in config.objects if o.otype in SURFACE_TYPES})
    counts: Dict[str, int] = {}
    for i, obj in enumerate(config.objects):
        path = f"$.objects[{i}]"
        spec = OBJECT_TYPES[obj.otype]
        requires = obj.requires_receptacle if obj.requires_receptacle is not None else spec.requires_receptacle
        if obj.receptacle is None:
            if requires:
                diagnostics.append(Diagnostic("error", path, f"{obj.name} requires a receptacle"))
            continue
        if obj.otype in SURFACE_TYPES:
            diagnostics.append(Diagnostic("error", f"{path}.receptacle", f"{obj.name} cannot be stored in a receptacle"))
            continue
        container = containers[obj.receptacle]
        if container.location != obj.location:
            diagnostics.append(Diagnostic(
                "error", f"{path}.location", f"{obj.name} is at {obj.location} but {obj.receptacle} is at "
                                             f"{container.location}"))
        counts[obj.receptacle] = counts.get(obj.receptacle, 0) + 1
    for name, count in counts.items():
        capacity = config.capacity_of(name, surface=name not in {r.name for r in config.receptacles})
        if count > capacity:
            diagnostics.append(Diagnostic(
                "error", f"$.receptacles.{name}", f"{name} holds {count} objects but its capacity is {capacity}"))

    wants_booking = bool(config.setting("event_requests")) or _booking_goals(goals)
    if wants_booking and not config.setting(PASSWORD_KEY):
        diagnostics.append(Diagnostic(
            "error", "$.settings.booking_password", "a booking task is present but no booking password is configured"))
    if wants_booking and not any(a.role == "receptionist" for a in config.agents):
        diagnostics.append(Diagnostic("warning", "$.agents", "a booking task is present but no receptionist exists"))
    return diagnostics


# ---------------------------------------------------------------- 实例化


def _initial_needs(config: ScenarioConfig, agent: AgentConfig) -> NeedsState:
    values = {name: getattr(agent, name) for name in NEED_NAMES if getattr(agent, name, None) is not None}
    overrides = config.setting("initial_needs", {})
    values.update(overrides.get("*", {}))
    values.update(overrides.get(agent.name, {}))
    return NeedsState(**values)


def needs_model_for(config: ScenarioConfig) -> NeedsModel:
    return NeedsModel.from_overrides(config.setting("needs_model"))


def instantiate(config: ScenarioConfig) -> WorldState:
    """
    根据场景构建 tick=0 的世界状态

    参数:
    - config: 已解析的场景

    返回:
    - WorldState

    异常:
    - ScenarioError: validate 报告了 error 级别的诊断
    """
    errors = [d for d in validate(config) if d.level == "error"]
    if errors:
        raise ScenarioError(f"scenario has {len(errors)} error(s): {errors[0]}", errors[0].path, errors)

    password = config.setting(PASSWORD_KEY)
    world = WorldState(
        seed=config.setting("seed", 0),
        booking_password=password,
        unlimited_locations=list(config.setting("unlimited_locations", [])),
        event_requests=[EventRequest(**r) for r in config.setting("event_requests", [])],
    )
    for name in config.locations:
        world.locations[name] = Location(name, dict(config.location_distances.get(name, {})))

    for r in config.receptacles:
        spec = OBJECT_TYPES[r.rtype]
        state = spec.default_state()
        state.update(r.state)
        world.receptacles[r.name] = Receptacle(
            name=r.name, otype=r.rtype, rtype=r.rtype, location=r.location, weight_kg=r.weight_kg,
            carryable=False, requires_receptacle=False, state=state, capacity=config.capacity_of(r.name),
        )
    for o in config.objects:
        spec = OBJECT_TYPES[o.otype]
        state = spec.default_state()
        state.update(o.state)
        common = dict(
            name=o.name, otype=o.otype, location=o.location, weight_kg=o.weight_kg,
            carryable=spec.carryable if o.carryable is None else o.carryable,
            requires_receptacle=spec.requires_receptacle if o.requires_receptacle is None else o.requires_receptacle,
            state=state,
        )
        if spec.surface:
            world.objects[o.name] = Receptacle(rtype=o.otype, capacity=config.capacity_of(o.name, surface=True),
                                               **common)
        else:
            world.objects[o.name] = ObjectEntity(**common)
    for o in config.objects:
        if o.receptacle is not None:
            world.objects[o.name].receptacle = o.receptacle
            world.container(o.receptacle).contents.append(o.name)

    preferences = config.setting("preferences", {})
    workspaces = config.setting("workspaces", {})
    for a in config.agents:
        definition = ROLES[a.role]
        knowledge = {}
        for grant in definition.knowledge_grants:
            if grant == PASSWORD_KEY and password:
                knowledge[grant] = password
        world.agents[a.name] = AgentState(
            name=a.name, role=a.role, location=a.location, strength_kg=a.strength_kg, gender=a.gender,
            internal_profile=a.internal_profile, appearance=a.appearance,
            needs=_initial_needs(config, a), skills=dict(definition.skills), knowledge=knowledge,
            workspace=workspaces.get(a.name), preference=preferences.get(a.name, preferences.get("*")),
        )
    world.reindex()
    logger.debug(f"Instantiated world with {len(world.locations)} locations, {len(world.objects)} objects, "
                 f"{len(world.receptacles)} receptacles, {len(world.agents)} agents")
    return world
