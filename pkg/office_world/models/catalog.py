"""
动作目录：38 种动作、25 种物体类型和 4 种预定义角色
"""

import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Mapping, Optional, Tuple

from office_world.models.errors import GatingError, UnknownEntityError

# ---------------------------------------------------------------- 物体类型

COMMON_ATTRIBUTES = frozenset({"is_clean", "temperature"})
DEVICE_ATTRIBUTES = COMMON_ATTRIBUTES | {"is_turned_on", "is_working"}
RECEPTACLE_ATTRIBUTES = COMMON_ATTRIBUTES | {"fixed", "closable", "is_open", "is_working"}


@dataclass(frozen=True)
class ObjectTypeSpec:
    name: str
    attributes: FrozenSet[str] = COMMON_ATTRIBUTES
    carryable: bool = True
    requires_receptacle: bool = False
    is_receptacle: bool = False
    surface: bool = False
    furniture: bool = False
    closable: bool = False
    defaults: Tuple[Tuple[str, object], ...] = ()

    def default_state(self) -> Dict[str, object]:
        state = {"is_clean": True, "temperature": 20}
        state.update(dict(self.defaults))
        return state


def _device(name, carryable=True, requires_receptacle=True):
    return ObjectTypeSpec(
        name,
        attributes=DEVICE_ATTRIBUTES,
        carryable=carryable,
        requires_receptacle=requires_receptacle,
        defaults=(("is_turned_on", False), ("is_working", True)),
    )


def _receptacle(name, closable=False):
    return ObjectTypeSpec(
        name,
        attributes=RECEPTACLE_ATTRIBUTES,
        carryable=False,
        is_receptacle=True,
        closable=closable,
        defaults=(("fixed", True), ("closable", closable), ("is_open", not closable), ("is_working", True)),
    )


OBJECT_TYPES: Dict[str, ObjectTypeSpec] = {
    spec.name: spec
    for spec in (
        # 家具：只能通过 move_furniture 移动
        ObjectTypeSpec("Table", furniture=True, surface=True),
        ObjectTypeSpec("Chair", furniture=True),
        ObjectTypeSpec("Podium", furniture=True, surface=True),
        # 餐具
        ObjectTypeSpec("Plate", requires_receptacle=True),
        ObjectTypeSpec("Knife", requires_receptacle=True),
        ObjectTypeSpec("Fork", requires_receptacle=True),
        ObjectTypeSpec("Cup", attributes=COMMON_ATTRIBUTES | {"contains"}, requires_receptacle=True,
                       defaults=(("contains", None),)),
        # 食物
        ObjectTypeSpec("Bread", attributes=COMMON_ATTRIBUTES | {"is_heated"}, requires_receptacle=True),
        ObjectTypeSpec("Apple", attributes=COMMON_ATTRIBUTES | {"is_heated"}, requires_receptacle=True),
        ObjectTypeSpec("Meal", attributes=COMMON_ATTRIBUTES | {"is_heated"}, requires_receptacle=True),
        ObjectTypeSpec("TeaBag", requires_receptacle=True),
        # 电子设备
        _device("Computer"),
        _device("Projector"),
        _device("Microphone"),
        _device("TouchScreen", carryable=False, requires_receptacle=False),
        _device("CoffeeMachine", carryable=False, requires_receptacle=False),
        _device("WaterDispenser", carryable=False, requires_receptacle=False),
        _device("Microwave", carryable=False, requires_receptacle=False),
        # 固定容器
        _receptacle("Sinkbasin"),
        _receptacle("Cabinet", closable=True),
        _receptacle("Countertop"),
        _receptacle("Desk"),
        _receptacle("Shelf"),
        _receptacle("Trashbin"),
        _receptacle("Fridge", closable=True),
    )
}

RECEPTACLE_TYPES = tuple(name for name, spec in OBJECT_TYPES.items() if spec.is_receptacle)
SURFACE_TYPES = tuple(name for name, spec in OBJECT_TYPES.items() if spec.surface)
FURNITURE_TYPES = tuple(name for name, spec in OBJECT_TYPES.items() if spec.furniture)
FOOD_TYPES = ("Bread", "Apple", "Meal")
UTENSIL_TYPES = ("Plate", "Knife", "Fork", "Cup")
TERMINAL_TYPES = ("TouchScreen", "Computer")

# put_on 用于台面，put_in 用于柜内
PUT_ON_TYPES = ("Countertop", "Desk", "Shelf", "Table", "Podium")
PUT_IN_TYPES = ("Cabinet", "Fridge", "Trashbin", "Sinkbasin")

BEVERAGES = ("water", "coffee", "tea")

REPAIR_VERBS: Dict[str, str] = {
    "repair_computer": "Computer",
    "repair_projector": "Projector",
    "repair_microphone": "Microphone",
    "repair_coffee_machine": "CoffeeMachine",
    "repair_water_dispenser": "WaterDispenser",
    "repair_microwave": "Microwave",
}
REPAIRABLE_TYPES = tuple(REPAIR_VERBS.values())


def object_type(name: str) -> ObjectTypeSpec:
    try:
        return OBJECT_TYPES[name]
    except KeyError:
        raise UnknownEntityError(name, "object type") from None


# ---------------------------------------------------------------- 角色


@dataclass(frozen=True)
class RoleDefinition:
    name: str
    skills: Mapping[str, float]
    knowledge_grants: Tuple[str, ...] = ()


ROLES: Dict[str, RoleDefinition] = {
    "janitor": RoleDefinition("janitor", {"clean": 0.5, "wash_hands": 0.5, "move_furniture": 1.0}),
    "IT_admin": RoleDefinition(
        "IT_admin", {**{verb: 1.0 for verb in REPAIR_VERBS}, "inspect_device": 1.0}
    ),
    "receptionist": RoleDefinition(
        "receptionist",
        {"book_meeting_room": 1.0, "check_bookings": 1.0},
        knowledge_grants=("booking_password",),
    ),
    "software_engineer": RoleDefinition("software_engineer", {"work_at_desk": 0.8}),
}


def role(name: str) -> RoleDefinition:
    try:
        return ROLES[name]
    except KeyError:
        raise UnknownEntityError(name, "role") from None


# ---------------------------------------------------------------- 动作


@dataclass(frozen=True)
class ActionSpec:
    verb: str
    arity: int
    base_duration: int
    category: str
    role_gate: Optional[str] = None
    preconditions: Tuple[str, ...] = ()
    effects: Tuple[str, ...] = ()
    # go_to / move_furniture 的时长按距离缩放
    per_distance: bool = False
    scaling: Mapping[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, object]:
        return {
            "verb": self.verb,
            "arity": self.arity,
            "role_gate": self.role_gate,
            "base_duration": self.base_duration,
            "per_distance": self.per_distance,
            "category": self.category,
            "scaling": dict(sorted(self.scaling.items())),
            "preconditions": list(self.preconditions),
            "effects": list(self.effects),
        }


def _spec(verb, arity, duration, category, gate=False, pre=(), eff=(), per_distance=False):
    scaling = {name: definition.skills[verb] for name, definition in ROLES.items() if verb in definition.skills}
    return ActionSpec(
        verb=verb,
        arity=arity,
        base_duration=duration,
        category=category,
        role_gate=verb if gate else None,
        preconditions=tuple(pre),
        effects=tuple(eff),
        per_distance=per_distance,
        scaling=scaling,
    )


_REPAIR_SPECS = [
    _spec(verb, 1, 5, "role_work", gate=True,
          pre=(f"device is a co-located {otype}", "device is_working == false"),
          eff=("device.is_working = true",))
    for verb, otype in REPAIR_VERBS.items()
]

_CATALOG: Tuple[ActionSpec, ...] = tuple(
    [
        # 移动与操作
        _spec("go_to", 1, 1, "movement", pre=("destination connected",), eff=("agent.location = destination",),
              per_distance=True),
        _spec("pick_up", 1, 1, "other", pre=("object visible", "hand free", "within strength"),
              eff=("object.holder = agent",)),
        _spec("drop", 1, 1, "other", pre=("object held", "object does not require a receptacle"),
              eff=("object.holder = none",)),
        _spec("put_on", 2, 1, "other", pre=("object held", "surface co-located and not full"),
              eff=("object.receptacle = surface",)),
        _spec("put_in", 2, 1, "other", pre=("object held", "container open and not full"),
              eff=("object.receptacle = container",)),
        _spec("open", 1, 1, "other", pre=("container closable and closed",), eff=("container.is_open = true",)),
        _spec("close", 1, 1, "other", pre=("container closable and open",), eff=("container.is_open = false",)),
        _spec("give_to", 2, 1, "social", pre=("object held", "recipient co-located with a free hand"),
              eff=("object.holder = recipient",)),
        _spec("look_around", 0, 1, "other"),
        # 设备
        _spec("turn_on", 1, 1, "other", pre=("device co-located", "device off"), eff=("device.is_turned_on = true",)),
        _spec("turn_off", 1, 1, "other", pre=("device co-located", "device on"), eff=("device.is_turned_on = false",)),
        *_REPAIR_SPECS,
        # 厨房与需求
        _spec("clean", 1, 4, "other", pre=("utensil held and dirty", "free Sinkbasin co-located"),
              eff=("utensil.is_clean = true",)),
        _spec("wash_hands", 0, 1, "physiological", pre=("free Sinkbasin co-located",)),
        _spec("brew_coffee", 2, 2, "other", pre=("clean empty cup held", "coffee machine on, working and free"),
              eff=("cup.contains = coffee",)),
        _spec("make_tea", 2, 2, "other", pre=("clean empty cup held", "tea bag visible", "water dispenser free"),
              eff=("cup.contains = tea", "tea bag consumed")),
        _spec("dispense_water", 2, 2, "other", pre=("clean empty cup held", "water dispenser on, working and free"),
              eff=("cup.contains = water",)),
        _spec("heat_food", 2, 3, "other", pre=("food held", "microwave on, working and free"),
              eff=("food.temperature = 70",)),
        _spec("eat", 1, 5, "physiological", pre=("food held", "fullness < 100"), eff=("food consumed", "fullness +40")),
        _spec("drink", 1, 1, "physiological", pre=("cup held with a beverage", "hydration < 100"),
              eff=("cup emptied and dirty", "hydration +40", "bladder +20")),
        _spec("use_restroom", 0, 3, "physiological", pre=("location is a restroom", "bladder > 0"),
              eff=("bladder = 0",)),
        _spec("rest", 0, 10, "physiological", pre=("energy < 100",), eff=("energy +30",)),
        _spec("fetch_meal", 0, 10, "physiological", pre=("location is unlimited", "fullness < 100"),
              eff=("fullness +40",)),
        _spec("refill_supplies", 0, 5, "physiological", pre=("location is unlimited", "hydration < 100"),
              eff=("hydration +40", "bladder +20")),
        # 角色与工作
        _spec("work_at_desk", 0, 5, "role_work", pre=("Desk co-located",)),
        _spec("book_meeting_room", 6, 2, "role_work",
              pre=("terminal on and working", "touch screen books its own room", "password correct",
                   "no overlapping booking"),
              eff=("booking appended",)),
        _spec("check_bookings", 1, 1, "role_work", gate=True, pre=("terminal on and working",)),
        _spec("move_furniture", 2, 2, "role_work",
              pre=("hands empty", "item weight within strength", "destination connected"),
              eff=("item.location = destination", "agent.location = destination"), per_distance=True),
        _spec("inspect_device", 1, 1, "role_work", gate=True, pre=("device co-located",)),
        # 对话
        _spec("initiating_chat", 1, 1, "social", pre=("peer co-located", "neither in a session"),
              eff=("session created",)),
        _spec("stay_chat", 0, 1, "social", pre=("agent in a session",), eff=("social_fulfillment +5",)),
        _spec("end_chat", 0, 1, "social", pre=("agent in a session",), eff=("agent leaves session",)),
        _spec("join_chat", 1, 1, "social", pre=("local session", "agent idle"), eff=("agent joins session",)),
    ]
)

CATALOG: Dict[str, ActionSpec] = {spec.verb: spec for spec in _CATALOG}


def catalog() -> List[ActionSpec]:
    """返回完整动作目录（38 种动作）"""
    return list(_CATALOG)


def get_spec(verb: str) -> ActionSpec:
    try:
        return CATALOG[verb]
    except KeyError:
        raise UnknownEntityError(verb, "action") from None


def qualifies(spec: ActionSpec, skills: Mapping[str, float]) -> bool:
    return spec.role_gate is None or spec.role_gate in skills


def effective_duration(spec: ActionSpec, agent, distance: Optional[int] = None) -> int:
    """
    计算某智能体执行动作的实际时长

    参数:
    - spec: 动作定义
    - agent: 具有 skills 属性的智能体
    - distance: go_to / move_furniture 的距离

    返回:
    - 时间步数，至少为 1
    """
    if not qualifies(spec, agent.skills):
        raise GatingError(f"{agent.name} lacks the {spec.role_gate} skill")
    base = spec.base_duration
    if spec.per_distance:
        base = base * (distance if distance is not None else 1)
    multiplier = agent.skills.get(spec.verb, 1.0)
    return max(1, math.ceil(round(base * multiplier, 9)))


def catalog_reference() -> Dict[str, object]:
    """生成机器可读的动作参考（actions.json）"""
    return {
        "verbs": [spec.to_dict() for spec in _CATALOG],
        "object_types": list(OBJECT_TYPES),
        "receptacle_types": list(RECEPTACLE_TYPES),
        "roles": {
            name: {"skills": dict(sorted(definition.skills.items())), "knowledge": list(definition.knowledge_grants)}
            for name, definition in ROLES.items()
        },
    }
