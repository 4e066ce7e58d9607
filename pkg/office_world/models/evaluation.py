"""
任务评估：目标定义、实例级得分 (IS) 与属性级得分 (AS)

每个条件要求 k 个某类型（或指定名称）的物体达到期望属性。
同一任务内各条件的候选物体互不重叠时，逐条件取匹配属性最多的前 k 个；
候选重叠时（例如咖啡杯和茶杯都从 Cup 中选），用最优指派求解。
两种方式都以 (IS, AS) 的字典序为目标。
"""

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import jsonschema
import numpy as np
from scipy.optimize import linear_sum_assignment

from office_world.models.catalog import FOOD_TYPES, OBJECT_TYPES
from office_world.models.errors import GoalValidationError
from office_world.models.world import Booking, EventRequest, Receptacle, WorldState
from office_world.utils.logger import get_logger

logger = get_logger("Evaluation")

PLACEMENT_KEYS = ("location", "receptacle", "receptacle_type")
BOOKING_KEYS = ("name", "start", "end")

_GOAL_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["tasks"],
    "properties": {
        "tasks": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["id", "conditions"],
                "properties": {
                    "id": {"type": "string"},
                    "description": {"type": "string"},
                    "conditions": {
                        "type": "array",
                        "minItems": 1,
                        "items": {
                            "oneOf": [
                                {
                                    "type": "object",
                                    "additionalProperties": False,
                                    "required": ["count", "desired"],
                                    "properties": {
                                        "otype": {"type": "string"},
                                        "name": {"type": "string"},
                                        "count": {"type": "integer", "minimum": 1},
                                        "desired": {"type": "object", "minProperties": 1},
                                    },
                                },
                                {
                                    "type": "object",
                                    "additionalProperties": False,
                                    "required": ["booking"],
                                    "properties": {
                                        "booking": {
                                            "type": "object",
                                            "additionalProperties": False,
                                            "required": ["room", "name", "start", "end"],
                                            "properties": {k: {"type": "string"} for k in ("room", "name", "start",
                                                                                           "end")},
                                        }
                                    },
                                },
                            ]
                        },
                    },
                },
            },
        }
    },
}


@dataclass(frozen=True)
class Condition:
    count: int = 1
    desired: Mapping[str, Any] = field(default_factory=dict)
    otype: Optional[str] = None
    name: Optional[str] = None
    booking: Optional[Mapping[str, str]] = None

    def selects(self, view: Mapping[str, Any]) -> bool:
        if self.name is not None:
            return view["name"] == self.name
        return view["otype"] == self.otype

    def to_dict(self) -> Dict[str, Any]:
        if self.booking is not None:
            return {"booking": dict(self.booking)}
        data: Dict[str, Any] = {}
        if self.otype is not None:
            data["otype"] = self.otype
        if self.name is not None:
            data["name"] = self.name
        data["count"] = self.count
        data["desired"] = dict(self.desired)
        return data


@dataclass(frozen=True)
class TaskSpec:
    id: str
    description: str
    conditions: Tuple[Condition, ...]


@dataclass(frozen=True)
class GoalSpec:
    tasks: Tuple[TaskSpec, ...]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "tasks": [
                {"id": t.id, "description": t.description, "conditions": [c.to_dict() for c in t.conditions]}
                for t in self.tasks
            ]
        }


@dataclass
class TaskScore:
    instance: Fraction
    attribute: Fraction
    # 条件序号 -> 被选中的物体名
    assignment: Dict[int, List[str]] = field(default_factory=dict)


# ---------------------------------------------------------------- 目标读写


def _condition(data: Mapping[str, Any]) -> Condition:
    if "booking" in data:
        return Condition(booking=dict(data["booking"]))
    return Condition(count=data["count"], desired=dict(data["desired"]), otype=data.get("otype"),
                     name=data.get("name"))


def goals_from_dict(data: Mapping[str, Any]) -> GoalSpec:
    """
    由字典构建目标定义

    异常:
    - GoalValidationError: 结构不合法
    """
    try:
        jsonschema.validate(instance=data, schema=_GOAL_SCHEMA)
    except jsonschema.ValidationError as e:
        path = "$" + "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in e.absolute_path)
        raise GoalValidationError(f"{path}: {e.message}") from None
    tasks = []
    for task in data["tasks"]:
        conditions = tuple(_condition(c) for c in task["conditions"])
        for condition in conditions:
            if condition.booking is None and (condition.otype is None) == (condition.name is None):
                raise GoalValidationError(f"{task['id']}: a condition needs exactly one of otype or name")
        tasks.append(TaskSpec(task["id"], task.get("description", ""), conditions))
    return GoalSpec(tuple(tasks))


def load_goals(path: str) -> GoalSpec:
    with open(path, "r", encoding="utf-8") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise GoalValidationError(f"{path}: malformed JSON at line {e.lineno}: {e.msg}") from None
    return goals_from_dict(data)


def office_event_goals() -> GoalSpec:
    """办公室活动基准的五个任务"""
    on_table = {"location": "open_area_1", "receptacle_type": "Table"}
    on_podium = {"receptacle_type": "Podium", "is_working": True, "location": "open_area_1"}
    return GoalSpec((
        TaskSpec("T1", "Move 2 tables and 2 chairs from the storage room to open_area_1.", (
            Condition(otype="Table", count=2, desired={"location": "open_area_1"}),
            Condition(otype="Chair", count=2, desired={"location": "open_area_1"}),
        )),
        TaskSpec("T2", "Prepare 4 clean plates, 4 clean knives and 4 clean forks on the tables in open_area_1.", tuple(
            Condition(otype=otype, count=4, desired={"is_clean": True, **on_table})
            for otype in ("Plate", "Knife", "Fork")
        )),
        TaskSpec("T3", "Set up a working computer, projector and microphone on the podium in open_area_1.", (
            Condition(otype="Podium", count=1, desired={"location": "open_area_1"}),
            *(Condition(otype=otype, count=1, desired=dict(on_podium))
              for otype in ("Computer", "Projector", "Microphone")),
        )),
        TaskSpec("T4", "Book open_area_1 for the Lunch and Listen event from 12:00 to 13:00.", (
            Condition(booking={"room": "open_area_1", "name": "Lunch and Listen",
                               "start": "2024-09-02T12:00:00", "end": "2024-09-02T13:00:00"}),
        )),
        TaskSpec("T5", "Serve 3 cups of coffee, 3 cups of tea and 2 heated meals on the tables.", (
            Condition(otype="Cup", count=3, desired={"contains": "coffee", **on_table}),
            Condition(otype="Cup", count=3, desired={"contains": "tea", **on_table}),
            Condition(otype="Meal", count=2, desired={"is_heated": True, **on_table}),
        )),
    ))


def event_requests_from_goals(goals: Optional[GoalSpec]) -> List[EventRequest]:
    if goals is None:
        return []
    requests = []
    for task in goals.tasks:
        for condition in task.conditions:
            if condition.booking is not None:
                b = condition.booking
                requests.append(EventRequest(b["name"], b["room"], b["start"], b["end"]))
    return requests


# ---------------------------------------------------------------- 物体视图


def object_views(world: WorldState) -> List[Dict[str, Any]]:
    """
    将世界中的物体展开为评估用的属性字典

    返回:
    - 每个物体一个字典：name, otype, location, receptacle, receptacle_type, 状态属性，
      食物额外带 is_heated
    """
    views = []
    for entity in world.all_objects():
        view: Dict[str, Any] = dict(entity.state)
        view.update(name=entity.name, otype=entity.otype, location=entity.location, receptacle=entity.receptacle)
        view["receptacle_type"] = world.container(entity.receptacle).rtype if entity.receptacle else None
        if entity.otype in FOOD_TYPES:
            view["is_heated"] = entity.is_heated
        views.append(view)
    return sorted(views, key=lambda v: v["name"])


def matched_attributes(condition: Condition, view: Mapping[str, Any]) -> int:
    return sum(1 for key, value in condition.desired.items() if key in view and view[key] == value)


def _booking_matches(condition: Condition, booking: Booking) -> int:
    wanted = condition.booking
    if booking.room != wanted["room"]:
        return 0
    return sum(1 for key in BOOKING_KEYS if _normalize_booking_value(key, getattr(booking, key))
               == _normalize_booking_value(key, wanted[key]))


def _normalize_booking_value(key: str, value: str) -> str:
    if key == "name":
        return value.replace("_", " ").strip().lower()
    return value.strip()


# ---------------------------------------------------------------- 打分


def _pools_overlap(conditions: Sequence[Condition], views: Sequence[Mapping[str, Any]]) -> bool:
    seen = set()
    for condition in conditions:
        if condition.booking is not None:
            continue
        pool = {v["name"] for v in views if condition.selects(v)}
        if seen & pool:
            return True
        seen |= pool
    return False


def _greedy(condition: Condition, views: Sequence[Mapping[str, Any]]) -> List[Tuple[str, int]]:
    ranked = sorted(
        ((v["name"], matched_attributes(condition, v)) for v in views if condition.selects(v)),
        key=lambda item: (-item[1], item[0]),
    )
    return ranked[:condition.count]


def _optimal(conditions: Sequence[Condition], views: Sequence[Mapping[str, Any]]) -> Dict[int, List[Tuple[str, int]]]:
    """在共享候选池上求 (IS, AS) 字典序最优的指派"""
    indexed = [(i, c) for i, c in enumerate(conditions) if c.booking is None]
    denominator = 1
    for _, c in indexed:
        denominator = denominator * c.count * len(c.desired) // math.gcd(denominator, c.count * len(c.desired))
    scale = len(indexed) * denominator + 1

    slots = [(i, c) for i, c in indexed for _ in range(c.count)]
    weights = np.zeros((len(slots), len(views)))
    for row, (_, c) in enumerate(slots):
        for col, view in enumerate(views):
            if not c.selects(view):
                continue
            matched = matched_attributes(c, view)
            full = matched == len(c.desired)
            weights[row, col] = (denominator // c.count) * scale * full + matched * denominator // (
                c.count * len(c.desired))
    rows, cols = linear_sum_assignment(weights, maximize=True)
    chosen: Dict[int, List[Tuple[str, int]]] = {i: [] for i, _ in indexed}
    for row, col in zip(rows, cols):
        index, condition = slots[row]
        view = views[col]
        if condition.selects(view):
            chosen[index].append((view["name"], matched_attributes(condition, view)))
    return chosen


def evaluate_task(task: TaskSpec, views: Sequence[Mapping[str, Any]], bookings: Sequence[Booking]) -> TaskScore:
    """
    计算单个任务的 IS 与 AS

    参数:
    - task: 任务定义
    - views: object_views 的结果
    - bookings: 当前的预订记录

    返回:
    - TaskScore（精确分数）
    """
    instance_parts: List[Fraction] = []
    attribute_parts: List[Fraction] = []
    assignment: Dict[int, List[str]] = {}

    if _pools_overlap(task.conditions, views):
        chosen = _optimal(task.conditions, views)
    else:
        chosen = {i: _greedy(c, views) for i, c in enumerate(task.conditions) if c.booking is None}

    for index, condition in enumerate(task.conditions):
        if condition.booking is not None:
            best = max((_booking_matches(condition, b) for b in bookings), default=0)
            instance_parts.append(Fraction(1 if best == len(BOOKING_KEYS) else 0))
            attribute_parts.append(Fraction(best, len(BOOKING_KEYS)))
            continue
        picked = chosen[index]
        width = len(condition.desired)
        full = sum(1 for _, matched in picked if matched == width)
        instance_parts.append(Fraction(min(full, condition.count), condition.count))
        attribute_parts.append(Fraction(sum(matched for _, matched in picked), condition.count * width))
        assignment[index] = [name for name, _ in picked]

    return TaskScore(
        instance=sum(instance_parts, Fraction(0)) / len(instance_parts),
        attribute=sum(attribute_parts, Fraction(0)) / len(attribute_parts),
        assignment=assignment,
    )


def evaluate(world: WorldState, goals: GoalSpec) -> Dict[str, TaskScore]:
    views = object_views(world)
    return {task.id: evaluate_task(task, views, world.bookings) for task in goals.tasks}


def _mean(values: Sequence[Fraction]) -> Fraction:
    return sum(values, Fraction(0)) / len(values) if values else Fraction(0)


def instance_score(world: WorldState, goals: GoalSpec) -> Dict[str, Any]:
    """每个任务的实例级得分（0 到 1 的分数）及其平均值"""
    scores = evaluate(world, goals)
    tasks = {task_id: score.instance for task_id, score in scores.items()}
    return {"tasks": tasks, "average": _mean(list(tasks.values()))}


def attribute_score(world: WorldState, goals: GoalSpec) -> Dict[str, Any]:
    """每个任务的属性级得分（0 到 1 的分数）及其平均值"""
    scores = evaluate(world, goals)
    tasks = {task_id: score.attribute for task_id, score in scores.items()}
    return {"tasks": tasks, "average": _mean(list(tasks.values()))}


def _percent(value: Fraction) -> float:
    return round(float(value * 100), 1)


def score_report(world: WorldState, goals: GoalSpec) -> Dict[str, Any]:
    """
    生成得分报告（百分比，保留一位小数）

    返回:
    - {"tick", "tasks": {id: {"IS", "AS"}}, "average": {"IS", "AS"}}
    """
    scores = evaluate(world, goals)
    return {
        "tick": world.tick,
        "tasks": {
            task_id: {"IS": _percent(score.instance), "AS": _percent(score.attribute)}
            for task_id, score in scores.items()
        },
        "average": {
            "IS": _percent(_mean([s.instance for s in scores.values()])),
            "AS": _percent(_mean([s.attribute for s in scores.values()])),
        },
    }


def goals_satisfied(world: WorldState, goals: GoalSpec) -> bool:
    return all(s.instance == 1 and s.attribute == 1 for s in evaluate(world, goals).values())


def validate_goals(goals: GoalSpec, world: WorldState) -> None:
    """
    检查目标与场景是否匹配

    异常:
    - GoalValidationError: 物体类型/名称不存在、数量超过可用物体、属性键不属于该类型或地点不存在
    """
    views = object_views(world)
    for task in goals.tasks:
        demand: Dict[str, int] = {}
        for condition in task.conditions:
            if condition.booking is not None:
                if condition.booking["room"] not in world.locations:
                    raise GoalValidationError(f"{task.id}: unknown room {condition.booking['room']}")
                continue
            selector = condition.name or condition.otype
            available = [v for v in views if condition.selects(v)]
            if not available:
                raise GoalValidationError(f"{task.id}: no object matches {selector}")
            if condition.count > len(available):
                raise GoalValidationError(
                    f"{task.id}: {condition.count} x {selector} required but only {len(available)} exist")
            otype = available[0]["otype"]
            allowed = set(PLACEMENT_KEYS) | set(OBJECT_TYPES[otype].attributes)
            if otype in FOOD_TYPES:
                allowed.add("is_heated")
            for key, value in condition.desired.items():
                if key not in allowed:
                    raise GoalValidationError(f"{task.id}: {key} is not an attribute of {otype}")
                if key == "location" and value not in world.locations:
                    raise GoalValidationError(f"{task.id}: unknown location {value}")
            demand[selector] = demand.get(selector, 0) + condition.count
        for selector, total in demand.items():
            available = sum(1 for v in views if v["name"] == selector or v["otype"] == selector)
            if total > available:
                raise GoalValidationError(f"{task.id}: {total} x {selector} required but only {available} exist")
    logger.debug(f"Validated {len(goals.tasks)} goal tasks")
