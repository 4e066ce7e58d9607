"""
智能体认知模块：感知、记忆、任务提醒与规划

这里只处理智能体“知道什么、想做什么”；具体选择哪条命令由 policies 中的策略决定。
"""

from collections import deque
from dataclasses import dataclass, field
from typing import Any, Deque, Dict, List, Optional, Sequence, Tuple

from office_world.config import DIGEST_WINDOW_TICKS, EPISODIC_LIMIT, PROMPT_BUDGET_CHARS
from office_world.models.catalog import FOOD_TYPES, FURNITURE_TYPES, REPAIR_VERBS, REPAIRABLE_TYPES, UTENSIL_TYPES
from office_world.models.evaluation import BOOKING_KEYS, Condition, GoalSpec, TaskSpec, matched_attributes
from office_world.models.needs import PLAN_ORDER, NeedsModel, NeedsState, urgency
from office_world.models.world import AgentState, WorldState

# 需求 -> 满足它的动作
NEED_ACTIONS = {
    "hydration": "drink",
    "fullness": "eat",
    "bladder": "use_restroom",
    "energy": "rest",
    "social_fulfillment": "initiating_chat",
}


@dataclass
class Observation:
    tick: int
    agent: str
    location: str
    exits: Dict[str, int] = field(default_factory=dict)
    objects: List[Dict[str, Any]] = field(default_factory=list)
    agents: List[Dict[str, Any]] = field(default_factory=list)
    sessions: List[Dict[str, Any]] = field(default_factory=list)
    inventory: List[Dict[str, Any]] = field(default_factory=list)
    needs: Dict[str, float] = field(default_factory=dict)
    conversation: Optional[str] = None


@dataclass(frozen=True)
class AgentProfile:
    name: str
    role: str
    gender: str
    persona: str
    appearance: str
    skills: Tuple[Tuple[str, float], ...]
    knowledge: Tuple[Tuple[str, str], ...]
    workspace: Optional[str] = None
    preference: Optional[str] = None

    @property
    def skill_names(self) -> List[str]:
        return [name for name, _ in self.skills]


def profile_of(agent: AgentState) -> AgentProfile:
    return AgentProfile(
        name=agent.name,
        role=agent.role,
        gender=agent.gender,
        persona=agent.internal_profile,
        appearance=agent.appearance,
        skills=tuple(sorted(agent.skills.items())),
        knowledge=tuple(sorted(agent.knowledge.items())),
        workspace=agent.workspace,
        preference=agent.preference,
    )


@dataclass
class MapEntry:
    otype: str
    location: str
    receptacle: Optional[str]
    receptacle_type: Optional[str]
    state: Dict[str, Any]
    tick: int

    def view(self, name: str) -> Dict[str, Any]:
        data = dict(self.state)
        data.update(name=name, otype=self.otype, location=self.location, receptacle=self.receptacle,
                    receptacle_type=self.receptacle_type)
        if self.otype in FOOD_TYPES:
            data["is_heated"] = self.state.get("temperature", 20) >= 60
        return data


@dataclass
class ProgressEntry:
    satisfied: bool
    tick: int


@dataclass
class MemoryStore:
    semantic_map: Dict[str, MapEntry] = field(default_factory=dict)
    task_progress: Dict[str, ProgressEntry] = field(default_factory=dict)
    episodic: Deque[Tuple[int, str]] = field(default_factory=lambda: deque(maxlen=EPISODIC_LIMIT))
    knowledge: Dict[str, str] = field(default_factory=dict)
    internal: Dict[str, Any] = field(default_factory=dict)
    known_bookings: List[Dict[str, str]] = field(default_factory=list)
    tick: int = 0


@dataclass(frozen=True)
class Objective:
    kind: str  # need | task | idle
    target: Optional[str] = None
    action: Optional[str] = None

    def describe(self) -> str:
        if self.kind == "need":
            return f"restore {self.target} ({self.action})"
        if self.kind == "task":
            return f"work on task {self.target}"
        return "no urgent objective"


@dataclass
class PolicyContext:
    agent: str
    profile: AgentProfile
    observation: Observation
    digest: str
    admissible: List[str]
    tick: int
    world: WorldState
    tasks: Optional[GoalSpec] = None
    reminder: str = ""
    objective: Objective = field(default_factory=lambda: Objective("idle"))
    agent_index: int = 0
    memory: Optional[MemoryStore] = None


@dataclass
class Decision:
    command: str
    utterance: Optional[str] = None
    learn_from_failure: bool = False
    reason: str = ""


# ---------------------------------------------------------------- 感知


def perceive(world: WorldState, agent_name: str) -> Observation:
    """
    生成智能体在当前时间步的观察

    参数:
    - world: 世界状态（通常为本时间步的只读副本）
    - agent_name: 智能体名称

    返回:
    - Observation：只包含本地点可见的物体、同伴、会话，以及自身的物品与需求
    """
    agent = world.agent(agent_name)
    location = world.location(agent.location)
    objects = []
    for entity in world.visible_objects(agent_name):
        if entity.holder is not None:
            continue
        container = world.container(entity.receptacle) if entity.receptacle else None
        objects.append({
            "name": entity.name,
            "otype": entity.otype,
            "receptacle": entity.receptacle,
            "receptacle_type": container.rtype if container else None,
            "state": dict(entity.state),
            "in_use_by": world.reserved_by_other(entity.name, agent_name),
        })
    peers = [
        {"name": name, "role": world.agents[name].role, "last_action": world.last_actions.get(name)}
        for name in location.agents if name != agent_name
    ]
    sessions = [
        {"id": s.id, "participants": list(s.participants), "recent": list(s.transcript[-3:])}
        for s in world.conversations.values() if s.location == agent.location
    ]
    inventory = [
        {"name": name, "otype": world.objects[name].otype, "state": dict(world.objects[name].state)}
        for name in agent.inventory
    ]
    return Observation(
        tick=world.tick,
        agent=agent_name,
        location=agent.location,
        exits=dict(location.connections),
        objects=objects,
        agents=peers,
        sessions=sessions,
        inventory=inventory,
        needs=agent.needs.as_dict(),
        conversation=agent.conversation,
    )


# ---------------------------------------------------------------- 记忆


def _condition_key(task: TaskSpec, index: int) -> str:
    return f"{task.id}#{index}"


def _known_views(memory: MemoryStore) -> List[Dict[str, Any]]:
    return [entry.view(name) for name, entry in sorted(memory.semantic_map.items())]


def _condition_met(condition: Condition, views: Sequence[Dict[str, Any]], bookings: Sequence[Dict[str, str]]) -> bool:
    if condition.booking is not None:
        wanted = condition.booking
        return any(b["room"] == wanted["room"] and all(b[k] == wanted[k] for k in BOOKING_KEYS) for b in bookings)
    width = len(condition.desired)
    full = [v for v in views if condition.selects(v) and matched_attributes(condition, v) == width]
    return len(full) >= condition.count


def update_memory(memory: MemoryStore, observation: Observation, goals: Optional[GoalSpec] = None,
                  knowledge: Optional[Dict[str, str]] = None) -> MemoryStore:
    """
    用新观察更新记忆

    参数:
    - memory: 记忆（原地更新）
    - observation: 本时间步的观察
    - goals: 任务目标，为 None 时不跟踪任务进度
    - knowledge: 智能体当前掌握的知识条目

    返回:
    - 更新后的记忆
    """
    tick = observation.tick
    memory.tick = tick
    for item in observation.objects:
        memory.semantic_map[item["name"]] = MapEntry(
            otype=item["otype"], location=observation.location, receptacle=item.get("receptacle"),
            receptacle_type=item.get("receptacle_type"), state=dict(item["state"]), tick=tick,
        )
    for item in observation.inventory:
        memory.semantic_map[item["name"]] = MapEntry(
            otype=item["otype"], location=observation.location, receptacle=None, receptacle_type=None,
            state=dict(item["state"]), tick=tick,
        )
    if knowledge:
        memory.knowledge.update(knowledge)
    memory.internal = {"needs": dict(observation.needs), "inventory": [i["name"] for i in observation.inventory],
                       "location": observation.location}
    for session in observation.sessions:
        for line_tick, speaker, text in session["recent"]:
            event = f"{speaker} said in {session['id']}: {text}"
            if text and (line_tick, event) not in memory.episodic:
                memory.episodic.append((line_tick, event))

    if goals is not None:
        views = _known_views(memory)
        for task in goals.tasks:
            for index, condition in enumerate(task.conditions):
                key = _condition_key(task, index)
                satisfied = _condition_met(condition, views, memory.known_bookings)
                previous = memory.task_progress.get(key)
                if previous is None or previous.satisfied != satisfied:
                    memory.task_progress[key] = ProgressEntry(satisfied, tick)
    return memory


def remember_outcome(memory: MemoryStore, tick: int, command: str, success: bool, message: str) -> None:
    """把自己动作的结果写入情景记忆；成功的预订同时记入已知预订"""
    memory.episodic.append((tick, f"I did '{command}': {message}"))
    tokens = command.split()
    if success and tokens and tokens[0] == "book_meeting_room" and len(tokens) == 7:
        _, _, room, event, start, end, _ = tokens
        memory.known_bookings.append({"room": room, "name": event.replace("_", " "), "start": start, "end": end})


def memory_digest(memory: MemoryStore, tick: int, include_map: bool = True, include_progress: bool = True,
                  budget: int = PROMPT_BUDGET_CHARS) -> str:
    """
    生成提示词中的记忆摘要：最近 30 个时间步内观察到的实体、全部任务进度、最近的情景事件

    参数:
    - memory: 记忆
    - tick: 当前时间步
    - include_map: 是否包含语义地图
    - include_progress: 是否包含任务进度
    - budget: 字符上限

    返回:
    - 摘要文本，长度不超过 budget
    """
    lines: List[str] = []
    if include_map:
        recent = [(name, e) for name, e in sorted(memory.semantic_map.items()) if tick - e.tick <= DIGEST_WINDOW_TICKS]
        if recent:
            lines.append("Known objects:")
            for name, entry in recent:
                where = f"{entry.location}/{entry.receptacle}" if entry.receptacle else entry.location
                lines.append(f"  {name} ({entry.otype}) at {where}, seen at minute {entry.tick}")
    if include_progress and memory.task_progress:
        lines.append("Task progress:")
        for key, entry in sorted(memory.task_progress.items()):
            lines.append(f"  {key}: {'done' if entry.satisfied else 'not done'} (minute {entry.tick})")
    if memory.episodic:
        lines.append("Recent events:")
        for event_tick, event in list(memory.episodic)[-10:]:
            lines.append(f"  [{event_tick}] {event}")

    text = ""
    for line in lines:
        if len(text) + len(line) + 1 > budget:
            break
        text += line + "\n"
    return text.rstrip("\n")


# ---------------------------------------------------------------- 任务提醒与规划


def _skill_types(profile: AgentProfile) -> set:
    """该角色技能所对应的物体类型，以及是否能处理预订"""
    skills = set(profile.skill_names)
    types = set()
    if "clean" in skills:
        types.update(UTENSIL_TYPES)
    if skills & set(REPAIR_VERBS):
        types.update(REPAIRABLE_TYPES)
    if "move_furniture" in skills:
        types.update(FURNITURE_TYPES)
    if "book_meeting_room" in skills:
        types.add("booking")
    return types


def role_aligned(task: TaskSpec, profile: AgentProfile) -> bool:
    types = _skill_types(profile)
    for condition in task.conditions:
        if condition.booking is not None and "booking" in types:
            return True
        if condition.otype in types:
            return True
    return False


def unfinished_tasks(memory: MemoryStore, tasks: GoalSpec) -> List[TaskSpec]:
    result = []
    for task in tasks.tasks:
        keys = [_condition_key(task, i) for i in range(len(task.conditions))]
        if not all(memory.task_progress.get(k, ProgressEntry(False, 0)).satisfied for k in keys):
            result.append(task)
    return result


def _unmet_attributes(condition: Condition, view: Dict[str, Any]) -> List[str]:
    return [f"{key}={value}" for key, value in condition.desired.items() if view.get(key) != value]


def prioritize(memory: MemoryStore, profile: AgentProfile, tasks: Optional[GoalSpec]) -> str:
    """
    生成任务提醒

    手上拿着与未完成任务相关的物体时，逐个列出它尚未满足的期望属性；
    否则列出全部未完成任务，并指出与角色技能相符的任务。提醒只复述记忆中已有的内容。

    返回:
    - 提醒文本；没有未完成任务时为空字符串
    """
    if tasks is None:
        return ""
    pending = unfinished_tasks(memory, tasks)
    if not pending:
        return ""

    lines = []
    for name in memory.internal.get("inventory", []):
        entry = memory.semantic_map.get(name)
        if entry is None:
            continue
        view = entry.view(name)
        best: Optional[Tuple[int, TaskSpec, Condition]] = None
        for task in pending:
            for condition in task.conditions:
                if condition.booking is None and condition.selects(view):
                    score = matched_attributes(condition, view)
                    if best is None or score > best[0]:
                        best = (score, task, condition)
        if best is not None:
            _, task, condition = best
            missing = _unmet_attributes(condition, view)
            if missing:
                lines.append(f"You are holding {name} for {task.id}; it still needs {', '.join(missing)}.")
    if lines:
        return "\n".join(lines)

    lines.append("Unfinished tasks:")
    for task in pending:
        lines.append(f"  {task.id}: {task.description}")
    aligned = [t.id for t in pending if role_aligned(t, profile)]
    if aligned:
        lines.append(f"As a {profile.role}, consider focusing on {', '.join(aligned)}.")
    return "\n".join(lines)


def plan(memory: MemoryStore, profile: AgentProfile, tasks: Optional[GoalSpec], model: NeedsModel) -> Objective:
    """
    选择当前目标：最紧迫的未满足需求 > 与角色相符的未完成任务 > 空闲

    参数:
    - memory: 记忆（needs 取自 internal 快照）
    - profile: 智能体档案
    - tasks: 任务目标，可为 None
    - model: 需求模型

    返回:
    - Objective
    """
    needs = NeedsState.from_dict(memory.internal.get("needs", {}))
    gaps = urgency(needs, model)
    if gaps:
        need = max(PLAN_ORDER, key=lambda n: (gaps.get(n, 0.0), -PLAN_ORDER.index(n)))
        return Objective("need", need, NEED_ACTIONS[need])
    if tasks is not None:
        for task in unfinished_tasks(memory, tasks):
            if role_aligned(task, profile):
                return Objective("task", task.id)
    return Objective("idle", None, "look_around")
