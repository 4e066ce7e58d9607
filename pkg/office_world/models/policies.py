"""
决策策略：随机策略、剧本策略、需求驱动的住户策略和基于生成服务的策略

所有策略都实现 decide(context) -> Decision；无事可做时返回 "wait"。
"""

import heapq
import json
import random
import threading
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

from office_world.config import INSTRUCTION_TEMPLATE, MAX_ACTION_RETRIES, SYSTEM_PROMPT_TEMPLATE
from office_world.models.agent_mind import Decision, PolicyContext
from office_world.models.catalog import CATALOG, FOOD_TYPES
from office_world.models.errors import GenerationServiceError, PolicyError, ScenarioError
from office_world.models.world import Receptacle, WorldState
from office_world.utils.logger import get_logger
from office_world.utils.text_formatter import format_admissible, format_observation, parse_action_response

logger = get_logger("Policies")

WAIT = "wait"
CHAT_VERBS = ("initiating_chat", "join_chat", "stay_chat")
DRINK_DEVICES = {"water": "WaterDispenser", "coffee": "CoffeeMachine", "tea": "WaterDispenser"}
SMALL_TALK = (
    "Hi, how is your day going?",
    "Busy day today.",
    "Did you see the event schedule?",
    "Let's grab a coffee later.",
)


def _wait(reason: str = "") -> Decision:
    return Decision(WAIT, reason=reason)


def _starts(commands: Sequence[str], prefix: str) -> List[str]:
    return [c for c in commands if c == prefix or c.startswith(prefix + " ")]


def shortest_route(world: WorldState, origin: str, destination: str) -> Optional[List[str]]:
    """
    计算两地点间最短路线（Dijkstra，距离相同时按路径字典序）

    返回:
    - 不含起点的地点序列；不可达时返回 None
    """
    if origin == destination:
        return []
    heap = [(0, [origin])]
    settled = set()
    while heap:
        cost, path = heapq.heappop(heap)
        current = path[-1]
        if current in settled:
            continue
        settled.add(current)
        if current == destination:
            return path[1:]
        for neighbour, distance in sorted(world.locations[current].connections.items()):
            if neighbour not in settled:
                heapq.heappush(heap, (cost + distance, path + [neighbour]))
    return None


def _route_cost(world: WorldState, origin: str, route: List[str]) -> int:
    cost, current = 0, origin
    for hop in route:
        cost += world.locations[current].connections[hop]
        current = hop
    return cost


def _step_towards(world: WorldState, agent_name: str, destination: str, admissible: Sequence[str]) -> Decision:
    route = shortest_route(world, world.agents[agent_name].location, destination)
    if not route:
        return _wait(f"no route to {destination}")
    command = f"go_to {route[0]}"
    return Decision(command, reason=f"heading to {destination}") if command in admissible else _wait("blocked")


def _nearest(world: WorldState, origin: str, candidates: Sequence[str]) -> Optional[str]:
    best = None
    for location in sorted(set(candidates)):
        route = shortest_route(world, origin, location)
        if route is None:
            continue
        cost = _route_cost(world, origin, route)
        if best is None or cost < best[0]:
            best = (cost, location)
    return best[1] if best else None


def _reachable(world: WorldState, entity) -> bool:
    """物体是否放在外面（未被拿着，也不在关闭的容器里）"""
    if entity.holder is not None:
        return False
    if entity.receptacle is None:
        return True
    return world.container(entity.receptacle).is_open


class Policy:
    """策略基类"""

    name = "base"

    def decide(self, context: PolicyContext) -> Decision:
        raise NotImplementedError

    def notify(self, agent: str, command: str, success: bool) -> None:
        """动作分派结果回调；默认忽略"""


# ---------------------------------------------------------------- 随机策略


class RandomPolicy(Policy):
    """从可执行动作中均匀随机选择"""

    name = "random"

    def __init__(self, seed: int = 0):
        self.seed = seed
        self._rngs: Dict[str, random.Random] = {}
        self._lock = threading.Lock()

    def _rng(self, agent: str) -> random.Random:
        with self._lock:
            if agent not in self._rngs:
                self._rngs[agent] = random.Random(f"{self.seed}:{agent}")
            return self._rngs[agent]

    def decide(self, context: PolicyContext) -> Decision:
        if not context.admissible:
            return _wait("nothing admissible")
        rng = self._rng(context.agent)
        command = rng.choice(context.admissible)
        utterance = rng.choice(SMALL_TALK) if command.split()[0] in CHAT_VERBS else None
        return Decision(command, utterance)


# ---------------------------------------------------------------- 需求驱动的住户策略


class NeedsGreedyPolicy(Policy):
    """
    住户策略：优先满足最紧迫的需求，按饮品偏好取用设备，设备被占用时排队等待；
    没有需求时回到指定工位工作
    """

    name = "needs"

    def decide(self, context: PolicyContext) -> Decision:
        objective = context.objective
        if objective.kind == "need":
            handler = getattr(self, f"_restore_{objective.target}")
            return handler(context)
        return self._idle(context)

    # ------------------------------------------------------------ 需求

    def _restore_hydration(self, ctx: PolicyContext) -> Decision:
        world, me, admissible = ctx.world, ctx.world.agents[ctx.agent], ctx.admissible
        held = [world.objects[n] for n in me.inventory]
        for cup in held:
            if cup.otype == "Cup" and cup.state.get("contains"):
                return Decision(f"drink {cup.name}", reason="drinking")
        refill = _starts(admissible, "refill_supplies")
        if refill:
            return Decision(refill[0])

        preference = me.preference if me.preference in DRINK_DEVICES else "water"
        empty = [c for c in held if c.otype == "Cup" and c.state.get("is_clean", True) and not c.state.get("contains")]
        if empty:
            return self._fill(ctx, empty[0].name, preference)
        dirty = [c for c in held if c.otype == "Cup"]
        if dirty:
            cleaning = _starts(admissible, f"clean {dirty[0].name}")
            if cleaning:
                return Decision(cleaning[0])
            sinks = [e.location for e in world.all_objects() if e.otype == "Sinkbasin"]
            target = _nearest(world, me.location, sinks)
            if target and target != me.location:
                return _step_towards(world, ctx.agent, target, admissible)
            return _wait("sink busy")
        return self._fetch(ctx, lambda e: e.otype == "Cup" and e.state.get("is_clean", True)
                           and not e.state.get("contains"))

    def _fill(self, ctx: PolicyContext, cup: str, preference: str) -> Decision:
        world, me, admissible = ctx.world, ctx.world.agents[ctx.agent], ctx.admissible
        device_type = DRINK_DEVICES[preference]
        here = sorted(e.name for e in world.all_objects() if e.otype == device_type and e.location == me.location)
        if not here:
            where = [e.location for e in world.all_objects() if e.otype == device_type and e.state.get("is_working")]
            target = _nearest(world, me.location, where)
            return _step_towards(world, ctx.agent, target, admissible) if target else _wait("no device")

        # 同偏好的住户轮流分配到不同设备
        peers = [name for name, a in world.agents.items()
                 if (a.preference if a.preference in DRINK_DEVICES else "water") == preference]
        device = here[peers.index(ctx.agent) % len(here)]
        if not world.obj(device).state.get("is_turned_on") and f"turn_on {device}" in admissible:
            return Decision(f"turn_on {device}")
        if preference == "tea":
            options = _starts(admissible, f"make_tea {cup}")
        elif preference == "coffee":
            options = [f"brew_coffee {cup} {device}"]
        else:
            options = [f"dispense_water {cup} {device}"]
        options = [o for o in options if o in admissible]
        if options:
            return Decision(options[0], reason=f"getting {preference}")
        return _wait(f"queueing for {device}")

    def _fetch(self, ctx: PolicyContext, wanted) -> Decision:
        """拿起本地点满足条件的物体，否则前往最近有该物体的地点"""
        world, me, admissible = ctx.world, ctx.world.agents[ctx.agent], ctx.admissible
        local = sorted(e.name for e in world.visible_objects(ctx.agent) if e.holder is None and wanted(e))
        if local:
            choice = local[ctx.agent_index % len(local)]
            if f"pick_up {choice}" in admissible:
                return Decision(f"pick_up {choice}")
            options = [f"pick_up {name}" for name in local if f"pick_up {name}" in admissible]
            return Decision(options[0]) if options else _wait("hands full")
        where = [e.location for e in world.objects.values() if wanted(e) and _reachable(world, e)]
        target = _nearest(world, me.location, [w for w in where if w != me.location])
        return _step_towards(world, ctx.agent, target, admissible) if target else _wait("nothing found")

    def _restore_fullness(self, ctx: PolicyContext) -> Decision:
        world, me, admissible = ctx.world, ctx.world.agents[ctx.agent], ctx.admissible
        for name in me.inventory:
            if world.objects[name].otype in FOOD_TYPES and f"eat {name}" in admissible:
                return Decision(f"eat {name}")
        meal = _starts(admissible, "fetch_meal")
        if meal:
            return Decision(meal[0])
        if world.unlimited_locations:
            target = _nearest(world, me.location, world.unlimited_locations)
            if target:
                return _step_towards(world, ctx.agent, target, admissible)
        return self._fetch(ctx, lambda e: e.otype in FOOD_TYPES)

    def _restore_bladder(self, ctx: PolicyContext) -> Decision:
        if "use_restroom" in ctx.admissible:
            return Decision("use_restroom")
        me = ctx.world.agents[ctx.agent]
        target = _nearest(ctx.world, me.location, [n for n in ctx.world.locations if "restroom" in n.lower()])
        return _step_towards(ctx.world, ctx.agent, target, ctx.admissible) if target else _wait("no restroom")

    def _restore_energy(self, ctx: PolicyContext) -> Decision:
        return Decision("rest") if "rest" in ctx.admissible else _wait()

    def _restore_social_fulfillment(self, ctx: PolicyContext) -> Decision:
        if "stay_chat" in ctx.admissible:
            return Decision("stay_chat", SMALL_TALK[ctx.tick % len(SMALL_TALK)])
        for prefix in ("join_chat", "initiating_chat"):
            options = _starts(ctx.admissible, prefix)
            if options:
                return Decision(options[0], SMALL_TALK[0])
        return self._idle(ctx)

    # ------------------------------------------------------------ 空闲

    def _idle(self, ctx: PolicyContext) -> Decision:
        me = ctx.world.agents[ctx.agent]
        if "end_chat" in ctx.admissible:
            return Decision("end_chat")
        if me.workspace and me.location != me.workspace:
            return _step_towards(ctx.world, ctx.agent, me.workspace, ctx.admissible)
        if "work_at_desk" in ctx.admissible and me.workspace:
            return Decision("work_at_desk")
        return _wait("idle")


# ---------------------------------------------------------------- 剧本策略


@dataclass
class _ProgramState:
    index: int = 0
    remaining: Optional[int] = None
    pending: Optional[str] = None


@dataclass
class Playbook:
    agents: Dict[str, List[Dict[str, Any]]] = field(default_factory=dict)
    fallback: str = "needs"
    loop: bool = False

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Playbook":
        fallback = data.get("fallback", "needs")
        if fallback not in ("needs", "wait"):
            raise ScenarioError(f"unknown playbook fallback {fallback}", "$.fallback")
        agents = data.get("agents", {})
        for name, steps in agents.items():
            for i, step in enumerate(steps):
                if not any(key in step for key in ("goto", "do", "haul", "raw", "wait")):
                    raise ScenarioError("step needs one of goto, do, haul, raw, wait", f"$.agents.{name}[{i}]")
        return cls(agents=agents, fallback=fallback, loop=bool(data.get("loop", False)))

    @classmethod
    def load(cls, path: str) -> "Playbook":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_dict(json.load(f))


class ScriptedPolicy(Policy):
    """
    按剧本为每个智能体执行步骤；剧本执行完（或某智能体没有剧本）时交给后备策略

    步骤类型：
    - {"goto": loc}: 沿最短路线走到 loc
    - {"haul": item, "to": loc}: 用 move_furniture 把家具搬到 loc
    - {"do": cmd, "times": n, "until": 条件, "optional": bool, "say": 发言}: 执行命令，成功 n 次或条件成立后完成
    - {"raw": cmd}: 不检查可执行性，直接分派一次（失败也算完成）
    - {"wait": n}: 等待 n 个时间步

    命令中可使用 {workspace}、{password}、{self} 占位符。
    """

    name = "scripted"

    def __init__(self, playbook: Optional[Playbook] = None):
        self.playbook = playbook or Playbook()
        self.fallback = NeedsGreedyPolicy()
        self._states: Dict[str, _ProgramState] = {}
        self._lock = threading.Lock()

    def _state(self, agent: str) -> _ProgramState:
        with self._lock:
            return self._states.setdefault(agent, _ProgramState())

    @staticmethod
    def _fill(text: str, ctx: PolicyContext) -> str:
        me = ctx.world.agents[ctx.agent]
        return (text.replace("{workspace}", me.workspace or "")
                .replace("{password}", me.knowledge.get("booking_password", ""))
                .replace("{self}", ctx.agent))

    @staticmethod
    def _holds(condition: Dict[str, Any], ctx: PolicyContext) -> bool:
        world, me = ctx.world, ctx.world.agents[ctx.agent]
        if "at" in condition:
            return me.location == condition["at"]
        if "holding" in condition:
            return condition["holding"] in me.inventory
        if "attr" in condition:
            name, key, value = condition["attr"]
            return world.has_entity(name) and world.obj(name).attribute(key) == value
        if "tick_at_least" in condition:
            return ctx.tick >= condition["tick_at_least"]
        return False

    def decide(self, context: PolicyContext) -> Decision:
        steps = self.playbook.agents.get(context.agent)
        if not steps:
            return self._fallback(context)
        state = self._state(context.agent)
        for _ in range(2 * len(steps) + 1):
            if state.index >= len(steps):
                if not self.playbook.loop:
                    return self._fallback(context)
                state.index, state.remaining, state.pending = 0, None, None
            decision = self._run_step(steps[state.index], state, context)
            if decision is not None:
                return decision
            state.index, state.remaining, state.pending = state.index + 1, None, None
        return _wait("playbook made no progress")

    def _fallback(self, context: PolicyContext) -> Decision:
        if self.playbook.fallback == "wait":
            return _wait("playbook finished")
        return self.fallback.decide(context)

    def _run_step(self, step: Dict[str, Any], state: _ProgramState, ctx: PolicyContext) -> Optional[Decision]:
        """返回本步的决策；本步已完成时返回 None"""
        world, me = ctx.world, ctx.world.agents[ctx.agent]
        if "goto" in step:
            target = self._fill(step["goto"], ctx)
            if me.location == target:
                return None
            return _step_towards(world, ctx.agent, target, ctx.admissible)

        if "haul" in step:
            item, target = self._fill(step["haul"], ctx), self._fill(step["to"], ctx)
            if not world.has_entity(item) or world.obj(item).location == target:
                return None
            source = world.obj(item).location
            if me.location != source:
                return _step_towards(world, ctx.agent, source, ctx.admissible)
            route = shortest_route(world, me.location, target)
            command = f"move_furniture {item} {route[0]}" if route else ""
            return Decision(command) if command in ctx.admissible else _wait(f"cannot move {item}")

        if "raw" in step:
            if state.pending is not None:
                return None
            state.pending = self._fill(step["raw"], ctx)
            return Decision(state.pending, step.get("say"), learn_from_failure=True)

        if "wait" in step:
            if state.remaining is None:
                state.remaining = int(step["wait"])
            if state.remaining <= 0:
                return None
            state.remaining -= 1
            return _wait("scripted wait")

        command = self._fill(step["do"], ctx)
        if "until" in step:
            if self._holds(step["until"], ctx):
                return None
        else:
            if state.remaining is None:
                state.remaining = int(step.get("times", 1))
            if state.remaining <= 0:
                return None
        if command in ctx.admissible:
            state.pending = command
            return Decision(command, step.get("say"))
        if step.get("optional"):
            return None
        return _wait(f"'{command}' is blocked")

    def notify(self, agent: str, command: str, success: bool) -> None:
        state = self._states.get(agent)
        if state is None or state.pending != command:
            return
        if success and state.remaining is not None:
            state.remaining -= 1
        # raw 步骤保留 pending 作为“已执行”的标记
        steps = self.playbook.agents.get(agent, [])
        if state.index < len(steps) and "raw" not in steps[state.index]:
            state.pending = None


# ---------------------------------------------------------------- 生成服务策略


def build_messages(context: PolicyContext, use_reminder: bool = True, use_memory: bool = True) -> List[Dict[str, str]]:
    """
    组装发送给生成服务的消息：系统段（身份、角色、技能、知识），观察，记忆摘要，任务提醒，编号的可执行命令，输出要求

    参数:
    - context: 策略上下文
    - use_reminder: 是否包含任务提醒（--no-tp 时关闭）
    - use_memory: 是否包含记忆摘要（--no-st 时关闭）
    """
    profile = context.profile
    system = SYSTEM_PROMPT_TEMPLATE.format(
        name=profile.name,
        role=profile.role,
        gender=profile.gender,
        profile=profile.persona,
        appearance=profile.appearance,
        skills=", ".join(f"{verb} (x{mult})" for verb, mult in profile.skills) or "none",
        knowledge=", ".join(f"{key}: {value}" for key, value in profile.knowledge) or "none",
    )
    sections = [f"OBSERVATION:\n{format_observation(context.observation)}"]
    if use_memory and context.digest:
        sections.append(f"MEMORY:\n{context.digest}")
    if use_reminder and context.reminder:
        sections.append(f"TASK REMINDER:\n{context.reminder}")
    sections.append(f"CURRENT OBJECTIVE: {context.objective.describe()}")
    sections.append(f"ADMISSIBLE COMMANDS:\n{format_admissible(context.admissible)}")
    sections.append(INSTRUCTION_TEMPLATE)
    return [{"role": "system", "content": system}, {"role": "user", "content": "\n\n".join(sections)}]


def _well_formed(command: str) -> bool:
    tokens = command.split()
    return bool(tokens) and tokens[0] in CATALOG and len(tokens) - 1 == CATALOG[tokens[0]].arity


class GenerationPolicy(Policy):
    """先推理后行动：把上下文交给生成服务，解析 ACTION 行"""

    name = "generation"

    def __init__(self, client, use_reminder: bool = True, use_memory: bool = True):
        """
        参数:
        - client: 具有 generate(messages, agent) 方法的生成服务客户端
        - use_reminder: 是否在提示词中包含任务提醒
        - use_memory: 是否在提示词中包含语义地图与任务进度
        """
        self.client = client
        self.use_reminder = use_reminder
        self.use_memory = use_memory
        self._tried: Dict[str, set] = {}
        self._lock = threading.Lock()

    def _first_try(self, agent: str, command: str) -> bool:
        with self._lock:
            tried = self._tried.setdefault(agent, set())
            if command in tried:
                return False
            tried.add(command)
            return True

    def decide(self, context: PolicyContext) -> Decision:
        messages = build_messages(context, self.use_reminder, self.use_memory)
        for attempt in range(MAX_ACTION_RETRIES):
            try:
                reply = self.client.generate(messages, context.agent)
            except GenerationServiceError as e:
                raise PolicyError(f"{context.agent}: {e}") from e
            parsed = parse_action_response(reply, context.admissible)
            if parsed.action == WAIT:
                return _wait(parsed.reason)
            if parsed.action in context.admissible:
                utterance = parsed.say
                if parsed.action.split()[0] in CHAT_VERBS and not utterance:
                    utterance = "Hello."
                return Decision(parsed.action, utterance, reason=parsed.reason)
            if _well_formed(parsed.action) and self._first_try(context.agent, parsed.action):
                logger.info(f"{context.agent} tries non-admissible '{parsed.action}' once")
                return Decision(parsed.action, parsed.say, learn_from_failure=True, reason=parsed.reason)
            logger.warning(f"{context.agent} proposed '{parsed.action}' outside the admissible list "
                           f"(attempt {attempt + 1}/{MAX_ACTION_RETRIES})")
            messages = messages + [
                {"role": "assistant", "content": reply},
                {"role": "user", "content": f"'{parsed.action}' is not an admissible command. "
                                            f"Choose exactly one command from the ADMISSIBLE COMMANDS list."},
            ]
        logger.info(f"{context.agent} falls back to wait after {MAX_ACTION_RETRIES} attempts")
        return _wait("no admissible command produced")
