"""
动作引擎：可执行动作计算、命令分派（前置条件检查 + 原子效果）与实体移动

每个动作由三部分组成：候选参数生成、前置条件检查、效果应用。
可执行动作列表就是经过同一检查过滤后的候选命令，因此列出的命令分派时不会因前置条件失败。
"""

from dataclasses import dataclass, field
from datetime import datetime
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from office_world.config import HEATED_FOOD_C, HEATED_THRESHOLD_C
from office_world.models import conversation
from office_world.models.catalog import (
    BEVERAGES,
    CATALOG,
    FOOD_TYPES,
    FURNITURE_TYPES,
    OBJECT_TYPES,
    PUT_IN_TYPES,
    PUT_ON_TYPES,
    REPAIR_VERBS,
    REPAIRABLE_TYPES,
    TERMINAL_TYPES,
    UTENSIL_TYPES,
    catalog,
    effective_duration,
    qualifies,
)
from office_world.models.needs import NeedsModel, apply_restoration
from office_world.models.world import (
    AgentState,
    Booking,
    DiffEntry,
    ObjectEntity,
    Receptacle,
    Reservation,
    WorldState,
    diff,
    restore,
    snapshot,
)
from office_world.utils.logger import get_logger
from office_world.utils.text_formatter import snake_case

logger = get_logger("ActionEngine")

Args = Tuple[str, ...]


@dataclass
class ActionOutcome:
    success: bool
    message: str
    duration_ticks: int = 1
    diff: List[DiffEntry] = field(default_factory=list)
    verb: str = ""
    args: Args = ()

    def to_dict(self) -> Dict[str, object]:
        return {
            "success": self.success,
            "message": self.message,
            "duration": self.duration_ticks,
            "diff": [list(entry) for entry in self.diff],
        }


def _failure(message: str, verb: str = "", args: Args = ()) -> ActionOutcome:
    return ActionOutcome(False, message, 1, [], verb, args)


def _parse_time(text: str) -> Optional[datetime]:
    try:
        return datetime.fromisoformat(text)
    except ValueError:
        return None


class ActionEngine:
    """动作引擎"""

    def __init__(self, needs_model: Optional[NeedsModel] = None):
        """
        初始化动作引擎

        参数:
        - needs_model: 恢复性动作使用的需求模型，None 时使用默认常量
        """
        self.needs_model = needs_model or NeedsModel()
        self._handlers: Dict[str, Tuple[Callable, Callable, Callable]] = {}
        for spec in catalog():
            key = "repair" if spec.verb in REPAIR_VERBS else spec.verb
            self._handlers[spec.verb] = (
                getattr(self, f"_check_{key}"),
                getattr(self, f"_apply_{key}"),
                getattr(self, f"_candidates_{key}"),
            )

    # ================================================================ 对外接口

    def admissible_actions(self, world: WorldState, agent_name: str) -> List[str]:
        """
        计算智能体当前所有可执行的完整命令

        参数:
        - world: 世界状态
        - agent_name: 智能体名称（不存在时抛出 UnknownEntityError）

        返回:
        - 按字典序排列的命令列表
        """
        agent = world.agent(agent_name)
        visible = world.visible_objects(agent_name)
        commands = set()
        for spec in catalog():
            if not qualifies(spec, agent.skills):
                continue
            check, _, candidates = self._handlers[spec.verb]
            for args in candidates(world, agent, visible):
                if check(world, agent, spec.verb, args) is None:
                    commands.add(" ".join((spec.verb,) + tuple(args)))
        return sorted(commands)

    def dispatch(self, world: WorldState, agent_name: str, command: str,
                 utterance: Optional[str] = None) -> ActionOutcome:
        """
        解析并执行命令；任何失败都以不成功的结果返回，不抛出异常

        参数:
        - world: 世界状态（会被原地修改）
        - agent_name: 执行者
        - command: 命令字符串，如 "turn_on computer_1"
        - utterance: 对话动作附带的发言

        返回:
        - 动作结果（成功时带状态差异）
        """
        if agent_name not in world.agents:
            return _failure(f"cannot find agent {agent_name}.")
        agent = world.agents[agent_name]
        tokens = command.split()
        if not tokens:
            return _failure(f"{agent_name} cannot parse command {command}.")
        verb, args = tokens[0], tuple(tokens[1:])
        spec = CATALOG.get(verb)
        if spec is None:
            return _failure(f"{agent_name} cannot perform action {verb}.", verb, args)
        if len(args) != spec.arity:
            return _failure(f"{agent_name} received an incorrect number of arguments for action {verb}.", verb, args)
        if not qualifies(spec, agent.skills):
            return _failure(f"{agent_name} cannot perform action {verb}.", verb, args)

        check, apply, _ = self._handlers[verb]
        problem = check(world, agent, verb, args)
        if problem is not None:
            logger.debug(f"tick {world.tick} {agent_name}: '{command}' failed: {problem}")
            return _failure(problem, verb, args)

        distance = world.distance(agent.location, args[-1]) if spec.per_distance else None
        duration = effective_duration(spec, agent, distance)
        before = snapshot(world)
        try:
            message = apply(world, agent, args, utterance, duration)
            world.reindex()
        except Exception:
            logger.exception(f"Unexpected error applying '{command}' for {agent_name}; rolling back")
            self._rollback(world, before)
            return _failure(f"{agent_name} cannot perform action {verb}.", verb, args)
        changes = diff(before, snapshot(world))
        logger.debug(f"tick {world.tick} {agent_name}: '{command}' -> {message} ({duration} ticks)")
        return ActionOutcome(True, message, duration, changes, verb, args)

    def move_entity(self, world: WorldState, entity_name: str, destination: str) -> ActionOutcome:
        """移动智能体；物体只能随携带者移动"""
        if entity_name in world.agents:
            return self.dispatch(world, entity_name, f"go_to {destination}")
        if entity_name in world.objects or entity_name in world.receptacles:
            holder = world.obj(entity_name).holder
            if holder is None:
                return _failure(f"{entity_name} can only move while carried.", "go_to", (destination,))
            return self.dispatch(world, holder, f"go_to {destination}")
        return _failure(f"cannot find {entity_name}.", "go_to", (destination,))

    def repair(self, world: WorldState, agent_name: str, device_name: str) -> ActionOutcome:
        """按设备类型选择对应的 repair_* 动作"""
        if device_name in world.objects or device_name in world.receptacles:
            otype = world.obj(device_name).otype
            if otype in REPAIRABLE_TYPES:
                return self.dispatch(world, agent_name, f"repair_{snake_case(otype)} {device_name}")
            return _failure(f"{device_name} is not a repairable electronic device.", "repair", (device_name,))
        return _failure(f"{agent_name} cannot find {device_name}.", "repair", (device_name,))

    def book_meeting_room(self, world: WorldState, agent_name: str, terminal: str, event_name: str,
                          start: str, end: str, password: str, room: Optional[str] = None) -> ActionOutcome:
        """预订会议室；room 缺省时为终端所在地点"""
        if room is None:
            room = world.obj(terminal).location if world.has_entity(terminal) else ""
        token = event_name.replace(" ", "_")
        return self.dispatch(world, agent_name, f"book_meeting_room {terminal} {room} {token} {start} {end} {password}")

    # ================================================================ 通用辅助

    @staticmethod
    def _rollback(world: WorldState, before: Dict) -> None:
        last_actions = world.last_actions
        world.__dict__.update(restore(before).__dict__)
        world.last_actions = last_actions

    @staticmethod
    def _held(agent: AgentState, name: str) -> bool:
        return name in agent.inventory

    @staticmethod
    def _reserve(world: WorldState, device: str, agent: AgentState, duration: int) -> None:
        world.reservations[device] = Reservation(agent.name, world.tick + duration)

    @staticmethod
    def _local(visible: Sequence[ObjectEntity], otypes: Iterable[str]) -> List[ObjectEntity]:
        wanted = set(otypes)
        return [e for e in visible if e.otype in wanted]

    @staticmethod
    def _not_visible(world: WorldState, agent: AgentState, name: str) -> Optional[str]:
        if world.is_visible(agent.name, name):
            return None
        return f"{agent.name} cannot find {name}."

    def _free_device(self, world: WorldState, agent: AgentState, otype: str) -> Tuple[Optional[str], str]:
        """查找同地点可用的设备；返回 (设备名, 不可用原因)"""
        devices = sorted(
            (e for e in world.visible_objects(agent.name) if e.otype == otype and e.holder is None),
            key=lambda e: e.name,
        )
        if not devices:
            return None, f"{agent.name} cannot find a {otype} in the current location."
        reason = ""
        for device in devices:
            problem = self._device_problem(world, agent, device)
            if problem is None:
                return device.name, ""
            reason = reason or problem
        return None, reason

    @staticmethod
    def _device_problem(world: WorldState, agent: AgentState, device: ObjectEntity) -> Optional[str]:
        if device.state.get("is_working") is False:
            return f"{device.name} is broken."
        if "is_turned_on" in device.state and not device.state["is_turned_on"]:
            return f"{device.name} is not turned on."
        other = world.reserved_by_other(device.name, agent.name)
        if other:
            return f"{device.name} is in use by {other}."
        return None

    def _check_appliance(self, world: WorldState, agent: AgentState, name: str, otype: str,
                         verb: str) -> Optional[str]:
        problem = self._not_visible(world, agent, name)
        if problem:
            return problem
        device = world.obj(name)
        if device.otype != otype:
            return f"{agent.name} cannot perform action {verb} with {name}."
        return self._device_problem(world, agent, device)

    def _check_empty_cup(self, world: WorldState, agent: AgentState, name: str) -> Optional[str]:
        if not self._held(agent, name):
            return f"{agent.name} is not holding {name}."
        cup = world.obj(name)
        if cup.otype != "Cup":
            return f"{name} is not a cup."
        if not cup.state.get("is_clean", True):
            return f"{name} is dirty."
        if cup.state.get("contains"):
            return f"{name} already contains {cup.state['contains']}."
        return None

    @staticmethod
    def _store(world: WorldState, agent: AgentState, entity: ObjectEntity, container: Receptacle) -> None:
        agent.inventory.remove(entity.name)
        entity.holder = None
        entity.receptacle = container.name
        entity.location = container.location
        container.contents.append(entity.name)

    @staticmethod
    def _consume(world: WorldState, entity: ObjectEntity) -> None:
        if entity.holder is not None:
            world.agents[entity.holder].inventory.remove(entity.name)
        if entity.receptacle is not None:
            world.container(entity.receptacle).contents.remove(entity.name)
        del world.objects[entity.name]

    @staticmethod
    def _relocate_agent(world: WorldState, agent: AgentState, destination: str) -> None:
        conversation.leave(world, agent.name)
        agent.location = destination
        for name in agent.inventory:
            world.objects[name].location = destination

    def _restore_needs(self, agent: AgentState, verb: str) -> None:
        agent.needs = apply_restoration(agent.needs, verb, self.needs_model)

    @staticmethod
    def _no_args(world, agent, visible) -> Iterable[Args]:
        return [()]

    @staticmethod
    def _connections(world, agent) -> List[str]:
        return sorted(world.location(agent.location).connections)

    # ================================================================ 移动与操作

    def _check_go_to(self, world, agent, verb, args):
        destination = args[0]
        if destination == agent.location:
            return f"{agent.name} is already at {destination}."
        if destination not in world.locations:
            return f"{agent.name} cannot find {destination}."
        if destination not in world.locations[agent.location].connections:
            return f"{agent.name} cannot reach {destination} from {agent.location}."
        return None

    def _apply_go_to(self, world, agent, args, utterance, duration):
        origin = agent.location
        self._relocate_agent(world, agent, args[0])
        return f"{agent.name} went from {origin} to {args[0]}."

    def _candidates_go_to(self, world, agent, visible):
        return [(name,) for name in self._connections(world, agent)]

    def _check_pick_up(self, world, agent, verb, args):
        name = args[0]
        if self._held(agent, name):
            return f"{agent.name} is already holding {name}."
        problem = self._not_visible(world, agent, name)
        if problem:
            return problem
        entity = world.obj(name)
        if entity.otype in FURNITURE_TYPES:
            return f"{name} is too bulky to carry; use move_furniture."
        if isinstance(entity, Receptacle) or not entity.carryable:
            return f"{name} cannot be picked up."
        if not agent.hands_free:
            return f"{agent.name}'s hands are full."
        if world.carried_weight(agent.name) + entity.weight_kg > agent.strength_kg:
            return f"{name} is too heavy for {agent.name}."
        return None

    def _apply_pick_up(self, world, agent, args, utterance, duration):
        entity = world.obj(args[0])
        if entity.receptacle is not None:
            world.container(entity.receptacle).contents.remove(entity.name)
            entity.receptacle = None
        entity.holder = agent.name
        agent.inventory.append(entity.name)
        return f"{agent.name} picked up {entity.name}."

    def _candidates_pick_up(self, world, agent, visible):
        return [(e.name,) for e in visible if e.holder is None]

    def _check_drop(self, world, agent, verb, args):
        name = args[0]
        if not self._held(agent, name):
            return f"{agent.name} is not holding {name}."
        if world.obj(name).requires_receptacle:
            return f"{name} must be put on or in a receptacle."
        return None

    def _apply_drop(self, world, agent, args, utterance, duration):
        entity = world.obj(args[0])
        agent.inventory.remove(entity.name)
        entity.holder = None
        return f"{agent.name} dropped {entity.name}."

    def _candidates_drop(self, world, agent, visible):
        return [(name,) for name in agent.inventory]

    def _check_store(self, world, agent, args, allowed, preposition):
        name, target = args
        if not self._held(agent, name):
            return f"{agent.name} is not holding {name}."
        problem = self._not_visible(world, agent, target)
        if problem:
            return problem
        container = world.obj(target)
        if not isinstance(container, Receptacle) or container.rtype not in allowed:
            return f"{agent.name} cannot put anything {preposition} {target}."
        if not container.is_open:
            return f"{target} is closed."
        if container.full:
            return f"{target} is full."
        return None

    def _check_put_on(self, world, agent, verb, args):
        return self._check_store(world, agent, args, PUT_ON_TYPES, "on")

    def _apply_put_on(self, world, agent, args, utterance, duration):
        self._store(world, agent, world.obj(args[0]), world.container(args[1]))
        return f"{agent.name} put {args[0]} on {args[1]}."

    def _candidates_put_on(self, world, agent, visible):
        surfaces = [e.name for e in visible if isinstance(e, Receptacle) and e.rtype in PUT_ON_TYPES]
        return [(held, surface) for held in agent.inventory for surface in surfaces]

    def _check_put_in(self, world, agent, verb, args):
        return self._check_store(world, agent, args, PUT_IN_TYPES, "in")

    def _apply_put_in(self, world, agent, args, utterance, duration):
        self._store(world, agent, world.obj(args[0]), world.container(args[1]))
        return f"{agent.name} put {args[0]} in {args[1]}."

    def _candidates_put_in(self, world, agent, visible):
        containers = [e.name for e in visible if isinstance(e, Receptacle) and e.rtype in PUT_IN_TYPES]
        return [(held, container) for held in agent.inventory for container in containers]

    def _check_open_close(self, world, agent, name, want_open):
        problem = self._not_visible(world, agent, name)
        if problem:
            return problem
        container = world.obj(name)
        if not isinstance(container, Receptacle) or not container.state.get("closable", False):
            return f"{name} cannot be {'opened' if want_open else 'closed'}."
        if container.is_open == want_open:
            return f"{name} is already {'open' if want_open else 'closed'}."
        return None

    def _check_open(self, world, agent, verb, args):
        return self._check_open_close(world, agent, args[0], True)

    def _apply_open(self, world, agent, args, utterance, duration):
        world.obj(args[0]).state["is_open"] = True
        return f"{agent.name} opened {args[0]}."

    def _candidates_open(self, world, agent, visible):
        return [(e.name,) for e in visible if isinstance(e, Receptacle)]

    def _check_close(self, world, agent, verb, args):
        return self._check_open_close(world, agent, args[0], False)

    def _apply_close(self, world, agent, args, utterance, duration):
        world.obj(args[0]).state["is_open"] = False
        return f"{agent.name} closed {args[0]}."

    _candidates_close = _candidates_open

    def _check_give_to(self, world, agent, verb, args):
        name, peer_name = args
        if not self._held(agent, name):
            return f"{agent.name} is not holding {name}."
        peer = world.agents.get(peer_name)
        if peer is None or peer_name == agent.name or peer.location != agent.location:
            return f"{agent.name} cannot find {peer_name} in the current location."
        if not peer.hands_free:
            return f"{peer_name}'s hands are full."
        if world.carried_weight(peer_name) + world.obj(name).weight_kg > peer.strength_kg:
            return f"{name} is too heavy for {peer_name}."
        return None

    def _apply_give_to(self, world, agent, args, utterance, duration):
        name, peer_name = args
        agent.inventory.remove(name)
        world.agents[peer_name].inventory.append(name)
        world.obj(name).holder = peer_name
        return f"{agent.name} gave {name} to {peer_name}."

    def _candidates_give_to(self, world, agent, visible):
        peers = [p for p in world.location(agent.location).agents if p != agent.name]
        return [(held, peer) for held in agent.inventory for peer in peers]

    def _check_look_around(self, world, agent, verb, args):
        return None

    def _apply_look_around(self, world, agent, args, utterance, duration):
        names = [e.name for e in world.visible_objects(agent.name) if e.holder is None]
        peers = [p for p in world.location(agent.location).agents if p != agent.name]
        seen = ", ".join(names) if names else "nothing"
        others = ", ".join(peers) if peers else "nobody"
        return f"{agent.name} is at {agent.location} and sees {seen}; also here: {others}."

    _candidates_look_around = _no_args

    # ================================================================ 设备

    def _check_switch(self, world, agent, name, want_on):
        problem = self._not_visible(world, agent, name)
        if problem:
            return problem
        device = world.obj(name)
        if "is_turned_on" not in OBJECT_TYPES[device.otype].attributes:
            return f"{name} cannot be turned {'on' if want_on else 'off'}."
        if bool(device.state.get("is_turned_on")) == want_on:
            return f"{name} is already turned {'on' if want_on else 'off'}."
        return None

    def _check_turn_on(self, world, agent, verb, args):
        return self._check_switch(world, agent, args[0], True)

    def _apply_turn_on(self, world, agent, args, utterance, duration):
        world.obj(args[0]).state["is_turned_on"] = True
        return f"{args[0]} is now turned on."

    def _candidates_turn_on(self, world, agent, visible):
        return [(e.name,) for e in visible if "is_turned_on" in OBJECT_TYPES[e.otype].attributes]

    def _check_turn_off(self, world, agent, verb, args):
        return self._check_switch(world, agent, args[0], False)

    def _apply_turn_off(self, world, agent, args, utterance, duration):
        world.obj(args[0]).state["is_turned_on"] = False
        return f"{args[0]} is now turned off."

    _candidates_turn_off = _candidates_turn_on

    def _check_repair(self, world, agent, verb, args):
        name = args[0]
        problem = self._not_visible(world, agent, name)
        if problem:
            return problem
        device = world.obj(name)
        if device.otype not in REPAIRABLE_TYPES:
            return f"{name} is not a repairable electronic device."
        if REPAIR_VERBS[verb] != device.otype:
            return f"{agent.name} cannot perform action {verb} on {name}."
        if device.state.get("is_working", True):
            return f"{name} is already in working condition."
        return None

    def _apply_repair(self, world, agent, args, utterance, duration):
        world.obj(args[0]).state["is_working"] = True
        return f"{agent.name} repaired the {args[0]}."

    def _candidates_repair(self, world, agent, visible):
        return [(e.name,) for e in visible if e.otype in REPAIRABLE_TYPES]

    # ================================================================ 厨房与需求

    def _check_clean(self, world, agent, verb, args):
        name = args[0]
        if not self._held(agent, name):
            return f"{agent.name} is not holding {name}."
        utensil = world.obj(name)
        if utensil.otype not in UTENSIL_TYPES:
            return f"{name} cannot be cleaned."
        if utensil.state.get("is_clean", True):
            return f"{name} is already clean."
        sink, reason = self._free_device(world, agent, "Sinkbasin")
        return None if sink else reason

    def _apply_clean(self, world, agent, args, utterance, duration):
        utensil = world.obj(args[0])
        utensil.state["is_clean"] = True
        if utensil.state.get("contains") is not None:
            utensil.state["contains"] = None
        sink, _ = self._free_device(world, agent, "Sinkbasin")
        self._reserve(world, sink, agent, duration)
        return f"{agent.name} cleaned {args[0]} at {sink}."

    def _candidates_clean(self, world, agent, visible):
        return [(name,) for name in agent.inventory]

    def _check_wash_hands(self, world, agent, verb, args):
        sink, reason = self._free_device(world, agent, "Sinkbasin")
        return None if sink else reason

    def _apply_wash_hands(self, world, agent, args, utterance, duration):
        sink, _ = self._free_device(world, agent, "Sinkbasin")
        self._reserve(world, sink, agent, duration)
        return f"{agent.name} washed hands at {sink}."

    _candidates_wash_hands = _no_args

    def _check_brew_coffee(self, world, agent, verb, args):
        return self._check_empty_cup(world, agent, args[0]) or self._check_appliance(
            world, agent, args[1], "CoffeeMachine", verb)

    def _apply_brew_coffee(self, world, agent, args, utterance, duration):
        world.obj(args[0]).state["contains"] = "coffee"
        self._reserve(world, args[1], agent, duration)
        return f"{agent.name} brewed coffee into {args[0]}."

    def _candidates_brew_coffee(self, world, agent, visible):
        machines = [e.name for e in self._local(visible, ["CoffeeMachine"])]
        return [(cup, machine) for cup in agent.inventory for machine in machines]

    def _check_dispense_water(self, world, agent, verb, args):
        return self._check_empty_cup(world, agent, args[0]) or self._check_appliance(
            world, agent, args[1], "WaterDispenser", verb)

    def _apply_dispense_water(self, world, agent, args, utterance, duration):
        world.obj(args[0]).state["contains"] = "water"
        self._reserve(world, args[1], agent, duration)
        return f"{agent.name} filled {args[0]} with water from {args[1]}."

    def _candidates_dispense_water(self, world, agent, visible):
        dispensers = [e.name for e in self._local(visible, ["WaterDispenser"])]
        return [(cup, dispenser) for cup in agent.inventory for dispenser in dispensers]

    def _check_make_tea(self, world, agent, verb, args):
        cup, teabag = args
        problem = self._check_empty_cup(world, agent, cup) or self._not_visible(world, agent, teabag)
        if problem:
            return problem
        if world.obj(teabag).otype != "TeaBag":
            return f"{teabag} is not a tea bag."
        dispenser, reason = self._free_device(world, agent, "WaterDispenser")
        return None if dispenser else reason

    def _apply_make_tea(self, world, agent, args, utterance, duration):
        cup, teabag = args
        dispenser, _ = self._free_device(world, agent, "WaterDispenser")
        world.obj(cup).state["contains"] = "tea"
        self._consume(world, world.obj(teabag))
        self._reserve(world, dispenser, agent, duration)
        return f"{agent.name} made tea in {cup} with {teabag}."

    def _candidates_make_tea(self, world, agent, visible):
        teabags = [e.name for e in self._local(visible, ["TeaBag"])]
        return [(cup, teabag) for cup in agent.inventory for teabag in teabags]

    def _check_heat_food(self, world, agent, verb, args):
        food, microwave = args
        if not self._held(agent, food):
            return f"{agent.name} is not holding {food}."
        entity = world.obj(food)
        if entity.otype not in FOOD_TYPES:
            return f"{food} cannot be heated."
        if entity.state.get("temperature", 20) >= HEATED_THRESHOLD_C:
            return f"{food} is already heated."
        return self._check_appliance(world, agent, microwave, "Microwave", verb)

    def _apply_heat_food(self, world, agent, args, utterance, duration):
        world.obj(args[0]).state["temperature"] = HEATED_FOOD_C
        self._reserve(world, args[1], agent, duration)
        return f"{agent.name} heated {args[0]} in {args[1]}."

    def _candidates_heat_food(self, world, agent, visible):
        microwaves = [e.name for e in self._local(visible, ["Microwave"])]
        return [(food, microwave) for food in agent.inventory for microwave in microwaves]

    def _check_eat(self, world, agent, verb, args):
        food = args[0]
        if not self._held(agent, food):
            return f"{agent.name} is not holding {food}."
        if world.obj(food).otype not in FOOD_TYPES:
            return f"{food} is not edible."
        if agent.needs.fullness >= 100:
            return f"{agent.name} is not hungry."
        return None

    def _apply_eat(self, world, agent, args, utterance, duration):
        self._consume(world, world.obj(args[0]))
        self._restore_needs(agent, "eat")
        return f"{agent.name} ate {args[0]}."

    def _candidates_eat(self, world, agent, visible):
        return [(name,) for name in agent.inventory]

    def _check_drink(self, world, agent, verb, args):
        name = args[0]
        if not self._held(agent, name):
            return f"{agent.name} is not holding {name}."
        cup = world.obj(name)
        if cup.otype != "Cup" or cup.state.get("contains") not in BEVERAGES:
            return f"{name} has nothing to drink."
        if agent.needs.hydration >= 100:
            return f"{agent.name} is not thirsty."
        return None

    def _apply_drink(self, world, agent, args, utterance, duration):
        cup = world.obj(args[0])
        beverage = cup.state["contains"]
        cup.state["contains"] = None
        cup.state["is_clean"] = False
        self._restore_needs(agent, "drink")
        return f"{agent.name} drank {beverage} from {args[0]}."

    def _candidates_drink(self, world, agent, visible):
        return [(name,) for name in agent.inventory]

    def _check_use_restroom(self, world, agent, verb, args):
        if "restroom" not in agent.location.lower():
            return f"{agent.name} cannot find a restroom in the current location."
        if agent.needs.bladder <= 0:
            return f"{agent.name} does not need the restroom."
        return None

    def _apply_use_restroom(self, world, agent, args, utterance, duration):
        self._restore_needs(agent, "use_restroom")
        return f"{agent.name} used the restroom."

    _candidates_use_restroom = _no_args

    def _check_rest(self, world, agent, verb, args):
        if agent.needs.energy >= 100:
            return f"{agent.name} is not tired."
        return None

    def _apply_rest(self, world, agent, args, utterance, duration):
        self._restore_needs(agent, "rest")
        return f"{agent.name} rested."

    _candidates_rest = _no_args

    def _check_unlimited(self, world, agent, need, label):
        if agent.location not in world.unlimited_locations:
            return f"{agent.name} cannot {label} at {agent.location}."
        if getattr(agent.needs, need) >= 100:
            return f"{agent.name} does not need to {label}."
        return None

    def _check_fetch_meal(self, world, agent, verb, args):
        return self._check_unlimited(world, agent, "fullness", "fetch a meal")

    def _apply_fetch_meal(self, world, agent, args, utterance, duration):
        self._restore_needs(agent, "fetch_meal")
        return f"{agent.name} had a meal at {agent.location}."

    _candidates_fetch_meal = _no_args

    def _check_refill_supplies(self, world, agent, verb, args):
        return self._check_unlimited(world, agent, "hydration", "refill supplies")

    def _apply_refill_supplies(self, world, agent, args, utterance, duration):
        self._restore_needs(agent, "refill_supplies")
        return f"{agent.name} had a drink at {agent.location}."

    _candidates_refill_supplies = _no_args

    # ================================================================ 角色与工作

    def _local_desk(self, world, agent) -> Optional[str]:
        desks = sorted(e.name for e in world.visible_objects(agent.name)
                       if isinstance(e, Receptacle) and e.rtype == "Desk")
        return desks[0] if desks else None

    def _check_work_at_desk(self, world, agent, verb, args):
        if self._local_desk(world, agent) is None:
            return f"{agent.name} cannot find a Desk in the current location."
        return None

    def _apply_work_at_desk(self, world, agent, args, utterance, duration):
        return f"{agent.name} worked at {self._local_desk(world, agent)}."

    _candidates_work_at_desk = _no_args

    def _check_terminal(self, world, agent, name) -> Optional[str]:
        problem = self._not_visible(world, agent, name)
        if problem:
            return problem
        terminal = world.obj(name)
        if terminal.otype not in TERMINAL_TYPES:
            return f"{name} cannot be used to book a room."
        if terminal.state.get("is_working") is False:
            return f"{name} is broken."
        if not terminal.state.get("is_turned_on"):
            return f"{name} is not turned on."
        return None

    def _check_book_meeting_room(self, world, agent, verb, args):
        terminal, room, _event, start_text, end_text, password = args
        problem = self._check_terminal(world, agent, terminal)
        if problem:
            return problem
        if room not in world.locations:
            return f"{agent.name} cannot find {room}."
        device = world.obj(terminal)
        if device.otype == "TouchScreen" and room != device.location:
            return f"{terminal} can only book {device.location}."
        start, end = _parse_time(start_text), _parse_time(end_text)
        if start is None or end is None:
            return f"{agent.name} entered a malformed booking time."
        if end <= start:
            return f"{agent.name} entered an invalid booking period."
        if world.booking_password is None or password != world.booking_password:
            return f"{agent.name} entered an incorrect password on {terminal}."
        for booking in world.bookings:
            if booking.room == room and start < _parse_time(booking.end) and _parse_time(booking.start) < end:
                return f"{room} is already booked from {booking.start} to {booking.end}."
        return None

    def _apply_book_meeting_room(self, world, agent, args, utterance, duration):
        terminal, room, event, start_text, end_text, _ = args
        booking = Booking(
            name=event.replace("_", " "),
            start=_parse_time(start_text).isoformat(),
            end=_parse_time(end_text).isoformat(),
            room=room,
            booked_by=agent.name,
        )
        world.bookings.append(booking)
        return f"{agent.name} booked {room} for {booking.name} from {booking.start} to {booking.end}."

    def _candidates_book_meeting_room(self, world, agent, visible):
        password = agent.knowledge.get(conversation.PASSWORD_KEY)
        if not password:
            return []
        candidates = []
        for terminal in self._local(visible, TERMINAL_TYPES):
            for request in world.event_requests:
                if terminal.otype == "TouchScreen" and request.room != terminal.location:
                    continue
                candidates.append((terminal.name, request.room, request.name.replace(" ", "_"),
                                   request.start, request.end, password))
        return candidates

    def _check_check_bookings(self, world, agent, verb, args):
        return self._check_terminal(world, agent, args[0])

    def _apply_check_bookings(self, world, agent, args, utterance, duration):
        if not world.bookings:
            return f"{agent.name} checked {args[0]}: no bookings."
        listed = "; ".join(f"{b.room} {b.name} {b.start}-{b.end}" for b in world.bookings)
        return f"{agent.name} checked {args[0]}: {listed}."

    def _candidates_check_bookings(self, world, agent, visible):
        return [(e.name,) for e in self._local(visible, TERMINAL_TYPES)]

    def _check_move_furniture(self, world, agent, verb, args):
        item, destination = args
        problem = self._not_visible(world, agent, item)
        if problem:
            return problem
        entity = world.obj(item)
        if entity.otype not in FURNITURE_TYPES:
            return f"{item} is not furniture."
        if agent.inventory:
            return f"{agent.name} needs empty hands to move {item}."
        if world.total_weight(entity) > agent.strength_kg:
            return f"{item} is too heavy for {agent.name} to move."
        return self._check_go_to(world, agent, "go_to", (destination,))

    def _apply_move_furniture(self, world, agent, args, utterance, duration):
        item, destination = args
        entity = world.obj(item)
        self._relocate_agent(world, agent, destination)
        entity.location = destination
        if isinstance(entity, Receptacle):
            for name in entity.contents:
                world.obj(name).location = destination
        return f"{agent.name} moved {item} to {destination}."

    def _candidates_move_furniture(self, world, agent, visible):
        furniture = [e.name for e in self._local(visible, FURNITURE_TYPES)]
        return [(item, destination) for item in furniture for destination in self._connections(world, agent)]

    def _check_inspect_device(self, world, agent, verb, args):
        problem = self._not_visible(world, agent, args[0])
        if problem:
            return problem
        device = world.obj(args[0])
        if isinstance(device, Receptacle) or "is_working" not in OBJECT_TYPES[device.otype].attributes:
            return f"{args[0]} cannot be inspected."
        return None

    def _apply_inspect_device(self, world, agent, args, utterance, duration):
        device = world.obj(args[0])
        status = "working" if device.state.get("is_working", True) else "broken"
        power = "on" if device.state.get("is_turned_on") else "off"
        user = world.reserved_by_other(device.name, agent.name)
        busy = f", in use by {user}" if user else ""
        return f"{device.name} is {status} and turned {power}{busy}."

    def _candidates_inspect_device(self, world, agent, visible):
        return [(e.name,) for e in visible if "is_working" in OBJECT_TYPES[e.otype].attributes
                and not isinstance(e, Receptacle)]

    # ================================================================ 对话

    def _check_initiating_chat(self, world, agent, verb, args):
        return conversation.check_initiate(world, agent.name, args[0])

    def _apply_initiating_chat(self, world, agent, args, utterance, duration):
        session_id = conversation.apply_initiate(world, agent.name, args[0], utterance)
        return f"{agent.name} started {session_id} with {args[0]}."

    def _candidates_initiating_chat(self, world, agent, visible):
        return [(peer,) for peer in world.location(agent.location).agents]

    def _check_join_chat(self, world, agent, verb, args):
        return conversation.check_join(world, agent.name, args[0])

    def _apply_join_chat(self, world, agent, args, utterance, duration):
        conversation.apply_join(world, agent.name, args[0], utterance)
        return f"{agent.name} joined {args[0]}."

    def _candidates_join_chat(self, world, agent, visible):
        return [(s.id,) for s in conversation.sessions_at(world, agent.location)]

    def _check_stay_chat(self, world, agent, verb, args):
        return conversation.check_in_session(world, agent.name, verb)

    def _apply_stay_chat(self, world, agent, args, utterance, duration):
        session_id = agent.conversation
        conversation.apply_stay(world, agent.name, utterance, self.needs_model)
        return f"{agent.name} spoke in {session_id}."

    _candidates_stay_chat = _no_args

    def _check_end_chat(self, world, agent, verb, args):
        return conversation.check_in_session(world, agent.name, verb)

    def _apply_end_chat(self, world, agent, args, utterance, duration):
        session_id = agent.conversation
        dissolved = conversation.leave(world, agent.name)
        suffix = f" {session_id} ended." if dissolved else ""
        return f"{agent.name} left {session_id}.{suffix}"

    _candidates_end_chat = _no_args


_DEFAULT_ENGINE = ActionEngine()


def admissible_actions(world: WorldState, agent_name: str) -> List[str]:
    return _DEFAULT_ENGINE.admissible_actions(world, agent_name)


def dispatch(world: WorldState, agent_name: str, command: str, utterance: Optional[str] = None) -> ActionOutcome:
    return _DEFAULT_ENGINE.dispatch(world, agent_name, command, utterance)


def move_entity(world: WorldState, entity_name: str, destination: str) -> ActionOutcome:
    return _DEFAULT_ENGINE.move_entity(world, entity_name, destination)


def repair(world: WorldState, agent_name: str, device_name: str) -> ActionOutcome:
    return _DEFAULT_ENGINE.repair(world, agent_name, device_name)


def book_meeting_room(world: WorldState, agent_name: str, terminal: str, event_name: str, start: str, end: str,
                      password: str, room: Optional[str] = None) -> ActionOutcome:
    return _DEFAULT_ENGINE.book_meeting_room(world, agent_name, terminal, event_name, start, end, password, room)


def initiate_chat(world: WorldState, initiator: str, target: str, utterance: str) -> Optional[str]:
    """发起对话；成功时返回新会话 ID，失败时返回 None（失败原因见 dispatch 的结果）"""
    outcome = dispatch(world, initiator, f"initiating_chat {target}", utterance)
    return world.agents[initiator].conversation if outcome.success else None


def join_chat(world: WorldState, agent_name: str, session_id: str, utterance: Optional[str] = None) -> ActionOutcome:
    return dispatch(world, agent_name, f"join_chat {session_id}", utterance)


def stay_chat(world: WorldState, agent_name: str, utterance: str) -> ActionOutcome:
    return dispatch(world, agent_name, "stay_chat", utterance)


def end_chat(world: WorldState, agent_name: str) -> ActionOutcome:
    return dispatch(world, agent_name, "end_chat")
