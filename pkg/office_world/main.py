"""
办公楼多智能体仿真主程序：会话运行器与命令行入口
"""

import argparse
import concurrent.futures
import json
import os
import sys
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence

from tqdm import tqdm

from office_world.config import (
    DEFAULT_SEED,
    DEFAULT_TEMPERATURE,
    MAX_POLICY_FAILURES,
    MAX_WORKERS,
    PLAYBOOK_DIR,
    REPORT_KINDS,
    SIMULATION_DURATION_MIN,
    TASK_DURATION_MIN,
)
from office_world.models.agent_mind import (
    Decision,
    MemoryStore,
    PolicyContext,
    memory_digest,
    perceive,
    plan,
    prioritize,
    profile_of,
    remember_outcome,
    update_memory,
)
from office_world.models.analytics import build_report
from office_world.models.catalog import catalog_reference
from office_world.models.engine import ActionEngine, ActionOutcome
from office_world.models.errors import ContractViolation, PolicyError, SessionAborted, WorldSimError
from office_world.models.evaluation import (
    GoalSpec,
    event_requests_from_goals,
    goals_satisfied,
    load_goals,
    score_report,
    validate_goals,
)
from office_world.models.llm_client import GenerationClient, RecordedGenerationClient, RecordingClient
from office_world.models.needs import classify, tick_decay
from office_world.models.policies import (
    CHAT_VERBS,
    WAIT,
    GenerationPolicy,
    Playbook,
    Policy,
    RandomPolicy,
    ScriptedPolicy,
)
from office_world.models.scenario import (
    ScenarioConfig,
    bundled_path,
    instantiate,
    load_scenario,
    needs_model_for,
    serialize,
    validate,
)
from office_world.models.world import WorldState, dumps_snapshot, restore, snapshot
from office_world.utils.data_exporter import (
    DataExporter,
    EventLogWriter,
    header_record,
    read_event_log,
    write_json,
    write_text,
)
from office_world.utils.logger import get_logger
from office_world.utils.text_formatter import format_score_table, normalize_command

# 获取日志记录器
logger = get_logger("SessionRunner")


@dataclass
class SessionConfig:
    mode: str = "task"  # task | simulation
    duration_min: Optional[int] = None
    policy: str = "scripted"  # generation | scripted | random
    model_endpoint: Optional[str] = None
    model: Optional[str] = None
    temperature: float = DEFAULT_TEMPERATURE
    seed: Optional[int] = None
    no_tp: bool = False
    no_st: bool = False
    out_dir: Optional[str] = None
    playbook: Optional[str] = None
    replay: Optional[str] = None
    record_responses: Optional[str] = None
    max_workers: int = MAX_WORKERS
    show_progress: bool = False

    def __post_init__(self):
        if self.mode not in ("task", "simulation"):
            raise ContractViolation(f"unknown session mode {self.mode}")
        if self.policy not in ("generation", "scripted", "random"):
            raise ContractViolation(f"unknown policy {self.policy}")
        if self.duration_min is None:
            self.duration_min = TASK_DURATION_MIN if self.mode == "task" else SIMULATION_DURATION_MIN
        if self.duration_min < 0:
            raise ContractViolation(f"duration must not be negative, got {self.duration_min}")
        if self.max_workers < 1:
            raise ContractViolation("max_workers must be at least 1")

    def echo(self) -> Dict[str, Any]:
        data = asdict(self)
        data.pop("out_dir")
        data.pop("show_progress")
        return data


@dataclass
class SessionResult:
    world: WorldState
    events: List[Dict[str, Any]]
    score: Optional[Dict[str, Any]] = None
    complete: bool = True
    reason: str = "duration reached"
    ticks: int = 0
    outputs: Dict[str, str] = field(default_factory=dict)


def build_policy(config: SessionConfig, seed: int) -> Policy:
    """
    根据会话配置构建决策策略

    参数:
    - config: 会话配置
    - seed: 会话种子（随机策略使用）

    返回:
    - 策略对象
    """
    if config.policy == "random":
        return RandomPolicy(seed)
    if config.policy == "scripted":
        return ScriptedPolicy(Playbook.load(config.playbook) if config.playbook else None)
    if config.replay:
        client = RecordedGenerationClient.from_file(config.replay)
    else:
        client = GenerationClient(config.model_endpoint, config.model, config.temperature)
    if config.record_responses:
        client = RecordingClient(client, config.record_responses)
    return GenerationPolicy(client, use_reminder=not config.no_tp, use_memory=not config.no_st)


class SessionRunner:
    """会话运行器：按时间步推进世界，调度智能体决策并记录事件"""

    def __init__(self, config: SessionConfig, scenario: ScenarioConfig, goals: Optional[GoalSpec] = None,
                 policy: Optional[Policy] = None):
        """
        初始化会话

        参数:
        - config: 会话配置
        - scenario: 已解析的场景
        - goals: 任务目标（任务模式必需，仿真模式必须为空）
        - policy: 决策策略，None 时按配置构建
        """
        if config.mode == "task" and goals is None:
            raise ContractViolation("task-solving sessions need a goal specification")
        if config.mode == "simulation" and goals is not None:
            raise ContractViolation("simulation sessions do not take goals")
        self.config = config
        self.scenario = scenario
        self.goals = goals
        self.world = instantiate(scenario)
        self.seed = config.seed if config.seed is not None else scenario.setting("seed", DEFAULT_SEED)
        self.world.seed = self.seed
        if goals is not None:
            validate_goals(goals, self.world)
            for request in event_requests_from_goals(goals):
                if request not in self.world.event_requests:
                    self.world.event_requests.append(request)

        self.needs_model = needs_model_for(scenario)
        self.engine = ActionEngine(self.needs_model)
        self.policy = policy or build_policy(config, self.seed)
        self.order = [agent.name for agent in scenario.agents]
        self.memories = {name: MemoryStore() for name in self.order}
        self.busy_until = {name: 0 for name in self.order}
        self.activity = {name: WAIT for name in self.order}
        self.failures = {name: 0 for name in self.order}
        self.raw_tried: set = set()
        self.events: List[Dict[str, Any]] = []
        self._writer: Optional[EventLogWriter] = None

    # ------------------------------------------------------------ 事件

    def _emit(self, record: Dict[str, Any]) -> None:
        self.events.append(record)
        if self._writer is not None:
            self._writer.write(record)

    # ------------------------------------------------------------ 主循环

    def run(self) -> SessionResult:
        """
        运行会话直到时长用完、任务全部完成（任务模式）或策略持续失败

        返回:
        - SessionResult
        """
        duration = self.config.duration_min
        if self.config.out_dir:
            self._writer = EventLogWriter(os.path.join(self.config.out_dir, "events.jsonl"))
        self._emit(header_record(agents=self.order, mode=self.config.mode, duration=duration, seed=self.seed,
                                 policy=self.config.policy))

        logger.info(f"Starting {self.config.mode} session: {len(self.order)} agents, {duration} minutes, "
                    f"policy={self.config.policy}, seed={self.seed}")
        complete, reason, elapsed = True, "duration reached", 0
        try:
            for tick in tqdm(range(duration), desc="Simulating", unit="tick", disable=not self.config.show_progress):
                aborted = self._step(tick)
                elapsed = tick + 1
                if aborted:
                    complete, reason = False, aborted
                    logger.error(f"Session aborted at tick {tick}: {aborted}")
                    break
                if self.goals is not None and goals_satisfied(self.world, self.goals):
                    self._emit({"kind": "early_exit", "tick": elapsed})
                    reason = "all goals satisfied"
                    logger.info(f"All goals satisfied after {elapsed} minutes; ending early")
                    break
            self.world.tick = elapsed
            self._emit({"kind": "session_end", "tick": elapsed, "complete": complete, "reason": reason})
        finally:
            if self._writer is not None:
                self._writer.close()

        if isinstance(getattr(self.policy, "client", None), RecordingClient):
            self.policy.client.save()
        score = score_report(self.world, self.goals) if self.goals is not None else None
        result = SessionResult(self.world, self.events, score, complete, reason, elapsed)
        if self.config.out_dir:
            result.outputs = self._write_outputs(result)
        logger.info(f"Session finished after {elapsed} minutes ({reason})")
        return result

    def _step(self, tick: int) -> Optional[str]:
        """推进一个时间步；策略持续失败时返回中止原因"""
        world = self.world
        world.tick = tick
        world.release_expired()
        for name in self.order:
            agent = world.agents[name]
            agent.needs = tick_decay(agent.needs, self.needs_model, 1)

        idle = [name for name in self.order if self.busy_until[name] <= tick]
        view = world.copy()
        contexts = [self._context(view, name, tick) for name in idle]
        decisions = self._decide_all(contexts)

        aborted = None
        for context, decision in zip(contexts, decisions):
            name = context.agent
            if isinstance(decision, Exception):
                self.failures[name] += 1
                logger.warning(f"Policy failure for {name} at tick {tick} "
                               f"({self.failures[name]}/{MAX_POLICY_FAILURES}): {decision}")
                if self.failures[name] >= MAX_POLICY_FAILURES:
                    aborted = f"policy failed {MAX_POLICY_FAILURES} times in a row for {name}"
                    break
                decision = Decision(WAIT, reason="policy failure")
            else:
                self.failures[name] = 0
            self._apply(context, decision, tick)

        for name in self.order:
            agent = world.agents[name]
            self._emit({
                "kind": "needs",
                "tick": tick,
                "agent": name,
                "location": agent.location,
                "needs": agent.needs.as_dict(),
                "unmet": sorted(classify(agent.needs, self.needs_model).unmet),
                "activity": self.activity[name] if self.busy_until[name] > tick else WAIT,
            })
        return aborted

    def _context(self, view: WorldState, name: str, tick: int) -> PolicyContext:
        track_tasks = self.goals if self.config.mode == "task" else None
        agent = view.agents[name]
        profile = profile_of(agent)
        memory = self.memories[name]
        observation = perceive(view, name)
        update_memory(memory, observation, track_tasks, agent.knowledge)
        reminder = "" if self.config.no_tp else prioritize(memory, profile, track_tasks)
        return PolicyContext(
            agent=name,
            profile=profile,
            observation=observation,
            digest=memory_digest(memory, tick, include_map=not self.config.no_st,
                                 include_progress=not self.config.no_st and track_tasks is not None),
            admissible=self.engine.admissible_actions(view, name),
            tick=tick,
            world=view,
            tasks=track_tasks,
            reminder=reminder,
            objective=plan(memory, profile, track_tasks, self.needs_model),
            agent_index=self.order.index(name),
            memory=memory,
        )

    def _decide_all(self, contexts: Sequence[PolicyContext]) -> List[Any]:
        """并发查询各智能体的策略，结果按规范顺序返回"""

        def decide(context: PolicyContext) -> Any:
            try:
                return self.policy.decide(context)
            except PolicyError as e:
                return e

        if len(contexts) <= 1 or self.config.max_workers == 1:
            return [decide(c) for c in contexts]
        with concurrent.futures.ThreadPoolExecutor(max_workers=self.config.max_workers) as executor:
            return list(executor.map(decide, contexts))

    def _apply(self, context: PolicyContext, decision: Decision, tick: int) -> ActionOutcome:
        name = context.agent
        command = normalize_command(decision.command) or WAIT
        listed = command in context.admissible
        coerced = False
        if command != WAIT and not listed:
            key = (name, command)
            if decision.learn_from_failure and key not in self.raw_tried:
                self.raw_tried.add(key)
            else:
                logger.warning(f"{name} proposed non-admissible '{command}' at tick {tick}; waiting instead")
                command, coerced = WAIT, True

        tokens = command.split()
        self._emit({
            "kind": "action",
            "tick": tick,
            "agent": name,
            "verb": tokens[0],
            "args": tokens[1:],
            "command": command,
            "admissible": listed,
            "learn_from_failure": command != WAIT and not listed,
            "coerced": coerced,
        })
        if command == WAIT:
            outcome = ActionOutcome(True, f"{name} waited.", 1, [], WAIT, ())
        else:
            outcome = self.engine.dispatch(self.world, name, command, decision.utterance)
        self._emit({
            "kind": "outcome",
            "tick": tick,
            "agent": name,
            "success": outcome.success,
            **{k: v for k, v in outcome.to_dict().items() if k != "success"},
        })
        if outcome.success and tokens[0] in CHAT_VERBS and decision.utterance:
            self._emit({"kind": "utterance", "tick": tick, "agent": name,
                        "session": self.world.agents[name].conversation, "text": decision.utterance})

        self.policy.notify(name, command, outcome.success)
        remember_outcome(self.memories[name], tick, command, outcome.success, outcome.message)
        self.world.last_actions[name] = command
        self.busy_until[name] = tick + outcome.duration_ticks
        self.activity[name] = tokens[0]
        return outcome

    # ------------------------------------------------------------ 输出

    def _write_outputs(self, result: SessionResult) -> Dict[str, str]:
        out = self.config.out_dir
        outputs = {
            "scenario": write_text(os.path.join(out, "scenario.json"), serialize(self.scenario)),
            "config": write_json(os.path.join(out, "config.json"), self.config.echo()),
            "events": os.path.join(out, "events.jsonl"),
            "final_snapshot": write_text(os.path.join(out, "final_snapshot.json"),
                                         dumps_snapshot(snapshot(result.world))),
        }
        if result.score is not None:
            outputs["score_report"] = write_json(os.path.join(out, "score_report.json"), result.score)
        exporter = DataExporter(out)
        for kind in REPORT_KINDS:
            if kind == "resource_stress" and self.config.mode == "task":
                continue
            outputs[kind] = exporter.export_report(build_report(kind, result.events), "csv")
        return outputs


def run_session(config: SessionConfig, scenario: ScenarioConfig, goals: Optional[GoalSpec] = None,
                policy: Optional[Policy] = None) -> SessionResult:
    return SessionRunner(config, scenario, goals, policy).run()


# ---------------------------------------------------------------- 命令行


def _resolve(path: str, directory: Optional[str] = None) -> str:
    """允许直接使用内置文件名（如 office_event.json）；directory 指定时在该目录下查找"""
    if os.path.exists(path):
        return path
    name = path if path.endswith(".json") else f"{path}.json"
    candidate = os.path.join(directory, name) if directory else bundled_path(path)
    return candidate if os.path.exists(candidate) else path


def parse_args(argv: Optional[Sequence[str]] = None):
    """解析命令行参数"""
    parser = argparse.ArgumentParser(description="Office World multi-agent simulator")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Run a task-solving or simulation session")
    run.add_argument("--scenario", type=str, required=True, help="Scenario JSON file (or bundled name)")
    run.add_argument("--goals", type=str, help="Goal JSON file; required in task mode")
    run.add_argument("--mode", choices=["task", "simulation"], help="Session mode (default: task if goals given)")
    run.add_argument("--policy", choices=["generation", "scripted", "random"], default="scripted")
    run.add_argument("--model-endpoint", type=str, help="Generation service endpoint")
    run.add_argument("--model", type=str, help="Model ID to use")
    run.add_argument("--temperature", type=float, default=DEFAULT_TEMPERATURE)
    run.add_argument("--seed", type=int, help="Session seed (default: scenario seed)")
    run.add_argument("--duration-min", type=int, help="Simulated minutes")
    run.add_argument("--no-tp", action="store_true", help="Disable task prioritization reminders")
    run.add_argument("--no-st", action="store_true", help="Disable semantic map and task progress in prompts")
    run.add_argument("--out", type=str, required=True, help="Output directory")
    run.add_argument("--playbook", type=str, help="Playbook JSON for the scripted policy")
    run.add_argument("--replay", type=str, help="Replay recorded generation replies from this file")
    run.add_argument("--record-responses", type=str, help="Record generation replies to this file")
    run.add_argument("--max-workers", type=int, default=MAX_WORKERS, help="Concurrent policy queries per tick")

    check = commands.add_parser("validate", help="Lint a scenario file")
    check.add_argument("--scenario", type=str, required=True)
    check.add_argument("--goals", type=str)

    score = commands.add_parser("score", help="Score a saved snapshot against goals")
    score.add_argument("--snapshot", type=str, required=True)
    score.add_argument("--goals", type=str, required=True)
    score.add_argument("--text", action="store_true", help="Print an IS/AS table instead of JSON")

    report = commands.add_parser("report", help="Build analytics reports from an event log")
    report.add_argument("--log", type=str, required=True)
    report.add_argument("--kind", choices=list(REPORT_KINDS) + ["all"], required=True)
    report.add_argument("--format", choices=list(DataExporter.FORMATS), default="csv")
    report.add_argument("--out", type=str, default=".", help="Output directory")

    actions = commands.add_parser("actions", help="Dump the action catalog")
    actions.add_argument("--out", type=str, help="Write to this file instead of stdout")

    args = parser.parse_args(argv)
    if args.command == "run":
        if args.mode is None:
            args.mode = "task" if args.goals else "simulation"
        if args.mode == "simulation" and args.goals:
            parser.error("--goals cannot be used in simulation mode")
        if args.mode == "task" and not args.goals:
            parser.error("task mode requires --goals")
    return args


def _cmd_run(args) -> int:
    config = SessionConfig(
        mode=args.mode,
        duration_min=args.duration_min,
        policy=args.policy,
        model_endpoint=args.model_endpoint,
        model=args.model,
        temperature=args.temperature,
        seed=args.seed,
        no_tp=args.no_tp,
        no_st=args.no_st,
        out_dir=args.out,
        playbook=_resolve(args.playbook, PLAYBOOK_DIR) if args.playbook else None,
        replay=_resolve(args.replay) if args.replay else None,
        record_responses=args.record_responses,
        max_workers=args.max_workers,
        show_progress=True,
    )
    scenario = load_scenario(_resolve(args.scenario))
    goals = load_goals(_resolve(args.goals)) if args.goals else None
    result = run_session(config, scenario, goals)
    if result.score is not None:
        print(format_score_table(result.score, config.policy))
    print(f"\nResults written to: {args.out}")
    if not result.complete:
        raise SessionAborted(result.reason, result.ticks)
    return 0


def _cmd_validate(args) -> int:
    scenario = load_scenario(_resolve(args.scenario))
    goals = load_goals(_resolve(args.goals)) if args.goals else None
    diagnostics = validate(scenario, goals)
    if goals is not None and not any(d.level == "error" for d in diagnostics):
        validate_goals(goals, instantiate(scenario))
    for diagnostic in diagnostics:
        print(diagnostic)
    errors = [d for d in diagnostics if d.level == "error"]
    if not diagnostics:
        print("scenario is valid")
    return 1 if errors else 0


def _cmd_score(args) -> int:
    with open(args.snapshot, "r", encoding="utf-8") as f:
        world = restore(json.load(f))
    goals = load_goals(_resolve(args.goals))
    report = score_report(world, goals)
    if args.text:
        print(format_score_table(report, os.path.basename(args.snapshot)))
    else:
        print(json.dumps(report, indent=2, sort_keys=True))
    return 0


def _cmd_report(args) -> int:
    events = read_event_log(args.log)
    kinds = REPORT_KINDS if args.kind == "all" else (args.kind,)
    exporter = DataExporter(args.out)
    for kind in kinds:
        report = build_report(kind, events)
        for message in report.diagnostics:
            print(f"{kind}: {message}", file=sys.stderr)
        print(exporter.export_report(report, args.format))
    return 0


def _cmd_actions(args) -> int:
    text = json.dumps(catalog_reference(), indent=2, ensure_ascii=False) + "\n"
    if args.out:
        write_text(args.out, text)
        print(f"Action catalog written to: {args.out}")
    else:
        print(text, end="")
    return 0


COMMANDS = {
    "run": _cmd_run,
    "validate": _cmd_validate,
    "score": _cmd_score,
    "report": _cmd_report,
    "actions": _cmd_actions,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """主函数"""
    args = parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (WorldSimError, OSError) as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
