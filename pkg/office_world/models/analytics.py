"""
会话分析：从事件日志生成占用、活动时间、健康状态、非最佳状态分布和设施压力报告
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence

import pandas as pd

from office_world.config import EVENT_SCHEMA, EVENT_SCHEMA_VERSION
from office_world.models.catalog import CATALOG
from office_world.utils.logger import get_logger

logger = get_logger("Analytics")

CATEGORIES = ("role_work", "movement", "social", "physiological", "other")
HYDRATION_VERBS = ("drink", "refill_supplies")

# CSV 列顺序固定
OCCUPANCY_COLUMNS = ["agent", "location", "ticks", "fraction"]
ACTIVITY_COLUMNS = ["agent", "category", "ticks", "fraction"]
WELLBEING_COLUMNS = ["agent", "ticks", "optimal_ticks", "optimal_fraction"]
SUBOPTIMAL_COLUMNS = ["agent", "need", "ticks", "share"]
RESOURCE_STRESS_COLUMNS = ["agents", "X", "Y", "Z"]

ALL = "ALL"


@dataclass
class Report:
    kind: str
    table: pd.DataFrame
    diagnostics: List[str] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)


def _round(value: float) -> float:
    return round(float(value), 6)


def _of_kind(events: Iterable[Dict[str, Any]], kind: str) -> List[Dict[str, Any]]:
    return [e for e in events if e.get("kind") == kind]


def _header(events: Sequence[Dict[str, Any]]) -> Optional[Dict[str, Any]]:
    headers = _of_kind(events, "header")
    return headers[0] if headers else None


def log_diagnostics(events: Sequence[Dict[str, Any]]) -> List[str]:
    """
    检查日志完整性：表头、会话结束记录、动作与结果是否成对、每个时间步的需求采样

    返回:
    - 诊断信息列表
    """
    diagnostics = []
    header = _header(events)
    if header is None:
        diagnostics.append("log has no header line")
    elif header.get("schema") != EVENT_SCHEMA or header.get("version") != EVENT_SCHEMA_VERSION:
        diagnostics.append(f"unexpected log schema {header.get('schema')} v{header.get('version')}")
    ends = _of_kind(events, "session_end")
    if not ends:
        diagnostics.append("log is truncated: no session_end record")
    elif not ends[-1].get("complete", False):
        diagnostics.append(f"session incomplete: {ends[-1].get('reason', 'unknown reason')}")

    actions = len(_of_kind(events, "action"))
    outcomes = len(_of_kind(events, "outcome"))
    if actions != outcomes:
        diagnostics.append(f"{actions} action records but {outcomes} outcome records")

    samples = _of_kind(events, "needs")
    if header is not None and ends and samples:
        expected = ends[-1].get("tick", 0)
        per_agent = pd.Series([s["agent"] for s in samples]).value_counts()
        for agent in header.get("agents", []):
            if per_agent.get(agent, 0) < expected:
                diagnostics.append(f"{agent} has {per_agent.get(agent, 0)} needs samples for {expected} ticks")
    return diagnostics


def _samples_frame(events: Sequence[Dict[str, Any]]) -> pd.DataFrame:
    samples = _of_kind(events, "needs")
    if not samples:
        return pd.DataFrame(columns=["tick", "agent", "location", "activity", "unmet"])
    return pd.DataFrame([
        {"tick": s["tick"], "agent": s["agent"], "location": s["location"], "activity": s.get("activity", "wait"),
         "unmet": list(s.get("unmet", []))}
        for s in samples
    ])


def _agents(events: Sequence[Dict[str, Any]], frame: pd.DataFrame) -> List[str]:
    header = _header(events)
    if header is not None:
        return list(header.get("agents", []))
    return sorted(frame["agent"].unique()) if len(frame) else []


# ---------------------------------------------------------------- 占用


def occupancy_report(events: Sequence[Dict[str, Any]]) -> Report:
    """
    每个智能体在各地点停留的时间比例（路途时间计入目的地）

    返回:
    - Report，表格列 agent, location, ticks, fraction
    """
    frame = _samples_frame(events)
    rows = []
    for agent in _agents(events, frame):
        mine = frame[frame["agent"] == agent]
        total = len(mine)
        for location, ticks in sorted(mine.groupby("location").size().items()):
            rows.append({"agent": agent, "location": location, "ticks": int(ticks),
                         "fraction": _round(ticks / total)})
    table = pd.DataFrame(rows, columns=OCCUPANCY_COLUMNS)
    return Report("occupancy", table, log_diagnostics(events))


def location_share(report: Report, location: str) -> float:
    """所有智能体合计在某地点的时间比例"""
    table = report.table
    if table.empty:
        return 0.0
    return float(table.loc[table["location"] == location, "ticks"].sum() / table["ticks"].sum())


# ---------------------------------------------------------------- 活动


def activity_category(verb: str) -> Optional[str]:
    """动作所属类别；wait 归为 other，未知动作返回 None"""
    if verb == "wait":
        return "other"
    spec = CATALOG.get(verb)
    return spec.category if spec else None


def activity_report(events: Sequence[Dict[str, Any]]) -> Report:
    """
    每个智能体的时间在五类活动上的分布（每个时间步恰好归入一类）

    返回:
    - Report，表格列 agent, category, ticks, fraction；每个智能体五行
    """
    frame = _samples_frame(events)
    diagnostics = log_diagnostics(events)
    unknown = set()
    rows = []
    for agent in _agents(events, frame):
        mine = frame[frame["agent"] == agent]
        counts = {category: 0 for category in CATEGORIES}
        for verb in mine["activity"]:
            category = activity_category(verb)
            if category is None:
                unknown.add(verb)
                category = "other"
            counts[category] += 1
        total = len(mine)
        for category in CATEGORIES:
            fraction = counts[category] / total if total else 0.0
            rows.append({"agent": agent, "category": category, "ticks": counts[category],
                         "fraction": _round(fraction)})
    for verb in sorted(unknown):
        logger.warning(f"Unknown verb '{verb}' in event log counted as other")
        diagnostics.append(f"unknown verb {verb} counted as other")
    return Report("activity", pd.DataFrame(rows, columns=ACTIVITY_COLUMNS), diagnostics)


def category_share(report: Report, category: str) -> float:
    table = report.table
    if table.empty:
        return 0.0
    return float(table.loc[table["category"] == category, "ticks"].sum() / table["ticks"].sum())


# ---------------------------------------------------------------- 健康状态


def wellbeing_report(events: Sequence[Dict[str, Any]]) -> Report:
    """
    每个智能体以及全体处于最佳状态（没有未满足需求）的时间比例

    返回:
    - Report，表格列 agent, ticks, optimal_ticks, optimal_fraction；最后一行 agent 为 ALL
    """
    frame = _samples_frame(events)
    rows = []
    total_ticks = total_optimal = 0
    for agent in _agents(events, frame):
        mine = frame[frame["agent"] == agent]
        ticks = len(mine)
        optimal = int(sum(1 for unmet in mine["unmet"] if not unmet))
        total_ticks += ticks
        total_optimal += optimal
        rows.append({"agent": agent, "ticks": ticks, "optimal_ticks": optimal,
                     "optimal_fraction": _round(optimal / ticks) if ticks else 0.0})
    rows.append({"agent": ALL, "ticks": total_ticks, "optimal_ticks": total_optimal,
                 "optimal_fraction": _round(total_optimal / total_ticks) if total_ticks else 0.0})
    diagnostics = log_diagnostics(events)
    if frame.empty:
        diagnostics.append("no needs samples in log")
    return Report("wellbeing", pd.DataFrame(rows, columns=WELLBEING_COLUMNS), diagnostics)


def suboptimal_report(events: Sequence[Dict[str, Any]]) -> Report:
    """
    未满足需求的时间步按需求名称的分布；同一时间步的多个未满足需求分别计数

    返回:
    - Report，表格列 agent, need, ticks, share；ALL 行汇总全体
    """
    frame = _samples_frame(events)
    exploded = frame.explode("unmet").dropna(subset=["unmet"]) if not frame.empty else frame
    rows = []

    def add_rows(label: str, part: pd.DataFrame) -> None:
        counts = part.groupby("unmet").size() if len(part) else pd.Series(dtype=int)
        total = int(counts.sum())
        for need, ticks in sorted(counts.items()):
            rows.append({"agent": label, "need": need, "ticks": int(ticks), "share": _round(ticks / total)})

    for agent in _agents(events, frame):
        add_rows(agent, exploded[exploded["agent"] == agent] if len(exploded) else exploded)
    add_rows(ALL, exploded)
    return Report("suboptimal", pd.DataFrame(rows, columns=SUBOPTIMAL_COLUMNS), log_diagnostics(events))


# ---------------------------------------------------------------- 设施压力


def _first_hydration(events: Sequence[Dict[str, Any]]) -> Dict[str, Dict[str, Any]]:
    """每个智能体第一次成功补水的时间、饮品和结束时间"""
    pending: Dict[str, Dict[str, Any]] = {}
    first: Dict[str, Dict[str, Any]] = {}
    for event in events:
        agent = event.get("agent")
        if event.get("kind") == "action":
            pending[agent] = event
        elif event.get("kind") == "outcome" and agent in pending:
            action = pending.pop(agent)
            if agent in first or not event.get("success") or action.get("verb") not in HYDRATION_VERBS:
                continue
            beverage = "water"
            if action["verb"] == "drink":
                beverage = next((old for entity, attribute, old, _ in event.get("diff", [])
                                 if attribute == "state.contains" and old), None)
            first[agent] = {
                "tick": action["tick"],
                "verb": action["verb"],
                "beverage": beverage,
                "done": action["tick"] + event.get("duration", 1),
            }
    return first


def resource_stress_report(events: Sequence[Dict[str, Any]]) -> Report:
    """
    补水实验的设施压力：首次补水喝水的人数 X、喝咖啡的人数 Y，以及最后一名智能体首次成功补水的时间步 Z（模拟分钟）

    返回:
    - Report，表格列 agents, X, Y, Z；有人从未补水时 Z 为 "incomplete"
    - summary["per_agent"] 中的 done 为首次补水动作结束的时间步
    """
    frame = _samples_frame(events)
    agents = _agents(events, frame)
    first = _first_hydration(events)
    x = sum(1 for a in agents if a in first and first[a]["verb"] == "drink" and first[a]["beverage"] == "water")
    y = sum(1 for a in agents if a in first and first[a]["verb"] == "drink" and first[a]["beverage"] == "coffee")
    missing = [a for a in agents if a not in first]
    diagnostics = log_diagnostics(events)
    if not agents:
        z: Any = 0
    elif missing:
        z = "incomplete"
        diagnostics.append(f"agents that never hydrated: {', '.join(missing)}")
    else:
        z = max(first[a]["tick"] for a in agents)
    table = pd.DataFrame([{"agents": len(agents), "X": x, "Y": y, "Z": z}], columns=RESOURCE_STRESS_COLUMNS)
    summary = {"X": x, "Y": y, "Z": z, "per_agent": {a: first.get(a) for a in agents}}
    return Report("resource_stress", table, diagnostics, summary)


REPORTS = {
    "occupancy": occupancy_report,
    "activity": activity_report,
    "wellbeing": wellbeing_report,
    "suboptimal": suboptimal_report,
    "resource_stress": resource_stress_report,
}


def build_report(kind: str, events: Sequence[Dict[str, Any]]) -> Report:
    if kind not in REPORTS:
        raise ValueError(f"unknown report kind {kind}")
    return REPORTS[kind](events)
