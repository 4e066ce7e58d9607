"""
文本格式化工具：命令规范化、生成结果解析、观察/可执行列表/得分表的文本渲染
"""

import re
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence


def snake_case(name):
    """
    将驼峰类型名转换为下划线形式，例如 CoffeeMachine -> coffee_machine

    参数:
    - name: 类型名

    返回:
    - 下划线形式的小写名称
    """
    return re.sub(r'(?<!^)(?=[A-Z])', '_', name).lower()


def normalize_command(text):
    """
    规范化模型给出的命令文本

    去掉编号前缀（"3." / "[3]"）、反引号、引号、结尾句号，并合并空白。
    """
    if not text:
        return ""
    text = text.strip().splitlines()[0]
    text = re.sub(r'^\s*(\[\d+\]|\d+[.)])\s*', '', text)
    text = text.strip().strip('`"\'').strip()
    text = re.sub(r'[.。]$', '', text)
    return re.sub(r'\s+', ' ', text).strip()


@dataclass
class ParsedResponse:
    reason: str
    action: str
    say: Optional[str] = None


def parse_action_response(text, admissible: Optional[Sequence[str]] = None):
    """
    解析 "REASON: ... ACTION: <command> [SAY: ...]" 格式的生成结果

    参数:
    - text: 生成服务返回的文本
    - admissible: 可执行命令列表；若动作只是一个编号，则映射到对应命令

    返回:
    - ParsedResponse，无法解析出动作时 action 为空字符串
    """
    if not text:
        return ParsedResponse("", "")
    reason_match = re.search(r'REASON:\s*(.*?)(?=\b(?:ACTION|SAY):|\Z)', text, re.S | re.I)
    action_match = re.search(r'ACTION:\s*(.+)', text, re.I)
    say_match = re.search(r'SAY:\s*(.+)', text, re.I)

    action = normalize_command(action_match.group(1)) if action_match else ""
    if admissible and re.fullmatch(r'\d+', action):
        index = int(action) - 1
        action = admissible[index] if 0 <= index < len(admissible) else action
    return ParsedResponse(
        reason=reason_match.group(1).strip() if reason_match else "",
        action=action,
        say=say_match.group(1).strip().strip('"') if say_match else None,
    )


def format_admissible(commands: Sequence[str]):
    """将可执行命令渲染为编号列表"""
    return "\n".join(f"{i}. {command}" for i, command in enumerate(commands, 1))


def _format_state(state: Dict):
    parts = []
    for key in sorted(state):
        value = state[key]
        if value is None:
            continue
        parts.append(f"{key}={str(value).lower() if isinstance(value, bool) else value}")
    return ", ".join(parts)


def format_observation(observation):
    """
    将观察渲染为提示词中的文本段落

    参数:
    - observation: agent_mind.Observation

    返回:
    - 多行文本
    """
    lines = [f"Time: minute {observation.tick}. You are at {observation.location}."]
    exits = ", ".join(f"{name} ({distance} min)" for name, distance in sorted(observation.exits.items()))
    lines.append(f"Exits: {exits or 'none'}")
    lines.append("You see:")
    if not observation.objects:
        lines.append("  nothing")
    for item in observation.objects:
        where = f" on/in {item['receptacle']}" if item.get("receptacle") else ""
        busy = f" [in use by {item['in_use_by']}]" if item.get("in_use_by") else ""
        lines.append(f"  - {item['name']} ({item['otype']}){where}: {_format_state(item['state'])}{busy}")
    if observation.agents:
        lines.append("People here:")
        for peer in observation.agents:
            last = peer.get("last_action") or "nothing yet"
            lines.append(f"  - {peer['name']} ({peer['role']}), last action: {last}")
    for session in observation.sessions:
        lines.append(f"Ongoing conversation {session['id']} with {', '.join(session['participants'])}")
        for tick, speaker, text in session.get("recent", []):
            lines.append(f"    [{tick}] {speaker}: {text}")
    held = ", ".join(item["name"] for item in observation.inventory) or "nothing"
    lines.append(f"You are holding: {held}")
    needs = ", ".join(f"{name}={value:.1f}" for name, value in observation.needs.items())
    lines.append(f"Your needs: {needs}")
    return "\n".join(lines)


def format_score_table(report: Dict, label: str = "session"):
    """
    渲染与基准对照表同形的得分表：每个任务一列，单元格为 IS/AS

    参数:
    - report: evaluation.score_report 的结果
    - label: 行标签

    返回:
    - 文本表格
    """
    task_ids = list(report["tasks"])
    header = ["policy"] + task_ids + ["Avg"]
    cells = [label]
    for task_id in task_ids:
        scores = report["tasks"][task_id]
        cells.append(f"{scores['IS']:.1f}/{scores['AS']:.1f}")
    cells.append(f"{report['average']['IS']:.1f}/{report['average']['AS']:.1f}")
    widths = [max(len(h), len(c)) for h, c in zip(header, cells)]
    row = lambda values: " | ".join(v.ljust(w) for v, w in zip(values, widths))
    return "\n".join([row(header), "-+-".join("-" * w for w in widths), row(cells)])
