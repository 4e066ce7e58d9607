"""
测试文本格式化：命令规范化、生成结果解析、观察与得分表渲染
"""

from office_world.models.agent_mind import perceive
from office_world.utils.logger import get_logger
from office_world.utils.text_formatter import (
    format_admissible,
    format_observation,
    format_score_table,
    normalize_command,
    parse_action_response,
    snake_case,
)

logger = get_logger("FormatterTest")

ADMISSIBLE = ["look_around", "drink Cup_1", "go_to corridor"]


def test_normalize_command():
    test_cases = [
        {"name": "编号前缀", "input": "3. go_to corridor", "expected": "go_to corridor"},
        {"name": "方括号编号和反引号", "input": "[2] `pick_up Cup_1`", "expected": "pick_up Cup_1"},
        {"name": "引号和句号", "input": '"turn_on Computer_1."', "expected": "turn_on Computer_1"},
        {"name": "多余空白和多行", "input": "go_to    corridor\nbecause it is close", "expected": "go_to corridor"},
        {"name": "空输入", "input": "", "expected": ""},
    ]
    for case in test_cases:
        result = normalize_command(case["input"])
        logger.info(f"{case['name']}: {case['input']!r} -> {result!r}")
        assert result == case["expected"], case["name"]


def test_parse_action_response():
    parsed = parse_action_response("REASON: I am thirsty.\nACTION: 2\nSAY: \"Cheers\"", ADMISSIBLE)
    assert parsed.reason == "I am thirsty."
    assert parsed.action == "drink Cup_1"
    assert parsed.say == "Cheers"

    test_cases = [
        {"name": "编号越界", "text": "ACTION: 9", "action": "9"},
        {"name": "小写标签", "text": "reason: nothing to do\naction: look_around", "action": "look_around"},
        {"name": "没有动作", "text": "I would rather not answer.", "action": ""},
        {"name": "空文本", "text": "", "action": ""},
    ]
    for case in test_cases:
        parsed = parse_action_response(case["text"], ADMISSIBLE)
        assert parsed.action == case["action"], case["name"]
        assert parsed.say is None


def test_small_renderers():
    assert snake_case("CoffeeMachine") == "coffee_machine"
    assert snake_case("Computer") == "computer"
    assert format_admissible(ADMISSIBLE[:2]) == "1. look_around\n2. drink Cup_1"


def test_format_observation(kitchen_world):
    text = format_observation(perceive(kitchen_world, "irene"))
    logger.info(text)
    lines = text.splitlines()
    assert lines[0] == "Time: minute 0. You are at kitchen."
    assert "Exits: meeting_room1 (1 min)" in lines
    assert "  - cup_1 (Cup) on/in Countertop1: is_clean=false, temperature=20" in lines
    assert "You are holding: nothing" in lines
    assert not any(line.startswith("People here") for line in lines)


def test_format_score_table():
    report = {
        "tick": 60,
        "tasks": {"T1": {"IS": 100.0, "AS": 100.0}, "T4": {"IS": 0.0, "AS": 50.0}},
        "average": {"IS": 50.0, "AS": 75.0},
    }
    lines = format_score_table(report, label="solver").splitlines()
    assert len(lines) == 3
    assert [cell.strip() for cell in lines[0].split("|")] == ["policy", "T1", "T4", "Avg"]
    assert [cell.strip() for cell in lines[2].split("|")] == ["solver", "100.0/100.0", "0.0/50.0", "50.0/75.0"]
    assert set(lines[1]) <= {"-", "+"}
