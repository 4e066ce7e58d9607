"""
测试任务评估：IS/AS 计算、最优指派与穷举结果一致、目标文件校验
"""

import itertools
import random
from fractions import Fraction

import pytest

from office_world.models.engine import book_meeting_room, dispatch
from office_world.models.errors import GoalValidationError
from office_world.models.evaluation import (
    Condition,
    TaskSpec,
    attribute_score,
    evaluate_task,
    goals_from_dict,
    goals_satisfied,
    instance_score,
    office_event_goals,
    score_report,
    validate_goals,
)
from office_world.models.world import Booking
from office_world.utils.logger import get_logger

logger = get_logger("EvaluationTest")

LOCATIONS = ("open_area_1", "pantry")
CONTENTS = ("coffee", "tea", None)


def _score(conditions, picks):
    """picks: 每个槽位 (条件序号, 物体视图或 None)"""
    instance, attribute = Fraction(0), Fraction(0)
    for index, condition in enumerate(conditions):
        chosen = [view for slot, view in picks if slot == index and view is not None]
        width = len(condition.desired)
        matched = [sum(1 for k, v in condition.desired.items() if view.get(k) == v) for view in chosen]
        instance += Fraction(sum(1 for m in matched if m == width), condition.count)
        attribute += Fraction(sum(matched), condition.count * width)
    return instance / len(conditions), attribute / len(conditions)


def _brute_force(conditions, views):
    slots = [i for i, c in enumerate(conditions) for _ in range(c.count)]
    options = list(range(len(views))) + [None]
    best = (Fraction(0), Fraction(0))
    for choice in itertools.product(options, repeat=len(slots)):
        used = [c for c in choice if c is not None]
        if len(used) != len(set(used)):
            continue
        picks = [(slot, views[c] if c is not None else None) for slot, c in zip(slots, choice)]
        if any(view is not None and not conditions[slot].selects(view) for slot, view in picks):
            continue
        best = max(best, _score(conditions, picks))
    return best


def _random_views(rng):
    views = []
    for i in range(rng.randint(1, 4)):
        views.append({
            "name": f"Cup_{i + 1}",
            "otype": "Cup",
            "contains": rng.choice(CONTENTS),
            "location": rng.choice(LOCATIONS),
            "receptacle_type": rng.choice(("Table", None)),
        })
    views.append({"name": "Plate_1", "otype": "Plate", "location": "open_area_1", "receptacle_type": "Table",
                  "contains": "coffee"})
    return views


def test_overlapping_pools_match_brute_force():
    rng = random.Random(7)
    for trial in range(500):
        views = _random_views(rng)
        conditions = (
            Condition(otype="Cup", count=rng.randint(1, 2),
                      desired={"contains": "coffee", "location": "open_area_1", "receptacle_type": "Table"}),
            Condition(otype="Cup", count=rng.randint(1, 2), desired={"contains": "tea", "location": "open_area_1"}),
        )
        score = evaluate_task(TaskSpec("T", "", conditions), views, [])
        expected = _brute_force(conditions, views)
        assert (score.instance, score.attribute) == expected, f"trial {trial}: {views}"
        picked = [name for names in score.assignment.values() for name in names]
        assert len(picked) == len(set(picked))
        assert "Plate_1" not in picked


def test_disjoint_pools_use_best_objects():
    views = [
        {"name": "Table_1", "otype": "Table", "location": "open_area_1"},
        {"name": "Table_2", "otype": "Table", "location": "storage_room"},
        {"name": "Chair_1", "otype": "Chair", "location": "open_area_1"},
    ]
    task = TaskSpec("T1", "", (
        Condition(otype="Table", count=2, desired={"location": "open_area_1"}),
        Condition(otype="Chair", count=2, desired={"location": "open_area_1"}),
    ))
    score = evaluate_task(task, views, [])
    assert score.instance == Fraction(1, 2)
    assert score.attribute == Fraction(1, 2)
    assert score.assignment == {0: ["Table_1", "Table_2"], 1: ["Chair_1"]}


def test_booking_conditions_score_per_field():
    condition = Condition(booking={"room": "open_area_1", "name": "Lunch and Listen",
                                   "start": "2024-09-02T12:00:00", "end": "2024-09-02T13:00:00"})
    task = TaskSpec("T4", "", (condition,))
    def booking(room="open_area_1", name="Lunch and Listen", start="2024-09-02T12:00:00"):
        return [Booking(name=name, start=start, end="2024-09-02T13:00:00", room=room, booked_by="Olivia")]

    test_cases = [
        {"name": "无预订", "bookings": [], "IS": 0, "AS": 0},
        {"name": "完全一致（下划线名称）", "bookings": booking(name="Lunch_and_Listen"), "IS": 1, "AS": 1},
        {"name": "时间错误", "bookings": booking(start="2024-09-02T12:30:00"), "IS": 0, "AS": Fraction(2, 3)},
        {"name": "房间错误", "bookings": booking(room="pantry"), "IS": 0, "AS": 0},
    ]
    for case in test_cases:
        score = evaluate_task(task, [], case["bookings"])
        logger.info(f"{case['name']}: IS={score.instance} AS={score.attribute}")
        assert score.instance == case["IS"], case["name"]
        assert score.attribute == case["AS"], case["name"]


def test_goal_file_matches_builtin_definition(office_goals):
    assert office_goals == office_event_goals()
    assert [task.id for task in office_goals.tasks] == ["T1", "T2", "T3", "T4", "T5"]
    assert goals_from_dict(office_goals.to_dict()) == office_goals


def test_scores_follow_world_changes(office_world, office_goals):
    world = office_world
    validate_goals(office_goals, world)
    report = score_report(world, office_goals)
    assert report["tick"] == 0
    assert report["tasks"]["T1"] == {"IS": 0.0, "AS": 0.0}
    assert report["tasks"]["T4"] == {"IS": 0.0, "AS": 0.0}
    assert not goals_satisfied(world, office_goals)

    for command in ("go_to corridor", "go_to storage_room", "move_furniture Table_1 corridor",
                    "move_furniture Table_1 open_area_1"):
        assert dispatch(world, "Mia", command).success, command
    assert score_report(world, office_goals)["tasks"]["T1"] == {"IS": 25.0, "AS": 25.0}

    world.obj("Computer_1").state["is_working"] = True
    dispatch(world, "Olivia", "turn_on Computer_1")
    outcome = book_meeting_room(world, "Olivia", "Computer_1", "Lunch_and_Listen", "2024-09-02T12:00:00",
                                "2024-09-02T13:00:00", world.booking_password, room="open_area_1")
    assert outcome.success, outcome.message
    scores = instance_score(world, office_goals)
    assert scores["tasks"]["T4"] == 1
    assert scores["tasks"]["T1"] == Fraction(1, 4)

    attribute = attribute_score(world, office_goals)
    report = score_report(world, office_goals)
    assert attribute["tasks"]["T4"] == 1
    for task_id, value in attribute["tasks"].items():
        assert value >= scores["tasks"][task_id]
        assert report["tasks"][task_id]["AS"] == round(float(value * 100), 1)


def test_malformed_goals_are_rejected(office_world):
    test_cases = [
        {"name": "缺少 tasks", "data": {}, "message": "'tasks' is a required property"},
        {"name": "空条件", "data": {"tasks": [{"id": "X", "conditions": []}]}, "message": "$.tasks[0].conditions"},
        {"name": "类型和名称都缺", "data": {"tasks": [{"id": "X", "conditions": [{"count": 1, "desired": {"a": 1}}]}]},
         "message": "exactly one of otype or name"},
    ]
    for case in test_cases:
        with pytest.raises(GoalValidationError) as info:
            goals_from_dict(case["data"])
        logger.info(f"{case['name']}: {info.value}")
        assert case["message"] in str(info.value)

    mismatches = [
        ({"otype": "Sofa", "count": 1, "desired": {"location": "pantry"}}, "no object matches Sofa"),
        ({"otype": "Table", "count": 99, "desired": {"location": "pantry"}}, "only"),
        ({"otype": "Table", "count": 1, "desired": {"contains": "tea"}}, "contains is not an attribute of Table"),
        ({"otype": "Table", "count": 1, "desired": {"location": "mars"}}, "unknown location mars"),
        ({"booking": {"room": "mars", "name": "x", "start": "a", "end": "b"}}, "unknown room mars"),
    ]
    for condition, message in mismatches:
        goals = goals_from_dict({"tasks": [{"id": "X", "conditions": [condition]}]})
        with pytest.raises(GoalValidationError) as info:
            validate_goals(goals, office_world)
        assert message in str(info.value)
