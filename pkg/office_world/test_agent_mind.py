"""
测试智能体认知：感知、记忆更新、任务提醒、规划和记忆摘要
"""

from office_world.models.agent_mind import (
    MemoryStore,
    Objective,
    memory_digest,
    perceive,
    plan,
    prioritize,
    profile_of,
    remember_outcome,
    update_memory,
)
from office_world.models.engine import dispatch
from office_world.models.needs import NeedsModel
from office_world.utils.logger import get_logger

logger = get_logger("AgentMindTest")


def _observe(world, name, memory, goals=None):
    observation = perceive(world, name)
    return update_memory(memory, observation, goals, dict(world.agents[name].knowledge))


def test_perception_is_local(office_world):
    observation = perceive(office_world, "Mia")
    names = {item["name"] for item in observation.objects}
    assert observation.location == "pantry"
    assert "corridor" in observation.exits
    assert {"Cup_9", "Cup_10", "WaterDispenser_1", "Cabinet_1"} <= names
    # 关着的柜子里的东西看不到
    assert "Plate_1" not in names
    assert "Table_1" not in names
    assert {peer["name"] for peer in observation.agents} == {"Noah", "Liam", "Emma"}
    assert observation.inventory == []
    assert observation.needs["hydration"] == 85


def test_memory_tracks_objects_and_progress(office_world, office_goals):
    memory = _observe(office_world, "Mia", MemoryStore(), office_goals)
    assert memory.semantic_map["Cup_9"].location == "pantry"
    assert memory.semantic_map["Cup_9"].tick == 0
    assert set(memory.task_progress) >= {"T1#0", "T1#1", "T4#0", "T5#2"}
    assert not any(entry.satisfied for entry in memory.task_progress.values())

    office_world.tick = 5
    _observe(office_world, "Mia", memory, office_goals)
    assert memory.semantic_map["Cup_9"].tick == 5
    assert memory.task_progress["T1#0"].tick == 0


def test_memory_keeps_heard_lines_once(office_world):
    dispatch(office_world, "Mia", "initiating_chat Noah", "Morning Noah")
    memory = MemoryStore()
    _observe(office_world, "Liam", memory)
    _observe(office_world, "Liam", memory)
    heard = [event for _, event in memory.episodic if "said in chat_1" in event]
    assert heard == ["Mia said in chat_1: Morning Noah"]


def test_known_bookings_complete_booking_tasks(office_world, office_goals):
    memory = _observe(office_world, "Olivia", MemoryStore(), office_goals)
    assert memory.knowledge["booking_password"] == "LL-2024-pantry"
    remember_outcome(memory, 3, "book_meeting_room Computer_1 open_area_1 Lunch_and_Listen 2024-09-02T12:00:00 "
                                "2024-09-02T13:00:00 LL-2024-pantry", True, "booked")
    office_world.tick = 3
    _observe(office_world, "Olivia", memory, office_goals)
    assert memory.task_progress["T4#0"].satisfied
    assert memory.task_progress["T4#0"].tick == 3
    assert any("I did 'book_meeting_room" in event for _, event in memory.episodic)


def test_reminder_lists_role_aligned_tasks(office_world, office_goals):
    memory = _observe(office_world, "Mia", MemoryStore(), office_goals)
    reminder = prioritize(memory, profile_of(office_world.agents["Mia"]), office_goals)
    logger.info(reminder)
    assert reminder.startswith("Unfinished tasks:")
    assert "As a janitor, consider focusing on T1, T2, T3, T5." in reminder

    olivia = _observe(office_world, "Olivia", MemoryStore(), office_goals)
    reminder = prioritize(olivia, profile_of(office_world.agents["Olivia"]), office_goals)
    assert "As a receptionist, consider focusing on T4." in reminder
    assert prioritize(memory, profile_of(office_world.agents["Mia"]), None) == ""


def test_reminder_focuses_on_held_objects(office_world, office_goals):
    assert dispatch(office_world, "Mia", "pick_up Cup_9").success
    memory = _observe(office_world, "Mia", MemoryStore(), office_goals)
    reminder = prioritize(memory, profile_of(office_world.agents["Mia"]), office_goals)
    assert reminder == ("You are holding Cup_9 for T5; it still needs contains=coffee, location=open_area_1, "
                        "receptacle_type=Table.")


def test_plan_prefers_urgent_needs(office_world, office_goals):
    model = NeedsModel()
    profile = profile_of(office_world.agents["Mia"])
    memory = _observe(office_world, "Mia", MemoryStore(), office_goals)
    test_cases = [
        {"name": "无需求有任务", "needs": {}, "tasks": office_goals, "expected": Objective("task", "T1")},
        {"name": "口渴", "needs": {"hydration": 10}, "tasks": office_goals,
         "expected": Objective("need", "hydration", "drink")},
        {"name": "平局时先喝水", "needs": {"hydration": 20, "fullness": 20}, "tasks": None,
         "expected": Objective("need", "hydration", "drink")},
        {"name": "最紧迫者优先", "needs": {"hydration": 25, "energy": 5}, "tasks": None,
         "expected": Objective("need", "energy", "rest")},
        {"name": "空闲", "needs": {}, "tasks": None, "expected": Objective("idle", None, "look_around")},
    ]
    baseline = dict(memory.internal["needs"])
    for case in test_cases:
        memory.internal["needs"] = {**baseline, **case["needs"]}
        objective = plan(memory, profile, case["tasks"], model)
        logger.info(f"{case['name']}: {objective.describe()}")
        assert objective == case["expected"], case["name"]


def test_digest_respects_window_and_budget(office_world, office_goals):
    memory = _observe(office_world, "Mia", MemoryStore(), office_goals)
    for i in range(50):
        remember_outcome(memory, i, "look_around", True, f"looked around #{i}")

    digest = memory_digest(memory, 0)
    assert "Known objects:" in digest
    assert "Task progress:" in digest
    assert "looked around #49" in digest
    assert "looked around #39" not in digest

    assert "Known objects:" not in memory_digest(memory, 31)
    assert "Known objects:" not in memory_digest(memory, 0, include_map=False)
    assert "Task progress:" not in memory_digest(memory, 0, include_progress=False)
    assert len(memory_digest(memory, 0, budget=200)) <= 200
