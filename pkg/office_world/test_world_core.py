"""
测试世界状态：实例化、可见性、快照/恢复/差异和不变量检查
"""

import pytest

from office_world.models.engine import dispatch
from office_world.models.errors import UnknownEntityError
from office_world.models.world import Reservation, check_invariants, dumps_snapshot, restore, snapshot
from office_world.utils.logger import get_logger

logger = get_logger("WorldCoreTest")


def test_kitchen_excerpt_instantiates(kitchen_world):
    """内置厨房片段实例化后满足全部不变量"""
    world = kitchen_world
    assert world.tick == 0
    assert sorted(world.agents) == ["irene", "ryan"]
    assert world.agents["ryan"].location == "meeting_room1"
    assert world.locations["kitchen"].agents == ["irene"]
    assert "cup_1" in world.container("Countertop1").contents
    assert world.obj("cup_1").state["is_clean"] is False
    assert check_invariants(world) == []


def test_lookup_of_unknown_names_raises(kitchen_world):
    with pytest.raises(UnknownEntityError):
        kitchen_world.agent("nobody")
    with pytest.raises(KeyError):
        kitchen_world.obj("teapot_9")
    with pytest.raises(UnknownEntityError) as info:
        kitchen_world.container("cup_1")
    assert "receptacle" in str(info.value)


def test_closed_cabinet_hides_contents(kitchen_world):
    world = kitchen_world
    for command in ("pick_up cup_1", "open Cabinet1", "put_in cup_1 Cabinet1", "close Cabinet1"):
        outcome = dispatch(world, "irene", command)
        logger.info(f"{command}: {outcome.message}")
        assert outcome.success, outcome.message
    assert not world.is_visible("irene", "cup_1")
    assert "cup_1" not in [e.name for e in world.visible_objects("irene")]
    assert world.is_visible("irene", "Cabinet1")
    assert check_invariants(world) == []


def test_objects_in_other_rooms_are_not_visible(kitchen_world):
    assert not kitchen_world.is_visible("ryan", "cup_1")
    assert kitchen_world.is_visible("ryan", "touchscreen_1")
    assert not kitchen_world.is_visible("ryan", "no_such_thing")


def test_snapshot_restore_is_byte_identical(kitchen_world):
    world = kitchen_world
    dispatch(world, "irene", "pick_up cup_1")
    dispatch(world, "ryan", "go_to kitchen")
    dispatch(world, "ryan", "initiating_chat irene", "Morning!")
    world.reservations["Sinkbasin1"] = Reservation("irene", 4)

    first = dumps_snapshot(snapshot(world))
    second = dumps_snapshot(snapshot(restore(snapshot(world))))
    assert first == second
    assert check_invariants(restore(snapshot(world))) == []


def test_diff_lists_changed_attributes(kitchen_world):
    outcome = dispatch(kitchen_world, "irene", "pick_up cup_1")
    assert outcome.success
    changes = {(entity, attribute): (old, new) for entity, attribute, old, new in outcome.diff}
    assert changes[("cup_1", "holder")] == (None, "irene")
    assert changes[("cup_1", "receptacle")] == ("Countertop1", None)
    assert changes[("irene", "inventory")] == ([], ["cup_1"])
    assert changes[("Countertop1", "contents")] == (["cup_1"], [])
    assert ("ryan", "location") not in changes


def test_failed_dispatch_leaves_world_untouched(kitchen_world):
    before = dumps_snapshot(snapshot(kitchen_world))
    test_cases = [
        {"name": "未知地点", "command": "go_to mars", "message": "cannot find mars"},
        {"name": "参数个数错误", "command": "pick_up", "message": "incorrect number of arguments"},
        {"name": "未知动作", "command": "fly_to kitchen", "message": "cannot perform action fly_to"},
        {"name": "角色限制", "command": "repair_computer cup_1", "message": "is not a repairable"},
        {"name": "不可见物体", "command": "turn_on touchscreen_1", "message": "cannot find touchscreen_1"},
    ]
    for case in test_cases:
        outcome = dispatch(kitchen_world, "irene", case["command"])
        logger.info(f"{case['name']}: {outcome.message}")
        assert not outcome.success
        assert case["message"] in outcome.message
        assert outcome.diff == []
    assert dumps_snapshot(snapshot(kitchen_world)) == before


def test_copy_is_independent(kitchen_world):
    view = kitchen_world.copy()
    dispatch(kitchen_world, "irene", "pick_up cup_1")
    assert view.obj("cup_1").holder is None
    assert view.agents["irene"].inventory == []
    assert kitchen_world.obj("cup_1").holder == "irene"


def test_reservations_expire_with_time(kitchen_world):
    world = kitchen_world
    world.reservations["Sinkbasin1"] = Reservation("irene", 3)
    world.tick = 2
    assert world.reserved_by_other("Sinkbasin1", "ryan") == "irene"
    assert world.reserved_by_other("Sinkbasin1", "irene") is None
    world.release_expired()
    assert "Sinkbasin1" in world.reservations
    world.tick = 3
    world.release_expired()
    assert world.reservations == {}


def test_invariant_checker_flags_corruption(kitchen_world):
    world = kitchen_world
    world.obj("cup_1").location = "meeting_room1"
    problems = check_invariants(world)
    logger.info(f"problems: {problems}")
    assert any("cup_1" in p for p in problems)

    world.reindex()
    world.agents["irene"].inventory.append("cup_1")
    assert any("without holding" in p for p in check_invariants(world))
