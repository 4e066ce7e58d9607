"""
测试动作引擎：时长、角色限制、设备占用、预订和可执行列表
"""

import pytest

from office_world.models.catalog import get_spec
from office_world.models.engine import ActionEngine, admissible_actions, book_meeting_room, dispatch, move_entity, repair
from office_world.models.world import EventRequest, check_invariants
from office_world.utils.logger import get_logger

logger = get_logger("ActionEngineTest")

MEETING = ("2024-09-02T10:00:00", "2024-09-02T11:00:00")


def _allow_booking(world, password="pw-1"):
    world.booking_password = password
    world.agents["ryan"].knowledge["booking_password"] = password
    world.event_requests.append(EventRequest("Team Sync", "meeting_room1", *MEETING))


def test_go_to_duration_scales_with_distance(office_world):
    outcome = dispatch(office_world, "Ethan", "go_to corridor")
    assert outcome.success
    assert outcome.duration_ticks == 2
    assert office_world.agents["Ethan"].location == "corridor"
    assert "Ethan" in office_world.locations["corridor"].agents


def test_role_multipliers_change_durations(office_world, hydration_world):
    world = office_world
    assert dispatch(world, "Olivia", "turn_on Computer_1").success
    outcome = dispatch(world, "Olivia", "repair_computer Computer_1")
    assert not outcome.success
    assert "cannot perform action repair_computer" in outcome.message

    dispatch(world, "Ethan", "go_to corridor")
    dispatch(world, "Ethan", "go_to reception")
    outcome = repair(world, "Ethan", "Computer_1")
    assert outcome.success
    assert outcome.duration_ticks == 5
    assert world.obj("Computer_1").state["is_working"] is True

    dispatch(hydration_world, "Ava", "go_to pantry")
    outcome = ActionEngine().dispatch(hydration_world, "Ava", "go_to office")
    assert outcome.duration_ticks == 1
    assert get_spec("work_at_desk").scaling == {"software_engineer": 0.8}


def test_move_furniture_carries_agent_and_item(office_world):
    world = office_world
    dispatch(world, "Mia", "go_to corridor")
    dispatch(world, "Mia", "go_to storage_room")
    outcome = dispatch(world, "Mia", "move_furniture Table_1 corridor")
    assert outcome.success
    assert outcome.duration_ticks == 2
    assert world.obj("Table_1").location == "corridor"
    assert world.agents["Mia"].location == "corridor"
    assert check_invariants(world) == []

    outcome = dispatch(world, "Mia", "pick_up Table_1")
    assert not outcome.success
    assert "move_furniture" in outcome.message


def test_objects_only_move_with_their_carrier(kitchen_world):
    outcome = move_entity(kitchen_world, "cup_1", "meeting_room1")
    assert not outcome.success
    dispatch(kitchen_world, "irene", "pick_up cup_1")
    outcome = move_entity(kitchen_world, "cup_1", "meeting_room1")
    assert outcome.success
    assert kitchen_world.obj("cup_1").location == "meeting_room1"
    assert kitchen_world.agents["irene"].location == "meeting_room1"


def test_hand_and_strength_limits(office_world):
    world = office_world
    dispatch(world, "Mia", "open Cabinet_1")
    assert dispatch(world, "Mia", "pick_up Plate_1").success
    assert dispatch(world, "Mia", "pick_up Plate_2").success
    outcome = dispatch(world, "Mia", "pick_up Plate_3")
    assert not outcome.success
    assert "hands are full" in outcome.message

    outcome = dispatch(world, "Mia", "drop Plate_1")
    assert not outcome.success
    assert "receptacle" in outcome.message


def test_device_reservation_blocks_other_agents(hydration_world):
    world = hydration_world
    for name, cup in (("Ava", "Cup_1"), ("Ben", "Cup_2")):
        dispatch(world, name, "go_to pantry")
        assert dispatch(world, name, f"pick_up {cup}").success

    outcome = dispatch(world, "Ava", "dispense_water Cup_1 WaterDispenser_1")
    assert outcome.success
    assert outcome.duration_ticks == 2
    assert "dispense_water Cup_2 WaterDispenser_1" not in admissible_actions(world, "Ben")
    outcome = dispatch(world, "Ben", "dispense_water Cup_2 WaterDispenser_1")
    assert not outcome.success
    assert "in use by Ava" in outcome.message

    world.tick = 2
    world.release_expired()
    assert dispatch(world, "Ben", "dispense_water Cup_2 WaterDispenser_1").success

    hydration = world.agents["Ava"].needs.hydration
    outcome = dispatch(world, "Ava", "drink Cup_1")
    assert outcome.success
    assert world.agents["Ava"].needs.hydration == pytest.approx(hydration + 40)
    assert world.agents["Ava"].needs.bladder == pytest.approx(20)
    assert world.obj("Cup_1").state["is_clean"] is False
    assert world.obj("Cup_1").state["contains"] is None


def test_make_tea_consumes_the_tea_bag(office_world):
    world = office_world
    for command in ("open Cabinet_2", "pick_up Cup_1", "make_tea Cup_1 TeaBag_1"):
        outcome = dispatch(world, "Mia", command)
        assert outcome.success, outcome.message
    assert world.obj("Cup_1").state["contains"] == "tea"
    assert "TeaBag_1" not in world.objects
    assert "TeaBag_1" not in world.container("Cabinet_2").contents
    assert check_invariants(world) == []


def test_touch_screen_books_its_own_room(kitchen_world):
    world = kitchen_world
    _allow_booking(world)
    command = f"book_meeting_room touchscreen_1 meeting_room1 Team_Sync {MEETING[0]} {MEETING[1]} pw-1"
    assert command in admissible_actions(world, "ryan")

    outcome = dispatch(world, "ryan", f"book_meeting_room touchscreen_1 kitchen Team_Sync {MEETING[0]} {MEETING[1]} pw-1")
    assert not outcome.success
    assert "can only book meeting_room1" in outcome.message

    outcome = dispatch(world, "ryan", command)
    assert outcome.success
    booking = world.bookings[0]
    assert (booking.room, booking.name, booking.booked_by) == ("meeting_room1", "Team Sync", "ryan")


def test_booking_rejects_bad_password_and_overlap(kitchen_world):
    world = kitchen_world
    _allow_booking(world)
    outcome = book_meeting_room(world, "ryan", "touchscreen_1", "Team Sync", *MEETING, "guess")
    assert not outcome.success
    assert "incorrect password" in outcome.message
    assert world.bookings == []

    assert book_meeting_room(world, "ryan", "touchscreen_1", "Team Sync", *MEETING, "pw-1").success
    outcome = book_meeting_room(world, "ryan", "touchscreen_1", "Retro", "2024-09-02T10:30:00",
                                "2024-09-02T11:30:00", "pw-1")
    assert not outcome.success
    assert "already booked" in outcome.message

    outcome = book_meeting_room(world, "ryan", "touchscreen_1", "Retro", "2024-09-02T11:00:00",
                                "2024-09-02T10:00:00", "pw-1")
    assert not outcome.success
    assert "invalid booking period" in outcome.message
    assert len(world.bookings) == 1


def test_booking_needs_a_working_terminal(office_world):
    world = office_world
    password = world.booking_password
    command = ("book_meeting_room Computer_1 open_area_1 Lunch_and_Listen 2024-09-02T12:00:00 "
               f"2024-09-02T13:00:00 {password}")
    assert command not in admissible_actions(world, "Olivia")
    dispatch(world, "Olivia", "turn_on Computer_1")
    outcome = dispatch(world, "Olivia", command)
    assert not outcome.success
    assert "broken" in outcome.message

    world.obj("Computer_1").state["is_working"] = True
    assert command in admissible_actions(world, "Olivia")
    assert dispatch(world, "Olivia", command).success


def test_admissible_commands_dispatch_successfully(office_world):
    """本地点每条可执行命令在副本上都能成功执行"""
    for agent in ("Mia", "Ethan", "Olivia"):
        commands = admissible_actions(office_world, agent)
        logger.info(f"{agent}: {len(commands)} admissible commands")
        assert commands == sorted(commands)
        for command in commands:
            trial = office_world.copy()
            outcome = dispatch(trial, agent, command, "Hello.")
            assert outcome.success, f"{agent} '{command}': {outcome.message}"
            assert check_invariants(trial) == []
