"""
测试共用的场景与世界夹具
"""

import json

import pytest

from office_world.models.evaluation import load_goals
from office_world.models.scenario import bundled_path, instantiate, load_scenario, parse


def chat_scenario(rooms=("room_a", "room_b"), agents=("P1", "P2", "P3", "P4")):
    """只有若干房间和智能体的最小场景，用于对话测试"""
    data = {
        "locations": list(rooms),
        "location_distances": {
            room: {other: 1 for other in rooms if other != room} for room in rooms
        },
        "receptacles": [],
        "objects": [],
        "agents": [
            {
                "name": name,
                "gender": "unspecified",
                "role": "janitor",
                "location": rooms[i % len(rooms)],
                "fullness": 100,
                "hydration": 100,
                "energy": 100,
                "social_fulfillment": 50,
                "strength_kg": 30,
                "internal_profile": "",
                "appearance": "",
            }
            for i, name in enumerate(agents)
        ],
    }
    return parse(json.dumps(data))


@pytest.fixture
def kitchen_world():
    return instantiate(load_scenario(bundled_path("kitchen_excerpt")))


@pytest.fixture
def office_scenario():
    return load_scenario(bundled_path("office_event"))


@pytest.fixture
def office_world(office_scenario):
    return instantiate(office_scenario)


@pytest.fixture
def office_goals():
    return load_goals(bundled_path("office_event_goals"))


@pytest.fixture
def hydration_world():
    return instantiate(load_scenario(bundled_path("hydration_2")))
