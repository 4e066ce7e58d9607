"""
随机抽样测试：可执行列表中的命令都能成功执行，任意命令都不会破坏世界状态
"""

import random

import pytest

from office_world.models.catalog import catalog
from office_world.models.engine import ActionEngine
from office_world.models.scenario import bundled_path, instantiate, load_scenario
from office_world.models.world import check_invariants, dumps_snapshot, snapshot
from office_world.utils.logger import get_logger

logger = get_logger("FuzzTest")

FIXTURES = ("kitchen_excerpt", "office_event", "hydration_4_x2", "layout_design1", "layout_design2")
DRAWS_PER_FIXTURE = 2000


def _noise_command(rng, world, verbs):
    spec = rng.choice(verbs)
    names = sorted(world.locations) + sorted(world.objects) + sorted(world.receptacles) + sorted(world.agents)
    arity = spec.arity + rng.choice((0, 0, 0, 1, -1))
    args = [rng.choice(names + ["nowhere", "2024-09-02T12:00:00"]) for _ in range(max(arity, 0))]
    return " ".join([spec.verb] + args)


@pytest.mark.parametrize("fixture", FIXTURES)
def test_random_admissible_commands_always_succeed(fixture):
    rng = random.Random(fixture)
    engine = ActionEngine()
    world = instantiate(load_scenario(bundled_path(fixture)))
    names = sorted(world.agents)
    verbs = catalog()
    executed = failed_noise = 0

    for draw in range(DRAWS_PER_FIXTURE):
        if draw % len(names) == 0:
            world.tick += 1
            world.release_expired()
        agent = rng.choice(names)

        if rng.random() < 0.1:
            command = _noise_command(rng, world, verbs)
            before = dumps_snapshot(snapshot(world))
            outcome = engine.dispatch(world, agent, command, "hello")
            if not outcome.success:
                failed_noise += 1
                assert dumps_snapshot(snapshot(world)) == before, f"'{command}' changed the world"
            assert check_invariants(world) == []
            continue

        commands = engine.admissible_actions(world, agent)
        if not commands:
            continue
        command = rng.choice(commands)
        outcome = engine.dispatch(world, agent, command, f"{agent} says hello")
        assert outcome.success, f"{fixture} draw {draw} {agent} '{command}': {outcome.message}"
        assert outcome.duration_ticks >= 1
        problems = check_invariants(world)
        assert problems == [], f"{fixture} draw {draw} {agent} '{command}': {problems}"
        executed += 1

    logger.info(f"{fixture}: {executed} admissible commands executed, {failed_noise} noise commands rejected")
    assert executed > DRAWS_PER_FIXTURE // 2
