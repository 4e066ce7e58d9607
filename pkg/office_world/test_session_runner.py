"""
测试会话运行器与命令行：基准任务、补水实验、布局实验、可复现性、生成策略回放和异常中止
"""

import json
import os

import pytest

from office_world.config import PLAYBOOK_DIR
from office_world.main import SessionConfig, SessionRunner, main, run_session
from office_world.models.analytics import location_share, occupancy_report, resource_stress_report
from office_world.models.errors import ContractViolation, GenerationServiceError, PolicyError
from office_world.models.evaluation import score_report
from office_world.models.policies import GenerationPolicy, Policy
from office_world.models.scenario import bundled_path, instantiate, load_scenario
from office_world.utils.logger import get_logger

logger = get_logger("SessionRunnerTest")

REPLAY_FILE = bundled_path("recorded_office_event")
CSV_OUTPUTS = ("occupancy.csv", "activity.csv", "wellbeing.csv", "suboptimal.csv")


def _playbook(name):
    return os.path.join(PLAYBOOK_DIR, f"{name}.json")


def _scenario(name):
    return load_scenario(bundled_path(name))


def _of_kind(events, kind, **fields):
    return [e for e in events if e["kind"] == kind and all(e.get(k) == v for k, v in fields.items())]


class FailingPolicy(Policy):
    def decide(self, context):
        raise PolicyError(f"{context.agent}: no decision")


class BrokenClient:
    def generate(self, messages, agent=None):
        raise GenerationServiceError("service unavailable")


# ---------------------------------------------------------------- 基准任务


def test_solver_playbook_completes_furniture_and_booking(office_scenario, office_goals):
    config = SessionConfig(mode="task", playbook=_playbook("office_event"))
    result = run_session(config, office_scenario, office_goals)
    logger.info(f"solver score: {result.score}")
    assert result.complete
    assert result.score["tasks"]["T1"] == {"IS": 100.0, "AS": 100.0}
    assert result.score["tasks"]["T4"] == {"IS": 100.0, "AS": 100.0}
    assert result.ticks <= 60


def test_random_policy_scores_stay_low(office_scenario, office_goals):
    averages = []
    for seed in (1, 2, 3):
        result = run_session(SessionConfig(mode="task", policy="random", seed=seed), office_scenario, office_goals)
        averages.append(result.score["average"])
        logger.info(f"random seed {seed}: {result.score['average']}")
    assert sum(a["IS"] for a in averages) / 3 <= 10
    assert sum(a["AS"] for a in averages) / 3 <= 35


def test_zero_duration_session_reports_initial_scores(office_scenario, office_goals):
    result = run_session(SessionConfig(mode="task", duration_min=0), office_scenario, office_goals)
    assert result.ticks == 0
    assert _of_kind(result.events, "action") == []
    assert result.score == score_report(instantiate(office_scenario), office_goals)


def test_mode_and_goals_must_agree(office_scenario, office_goals):
    with pytest.raises(ContractViolation):
        SessionRunner(SessionConfig(mode="task"), office_scenario, None)
    with pytest.raises(ContractViolation):
        SessionRunner(SessionConfig(mode="simulation"), office_scenario, office_goals)
    with pytest.raises(ContractViolation):
        SessionConfig(mode="task", duration_min=-1)


# ---------------------------------------------------------------- 补水实验


@pytest.mark.parametrize("name, agents, coffee, z", [
    ("hydration_2", 2, 0, 6),
    ("hydration_2_x2", 2, 0, 4),
    ("hydration_4", 4, 1, 8),
    ("hydration_4_x2", 4, 1, 6),
])
def test_hydration_queueing(name, agents, coffee, z):
    result = run_session(SessionConfig(mode="simulation", duration_min=30), _scenario(name))
    summary = resource_stress_report(result.events).summary
    logger.info(f"{name}: X={summary['X']} Y={summary['Y']} Z={summary['Z']}")
    assert (summary["X"], summary["Y"]) == (agents - coffee, coffee)
    assert summary["Z"] == z
    per_agent = summary["per_agent"].values()
    assert max(entry["tick"] for entry in per_agent) == z
    assert all(entry["done"] == entry["tick"] + 1 for entry in per_agent if entry["verb"] == "drink")


def test_second_device_set_relieves_stress():
    single = resource_stress_report(
        run_session(SessionConfig(mode="simulation", duration_min=40), _scenario("hydration_8")).events).summary
    double = resource_stress_report(
        run_session(SessionConfig(mode="simulation", duration_min=40), _scenario("hydration_8_x2")).events).summary
    assert single["X"] + single["Y"] == 8
    assert (double["X"], double["Y"]) == (5, 3)
    assert double["Z"] < single["Z"]


# ---------------------------------------------------------------- 布局实验


def test_pantry_next_to_offices_draws_more_time():
    shares = {}
    for design in ("layout_design1", "layout_design2"):
        config = SessionConfig(mode="simulation", duration_min=120, playbook=_playbook("layout_routine"))
        result = run_session(config, _scenario(design))
        shares[design] = location_share(occupancy_report(result.events), "pantry")
        logger.info(f"{design}: pantry share {shares[design]:.3f}")
    assert shares["layout_design2"] > shares["layout_design1"]


# ---------------------------------------------------------------- 可复现性


def test_same_seed_gives_identical_outputs(tmp_path, office_scenario, office_goals):
    contents = []
    for run in ("first", "second"):
        out = os.path.join(tmp_path, run)
        config = SessionConfig(mode="task", policy="random", seed=5, duration_min=15, out_dir=out)
        result = run_session(config, office_scenario, office_goals)
        assert set(result.outputs) >= {"events", "score_report", "final_snapshot", "occupancy"}
        files = {}
        for name in ("events.jsonl", "score_report.json", "final_snapshot.json") + CSV_OUTPUTS:
            with open(os.path.join(out, name), "rb") as f:
                files[name] = f.read()
        contents.append(files)
    assert contents[0] == contents[1]

    header = json.loads(contents[0]["events.jsonl"].splitlines()[0])
    assert header["kind"] == "header"
    assert header["seed"] == 5


# ---------------------------------------------------------------- 生成策略


def test_generation_replay(office_scenario, office_goals):
    config = SessionConfig(mode="task", policy="generation", replay=REPLAY_FILE, duration_min=6)
    runner = SessionRunner(config, office_scenario, office_goals)
    result = runner.run()
    events = result.events

    booking = _of_kind(events, "action", agent="Olivia", tick=1)[0]
    assert booking["verb"] == "book_meeting_room"
    assert booking["admissible"] is False
    assert booking["learn_from_failure"] is True
    outcome = _of_kind(events, "outcome", agent="Olivia", tick=1)[0]
    assert outcome["success"] is False
    assert "broken" in outcome["message"]

    # fly_to 不是合法命令，重试后选了 look_around
    assert _of_kind(events, "action", agent="Olivia", tick=2)[0]["command"] == "look_around"
    olivia_requests = [r for r in runner.policy.client.requests if r["agent"] == "Olivia"]
    assert "'fly_to open_area_1' is not an admissible command" in olivia_requests[3]["messages"][-1]["content"]

    chat = _of_kind(events, "utterance", agent="Liam", tick=0)[0]
    assert chat["session"] == "chat_1"
    assert chat["text"] == "Morning Noah, busy day with the event setup."
    assert result.world.obj("Table_1").location == "open_area_1"
    assert result.world.obj("Computer_1").state["is_turned_on"] is True


@pytest.mark.parametrize("no_tp, no_st, reminder, memory", [
    (False, False, True, True),
    (True, False, False, True),
    (False, True, True, False),
])
def test_ablation_flags_shape_the_prompt(office_scenario, office_goals, no_tp, no_st, reminder, memory):
    config = SessionConfig(mode="task", policy="generation", replay=REPLAY_FILE, duration_min=1,
                           no_tp=no_tp, no_st=no_st)
    runner = SessionRunner(config, office_scenario, office_goals)
    runner.run()
    request = next(r for r in runner.policy.client.requests if r["agent"] == "Olivia")
    prompt = request["messages"][1]["content"]
    assert ("TASK REMINDER:" in prompt) == reminder
    assert ("MEMORY:" in prompt) == memory
    assert "ADMISSIBLE COMMANDS:" in prompt


@pytest.mark.parametrize("policy", [FailingPolicy(), GenerationPolicy(BrokenClient())])
def test_repeated_policy_failures_abort_the_session(office_scenario, office_goals, policy):
    result = run_session(SessionConfig(mode="task", max_workers=1), office_scenario, office_goals, policy)
    assert not result.complete
    assert result.ticks == 3
    assert "policy failed 3 times in a row" in result.reason
    end = result.events[-1]
    assert (end["kind"], end["complete"]) == ("session_end", False)


# ---------------------------------------------------------------- 命令行


def test_cli_validate_and_actions(tmp_path, capsys):
    assert main(["validate", "--scenario", "office_event", "--goals", "office_event_goals"]) == 0
    assert main(["validate", "--scenario", "kitchen_excerpt"]) == 0
    assert "scenario is valid" in capsys.readouterr().out

    broken = os.path.join(tmp_path, "broken.json")
    with open(broken, "w", encoding="utf-8") as f:
        f.write("{\n")
    assert main(["validate", "--scenario", broken]) == 1
    assert "malformed JSON" in capsys.readouterr().err

    target = os.path.join(tmp_path, "actions.json")
    assert main(["actions", "--out", target]) == 0
    with open(target, "r", encoding="utf-8") as f:
        assert len(json.load(f)["verbs"]) == 38


def test_cli_task_mode_needs_goals(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["run", "--scenario", "office_event", "--mode", "task", "--out", str(tmp_path)])
    assert info.value.code == 2


def test_cli_run_score_and_report(tmp_path, capsys):
    hydration_out = os.path.join(tmp_path, "hydration")
    assert main(["run", "--scenario", "hydration_2", "--duration-min", "10", "--out", hydration_out]) == 0
    for name in ("events.jsonl", "config.json", "scenario.json", "final_snapshot.json", "resource_stress.csv"):
        assert os.path.exists(os.path.join(hydration_out, name)), name

    task_out = os.path.join(tmp_path, "task")
    assert main(["run", "--scenario", "office_event", "--goals", "office_event_goals", "--playbook",
                 "office_event", "--duration-min", "5", "--out", task_out]) == 0
    capsys.readouterr()

    snapshot_path = os.path.join(task_out, "final_snapshot.json")
    assert main(["score", "--snapshot", snapshot_path, "--goals", "office_event_goals"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["tick"] == 5
    assert sorted(report["tasks"]) == ["T1", "T2", "T3", "T4", "T5"]

    reports_out = os.path.join(tmp_path, "reports")
    assert main(["report", "--log", os.path.join(task_out, "events.jsonl"), "--kind", "all",
                 "--out", reports_out]) == 0
    assert sorted(os.listdir(reports_out)) == sorted(
        f"{kind}.csv" for kind in ("occupancy", "activity", "wellbeing", "suboptimal", "resource_stress"))
