"""
测试需求模型：衰减、恢复、分类和覆盖项
"""

import pytest

from office_world.models.errors import ContractViolation
from office_world.models.needs import (
    NeedsModel,
    NeedsState,
    apply_restoration,
    classify,
    tick_decay,
    urgency,
)


@pytest.fixture
def model():
    return NeedsModel()


def test_decay_per_tick(model):
    needs = tick_decay(NeedsState(), model, 10)
    assert needs.hydration == pytest.approx(97.5)
    assert needs.fullness == pytest.approx(98.5)
    assert needs.energy == pytest.approx(99.0)
    assert needs.social_fulfillment == pytest.approx(99.0)
    assert needs.bladder == pytest.approx(0.5)


def test_decay_edge_cases(model):
    needs = NeedsState(hydration=1)
    assert tick_decay(needs, model, 0) == needs
    assert tick_decay(needs, model, 0) is not needs
    assert tick_decay(needs, model, 100).hydration == 0.0
    with pytest.raises(ContractViolation):
        tick_decay(needs, model, -1)


def test_values_are_clamped():
    needs = NeedsState(fullness=140, hydration=-5, bladder=130)
    assert (needs.fullness, needs.hydration, needs.bladder) == (100.0, 0.0, 100.0)


def test_classification_and_urgency(model):
    test_cases = [
        {"name": "最佳状态", "needs": NeedsState(), "unmet": set()},
        {"name": "口渴", "needs": NeedsState(hydration=29), "unmet": {"thirst"}},
        {"name": "阈值不算未满足", "needs": NeedsState(hydration=30, bladder=70), "unmet": set()},
        {"name": "多项", "needs": NeedsState(fullness=10, energy=5, social_fulfillment=0, bladder=71),
         "unmet": {"hunger", "fatigue", "loneliness", "bladder"}},
    ]
    for case in test_cases:
        result = classify(case["needs"], model)
        assert set(result.unmet) == case["unmet"], case["name"]
        assert result.optimal == (not case["unmet"])

    gaps = urgency(NeedsState(hydration=20, bladder=80), model)
    assert gaps == {"hydration": pytest.approx(10), "bladder": pytest.approx(10)}


def test_restoration_modes(model):
    needs = NeedsState(hydration=80, bladder=90)
    after = apply_restoration(needs, "drink", model)
    assert after.hydration == 100.0
    assert after.bladder == 100.0
    assert apply_restoration(after, "use_restroom", model).bladder == 0.0
    assert needs.hydration == 80
    with pytest.raises(ContractViolation):
        apply_restoration(needs, "pick_up", model)


def test_overrides_merge_with_defaults():
    model = NeedsModel.from_overrides({
        "decay": {"hydration": 1.0},
        "thresholds": {"hydration": 50},
        "restoration": {"drink": {"hydration": ["add", 10]}},
    })
    assert model.decay["hydration"] == 1.0
    assert model.decay["fullness"] == 0.15
    assert model.thresholds["hydration"] == 50
    assert model.restoration["drink"] == {"hydration": ("add", 10)}
    assert model.restoration["rest"] == {"energy": ("add", 30)}
    assert NeedsModel.from_overrides(None) == NeedsModel()

    with pytest.raises(ContractViolation):
        NeedsModel.from_overrides({"thresholds": {"energy": 100}})
    with pytest.raises(ContractViolation):
        NeedsModel.from_overrides({"decay": {"energy": -0.1}})
