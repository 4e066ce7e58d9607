"""
需求模块：生理/社交需求的衰减、恢复与状态分类
"""

from dataclasses import asdict, dataclass, field, replace
from typing import Any, Dict, FrozenSet, Mapping, Optional, Tuple

from office_world.config import (
    BLADDER_RATE,
    NEEDS_DECAY,
    NEEDS_RESTORATION,
    NEEDS_THRESHOLDS,
)
from office_world.models.errors import ContractViolation

NEED_NAMES = ("fullness", "hydration", "energy", "social_fulfillment", "bladder")

# 规划时的平局顺序
PLAN_ORDER = ("hydration", "fullness", "bladder", "energy", "social_fulfillment")

# 未满足需求的展示名
UNMET_LABELS = {
    "fullness": "hunger",
    "hydration": "thirst",
    "energy": "fatigue",
    "social_fulfillment": "loneliness",
    "bladder": "bladder",
}


def _clamp(value: float) -> float:
    return min(100.0, max(0.0, float(value)))


@dataclass
class NeedsState:
    fullness: float = 100.0
    hydration: float = 100.0
    energy: float = 100.0
    social_fulfillment: float = 100.0
    bladder: float = 0.0

    def __post_init__(self):
        for name in NEED_NAMES:
            setattr(self, name, _clamp(getattr(self, name)))

    def as_dict(self) -> Dict[str, float]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "NeedsState":
        return cls(**{k: data[k] for k in NEED_NAMES if k in data})


@dataclass
class NeedsModel:
    decay: Dict[str, float] = field(default_factory=lambda: dict(NEEDS_DECAY))
    bladder_rate: float = BLADDER_RATE
    restoration: Dict[str, Dict[str, Tuple[str, float]]] = field(
        default_factory=lambda: {verb: dict(effects) for verb, effects in NEEDS_RESTORATION.items()}
    )
    thresholds: Dict[str, float] = field(default_factory=lambda: dict(NEEDS_THRESHOLDS))

    def __post_init__(self):
        for name, value in self.thresholds.items():
            if not 0 < value < 100:
                raise ContractViolation(f"threshold for {name} must lie in (0, 100), got {value}")
        for name, value in self.decay.items():
            if value < 0:
                raise ContractViolation(f"decay for {name} must be non-negative, got {value}")

    @classmethod
    def from_overrides(cls, overrides: Optional[Mapping[str, Any]]) -> "NeedsModel":
        """
        在默认常量上叠加场景中的 needs_model 覆盖项

        参数:
        - overrides: {"decay": {...}, "bladder_rate": x, "thresholds": {...}, "restoration": {verb: {need: [mode, amount]}}}

        返回:
        - 需求模型
        """
        model = cls()
        if not overrides:
            return model
        decay = dict(model.decay)
        decay.update(overrides.get("decay", {}))
        thresholds = dict(model.thresholds)
        thresholds.update(overrides.get("thresholds", {}))
        restoration = {verb: dict(effects) for verb, effects in model.restoration.items()}
        for verb, effects in overrides.get("restoration", {}).items():
            restoration[verb] = {need: (mode, amount) for need, (mode, amount) in effects.items()}
        return cls(
            decay=decay,
            bladder_rate=overrides.get("bladder_rate", model.bladder_rate),
            restoration=restoration,
            thresholds=thresholds,
        )

    def is_restorative(self, verb: str) -> bool:
        return verb in self.restoration


@dataclass(frozen=True)
class NeedsClassification:
    unmet: FrozenSet[str] = frozenset()

    @property
    def optimal(self) -> bool:
        return not self.unmet


def tick_decay(needs: NeedsState, model: NeedsModel, dt: int) -> NeedsState:
    """
    按时间步衰减需求

    参数:
    - needs: 当前需求
    - model: 需求模型
    - dt: 经过的时间步数，不能为负

    返回:
    - 衰减后的新需求状态
    """
    if dt < 0:
        raise ContractViolation(f"dt must be non-negative, got {dt}")
    if dt == 0:
        return replace(needs)
    values = needs.as_dict()
    for name, rate in model.decay.items():
        values[name] = values[name] - rate * dt
    values["bladder"] = values["bladder"] + model.bladder_rate * dt
    return NeedsState(**values)


def classify(needs: NeedsState, model: NeedsModel) -> NeedsClassification:
    """返回未满足的需求集合；集合为空即为最佳状态"""
    unmet = set()
    for name in NEED_NAMES:
        threshold = model.thresholds[name]
        value = getattr(needs, name)
        if name == "bladder":
            if value > threshold:
                unmet.add(UNMET_LABELS[name])
        elif value < threshold:
            unmet.add(UNMET_LABELS[name])
    return NeedsClassification(frozenset(unmet))


def urgency(needs: NeedsState, model: NeedsModel) -> Dict[str, float]:
    """每个未满足需求超出阈值的程度"""
    result = {}
    for name in NEED_NAMES:
        value = getattr(needs, name)
        threshold = model.thresholds[name]
        gap = value - threshold if name == "bladder" else threshold - value
        if gap > 0:
            result[name] = gap
    return result


def apply_restoration(needs: NeedsState, verb: str, model: NeedsModel) -> NeedsState:
    """
    应用恢复性动作的效果

    参数:
    - needs: 当前需求
    - verb: 恢复性动作名
    - model: 需求模型

    返回:
    - 新的需求状态（已截断到 [0, 100]）
    """
    if not model.is_restorative(verb):
        raise ContractViolation(f"{verb} is not a restorative action")
    values = needs.as_dict()
    for name, (mode, amount) in model.restoration[verb].items():
        if mode == "set":
            values[name] = amount
        else:
            values[name] = values[name] + amount
    return NeedsState(**values)
