"""
仿真引擎异常定义
"""

from typing import Any, List, Optional


class WorldSimError(Exception):
    """所有引擎异常的基类"""


class UnknownEntityError(WorldSimError, KeyError):
    """按名称查找不存在的实体"""

    def __init__(self, name: str, kind: str = "entity"):
        self.name = name
        self.kind = kind
        super().__init__(f"unknown {kind}: {name}")

    def __str__(self) -> str:
        return self.args[0]


class GatingError(WorldSimError):
    """角色不具备执行该动作的技能"""


class ContractViolation(WorldSimError, ValueError):
    """调用方违反了接口约定"""


class ScenarioError(WorldSimError):
    """场景文件解析、校验或实例化失败"""

    def __init__(self, message: str, path: Optional[str] = None, diagnostics: Optional[List[Any]] = None):
        self.path = path
        self.diagnostics = list(diagnostics or [])
        super().__init__(f"{path}: {message}" if path else message)


class GoalValidationError(WorldSimError):
    """目标文件与场景不匹配"""


class GenerationServiceError(WorldSimError):
    """生成服务调用在重试后仍失败"""


class PolicyError(WorldSimError):
    """策略无法给出决策"""


class SessionAborted(WorldSimError):
    """会话因策略持续失败而中止"""

    def __init__(self, message: str, tick: int):
        self.tick = tick
        super().__init__(message)
