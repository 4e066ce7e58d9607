"""
生成服务客户端：HTTP 调用、录制与回放
"""

import json
import os
import threading
import time
from typing import Dict, List, Optional

import requests

from office_world.config import (
    API_KEY_ENV,
    DEFAULT_TEMPERATURE,
    GENERATION_API_URL,
    GENERATION_MODEL,
    MAX_RETRIES,
    REQUEST_TIMEOUT,
    RETRY_DELAY,
)
from office_world.models.errors import GenerationServiceError
from office_world.utils.logger import get_logger

logger = get_logger("GenerationClient")

Message = Dict[str, str]


class GenerationClient:
    """通过 HTTP 调用生成服务"""

    def __init__(self, endpoint: Optional[str] = None, model_id: Optional[str] = None,
                 temperature: float = DEFAULT_TEMPERATURE, api_key: Optional[str] = None):
        """
        初始化生成服务客户端

        参数:
        - endpoint: 服务地址，None 时使用默认地址
        - model_id: 模型 ID，None 时使用默认模型
        - temperature: 采样温度
        - api_key: 访问凭据，None 时从环境变量 OFFICE_WORLD_API_KEY 读取
        """
        self.endpoint = endpoint or GENERATION_API_URL
        self.model_id = model_id or GENERATION_MODEL
        self.temperature = temperature
        self.api_key = api_key or os.environ.get(API_KEY_ENV, "")

        if not self.api_key:
            logger.warning(f"API key not provided. Please set {API_KEY_ENV} environment variable or provide it directly.")

    def generate(self, messages: List[Message], agent: Optional[str] = None) -> str:
        """
        请求一次生成

        参数:
        - messages: [{"role", "content"}] 消息列表
        - agent: 发起请求的智能体（仅用于日志）

        返回:
        - 生成的文本

        异常:
        - GenerationServiceError: 重试 MAX_RETRIES 次后仍失败
        """
        last_error = None
        for attempt in range(MAX_RETRIES):
            try:
                return self._call_api(messages)
            except (requests.RequestException, ValueError, KeyError, IndexError) as e:
                last_error = e
                logger.error(f"Generation call for {agent or 'unknown'} failed (attempt {attempt + 1}/{MAX_RETRIES}): {e}")
                if attempt < MAX_RETRIES - 1:
                    time.sleep(RETRY_DELAY * (attempt + 1))
        raise GenerationServiceError(f"generation service failed after {MAX_RETRIES} attempts: {last_error}")

    def _call_api(self, messages: List[Message]) -> str:
        headers = {
            "Authorization": f"Bearer {self.api_key}",
            "Content-Type": "application/json",
        }
        payload = {
            "model": self.model_id,
            "temperature": self.temperature,
            "messages": messages,
        }
        logger.debug(f"Generation request payload: {json.dumps(payload, ensure_ascii=False)}")

        response = requests.post(self.endpoint, headers=headers, json=payload, timeout=REQUEST_TIMEOUT)
        response.raise_for_status()
        data = response.json()
        # 兼容 {"text": ...} 与 chat completions 两种响应
        if "text" in data:
            text = data["text"]
        else:
            text = data["choices"][0]["message"]["content"]
        logger.debug(f"Generation reply: {text}")
        return text


class RecordedGenerationClient:
    """
    回放录制好的回复，用于测试和可复现的会话

    录制文件格式：{"agents": {name: [reply, ...]}, "default": [reply, ...]}
    某个智能体的队列用完后，循环使用 default 中的回复。
    """

    def __init__(self, replies: Dict[str, List[str]], default: Optional[List[str]] = None):
        self._queues = {name: list(items) for name, items in replies.items()}
        self._default = list(default or ["REASON: nothing to do.\nACTION: wait"])
        self._default_index: Dict[str, int] = {}
        self._lock = threading.Lock()
        self.requests: List[Dict[str, object]] = []

    @classmethod
    def from_file(cls, path: str) -> "RecordedGenerationClient":
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
        return cls(data.get("agents", {}), data.get("default"))

    def generate(self, messages: List[Message], agent: Optional[str] = None) -> str:
        with self._lock:
            self.requests.append({"agent": agent, "messages": [dict(m) for m in messages]})
            queue = self._queues.get(agent or "")
            if queue:
                return queue.pop(0)
            index = self._default_index.get(agent or "", 0)
            self._default_index[agent or ""] = index + 1
            return self._default[index % len(self._default)]


class RecordingClient:
    """包装另一个客户端，按智能体保存全部回复"""

    def __init__(self, inner, path: str):
        self.inner = inner
        self.path = path
        self.replies: Dict[str, List[str]] = {}
        self._lock = threading.Lock()

    def generate(self, messages: List[Message], agent: Optional[str] = None) -> str:
        text = self.inner.generate(messages, agent)
        with self._lock:
            self.replies.setdefault(agent or "", []).append(text)
        return text

    def save(self) -> None:
        with open(self.path, "w", encoding="utf-8") as f:
            json.dump({"agents": self.replies}, f, ensure_ascii=False, indent=2, sort_keys=True)
        logger.info(f"Recorded generation replies saved to {self.path}")
