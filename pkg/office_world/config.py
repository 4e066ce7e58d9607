"""
配置文件，存储仿真引擎常量、生成服务配置和默认提示词模板
"""

import os

from dotenv import load_dotenv

# 从 .env 读取生成服务凭据
load_dotenv()

PACKAGE_DIR = os.path.dirname(os.path.abspath(__file__))
DATA_DIR = os.path.join(PACKAGE_DIR, "data")
PLAYBOOK_DIR = os.path.join(DATA_DIR, "playbooks")
SCENARIO_SCHEMA_FILE = os.path.join(DATA_DIR, "scenario_schema.json")

# 生成服务配置
GENERATION_API_URL = "https://api.openai.com/v1/chat/completions"
GENERATION_MODEL = "gpt-4o"
API_KEY_ENV = "OFFICE_WORLD_API_KEY"
DEFAULT_TEMPERATURE = 0.6
REQUEST_TIMEOUT = 60  # 秒

# 重试配置
MAX_RETRIES = 3
RETRY_DELAY = 2  # 秒
MAX_ACTION_RETRIES = 3  # 生成结果不在可执行列表中的最大尝试次数
MAX_POLICY_FAILURES = 3  # 连续策略失败次数上限，超过则中止会话

# 并发配置
MAX_WORKERS = 5  # 每个时间步同时进行的策略查询数

# 会话配置
TASK_DURATION_MIN = 60
SIMULATION_DURATION_MIN = 480
DEFAULT_SEED = 0

# 世界常量
HAND_LIMIT = 2
DEFAULT_CAPACITY = 10
SURFACE_CAPACITY = 20
DEFAULT_TEMPERATURE_C = 20
HEATED_THRESHOLD_C = 60
HEATED_FOOD_C = 70

# 记忆配置
EPISODIC_LIMIT = 200
DIGEST_WINDOW_TICKS = 30
PROMPT_BUDGET_CHARS = 12000

# 需求模型（每个时间步）
NEEDS_DECAY = {
    "hydration": 0.25,
    "fullness": 0.15,
    "energy": 0.10,
    "social_fulfillment": 0.10,
}
BLADDER_RATE = 0.05
NEEDS_THRESHOLDS = {
    "hydration": 30,
    "fullness": 30,
    "energy": 30,
    "social_fulfillment": 30,
    "bladder": 70,
}
# (模式, 数值)：add 为增加，set 为直接赋值
NEEDS_RESTORATION = {
    "eat": {"fullness": ("add", 40)},
    "fetch_meal": {"fullness": ("add", 40)},
    "drink": {"hydration": ("add", 40), "bladder": ("add", 20)},
    "refill_supplies": {"hydration": ("add", 40), "bladder": ("add", 20)},
    "rest": {"energy": ("add", 30)},
    "use_restroom": {"bladder": ("set", 0)},
    "stay_chat": {"social_fulfillment": ("add", 5)},
}

# 事件日志
EVENT_SCHEMA = "office-world-events"
EVENT_SCHEMA_VERSION = 1

# 输出配置
OUTPUT_DIR = "output"
REPORT_KINDS = ("occupancy", "activity", "wellbeing", "suboptimal", "resource_stress")

# 默认提示词模板
SYSTEM_PROMPT_TEMPLATE = """You are {name}, a {role} working in an office building.
Gender: {gender}
Profile: {profile}
Appearance: {appearance}
Skills: {skills}
Knowledge: {knowledge}
You act in a text-based world one command at a time. Each tick is one minute."""

INSTRUCTION_TEMPLATE = """Choose exactly one command from the ADMISSIBLE COMMANDS list.
First reason briefly about your situation, then answer in this format:
REASON: <one or two sentences>
ACTION: <command>
Answer "ACTION: wait" to stay idle for a minute.
If the command is a chat command, add a third line:
SAY: <what you say>"""
