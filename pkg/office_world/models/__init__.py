"""
仿真领域模型：世界状态、动作目录、需求、对话、智能体认知、评估与分析
"""
