"""
办公楼多智能体文本仿真引擎
"""

__version__ = "1.0.0"
__author__ = "Office World Simulator Team"
