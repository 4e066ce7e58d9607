"""
工具包模块
"""

# 空的__init__.py文件，使目录成为一个Python包 