#!/usr/bin/env python
"""
办公楼多智能体仿真启动脚本
"""

import argparse
import os
import sys


def main():
    """主函数"""
    parser = argparse.ArgumentParser(description="办公楼多智能体仿真", add_help=False)
    parser.add_argument("--api-key", type=str, help="生成服务API密钥")
    args, rest = parser.parse_known_args()

    # 设置API密钥环境变量
    if args.api_key:
        os.environ["OFFICE_WORLD_API_KEY"] = args.api_key

    sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
    from office_world.main import main as office_world_main

    return office_world_main(rest)


if __name__ == "__main__":
    sys.exit(main())
