#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
fosls-shishkin - 奇异摄动反应扩散问题的加权 FOSLS 求解器

主要模块:
- fosls.shishkin_mesh: Shishkin 网格
- fosls.fosls_assembly: 加权最小二乘系统组装
- fosls.convergence_study: 收敛性研究与表格输出
- fosls.cli: 命令行入口
"""
from version import __version__, __author__, __email__, __description__

# 导入主要类和函数
try:
    from fosls.convergence_study import DiscretizationSettings, run_convergence_study, solve_once
    from fosls.manufactured_problem import manufactured_problem
except ImportError:
    # 如果导入失败，可能是因为依赖未安装
    pass

__all__ = [
    '__version__',
    '__author__',
    '__email__',
    '__description__',
    'DiscretizationSettings',
    'run_convergence_study',
    'solve_once',
    'manufactured_problem',
]
