#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Version information for fosls-shishkin
"""

__version__ = '1.0.0'
__author__ = 'Lyoko-Jeremie'
__email__ = ''
__description__ = '奇异摄动反应扩散问题的加权 FOSLS 有限元求解与 Shishkin 网格收敛研究'
