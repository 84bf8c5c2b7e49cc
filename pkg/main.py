#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
命令行入口：python main.py study --epsilon 1e-8 --N 32,64,128
"""
import sys

from fosls.cli import main

if __name__ == '__main__':
    sys.exit(main())
