#!/usr/bin/env python3
# Copyright (c) 2026 abroca_power_kit contributors
"""
ABROCA の有意性検定と検出力分析を行う。

使い方は `python abroca.py --help` と config.yaml を参照。
"""

import sys
from os.path import dirname

sys.path.append(dirname(__file__))

from abroca_kit.cli import main  # noqa: E402

if __name__ == '__main__':
    sys.exit(main())
