#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
Entry Point / 入口点
Command line launcher for fastslice
fastslice 命令行启动器
"""

import sys

from app.cli import main


if __name__ == '__main__':
    sys.exit(main())
