# -*- coding: utf-8 -*-
# Makes core/, app/ and analysis/ importable when pytest runs from the repo root.
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
