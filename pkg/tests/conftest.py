"""Ensure the tests directory itself is importable (for oracles.py)."""

import os
import sys

sys.path.insert(0, os.path.dirname(__file__))
