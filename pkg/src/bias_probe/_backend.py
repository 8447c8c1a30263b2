"""Kernel backend selection.

Compiled Cython kernels are used when importable; setting the environment
variable ``BIAS_PROBE_PURE_PYTHON=1`` forces the numpy/pure-Python
fallbacks. The choice is made once, at import.
"""

from __future__ import annotations

import importlib
import os
from types import ModuleType

FORCE_PURE = os.environ.get("BIAS_PROBE_PURE_PYTHON", "").strip() not in ("", "0")


def select(compiled: str, fallback: str) -> tuple[ModuleType, str]:
    if not FORCE_PURE:
        try:
            return importlib.import_module(compiled), "compiled"
        except ImportError:
            pass
    return importlib.import_module(fallback), "python"
