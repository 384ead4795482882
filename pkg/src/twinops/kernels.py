"""Kernel selection: compiled extension when available, pure Python otherwise.

Set ``TWINOPS_PURE_PYTHON=1`` to force the fallback (used by the kernel
benchmark and the cross-implementation tests).
"""

from __future__ import annotations

import os

from twinops import _core_py

if os.environ.get("TWINOPS_PURE_PYTHON"):
    _impl = _core_py
    COMPILED = False
else:
    try:
        from twinops import _core as _impl  # type: ignore[no-redef]

        COMPILED = True
    except ImportError:
        _impl = _core_py
        COMPILED = False

astar_search = _impl.astar_search
qos_run = _impl.qos_run

KERNEL_NAME = "compiled" if COMPILED else "pure-python"
