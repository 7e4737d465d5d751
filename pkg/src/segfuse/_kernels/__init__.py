"""Hot kernels: compiled extension when available, numpy fallback otherwise.

Set ``SEGFUSE_PURE_PYTHON=1`` to force the fallback (used by the benchmark
and by CI to exercise both paths). Both backends are result-identical.
"""

import os

from segfuse._kernels import _py

if os.environ.get("SEGFUSE_PURE_PYTHON", "") not in ("", "0"):
    _impl = _py
else:
    try:
        from segfuse._kernels import _core as _impl
    except ImportError:
        _impl = _py

BACKEND = "compiled" if _impl is not _py else "python"

label_components = _impl.label_components
best_split_scan = _impl.best_split_scan
