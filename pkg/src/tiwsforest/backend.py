"""Select the tree-walk kernel at import time.

Prefers the compiled Cython kernel, falls back to the numpy walker.
Set TIWSFOREST_BACKEND=python or =compiled to force one (the latter raises
if the extension was not built). Both kernels produce bit-identical output.
"""

import os

from . import _pathlen as _py_impl

_forced = os.environ.get("TIWSFOREST_BACKEND", "").strip().lower()

if _forced == "python":
    _impl = _py_impl
elif _forced == "compiled":
    from . import _pathlen_cy as _impl  # type: ignore[no-redef]
elif _forced:
    raise ValueError(
        f"TIWSFOREST_BACKEND must be 'python' or 'compiled', got {_forced!r}"
    )
else:
    try:
        from . import _pathlen_cy as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _py_impl

BACKEND = _impl.NAME
path_lengths = _impl.path_lengths
