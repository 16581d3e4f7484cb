"""Select the kernel implementation at import time.

The compiled extension is used when it is importable; ``ORIENTPERC_PURE=1``
forces the pure-Python kernels.
"""

import os

from . import _pykernels

kernels = _pykernels
if not os.environ.get("ORIENTPERC_PURE"):
    try:
        from . import _ckernels as kernels  # noqa: F811
    except ImportError:
        pass

NAME = kernels.NAME
