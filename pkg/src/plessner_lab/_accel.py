"""Backend switch for the hot kernels.

``PLESSNER_LAB_NUMBA=0`` forces the pure-numpy path even when numba imports.
The flag is read once, at import time.
"""
import os

_flag = os.environ.get("PLESSNER_LAB_NUMBA", "1").strip().lower()
WANT_NUMBA = _flag not in ("0", "false", "no", "off")

try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    HAVE_NUMBA = False

USE_NUMBA = WANT_NUMBA and HAVE_NUMBA
BACKEND = "numba" if USE_NUMBA else "numpy"
