"""Pick the kernel implementation at import time.

``PROBCASCADE_BACKEND`` may be ``auto`` (default: compiled if importable),
``cython`` (fail if missing) or ``python``.
"""

import importlib
import os

_choice = os.environ.get("PROBCASCADE_BACKEND", "auto").lower()
if _choice not in ("auto", "cython", "python"):
    raise ImportError(f"PROBCASCADE_BACKEND must be auto, cython or python, not {_choice!r}")

if _choice == "python":
    from . import _pykernels as kernels
else:
    try:
        from . import _ckernels as kernels
    except ImportError:
        if _choice == "cython":
            raise
        from . import _pykernels as kernels


def available() -> list[str]:
    names = ["python"]
    try:
        importlib.import_module(f"{__package__}._ckernels")
    except ImportError:
        return names
    return ["cython", *names]


def load(name: str):
    if name == "python":
        return importlib.import_module(f"{__package__}._pykernels")
    if name == "cython":
        return importlib.import_module(f"{__package__}._ckernels")
    raise ValueError(f"unknown backend {name!r}")


BACKEND = kernels.NAME
