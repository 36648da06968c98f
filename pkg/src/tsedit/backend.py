"""Kernel backend selection.

The compiled Cython kernels are preferred when importable; otherwise the
numpy fallback is used. ``TSEDIT_BACKEND=python`` (or ``compiled``) forces
a choice, which the benchmark and the parity tests rely on.
"""

import os

from tsedit import _kernels_py


class BackendError(RuntimeError):
    pass


def _load(name):
    if name == "python":
        return _kernels_py
    if name == "compiled":
        from tsedit import _kernels_cy  # may raise ImportError

        return _kernels_cy
    raise BackendError(f"unknown backend {name!r} (expected 'python' or 'compiled')")


def available_backends():
    names = ["python"]
    try:
        _load("compiled")
        names.append("compiled")
    except ImportError:
        pass
    return names


def _select_default():
    forced = os.environ.get("TSEDIT_BACKEND")
    if forced:
        return _load(forced)
    try:
        return _load("compiled")
    except ImportError:
        return _kernels_py


kernels = _select_default()


def use_backend(name):
    """Switch the active kernel set (used by benchmarks/tests). Returns the previous one."""
    global kernels
    previous = kernels
    kernels = _load(name)
    return previous
