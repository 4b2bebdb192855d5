"""Kernel backend selection: compiled extension or pure Python.

Both backends expose the same `run_trace` entry point and are required to
produce bit-identical traces.  Selection order: explicit argument, then the
GRASPSIM_BACKEND environment variable (auto | python | cython), then auto,
which prefers the compiled kernel and silently falls back to Python.
"""

import os


def _load_cython():
    from . import _kernels_cy

    return _kernels_cy


def available_backends():
    """Names of usable backends, fastest first."""
    names = []
    try:
        _load_cython()
        names.append("cython")
    except ImportError:
        pass
    names.append("python")
    return names


def get_backend(name=None):
    """Resolve a backend module by name (None reads GRASPSIM_BACKEND).

    Already-resolved backend modules pass through unchanged, so callers can
    resolve once and hand the result to `run`.
    """
    from . import _kernels_py

    if hasattr(name, "run_trace"):
        return name
    choice = name if name is not None else os.environ.get("GRASPSIM_BACKEND", "auto")
    if choice == "python":
        return _kernels_py
    if choice == "cython":
        try:
            return _load_cython()
        except ImportError as exc:
            raise RuntimeError(
                "compiled kernel backend is not available; reinstall with the "
                "extension built or set GRASPSIM_BACKEND=python"
            ) from exc
    if choice == "auto":
        try:
            return _load_cython()
        except ImportError:
            return _kernels_py
    raise ValueError(f"unknown backend {choice!r}; expected auto, python or cython")
