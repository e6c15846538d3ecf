"""Kernel backend selection.

The compiled extension ``opideal._kernels`` is used when it imports; otherwise
the numpy versions in ``opideal._kernels_py`` are used. Setting
``OPIDEAL_PURE_PYTHON=1`` forces the fallback.
"""
import importlib
import os

_NAMES = (
    "lr_norm",
    "norming",
    "retract",
    "log_power_sum",
    "power_sum_grad",
    "vertex_log_power_sums",
    "ascend_power_sum",
    "min_norm_weights",
)


def load_backend(name):
    """Return the kernel module for ``"cython"`` or ``"python"``."""
    if name == "cython":
        return importlib.import_module("opideal._kernels")
    if name == "python":
        return importlib.import_module("opideal._kernels_py")
    raise ValueError(f"unknown kernel backend {name!r}")


def available_backends():
    out = ["python"]
    try:
        load_backend("cython")
    except ImportError:
        pass
    else:
        out.insert(0, "cython")
    return out


if os.environ.get("OPIDEAL_PURE_PYTHON", "").lower() in ("1", "true", "yes"):
    _impl = load_backend("python")
    BACKEND = "python"
else:
    try:
        _impl = load_backend("cython")
        BACKEND = "cython"
    except ImportError:
        _impl = load_backend("python")
        BACKEND = "python"

lr_norm = _impl.lr_norm
norming = _impl.norming
retract = _impl.retract
log_power_sum = _impl.log_power_sum
power_sum_grad = _impl.power_sum_grad
vertex_log_power_sums = _impl.vertex_log_power_sums
ascend_power_sum = _impl.ascend_power_sum
min_norm_weights = _impl.min_norm_weights
