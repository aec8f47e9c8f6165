"""Backend selection for the hot loops.

The compiled extension is used when it imports; otherwise the pure Python
module is used.  Setting the environment variable ``PERCOP_PURE_PYTHON=1``
forces the fallback, which the benchmark and the backend-parity tests use.
"""

import os

from . import _pykernels as python_backend

compiled_backend = None
if not os.environ.get("PERCOP_PURE_PYTHON"):
    try:
        from . import _ckernels as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

_impl = compiled_backend if compiled_backend is not None else python_backend
BACKEND = "compiled" if compiled_backend is not None else "python"

first_return_law = _impl.first_return_law
renewal_convolve = _impl.renewal_convolve
causal_convolve = _impl.causal_convolve
sample_finite = _impl.sample_finite
sample_infinite = _impl.sample_infinite


def get_backend(name=None):
    """Return the kernel module called ``name`` ("compiled" or "python")."""
    if name is None:
        return _impl
    if name == "python":
        return python_backend
    if name == "compiled":
        if compiled_backend is None:
            raise RuntimeError("compiled kernels are not available")
        return compiled_backend
    raise ValueError(f"unknown backend {name!r}")
