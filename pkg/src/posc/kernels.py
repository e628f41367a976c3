"""Backend selector for the bulk scaling kernel.

Prefers the compiled OpenMP extension and falls back to the numpy
implementation when the extension was not built.  Both expose the same
``scale_into`` contract; ``BACKEND`` records which one won.
"""

import numpy as np

from . import _kernels_py

try:
    from . import _kernels as _impl

    BACKEND = "compiled"
except ImportError:  # extension not built on this host
    _impl = _kernels_py
    BACKEND = "python"

FUNC_IDS = {"sqrt": 0, "log2": 1, "cbrt": 2}


def scale_values(values, function, divisor=1.0, threads=1, out=None, backend=None):
    """Apply a scaling function to an array of active-capital values.

    ``function`` is one of ``sqrt``/``log2``/``cbrt`` (log2 is the shifted
    log2(1+x) form used by the protocol).  ``threads`` > 1 uses the parallel
    path of the selected backend.  ``backend`` forces ``"compiled"`` or
    ``"python"`` (for benchmarking); default is the imported one.
    """
    if function not in FUNC_IDS:
        raise ValueError("unknown scaling function %r" % (function,))
    if divisor < 1.0:
        raise ValueError("divisor must be >= 1")
    values = np.ascontiguousarray(values, dtype=np.float64)
    if out is None:
        out = np.empty_like(values)
    impl = _backend_module(backend)
    impl.scale_into(values, FUNC_IDS[function], float(divisor), out, int(threads))
    return out


def _backend_module(backend):
    if backend is None:
        return _impl
    if backend == "compiled":
        if BACKEND != "compiled":
            raise RuntimeError("compiled kernel backend is not available")
        return _impl
    if backend == "python":
        return _kernels_py
    raise ValueError("unknown backend %r" % (backend,))


def available_backends():
    return ("compiled", "python") if BACKEND == "compiled" else ("python",)
