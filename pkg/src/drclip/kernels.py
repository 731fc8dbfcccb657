"""Backend dispatch for the bootstrap hot kernel.

Imports the compiled extension when it was built, otherwise falls back to
the numpy implementation. Both produce bit-identical output; the benchmark
in benchmarks/bench_kernels.py compares their speed.
"""

import numpy as np

try:
    from . import _accel as _impl

    BACKEND = "compiled"
except ImportError:  # extension not built
    from . import _accel_py as _impl

    BACKEND = "python"


def w_transform(normals, chol, out=None, impl=None):
    """W = Z_or + Z_ipw - clip(Z_corr, min(Z_or, Z_ipw), max(Z_or, Z_ipw))
    for each row of ``normals`` correlated through the lower factor ``chol``.

    ``impl`` overrides the backend (used by tests and the benchmark).
    """
    normals = np.ascontiguousarray(normals, dtype=np.float64)
    chol = np.ascontiguousarray(chol, dtype=np.float64)
    if normals.ndim != 2 or normals.shape[1] != 3:
        raise ValueError("normals must have shape (b, 3)")
    if chol.shape != (3, 3):
        raise ValueError("chol must have shape (3, 3)")
    if out is None:
        out = np.empty(normals.shape[0])
    (impl or _impl).w_transform_into(normals, chol, out)
    return out
