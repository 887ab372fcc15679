"""Select the compiled kernels when available, else the numpy fallback.

Set ``EPHOLO_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _pykernels

BACKEND = "python"
kernels = _pykernels

if not os.environ.get("EPHOLO_PURE_PYTHON"):
    try:
        from . import _ckernels as kernels  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        pass

eigvals_batch = kernels.eigvals_batch
discriminant_batch = kernels.discriminant_batch
min_gap_batch = kernels.min_gap_batch
best_assignment = kernels.best_assignment
continue_path = kernels.continue_path
