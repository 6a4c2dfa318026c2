"""DP kernels with a compiled core and a pure-Python fallback.

The Cython extension is used when it was built; otherwise the identical
pure-Python implementations are bound.  ``BACKEND`` names the choice.  The
exact (rational) solvers always call :mod:`._pykernels` directly.
"""

from . import _pykernels as python

try:
    from . import _ckernels as compiled
except ImportError:  # extension not built
    compiled = None

if compiled is not None:
    vg_dp = compiled.vg_dp
    subset_dp = compiled.subset_dp
    BACKEND = "compiled"
else:
    vg_dp = python.vg_dp
    subset_dp = python.subset_dp
    BACKEND = "python"

__all__ = ["vg_dp", "subset_dp", "BACKEND", "python", "compiled"]
