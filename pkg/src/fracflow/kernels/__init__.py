"""Hot numerical kernels: compiled core with a pure-numpy fallback.

Two operations dominate runtime at scale: evaluation of the orthonormal
Gegenbauer/Jacobi basis over nodes, and the graded-panel quadrature behind
the principal-value evaluator.  Both exist twice with identical signatures:
in ``_native`` (Cython) and in ``pure`` (numpy).  The compiled core is used
when it was built; set ``FRACFLOW_PURE_PY=1`` to force the fallback.  See
``benchmarks/bench_kernels.py`` for a timing comparison.
"""

import os

from . import pure as _pure

if os.environ.get("FRACFLOW_PURE_PY", "") == "1":
    _impl = _pure
else:
    try:
        from . import _native as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _pure


def backend() -> str:
    """Name of the active kernel implementation: 'native' or 'pure'."""
    return "pure" if _impl is _pure else "native"


jacobi_sqrt_b = _pure.jacobi_sqrt_b
basis_matrix = _impl.basis_matrix
pv_levels = _impl.pv_levels
