"""Kernel backend selection.

The compiled ``_kernels`` extension is used when it imports; otherwise the
numpy implementations in ``_kernels_py`` take over. Setting
``SJLAB_PURE_PYTHON=1`` forces the fallback.
"""
import os

from . import _kernels_py as python_backend

compiled_backend = None
if not os.environ.get("SJLAB_PURE_PYTHON"):
    try:
        from . import _kernels as compiled_backend
    except ImportError:
        compiled_backend = None

_active = compiled_backend or python_backend

BACKEND = _active.BACKEND
cholesky_lower = _active.cholesky_lower
solve_complex = _active.solve_complex
siegel_metric_batch = _active.siegel_metric_batch
jacobi_metric_batch = _active.jacobi_metric_batch
christoffel_contract = _active.christoffel_contract


def backends():
    """All importable backends, compiled first."""
    return [b for b in (compiled_backend, python_backend) if b is not None]
