"""Select the compiled kernels when available.

Set ``CRITX_PURE_PYTHON=1`` to force the numpy fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
tfim_matvec = _kernels_py.tfim_matvec
spin1_matvec = _kernels_py.spin1_matvec

if not os.environ.get("CRITX_PURE_PYTHON"):
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        tfim_matvec = _kernels.tfim_matvec
        spin1_matvec = _kernels.spin1_matvec
