"""Select the eigensolver kernel at import time.

The compiled Cython kernel is used when it was built; otherwise the NumPy
fallback is loaded. Setting ``CHIRALQED_BACKEND=python`` forces the fallback.
"""

import os

from . import _eigen_py

BACKEND = "python"
eigh_kernel = _eigen_py.eigh

if os.environ.get("CHIRALQED_BACKEND", "").lower() != "python":
    try:
        from . import _eigen_cy
    except ImportError:  # extension not built
        _eigen_cy = None
    else:
        BACKEND = "cython"
        eigh_kernel = _eigen_cy.eigh


def kernels():
    """Return ``{name: eigh}`` for every backend importable in this build."""
    found = {"python": _eigen_py.eigh}
    try:
        from . import _eigen_cy as cy
    except ImportError:
        return found
    found["cython"] = cy.eigh
    return found
