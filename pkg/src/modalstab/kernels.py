"""Kernel dispatch: compiled extension when importable, else pure Python.

Set ``MODALSTAB_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("MODALSTAB_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"


def char_det_batch(lam_bar, r12, r21):
    import numpy as np

    lam_bar = np.ascontiguousarray(np.atleast_1d(lam_bar), dtype=float)
    return _impl.char_det_batch(lam_bar, float(r12), float(r21))


def propagate(step, x0, nsteps):
    import numpy as np

    step = np.ascontiguousarray(step, dtype=float)
    x0 = np.ascontiguousarray(x0, dtype=float)
    return _impl.propagate(step, x0, int(nsteps))
