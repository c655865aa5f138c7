"""Pure-Python twins of the compiled kernels in ``_kernels.pyx``."""

import numpy as np
from scipy.linalg import expm


def shooting_matrices(lam_bar, r12, r21):
    """Balanced first-order system matrices, stacked along axis 0.

    The state is ``(x1, x1'/sigma, x2, x2'/sigma)`` with
    ``sigma = sqrt(max(|lam_bar|, 1))`` so all entries are O(sigma).
    """
    lam_bar = np.atleast_1d(np.asarray(lam_bar, dtype=float))
    sigma = np.sqrt(np.maximum(np.abs(lam_bar), 1.0))
    m = np.zeros(lam_bar.shape + (4, 4))
    m[..., 0, 1] = sigma
    m[..., 1, 0] = lam_bar / sigma
    m[..., 1, 2] = -r12 / sigma
    m[..., 2, 3] = sigma
    m[..., 3, 0] = -0.5 * r21 / sigma
    m[..., 3, 2] = 0.5 * lam_bar / sigma
    return m


def char_det_batch(lam_bar, r12, r21):
    e = expm(shooting_matrices(lam_bar, r12, r21))
    return e[..., 0, 0] * e[..., 3, 3] - e[..., 0, 3] * e[..., 3, 0]


def propagate(step, x0, nsteps):
    out = np.empty((nsteps + 1, x0.shape[0]))
    out[0] = x0
    for k in range(nsteps):
        out[k + 1] = step @ out[k]
    return out
