"""Partial pole placement for the slow modal subsystem.

Only the first ``j`` of ``n`` slow modes are shifted.  Gains are zero on
the remaining ``n - j`` modes, so they do not depend on ``n``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import place_poles

from .errors import TargetCollision, Uncontrollable, Unobservable

COLLISION_TOL = 1e-6
VERIFY_RTOL = 1e-8


@dataclass(frozen=True)
class CompensatorDesign:
    n: int
    j: int
    K: np.ndarray  # (m, n), u = -K (x_s - e_s)
    L: np.ndarray  # (n, l)
    targets_state: tuple[float, ...]
    targets_observer: tuple[float, ...]


def _as_inputs(b, n):
    b = np.asarray(b, dtype=float)
    if b.ndim == 1:
        b = b[:, None]
    if b.shape[0] < n:
        raise ValueError(f"need {n} input rows, got {b.shape[0]}")
    return b[:n]


def _check_targets(targets):
    t = np.asarray(targets)
    if np.iscomplexobj(t) and np.any(np.imag(t) != 0):
        raise ValueError("only real targets are supported")
    return np.real(t).astype(float)


def _spectrum_matches(M, expected, rtol=VERIFY_RTOL):
    got = np.sort_complex(np.linalg.eigvals(M))
    exp = np.sort_complex(np.asarray(expected, dtype=complex))
    scale = max(1.0, np.max(np.abs(exp)))
    return np.max(np.abs(got - exp)) <= rtol * scale * max(1.0, len(exp))


def _diagonal_residue_gain(lam1, b1, targets):
    """Gain for ``diag(lam1) - b1 k^T`` with a single input.

    Matching residues of ``det(sI - diag(lam) + b k^T) = prod(s - kappa)``
    at each ``lam_i`` gives ``k_i = prod_l(lam_i - kappa_l) /
    (b_i prod_{m != i}(lam_i - lam_m))``.
    """
    j = len(lam1)
    k = np.empty(j)
    for i in range(j):
        others = np.delete(lam1, i)
        k[i] = np.prod(lam1[i] - targets) / (b1[i] * np.prod(lam1[i] - others))
    return k


def place_state_gain(lam, b, targets, *, _unreachable=Uncontrollable) -> np.ndarray:
    """Gain ``K`` (m x n) so that ``diag(lam) - b K`` has spectrum
    ``targets`` plus the unshifted ``lam[j:]``.

    Parameters
    ----------
    lam : array_like, shape (n,)
        Distinct real slow eigenvalues.
    b : array_like, shape (n,) or (n, m)
        Modal input rows.
    targets : array_like, shape (j,)
        Real closed-loop eigenvalues for the first ``j`` modes.
    """
    lam = np.asarray(lam, dtype=float)
    targets = _check_targets(targets)
    n, j = len(lam), len(targets)
    if j > n:
        raise ValueError(f"cannot shift {j} of {n} modes")
    b = _as_inputs(b, n)
    m = b.shape[1]
    K = np.zeros((m, n))
    if j == 0:
        return K
    for i in range(j):
        if not np.any(b[i] != 0.0):
            raise _unreachable(i + 1)
    retained = lam[j:]
    if retained.size and np.min(np.abs(targets[:, None] - retained[None, :])) < COLLISION_TOL:
        raise TargetCollision("a target coincides with an unshifted eigenvalue")
    lam1 = lam[:j]
    if np.allclose(np.sort(lam1), np.sort(targets), rtol=0, atol=0):
        return K
    if m == 1:
        K[0, :j] = _diagonal_residue_gain(lam1, b[:j, 0], targets)
    else:
        rank = np.linalg.matrix_rank(np.hstack([np.linalg.matrix_power(np.diag(lam1), p) @ b[:j] for p in range(j)]))
        if rank < j:
            raise _unreachable(j)
        K[:, :j] = place_poles(np.diag(lam1), b[:j], targets, method="YT").gain_matrix
    if not _spectrum_matches(np.diag(lam) - b @ K, np.concatenate([targets, retained])):
        raise TargetCollision("placement failed spectrum verification")
    return K


def place_observer_gain(lam, c, targets) -> np.ndarray:
    """Observer gain ``L`` (n x l) placing ``diag(lam) - L c`` by duality.

    ``c`` has shape ``(l, n)`` (or ``(n,)`` for a single output).
    """
    lam = np.asarray(lam, dtype=float)
    c = np.asarray(c, dtype=float)
    if c.ndim == 1:
        c = c[None, :]
    return place_state_gain(lam, c[:, : len(lam)].T, targets, _unreachable=Unobservable).T


def design(modal, n: int, kappa, nu) -> CompensatorDesign:
    """State and observer gains for slow order ``n``."""
    kappa = tuple(float(v) for v in _check_targets(kappa))
    nu = tuple(float(v) for v in _check_targets(nu))
    if len(kappa) != len(nu):
        raise ValueError("state and observer target counts differ")
    lam = modal.lam[:n]
    K = place_state_gain(lam, modal.B[:n], kappa)
    L = place_observer_gain(lam, modal.C[:, :n], nu)
    return CompensatorDesign(n, len(kappa), K, L, kappa, nu)


@dataclass(frozen=True)
class SeparationReport:
    eigenvalues: np.ndarray
    expected: np.ndarray
    max_error: float
    ok: bool


def separation_matrix(design_: CompensatorDesign, modal) -> np.ndarray:
    """The ``2n x 2n`` nominal loop in ``(x_s, e_s)`` coordinates."""
    n = design_.n
    Ls = np.diag(modal.lam[:n])
    BK = modal.B[:n] @ design_.K
    LC = design_.L @ modal.C[:, :n]
    return np.block([[Ls - BK, BK], [np.zeros((n, n)), Ls - LC]])


def verify_separation(design_: CompensatorDesign, modal, rtol: float = VERIFY_RTOL) -> SeparationReport:
    n, j = design_.n, design_.j
    M = separation_matrix(design_, modal)
    got = np.sort_complex(np.linalg.eigvals(M))
    rest = modal.lam[j:n]
    expected = np.sort_complex(
        np.concatenate([design_.targets_state, rest, design_.targets_observer, rest]).astype(complex)
    )
    err = float(np.max(np.abs(got - expected))) if len(got) else 0.0
    scale = max(1.0, float(np.max(np.abs(expected)))) if len(expected) else 1.0
    return SeparationReport(got, expected, err, err <= rtol * scale)
