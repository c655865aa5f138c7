"""Slow-order certification by eigenvalue sweeps over retained fast modes.

For slow order ``n`` and ``m - n`` retained fast modes the finite loop in
``(x_s, e_s, x_f1)`` coordinates is

    d/dt x_s  = (Ls - Bs K) x_s + Bs K e_s
    d/dt e_s  = (Ls - L Cs) e_s - L Cf x_f1
    d/dt x_f1 = -Bf K x_s + Bf K e_s + Lf x_f1

and ``rho_m`` is the largest real part of its spectrum.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .design import CompensatorDesign, design as make_design
from .errors import DimensionMismatch, EigenSolverFailure, NoneStabilizes, NotConverged

WINDOW = 20
TOL_CONV = 1e-4
MARGIN = 1e-3


@dataclass(frozen=True)
class ClosedLoopMatrix:
    n: int
    m: int
    A: np.ndarray


@dataclass(frozen=True)
class RhoCurve:
    """Sampled ``rho_m`` with tail statistics.

    ``converged`` means the last ``window`` samples spread by less than
    ``tol``.  ``lam_bar`` is the largest tail sample, so ``rho_m <= lam_bar``
    on the tail; ``rho_limit`` is the tail mean.
    """

    n: int
    m: np.ndarray
    rho: np.ndarray
    window: int = WINDOW
    tol: float = TOL_CONV
    margin: float = MARGIN

    @property
    def tail(self) -> np.ndarray:
        return self.rho[-self.window :]

    @property
    def converged(self) -> bool:
        t = self.tail
        return len(t) >= self.window and float(t.max() - t.min()) < self.tol

    @property
    def rho_limit(self) -> float:
        return float(self.tail.mean())

    @property
    def lam_bar(self) -> float:
        return float(self.tail.max())

    @property
    def m0(self) -> int:
        return int(self.m[-len(self.tail)])

    @property
    def certified(self) -> bool:
        return len(self.tail) >= min(self.window, len(self.rho)) and self.lam_bar <= -self.margin


def assemble(n: int, m: int, modal, design: CompensatorDesign) -> ClosedLoopMatrix:
    if m < n:
        raise DimensionMismatch(f"m={m} < n={n}")
    if design.n != n:
        raise DimensionMismatch(f"design built for n={design.n}, asked for n={n}")
    if modal.n_modes < m:
        raise DimensionMismatch(f"modal data has {modal.n_modes} modes, need {m}")
    K, L = design.K, design.L
    lam = modal.lam
    Bs, Bf = modal.B[:n], modal.B[n:m]
    Cs, Cf = modal.C[:, :n], modal.C[:, n:m]
    p = m - n
    A = np.zeros((2 * n + p, 2 * n + p))
    Ls = np.diag(lam[:n])
    BK = Bs @ K
    A[:n, :n] = Ls - BK
    A[:n, n : 2 * n] = BK
    A[n : 2 * n, n : 2 * n] = Ls - L @ Cs
    A[n : 2 * n, 2 * n :] = -L @ Cf
    BfK = Bf @ K
    A[2 * n :, :n] = -BfK
    A[2 * n :, n : 2 * n] = BfK
    A[2 * n :, 2 * n :] = np.diag(lam[n:m])
    return ClosedLoopMatrix(n, m, A)


def rho(matrix) -> float:
    A = matrix.A if isinstance(matrix, ClosedLoopMatrix) else np.asarray(matrix)
    if not np.all(np.isfinite(A)):
        raise EigenSolverFailure("matrix has non-finite entries")
    try:
        ev = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverFailure(str(exc)) from exc
    if ev.size == 0:
        return -np.inf
    return float(ev.real.max())


def _threads(threads):
    if threads is None:
        return min(8, os.cpu_count() or 1)
    return max(1, int(threads))


def sweep(
    n: int,
    m_from: int,
    m_to: int,
    modal,
    design: CompensatorDesign,
    step: int = 1,
    window: int = WINDOW,
    tol: float = TOL_CONV,
    margin: float = MARGIN,
    threads: int | None = None,
    strict: bool = False,
) -> RhoCurve:
    """``rho_m`` for ``m = m_from, m_from + step, ..., m_to``.

    With ``strict=True`` a curve whose tail has not settled raises
    :class:`NotConverged` carrying the curve.
    """
    if m_from < n:
        raise DimensionMismatch(f"m_from={m_from} < n={n}")
    ms = np.arange(m_from, m_to + 1, step)
    full = assemble(n, int(ms[-1]), modal, design).A

    def one(m):
        size = n + int(m)
        return rho(full[:size, :size])

    nt = _threads(threads)
    if nt == 1 or len(ms) < 4:
        vals = [one(m) for m in ms]
    else:
        with ThreadPoolExecutor(nt) as pool:
            vals = list(pool.map(one, ms))
    curve = RhoCurve(n, ms, np.array(vals), window, tol, margin)
    if strict and not curve.converged:
        raise NotConverged(curve)
    return curve


@dataclass(frozen=True)
class DimTable:
    n: np.ndarray
    rho_at_mmax: np.ndarray
    curves: dict = field(default_factory=dict)
    m_max: int = 0
    n_min: int | None = None


def find_min_n(
    modal,
    n_range,
    m_max: int,
    kappa,
    nu,
    window: int = WINDOW,
    tol: float = TOL_CONV,
    margin: float = MARGIN,
    dense: bool = False,
    threads: int | None = None,
    raise_on_none: bool = True,
) -> DimTable:
    """Smallest ``n`` whose tail bound ``lam_bar`` is at most ``-margin``.

    Each ``n`` is swept over the last ``window`` values of ``m`` up to
    ``m_max`` (all ``m > n`` when ``dense``).
    """
    ns = np.array(list(n_range), dtype=int)
    if ns.size == 0:
        raise ValueError("empty n range")
    curves = {}
    vals = []
    n_min = None
    for n in ns:
        d = make_design(modal, int(n), kappa, nu)
        m_from = n + 1 if dense else max(n + 1, m_max - window + 1)
        c = sweep(int(n), int(min(m_from, m_max)), m_max, modal, d, window=window, tol=tol, margin=margin, threads=threads)
        curves[int(n)] = c
        vals.append(c.rho[-1])
        if n_min is None and c.certified:
            n_min = int(n)
    table = DimTable(ns, np.array(vals), curves, m_max, n_min)
    if n_min is None and raise_on_none:
        raise NoneStabilizes(table)
    return table
