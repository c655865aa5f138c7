"""Closed-loop simulation with many fast modes and along-trajectory checks.

The truncated loop in ``(x_s, e_s, x_f)`` coordinates is linear and time
invariant, so it is advanced with the exact one-step propagator
``expm(A dt)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize_scalar

from . import kernels
from .assumptions import eta_n, hurwitz_zeta
from .design import CompensatorDesign, separation_matrix
from .dimfind import assemble
from .errors import AssumptionFailed, PropagatorFailure, WindowTooShort


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    xs: np.ndarray  # (T, n)
    es: np.ndarray  # (T, n)
    xf: np.ndarray  # (T, M - n)
    lam: np.ndarray  # (M,)
    B: np.ndarray  # (M, m)
    C: np.ndarray  # (l, M)
    K: np.ndarray
    L: np.ndarray

    @property
    def n(self) -> int:
        return self.xs.shape[1]

    @property
    def w(self) -> np.ndarray:
        """``x_s - e_s``, the observer state."""
        return self.xs - self.es

    @property
    def u(self) -> np.ndarray:
        return -self.w @ self.K.T

    @property
    def y(self) -> np.ndarray:
        n = self.n
        return self.xs @ self.C[:, :n].T + self.xf @ self.C[:, n:].T

    @property
    def norm_xs_tilde(self) -> np.ndarray:
        return np.sqrt((self.xs**2).sum(axis=1) + (self.es**2).sum(axis=1))

    @property
    def norm_xs(self) -> np.ndarray:
        return np.linalg.norm(self.xs, axis=1)

    @property
    def norm_es(self) -> np.ndarray:
        return np.linalg.norm(self.es, axis=1)

    @property
    def norm_xf2(self) -> np.ndarray:
        return np.linalg.norm(self.xf, axis=1)

    @property
    def norm_xf1(self) -> np.ndarray:
        return np.abs(self.xf).sum(axis=1)

    @property
    def norm_total(self) -> np.ndarray:
        return np.sqrt(self.norm_xs_tilde**2 + self.norm_xf2**2)

    def sup_w(self) -> np.ndarray:
        """Running ``sup_{[0, t]} ||x_s - e_s||_2`` over the stored samples."""
        return np.maximum.accumulate(np.linalg.norm(self.w, axis=1))


def propagator(A: np.ndarray, dt: float) -> np.ndarray:
    P = expm(A * dt)
    if not np.all(np.isfinite(P)):
        raise PropagatorFailure(f"matrix exponential not finite for dt={dt}")
    return P


def integrate(n: int, M: int, modal, design: CompensatorDesign, x0, e0=None, T: float = 1.0, dt: float = 1e-4,
              record_every: int = 1) -> Trajectory:
    """Simulate the loop with ``M`` modes from modal initial data ``x0``.

    ``e0`` defaults to ``x0[:n]`` (observer starting at zero).
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (M,):
        raise ValueError(f"x0 must have {M} modal coordinates")
    e0 = x0[:n].copy() if e0 is None else np.asarray(e0, dtype=float)
    A = assemble(n, M, modal, design).A
    state0 = np.concatenate([x0[:n], e0, x0[n:M]])
    nsteps = int(round(T / dt)) if T > 0 else 0
    nrec = nsteps // record_every
    if nrec:
        P = propagator(A, dt * record_every)
        states = kernels.propagate(P, state0, nrec)
    else:
        states = state0[None, :]
    t = np.arange(len(states)) * dt * record_every
    return Trajectory(
        t, states[:, :n], states[:, n : 2 * n], states[:, 2 * n :], modal.lam[:M], modal.B[:M], modal.C[:, :M],
        design.K, design.L,
    )


# ---------------------------------------------------------------------------
# decay fits


@dataclass(frozen=True)
class DecayFit:
    growth: float  # slope of log-norm; negative for decay
    prefactor: float
    residual: float
    window: tuple[float, float]

    @property
    def decay(self) -> float:
        return -self.growth


def fit_decay(t, norms, window: tuple[float, float] | None = None, floor: float = 1e-12, min_points: int = 10) -> DecayFit:
    """Least-squares fit of ``log ||.|| = log C + growth * t`` on a tail window.

    Samples at or below ``floor`` times the largest norm are dropped.  The
    default window is the second half of the remaining record.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(norms, dtype=float)
    usable = y > floor * (np.max(y) if len(y) else 0.0)
    if window is None:
        if not usable.any():
            raise WindowTooShort("no samples above the noise floor")
        t_last = t[usable][-1]
        window = (t[0] + 0.5 * (t_last - t[0]), t_last)
    sel = (t >= window[0]) & (t <= window[1]) & usable
    if sel.sum() < min_points:
        raise WindowTooShort(f"only {int(sel.sum())} usable samples in window {window}")
    coef, res, *_ = np.polyfit(t[sel], np.log(y[sel]), 1, full=True)
    rms = float(np.sqrt(res[0] / sel.sum())) if len(res) else 0.0
    return DecayFit(float(coef[0]), float(np.exp(coef[1])), rms, (float(t[sel][0]), float(t[sel][-1])))


# ---------------------------------------------------------------------------
# bounds along trajectories


@dataclass(frozen=True)
class BoundReport:
    """Outcome of checking ``value(t) <= bound(t)`` on every stored sample.

    ``tightness`` is the largest ratio ``value / bound``.
    """

    name: str
    min_slack: float
    worst_time: float
    worst_index: int | None
    tightness: float
    ok: bool


def _check(name, bound, value, t, index=None, rtol=1e-9):
    # rtol absorbs rounding in equality cases such as pure diagonal decay
    slack = bound - value + rtol * np.abs(bound)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(bound > 0, value / bound, np.where(value > 0, np.inf, 0.0))
    tight = float(np.max(ratio)) if ratio.size else 0.0
    i = np.unravel_index(np.argmin(slack), slack.shape)
    where = None if slack.ndim == 1 else (int(i[1]) if index is None else int(index[i[1]]))
    return BoundReport(name, float(slack[i]), float(t[i[0]]), where, tight, bool(slack[i] >= 0))


def validate_lemma_xk(traj: Trajectory, C1: float, alpha: float) -> BoundReport:
    """``|x_k(t)| <= e^{lambda_{n+1} t}|x_k(0)| + C1 ||K|| k^-alpha sup ||x_s - e_s||``."""
    n = traj.n
    k = np.arange(n + 1, n + 1 + traj.xf.shape[1])
    lam_n1 = traj.lam[n]
    nk = np.linalg.norm(traj.K, 2)
    free = np.exp(lam_n1 * traj.t)[:, None] * np.abs(traj.xf[0])[None, :]
    forced = C1 * nk * traj.sup_w()[:, None] / k[None, :] ** alpha
    return _check("xk", free + forced, np.abs(traj.xf), traj.t, k)


def validate_l2_l1_bounds(traj: Trajectory, C1: float, alpha: float, l1: bool = True) -> list[BoundReport]:
    """ell_2 bound with ``C2 = C1 pi / sqrt(6)`` and, under decay ``alpha > 1``,
    the ell_1 bound with the Hurwitz zeta factor."""
    n = traj.n
    nk = np.linalg.norm(traj.K, 2)
    decay = np.exp(traj.lam[n] * traj.t)
    sw = traj.sup_w()
    C2 = C1 * np.pi / np.sqrt(6)
    b2 = decay * traj.norm_xf2[0] + C2 / np.sqrt(n**alpha) * nk * sw
    out = [_check("xf_l2", b2, traj.norm_xf2, traj.t)]
    if l1 and alpha > 1:
        b1 = decay * traj.norm_xf1[0] + C1 * hurwitz_zeta(alpha, n + 1) * nk * sw
        out.append(_check("xf_l1", b1, traj.norm_xf1, traj.t))
    return out


def z_series(traj: Trajectory, groups=None) -> np.ndarray:
    """``||z(t)||_1`` with ``z_k = c_k x_k`` or, given groups, ``z_j = sum_{S_j} c_k x_k``.

    Group indices are global 1-based mode numbers; modes beyond the
    simulated truncation are ignored.
    """
    n = traj.n
    Cf = traj.C[:, n:]
    contrib = traj.xf[:, None, :] * Cf[None, :, :]  # (T, l, M-n)
    if groups is None:
        return np.abs(contrib).sum(axis=(1, 2))
    M = traj.lam.shape[0]
    total = np.zeros(len(traj.t))
    for g in groups:
        idx = [k - n - 1 for k in g if n < k <= M]
        if idx:
            total += np.abs(contrib[:, :, idx].sum(axis=2)).sum(axis=1)
    return total


def validate_z_bound(traj: Trajectory, c2: float, C1: float | None = None, alpha: float | None = None,
                     C3: float | None = None, groups=None, labels=None) -> BoundReport:
    """``||z(t)||_1`` against the IOS estimate for either coefficient regime.

    With decay ``alpha > 1``: ``c2 eta_n(t) ||x_f(0)||_2 + c2 C1 zeta(alpha, n+1) ||K|| sup||w||``.
    With a grouping: ``c2 eta_n(t) ||x_f(0)||_2 + C3 zeta(2, j0) ||K|| sup||w||``.
    The bound is checked for ``t > 0``.
    """
    n = traj.n
    t = traj.t[1:]
    eta = eta_n(t, traj.lam, n, K_trunc=len(traj.lam)).value
    nk = np.linalg.norm(traj.K, 2)
    sw = traj.sup_w()[1:]
    if groups is None:
        second = c2 * C1 * hurwitz_zeta(alpha, n + 1) * nk * sw
        name = "z_l1_decay"
    else:
        j0 = min(j for g, j in zip(groups, labels) if max(g) > n)
        second = C3 * hurwitz_zeta(2.0, j0) * nk * sw
        name = "z_l1_grouped"
    bound = c2 * eta * traj.norm_xf2[0] + second
    z = z_series(traj, groups)[1:]
    return _check(name, bound, z, t)


def slow_decay_constants(A_tilde: np.ndarray, t_max: float | None = None, n_grid: int = 2000, shrink: float = 0.95):
    """``lambda_t`` and ``M_t`` with ``||e^{A t}|| <= M_t e^{-lambda_t t}``.

    ``lambda_t`` is ``shrink`` times the spectral abscissa margin; ``M_t``
    is the supremum of ``||e^{A t}|| e^{lambda_t t}`` over a grid that is
    dense near 0 and extends until the product has decayed, refined by a
    bounded search around the best grid point.
    """
    a = -float(np.max(np.linalg.eigvals(A_tilde).real))
    if a <= 0:
        raise ValueError("slow matrix is not Hurwitz")
    lt = shrink * a
    if t_max is None:
        t_max = 30.0 / ((1 - shrink) * a)
    grid = np.unique(np.concatenate([np.linspace(0, t_max, n_grid), np.geomspace(1e-6, t_max, n_grid)]))
    shifted = A_tilde + lt * np.eye(len(A_tilde))

    def g(s):
        return np.linalg.norm(expm(shifted * s), 2)

    vals = np.array([g(s) for s in grid])
    i = int(np.argmax(vals))
    best = float(vals[i])
    if 0 < i < len(grid) - 1:
        # polish the grid maximum between its neighbours
        opt = minimize_scalar(lambda s: -g(s), bounds=(grid[i - 1], grid[i + 1]), method="bounded",
                              options={"xatol": 1e-12})
        best = max(best, float(-opt.fun))
    return lt, best


def validate_slow_iss(traj: Trajectory, modal, design: CompensatorDesign, z_norm1, lam_t: float | None = None,
                      M_t: float | None = None) -> BoundReport:
    """``||x~_s(t)|| <= M_t e^{-lambda_t t} ||x~_s(0)|| + M_t ||L|| int_0^t ||z||_1``."""
    A_t = separation_matrix(design, modal)
    if lam_t is None or M_t is None:
        lam_t, M_t = slow_decay_constants(A_t)
    Cs2 = M_t * np.linalg.norm(design.L, 2)
    z = np.asarray(z_norm1)
    dt = np.diff(traj.t)
    integral = np.concatenate([[0.0], np.cumsum(0.5 * (z[1:] + z[:-1]) * dt)])
    bound = M_t * np.exp(-lam_t * traj.t) * traj.norm_xs_tilde[0] + Cs2 * integral
    return _check("slow_iss", bound, traj.norm_xs_tilde, traj.t)


@dataclass(frozen=True)
class LemmaConstants:
    """Constants feeding the trajectory checks.

    ``regime`` is ``"decay"`` when the coefficient products decay like
    ``k^-alpha`` with ``alpha > 1`` and ``"grouped"`` when only the grouped
    sums are controlled, in which case ``alpha = 1``.
    """

    regime: str
    C1: float
    alpha: float
    c2: float
    C3: float | None
    groups: tuple | None
    labels: tuple | None
    lam_t: float
    M_t: float


def lemma_constants(report, modal, design: CompensatorDesign) -> LemmaConstants:
    """Pick the regime from an :class:`~modalstab.assumptions.AssumptionReport`."""
    lam_t, M_t = slow_decay_constants(separation_matrix(design, modal))
    if report.A2a.ok:
        return LemmaConstants("decay", report.A2a.d1, report.A2a.alpha, report.A2a.c2, None, None, None, lam_t, M_t)
    if report.A2b.ok and report.A2b.grouping is not None:
        g = report.A2b.grouping
        return LemmaConstants(
            "grouped", report.A2b.c1 / report.A2b.c3, 1.0, report.A2b.c2, report.C3, g.groups, g.labels, lam_t, M_t
        )
    raise AssumptionFailed("A2", report.A2a.witness)


def validate_lemmas(traj: Trajectory, modal, design: CompensatorDesign, const: LemmaConstants,
                    scale: float = 1.0) -> list[BoundReport]:
    """Run every trajectory check with all constants multiplied by ``scale``."""
    C1, c2 = scale * const.C1, scale * const.c2
    out = [validate_lemma_xk(traj, C1, const.alpha)]
    out += validate_l2_l1_bounds(traj, C1, const.alpha, l1=const.regime == "decay")
    if const.regime == "decay":
        out.append(validate_z_bound(traj, c2, C1, const.alpha))
        z = z_series(traj)
    else:
        out.append(validate_z_bound(traj, c2, C3=scale * const.C3, groups=const.groups, labels=const.labels))
        z = z_series(traj, const.groups)
    out.append(validate_slow_iss(traj, modal, design, z, const.lam_t, scale * const.M_t))
    return out


# ---------------------------------------------------------------------------
# fields


def reconstruct_field(traj: Trajectory, pairs, z_grid, every: int = 1) -> np.ndarray:
    """``x(z, t) = sum_k x_k(t) phi_k(z)`` on the grid.

    Returns shape ``(T, nz)`` for scalar plants and ``(T, 2, nz)`` for the
    coupled plant.
    """
    coords = np.hstack([traj.xs, traj.xf])[::every]
    z = np.asarray(z_grid, dtype=float)
    Phi = np.array([p.phi(z) for p in pairs[: coords.shape[1]]])
    return np.tensordot(coords, Phi, axes=([1], [0]))


def constant_profile_coords(pairs, value=1.0) -> np.ndarray:
    """Modal coordinates ``<x0, psi_k>`` of a constant profile, in closed form."""
    v = np.atleast_1d(np.asarray(value, dtype=float))
    out = np.empty(len(pairs))
    for i, p in enumerate(pairs):
        ints = np.atleast_1d(p.psi.integral(0.0, 1.0))
        out[i] = float(np.dot(np.broadcast_to(v, ints.shape), ints))
    return out


def l2_error(field_values, target, z_grid) -> float:
    """Trapezoidal L2(0, 1) distance, summed over components."""
    diff = np.asarray(field_values) - np.asarray(target)
    return float(np.sqrt(np.trapezoid((diff**2).reshape(-1, len(z_grid)).sum(axis=0), z_grid)))
