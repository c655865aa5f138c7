"""Eigenvalues and eigenfunctions of the scalar and coupled plants.

Scalar plant
    ``dx/dt = x'' + r x`` on (0, 1), Neumann at 0, Dirichlet at 1, with
    closed-form modes ``sqrt(2) cos(omega_k z)``.

Coupled plant
    ``dx/dt = D x'' + R x`` with ``D = diag(1, 2)``,
    ``R = [[alpha, r12], [r21, alpha]]`` and boundary conditions
    ``x1'(0) = x2(0) = 0``, ``x1(1) = x2'(1) = 0``.  Eigenvalues are roots
    of a shooting determinant; eigenfunctions are exact exponential sums.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from . import kernels
from .errors import (
    ConfigError,
    DegenerateDenominator,
    MultipleEigenvalue,
    NormalizationFailure,
    RootNotBracketed,
)

SCAN_WIDTH = 0.25
LOW_K = 5
MULTIPLICITY_TOL = 1e-8


# ---------------------------------------------------------------------------
# plants


@dataclass(frozen=True)
class Boundary:
    """Neumann boundary actuation at z = 1."""


@dataclass(frozen=True)
class InDomain:
    """Pulse actuation ``1/(2 eps)`` on ``[zeta - eps, zeta + eps]``."""

    zeta: float
    eps: float

    def __post_init__(self):
        if not (0.0 < self.zeta - self.eps < self.zeta + self.eps < 1.0) or self.eps <= 0:
            raise ConfigError("zeta", f"pulse [{self.zeta}-{self.eps}, {self.zeta}+{self.eps}] must lie inside (0, 1)")


Pulse = InDomain


@dataclass(frozen=True)
class ScalarPlant:
    r: float
    control: Boundary | InDomain = field(default_factory=Boundary)
    xi: float = 0.25

    def __post_init__(self):
        if not 0.0 <= self.xi <= 1.0:
            raise ConfigError("xi", f"sensor location {self.xi} outside [0, 1]")


@dataclass(frozen=True)
class CoupledPlant:
    alpha: float
    r12: float
    r21: float
    d: tuple[float, float] = (1.0, 2.0)
    actuators: tuple[InDomain, InDomain] = (InDomain(0.3, 0.05), InDomain(0.6, 0.05))
    sensors: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        if tuple(float(v) for v in self.d) != (1.0, 2.0):
            raise ConfigError("d", "only D = diag(1, 2) is supported")
        for xi in self.sensors:
            if not 0.0 <= xi <= 1.0:
                raise ConfigError("xi", f"sensor location {xi} outside [0, 1]")

    def adjoint(self) -> "CoupledPlant":
        return CoupledPlant(self.alpha, self.r21, self.r12, self.d, self.actuators, self.sensors)


# ---------------------------------------------------------------------------
# exponential-sum functions


def expm1_ratio(sigma):
    """``(exp(sigma) - 1) / sigma`` with the removable singularity filled."""
    sigma = np.asarray(sigma, dtype=complex)
    out = np.ones_like(sigma)
    big = np.abs(sigma) > 1e-8
    out[big] = np.expm1(sigma[big]) / sigma[big]
    out[~big] = 1.0 + 0.5 * sigma[~big]
    return out


class ExpSum:
    """Real function ``z -> Re sum_j W[c, j] exp(s_j z)`` on [0, 1].

    Scalar functions (one component) evaluate to 1-D arrays, vector
    functions to arrays of shape ``(ncomp, nz)``.
    """

    def __init__(self, s, W):
        self.s = np.asarray(s, dtype=complex)
        self.W = np.atleast_2d(np.asarray(W, dtype=complex))

    @property
    def ncomp(self) -> int:
        return self.W.shape[0]

    def _eval(self, W, z):
        z = np.asarray(z, dtype=float)
        out = (W @ np.exp(np.multiply.outer(self.s, z).reshape(len(self.s), -1))).real
        out = out.reshape((self.ncomp,) + z.shape)
        return out[0] if self.ncomp == 1 else out

    def __call__(self, z):
        return self._eval(self.W, z)

    def derivative(self, z):
        return self._eval(self.W * self.s[None, :], z)

    def scaled(self, factor: float) -> "ExpSum":
        return ExpSum(self.s, self.W * factor)

    def integral(self, a: float, b: float) -> np.ndarray:
        """Per-component integral over ``[a, b]``."""
        h = b - a
        terms = np.exp(self.s * a) * h * expm1_ratio(self.s * h)
        return (self.W @ terms).real

    def inner(self, other: "ExpSum") -> float:
        """``L2(0, 1)`` inner product summed over components."""
        E = expm1_ratio(self.s[:, None] + other.s[None, :])
        return float(np.einsum("cj,cl,jl->", self.W, other.W, E).real)

    def norm(self) -> float:
        return float(np.sqrt(max(self.inner(self), 0.0)))


@dataclass(frozen=True)
class EigenPair:
    k: int
    branch: int | None
    lam: float
    phi: ExpSum
    psi: ExpSum


# ---------------------------------------------------------------------------
# scalar plant


def omega(k):
    return (2 * np.asarray(k) - 1) * np.pi / 2


def scalar_eigenvalues(r: float, K: int) -> np.ndarray:
    k = np.arange(1, K + 1)
    return r - omega(k) ** 2


def _cosine_mode(w: float) -> ExpSum:
    c = np.sqrt(2.0) / 2
    return ExpSum([1j * w, -1j * w], [[c, c]])


def scalar_spectrum(plant: ScalarPlant, K: int) -> list[EigenPair]:
    """Closed-form modes ``lambda_k = r - omega_k**2``, ``phi_k = psi_k``.

    Returns an empty list for ``K = 0``.
    """
    if K < 0:
        raise ValueError("K must be non-negative")
    lam = scalar_eigenvalues(plant.r, K)
    pairs = []
    for k in range(1, K + 1):
        f = _cosine_mode(float(omega(k)))
        pairs.append(EigenPair(k, None, float(lam[k - 1]), f, f))
    return pairs


# ---------------------------------------------------------------------------
# coupled plant: characteristic equation


def coupled_char_residual(lam_bar, r12: float, r21: float, tol: float = 1e-12):
    """LHS minus RHS of the closed-form characteristic equation.

    Evaluated in complex arithmetic; the real part is returned.  Zero iff
    ``lam_bar + alpha`` is an eigenvalue of the coupled plant.
    """
    lb = np.asarray(lam_bar, dtype=complex)
    p = r12 * r21
    d1 = lb**2 - p
    d2 = lb**2 + 4 * p
    if np.any(np.abs(d1) < tol) or np.any(np.abs(d2) < tol):
        raise DegenerateDenominator(f"characteristic denominator vanishes at lam_bar={lam_bar}")
    root = np.sqrt(lb**2 + 8 * p)
    ep = 0.5 * np.sqrt(-3 * lb + root)
    em = 0.5 * np.sqrt(-3 * lb - root)
    lhs = np.cos(em) * np.cos(ep)
    rhs = -4 * p * (d1 + 3 / np.sqrt(8) * lb * np.sqrt(d1) * np.sin(em) * np.sin(ep)) / (d1 * d2)
    out = (lhs - rhs).real
    return float(out) if out.ndim == 0 else out


def shooting_det(lam_bar, r12: float, r21: float):
    """Boundary determinant from matrix-exponential shooting.

    Entire in ``lam_bar``; shares its real zeros with
    :func:`coupled_char_residual` but has no poles.
    """
    out = kernels.char_det_batch(lam_bar, r12, r21)
    return float(out[0]) if np.ndim(lam_bar) == 0 else out


def asymptotic_eigenvalue(plant: CoupledPlant, k, branch: int):
    """Large-k eigenvalue branches ``alpha - (3 mu^2 -+ sqrt(mu^4 + 4 p)) / 2``."""
    mu = omega(k)
    root = np.sqrt(mu**4 + 4 * plant.r12 * plant.r21)
    sign = -1.0 if branch == 1 else 1.0
    return plant.alpha - (3 * mu**2 + sign * root) / 2


def _seed_table(plant: CoupledPlant, K: int):
    seeds = [(float(asymptotic_eigenvalue(plant, k, br)), k, br) for k in range(1, K + 1) for br in (1, 2)]
    seeds.sort(reverse=True)
    return seeds


def _scan_bounds(plant: CoupledPlant, seeds):
    p = plant.r12 * plant.r21
    hi = max(plant.alpha + np.sqrt(abs(p)), plant.alpha + abs(plant.r12 + plant.r21) / 2) + 5.0
    low_vals = [v for v, k, _ in seeds if k <= LOW_K]
    lowest = min(low_vals)
    below = [v for v, k, _ in seeds if v < lowest]
    lo = 0.5 * (lowest + below[0]) if below else lowest - 10.0
    return lo, hi


def coupled_eigenvalues(plant: CoupledPlant, K: int, xtol: float = 1e-13):
    """Eigenvalues of both branches for ``k = 1..K``, merged descending.

    Returns
    -------
    lam : ndarray
        Eigenvalues, non-increasing.
    labels : list of (k, branch)
        Nominal asymptotic label of each eigenvalue.
    """
    r12, r21, a = plant.r12, plant.r21, plant.alpha
    # branch 1 descends half as fast, so neighbours of deep branch-2
    # seeds come from branch-1 indices beyond K
    seeds = _seed_table(plant, max(int(np.ceil(np.sqrt(2) * K)) + 2, LOW_K + 1))
    lo, hi = _scan_bounds(plant, seeds)

    def f(lam):
        return shooting_det(lam - a, r12, r21)

    # global scan for the dominant part of the spectrum
    npts = int(np.ceil((hi - lo) / SCAN_WIDTH)) + 1
    grid = np.linspace(lo, hi, npts)
    vals = kernels.char_det_batch(grid - a, r12, r21)
    sgn = np.sign(vals)
    scanned = []
    for i in np.nonzero(sgn[:-1] * sgn[1:] <= 0)[0]:
        if sgn[i] == 0:
            if i == 0 or sgn[i - 1] != 0:
                scanned.append(grid[i])
            continue
        if sgn[i + 1] == 0:
            continue
        scanned.append(brentq(f, grid[i], grid[i + 1], xtol=xtol, rtol=4 * np.finfo(float).eps))
    scanned.sort(reverse=True)
    inside = [(v, k, br) for v, k, br in seeds if v > lo]
    if len(inside) != len(scanned):
        k, br = inside[min(len(inside), len(scanned)) - 1][1:] if inside else (1, 1)
        raise RootNotBracketed(
            k, br, f"scan over [{lo:.3f}, {hi:.3f}] found {len(scanned)} roots, expected {len(inside)}"
        )
    found = {(k, br): lam for lam, (_, k, br) in zip(scanned, inside)}

    # seeded brackets for the rest
    all_vals = np.array([v for v, _, _ in seeds])
    for idx, (v, k, br) in enumerate(seeds):
        if (k, br) in found or k > K:
            continue
        gaps = []
        if idx > 0:
            gaps.append(all_vals[idx - 1] - v)
        if idx + 1 < len(all_vals):
            gaps.append(v - all_vals[idx + 1])
        gap = min(gaps)
        w = gap / 32
        for _ in range(5):
            fa, fb = f(v - w), f(v + w)
            if fa * fb <= 0:
                break
            w *= 2
        else:
            raise RootNotBracketed(k, br, f"no sign change within +-{w / 2:.3g} of seed {v:.6g}")
        found[(k, br)] = brentq(f, v - w, v + w, xtol=xtol, rtol=4 * np.finfo(float).eps)

    items = sorted(((lam, key) for key, lam in found.items() if key[0] <= K), reverse=True)
    lam = np.array([x for x, _ in items])
    gaps = -np.diff(lam)
    if np.any(gaps < MULTIPLICITY_TOL):
        i = int(np.argmin(gaps))
        raise MultipleEigenvalue(f"eigenvalues {lam[i]} and {lam[i + 1]} coincide to {gaps[i]:.2e}")
    return lam, [key for _, key in items]


def _shooting_matrix(lam_bar: float, r12: float, r21: float) -> np.ndarray:
    return np.array(
        [[0.0, 1.0, 0.0, 0.0], [lam_bar, 0.0, -r12, 0.0], [0.0, 0.0, 0.0, 1.0], [-r21 / 2, 0.0, lam_bar / 2, 0.0]]
    )


def coupled_eigenfunction(lam_bar: float, r12: float, r21: float) -> ExpSum:
    """Unnormalized eigenfunction as an exponential sum.

    Shoots from z = 0 with ``x1'(0) = x2(0) = 0`` and picks the initial
    direction annihilated by the z = 1 boundary rows.
    """
    M = _shooting_matrix(lam_bar, r12, r21)
    s, V = np.linalg.eig(M)
    Vi = np.linalg.inv(V)
    P1 = ((V * np.exp(s)) @ Vi).real
    S = P1[np.ix_([0, 3], [0, 3])]
    _, _, vt = np.linalg.svd(S)
    v = vt[-1]
    y0 = np.array([v[0], 0.0, 0.0, v[1]])
    coef = Vi @ y0
    W = V[[0, 2], :] * coef[None, :]
    return ExpSum(s, W)


def coupled_spectrum(plant: CoupledPlant, K: int) -> list[EigenPair]:
    """Biorthonormal eigenpairs of both branches for ``k = 1..K``.

    ``phi`` has unit norm; ``psi`` (from the adjoint plant, ``r12`` and
    ``r21`` swapped) is scaled so that ``<phi, psi> = 1``.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    lam, labels = coupled_eigenvalues(plant, K)
    pairs = []
    for value, (k, br) in zip(lam, labels):
        lb = value - plant.alpha
        phi = coupled_eigenfunction(lb, plant.r12, plant.r21)
        phi = phi.scaled(1.0 / phi.norm())
        psi = coupled_eigenfunction(lb, plant.r21, plant.r12)
        ip = phi.inner(psi)
        if abs(ip) < 1e-10 * psi.norm():
            raise NormalizationFailure(f"<phi, psi> vanishes for k={k}, branch={br}")
        pairs.append(EigenPair(k, br, float(value), phi, psi.scaled(1.0 / ip)))
    return pairs


def coupled_leading(plant: CoupledPlant, n_modes: int) -> list[EigenPair]:
    """The ``n_modes`` largest eigenpairs of the merged spectrum."""
    K = max(LOW_K + 1, int(np.ceil(0.6 * n_modes)) + 4)
    while True:
        pairs = coupled_spectrum(plant, K)
        floor = max(
            min(p.lam for p in pairs if p.branch == 1),
            min(p.lam for p in pairs if p.branch == 2),
        )
        head = pairs[:n_modes]
        if len(head) == n_modes and head[-1].lam >= floor:
            return head
        K = int(K * 1.5) + 1


# ---------------------------------------------------------------------------
# Riesz basis diagnostic


@dataclass(frozen=True)
class RieszCloseness:
    k: np.ndarray
    branch_values: np.ndarray  # shape (len(k), 2)
    values: np.ndarray
    tail_sum: float


def riesz_closeness(plant: CoupledPlant, k_range: Sequence[int]) -> RieszCloseness:
    """``||phi^a_{j,k} - e_{j,k}||^2`` for the asymptotic eigenvectors.

    ``e_{1,k} = sqrt(2) (cos(mu_k z), 0)``, ``e_{2,k} = sqrt(2) (0, sin(mu_k z))``
    are the decoupled modes.  Both functions share the profile
    ``sqrt(2) cos`` (or ``sin``), which has unit norm, so the squared
    distance reduces to the squared coefficient difference.
    """
    k = np.asarray(list(k_range), dtype=int)
    mu = omega(k).astype(float)
    p = plant.r12 * plant.r21
    a = 1.0 / np.sqrt(1.0 + p / mu**4)
    # ||sqrt(2) cos(mu z)||^2 = 1 + sin(2 mu) / (2 mu) and similarly for sin
    ncos = 1.0 + np.sin(2 * mu) / (2 * mu)
    nsin = 1.0 - np.sin(2 * mu) / (2 * mu)
    b1 = (a - 1) ** 2 * ncos + (a * plant.r21 / mu**2) ** 2 * ncos
    b2 = (a * plant.r12 / mu**2) ** 2 * nsin + (a - 1) ** 2 * nsin
    vals = np.column_stack([b1, b2])
    total = vals.sum(axis=1)
    return RieszCloseness(k, vals, total, float(total.sum()))
