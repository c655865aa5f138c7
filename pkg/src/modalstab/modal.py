"""Modal input and output coefficients.

For a state expanded as ``x = sum_k x_k phi_k`` the modal dynamics are
``dx_k/dt = lambda_k x_k + b_k^T u`` and the outputs are
``y = sum_k c_k x_k``.  :class:`ModalCoefficients` stores ``b_k`` as the
rows of ``B`` (shape ``(N, m)``) and ``c_k`` as the columns of ``C``
(shape ``(l, N)``).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad

from .spectral import (
    Boundary,
    CoupledPlant,
    EigenPair,
    InDomain,
    ScalarPlant,
    coupled_leading,
    omega,
    scalar_spectrum,
)


@dataclass(frozen=True)
class ModalCoefficients:
    lam: np.ndarray
    B: np.ndarray
    C: np.ndarray
    pairs: tuple[EigenPair, ...] = ()

    def __post_init__(self):
        N = len(self.lam)
        if self.B.shape[0] != N or self.C.shape[1] != N:
            raise ValueError(f"inconsistent modal dimensions: lam {N}, B {self.B.shape}, C {self.C.shape}")
        if not (np.all(np.isfinite(self.B)) and np.all(np.isfinite(self.C))):
            raise ValueError("non-finite modal coefficient")

    @property
    def n_modes(self) -> int:
        return len(self.lam)

    @property
    def n_inputs(self) -> int:
        return self.B.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.C.shape[0]

    def truncated(self, N: int) -> "ModalCoefficients":
        if N > self.n_modes:
            raise ValueError(f"requested {N} modes, only {self.n_modes} available")
        return ModalCoefficients(self.lam[:N], self.B[:N], self.C[:, :N], self.pairs[:N])

    def with_coefficients(self, B=None, C=None) -> "ModalCoefficients":
        return ModalCoefficients(
            self.lam, self.B if B is None else np.asarray(B, float), self.C if C is None else np.asarray(C, float), self.pairs
        )


# ---------------------------------------------------------------------------
# scalar plant


def boundary_b(k, sign: str = "derived"):
    """Coefficient of Dirichlet actuation ``x(1) = u``, namely ``-d/dz phi_k(1)``.

    ``sign="derived"`` gives ``(-1)^(k+1) (2k-1) pi / sqrt(2)``;
    ``sign="paper"`` flips every entry to ``(-1)^k (2k-1) pi / sqrt(2)``.
    """
    k = np.asarray(k)
    mag = (2 * k - 1) * np.pi / np.sqrt(2)
    s = np.where(k % 2 == 1, 1.0, -1.0)
    if sign == "paper":
        s = -s
    elif sign != "derived":
        raise ValueError(f"unknown sign convention {sign!r}")
    return s * mag


def indomain_b(k, zeta: float, eps: float):
    """Pulse coefficient ``<f_{zeta,eps}, phi_k>`` in closed form."""
    k = np.asarray(k)
    w = omega(k)
    return 2 * np.sqrt(2) * np.cos(w * zeta) * np.sin(w * eps) / ((2 * k - 1) * np.pi * eps)


def point_c(k, xi: float):
    """Point-measurement coefficient ``phi_k(xi) = sqrt(2) cos(omega_k xi)``."""
    return np.sqrt(2) * np.cos(omega(np.asarray(k)) * xi)


def scalar_modal(plant: ScalarPlant, N: int, sign: str = "derived", with_pairs: bool = True) -> ModalCoefficients:
    k = np.arange(1, N + 1)
    lam = plant.r - omega(k) ** 2
    if isinstance(plant.control, Boundary):
        b = boundary_b(k, sign)
    elif isinstance(plant.control, InDomain):
        b = indomain_b(k, plant.control.zeta, plant.control.eps)
    else:
        raise TypeError(f"unknown control kind {plant.control!r}")
    c = point_c(k, plant.xi)
    pairs = tuple(scalar_spectrum(plant, N)) if with_pairs else ()
    return ModalCoefficients(lam.astype(float), b.reshape(N, 1).astype(float), c.reshape(1, N).astype(float), pairs)


# ---------------------------------------------------------------------------
# coupled plant


def coupled_modal(plant: CoupledPlant, spectrum: Sequence[EigenPair]) -> ModalCoefficients:
    """Coefficients for diagonal pulse actuation and pointwise sensing.

    Input ``i`` drives component ``i`` through its pulse, so row ``k`` of
    ``B`` is ``(<f_1, psi_{k,1}>, <f_2, psi_{k,2}>)``.  Output ``j`` reads
    component ``j`` at ``xi_j``.
    """
    N = len(spectrum)
    B = np.empty((N, 2))
    C = np.empty((2, N))
    for idx, pair in enumerate(spectrum):
        for i, act in enumerate(plant.actuators):
            B[idx, i] = pair.psi.integral(act.zeta - act.eps, act.zeta + act.eps)[i] / (2 * act.eps)
        for j, xi in enumerate(plant.sensors):
            C[j, idx] = pair.phi(np.array([xi]))[j, 0]
    lam = np.array([p.lam for p in spectrum])
    return ModalCoefficients(lam, B, C, tuple(spectrum))


def build_modal(plant, N: int, sign: str = "derived") -> ModalCoefficients:
    """Modal coefficients for the ``N`` leading modes of either plant."""
    if isinstance(plant, ScalarPlant):
        return scalar_modal(plant, N, sign)
    if isinstance(plant, CoupledPlant):
        return coupled_modal(plant, coupled_leading(plant, N))
    raise TypeError(f"unknown plant {plant!r}")


# ---------------------------------------------------------------------------
# diagnostics


def admissibility_profile(lam, C, h_values=(10.0, 1e2, 1e3, 1e4)):
    """``(1/h) sum_{lambda_k >= -h} |c_{j,k}|^2`` for each h and output j.

    Returns
    -------
    values : ndarray, shape (len(h_values), l)
    m_c : float
        The fitted constant, the maximum over all entries.
    """
    lam = np.asarray(lam)
    C = np.atleast_2d(C)
    if np.min(lam) > -max(h_values):
        raise ValueError("spectrum too short to cover the largest h")
    vals = np.array([(C[:, lam >= -h] ** 2).sum(axis=1) / h for h in h_values])
    return vals, float(vals.max())


def input_tail(lam, B, n: int, K: int):
    """Partial sums of ``|b_k|^2 / lambda_k^2`` over ``k = n+1..K`` and ``..2K``."""
    lam = np.asarray(lam)
    w = (np.atleast_2d(B.T).T ** 2).sum(axis=1) / lam**2
    if 2 * K > len(lam):
        raise ValueError(f"need {2 * K} modes, have {len(lam)}")
    return float(w[n:K].sum()), float(w[n : 2 * K].sum())


def project(profile: Callable, pairs: Sequence[EigenPair]) -> np.ndarray:
    """Modal coordinates ``<x0, psi_k>`` by adaptive quadrature."""
    out = np.empty(len(pairs))
    for idx, pair in enumerate(pairs):
        if pair.psi.ncomp == 1:
            def f(z, psi=pair.psi):
                return float(profile(z) * psi(np.array([z]))[0])
        else:
            def f(z, psi=pair.psi):
                return float(np.dot(np.atleast_1d(profile(z)), psi(np.array([z]))[:, 0]))
        out[idx] = quad(f, 0.0, 1.0, limit=400, epsabs=1e-12)[0]
    return out


def scalar_project_constant(value: float, N: int) -> np.ndarray:
    """Modal coordinates of a constant profile for the scalar plant."""
    w = omega(np.arange(1, N + 1))
    return value * np.sqrt(2) * np.sin(w) / w


def reconstruct(coeffs, pairs: Sequence[EigenPair], z) -> np.ndarray:
    """``sum_k coeffs[k] phi_k(z)``; ``coeffs`` may carry a leading time axis."""
    coeffs = np.asarray(coeffs)
    z = np.asarray(z, float)
    Phi = np.array([p.phi(z) for p in pairs[: coeffs.shape[-1]]])
    return np.tensordot(coeffs, Phi, axes=([-1], [0]))
