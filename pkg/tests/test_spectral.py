import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from modalstab.errors import ConfigError
from modalstab.spectral import (
    Boundary,
    CoupledPlant,
    ExpSum,
    InDomain,
    ScalarPlant,
    asymptotic_eigenvalue,
    coupled_char_residual,
    coupled_eigenvalues,
    coupled_leading,
    coupled_spectrum,
    expm1_ratio,
    omega,
    riesz_closeness,
    scalar_eigenvalues,
    scalar_spectrum,
)

from conftest import COUPLED


def fd_coupled_eigenvalues(plant, N):
    """Second-order finite differences on N intervals, sorted descending."""
    h = 1.0 / N
    # x1: nodes 0..N-1 (x1(1) = 0), x2: nodes 1..N (x2(0) = 0)
    n1, n2 = N, N

    def lap(n, neumann_left):
        L = np.diag(-2.0 * np.ones(n)) + np.diag(np.ones(n - 1), 1) + np.diag(np.ones(n - 1), -1)
        if neumann_left:
            L[0, 1] = 2.0
        else:
            L[-1, -2] = 2.0
        return L / h**2

    A = np.zeros((n1 + n2, n1 + n2))
    A[:n1, :n1] = lap(n1, True) + plant.alpha * np.eye(n1)
    A[n1:, n1:] = 2.0 * lap(n2, False) + plant.alpha * np.eye(n2)
    # x1 node i sits at z = i h, x2 node i at z = (i + 1) h
    for i in range(1, n1):
        A[i, n1 + i - 1] = plant.r12
        A[n1 + i - 1, i] = plant.r21
    return np.sort(np.linalg.eigvals(A).real)[::-1]


def quad_inner(f, g):
    def integrand(z):
        return float(np.dot(np.ravel(f(np.array([z]))), np.ravel(g(np.array([z])))))

    return quad(integrand, 0.0, 1.0, limit=400, epsabs=1e-13)[0]


# ---------------------------------------------------------------------------
# exponential sums


def test_expm1_ratio_is_continuous_at_zero():
    s = np.array([0.0, 1e-9, -1e-9, 1e-7, 1e-3])
    ref = np.array([1.0] + [np.expm1(x) / x for x in s[1:]])
    np.testing.assert_allclose(expm1_ratio(s).real, ref, rtol=1e-12)


@given(
    st.lists(st.complex_numbers(max_magnitude=30, allow_nan=False, allow_infinity=False), min_size=1, max_size=4),
    st.floats(0.0, 1.0),
    st.floats(0.0, 1.0),
)
def test_expsum_integral_matches_quadrature(s, a, b):
    a, b = min(a, b), max(a, b)
    W = np.ones((1, len(s))) * (0.5 - 0.3j)
    f = ExpSum(s, W)
    ref = quad(lambda z: float(f(np.array([z]))[0]), a, b, epsabs=1e-12, limit=200)[0]
    scale = max(1.0, np.exp(max(np.real(s)) * b))
    assert f.integral(a, b)[0] == pytest.approx(ref, abs=1e-9 * scale)


@given(st.floats(-5, 5), st.floats(0.5, 12), st.floats(-5, 5), st.floats(0.5, 12))
def test_expsum_inner_matches_quadrature(re1, im1, re2, im2):
    f = ExpSum([re1 + 1j * im1, re1 - 1j * im1], [[0.5, 0.5]])
    g = ExpSum([re2 + 1j * im2, re2 - 1j * im2], [[0.5j, -0.5j]])
    ref = quad(lambda z: float(f(np.array([z]))[0] * g(np.array([z]))[0]), 0, 1, epsabs=1e-12, limit=200)[0]
    assert f.inner(g) == pytest.approx(ref, abs=1e-9 * np.exp(abs(re1) + abs(re2)))


def test_vector_expsum_shapes():
    f = ExpSum([1.0, 2.0], [[1.0, 0.0], [0.0, 1.0]])
    z = np.linspace(0, 1, 5)
    assert f(z).shape == (2, 5)
    np.testing.assert_allclose(f(z), [np.exp(z), np.exp(2 * z)])
    np.testing.assert_allclose(f.derivative(z), [np.exp(z), 2 * np.exp(2 * z)])
    np.testing.assert_allclose(f.integral(0, 1), [np.e - 1, (np.e**2 - 1) / 2])


# ---------------------------------------------------------------------------
# scalar plant


def test_scalar_leading_eigenvalues():
    np.testing.assert_allclose(scalar_eigenvalues(15.0, 3), [12.5326, -7.2066, -46.6850], atol=1e-3)


def test_scalar_modes_are_orthonormal_by_quadrature():
    pairs = scalar_spectrum(ScalarPlant(15.0), 6)
    G = np.array([[quad(lambda z: p.phi(np.array([z]))[0] * q.phi(np.array([z]))[0], 0, 1, limit=200)[0]
                   for q in pairs] for p in pairs])
    np.testing.assert_allclose(G, np.eye(6), atol=1e-10)


def test_scalar_modes_satisfy_boundary_conditions():
    for p in scalar_spectrum(ScalarPlant(3.0), 20):
        assert abs(p.phi.derivative(np.array([0.0]))[0]) < 1e-10
        assert abs(p.phi(np.array([1.0]))[0]) < 1e-12


def test_empty_scalar_spectrum():
    assert scalar_spectrum(ScalarPlant(15.0), 0) == []


def test_plant_validation():
    with pytest.raises(ConfigError):
        ScalarPlant(15.0, Boundary(), xi=1.5)
    with pytest.raises(ConfigError):
        CoupledPlant(10, 5, 10, d=(1.0, 3.0))
    with pytest.raises(ConfigError):
        InDomain(0.02, 0.05)


# ---------------------------------------------------------------------------
# coupled plant


@pytest.fixture(scope="module")
def coupled_pairs():
    return coupled_spectrum(COUPLED, 40)


def test_coupled_roots_solve_characteristic_equation(coupled_pairs):
    lb = np.array([p.lam for p in coupled_pairs]) - COUPLED.alpha
    # residual is O(lambda^2) in size; compare against its local slope
    res = coupled_char_residual(lb, COUPLED.r12, COUPLED.r21)
    step = coupled_char_residual(lb + 1e-6 * np.maximum(1, np.abs(lb)), COUPLED.r12, COUPLED.r21)
    assert np.all(np.abs(res) <= 1e-5 * np.abs(step - res) + 1e-12)


def test_coupled_spectrum_descending_and_labelled(coupled_pairs):
    lam = np.array([p.lam for p in coupled_pairs])
    assert np.all(np.diff(lam) < 0)
    labels = {(p.k, p.branch) for p in coupled_pairs}
    assert labels == {(k, b) for k in range(1, 41) for b in (1, 2)}


def test_coupled_eigenvalues_converge_like_finite_differences():
    lam, _ = coupled_eigenvalues(COUPLED, 6)
    coarse = fd_coupled_eigenvalues(COUPLED, 50)[:4]
    fine = fd_coupled_eigenvalues(COUPLED, 800)[:4]
    np.testing.assert_allclose(fine, lam[:4], atol=2e-3)
    # second-order error shrinks by roughly (800 / 50)^2
    assert np.all(np.abs(fine - lam[:4]) < np.abs(coarse - lam[:4]) / 50)


def test_coupled_eigenfunctions_solve_the_ode(coupled_pairs):
    a, r12, r21 = COUPLED.alpha, COUPLED.r12, COUPLED.r21
    z = np.linspace(0, 1, 41)
    for p in coupled_pairs[:12]:
        f = p.phi
        d2 = ExpSum(f.s, f.W * f.s[None, :] ** 2)(z)
        x = f(z)
        res1 = d2[0] + a * x[0] + r12 * x[1] - p.lam * x[0]
        res2 = 2 * d2[1] + r21 * x[0] + a * x[1] - p.lam * x[1]
        scale = abs(p.lam) + a + r12 + r21
        assert np.max(np.abs(res1)) < 1e-8 * scale
        assert np.max(np.abs(res2)) < 1e-8 * scale
        d0, d1 = f.derivative(np.array([0.0, 1.0])), f(np.array([0.0, 1.0]))
        assert abs(d0[0, 0]) < 1e-8 * (1 + abs(p.lam)) and abs(d1[1, 0]) < 1e-10
        assert abs(d1[0, 1]) < 1e-10 and abs(d0[1, 1]) < 1e-8 * (1 + abs(p.lam))


def test_coupled_biorthonormal_by_quadrature(coupled_pairs):
    sub = coupled_pairs[:6]
    G = np.array([[quad_inner(p.phi, q.psi) for q in sub] for p in sub])
    np.testing.assert_allclose(G, np.eye(len(sub)), atol=1e-8)
    for p in sub:
        assert quad_inner(p.phi, p.phi) == pytest.approx(1.0, abs=1e-9)


def test_adjoint_swaps_couplings():
    adj = COUPLED.adjoint()
    assert (adj.r12, adj.r21) == (COUPLED.r21, COUPLED.r12)
    lam, _ = coupled_eigenvalues(COUPLED, 10)
    lam_adj, _ = coupled_eigenvalues(adj, 10)
    np.testing.assert_allclose(lam, lam_adj, rtol=1e-10)


def test_asymptotic_error_decays_like_inverse_square(coupled_pairs):
    lam = {(p.k, p.branch): p.lam for p in coupled_pairs}
    for br in (1, 2):
        err = [abs(lam[(k, br)] - asymptotic_eigenvalue(COUPLED, k, br)) for k in (10, 20, 40)]
        assert err[2] < err[0]
        assert 40**2 * err[2] < 10.0


def test_leading_covers_requested_count():
    pairs = coupled_leading(COUPLED, 25)
    assert len(pairs) == 25
    lam = np.array([p.lam for p in pairs])
    full, _ = coupled_eigenvalues(COUPLED, 40)
    np.testing.assert_allclose(lam, full[:25], rtol=1e-12)


def test_riesz_closed_form_matches_quadrature():
    k = np.array([3, 7, 15])
    rc = riesz_closeness(COUPLED, k)
    p = COUPLED.r12 * COUPLED.r21
    for i, kk in enumerate(k):
        mu = float(omega(kk))
        a = 1 / np.sqrt(1 + p / mu**4)
        c = lambda z: np.sqrt(2) * np.cos(mu * z)
        s = lambda z: np.sqrt(2) * np.sin(mu * z)
        b1 = quad(lambda z: ((a - 1) * c(z)) ** 2 + (a * COUPLED.r21 / mu**2 * c(z)) ** 2, 0, 1, limit=200)[0]
        b2 = quad(lambda z: (a * COUPLED.r12 / mu**2 * s(z)) ** 2 + ((a - 1) * s(z)) ** 2, 0, 1, limit=200)[0]
        np.testing.assert_allclose(rc.branch_values[i], [b1, b2], rtol=1e-8)
    assert rc.tail_sum == pytest.approx(rc.values.sum())
