import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm

from modalstab.assumptions import check_all
from modalstab.design import design, separation_matrix
from modalstab.dimfind import assemble, rho
from modalstab.errors import WindowTooShort
from modalstab.modal import build_modal
from modalstab.sim import (
    constant_profile_coords,
    fit_decay,
    integrate,
    l2_error,
    lemma_constants,
    propagator,
    reconstruct_field,
    slow_decay_constants,
    validate_lemma_xk,
    validate_lemmas,
    validate_l2_l1_bounds,
    validate_slow_iss,
    z_series,
)
from modalstab.spectral import ScalarPlant, omega

KAPPA, NU = (-10.0, -11.0), (-15.0, -16.0)


@pytest.fixture(scope="module")
def passive():
    """r = 0 plant without feedback: pure diagonal decay."""
    md = build_modal(ScalarPlant(0.0), 60)
    return md, design(md, 3, (), ())


@pytest.fixture(scope="module")
def boundary_run(boundary_modal):
    d = design(boundary_modal, 5, KAPPA, NU)
    x0 = constant_profile_coords(boundary_modal.pairs[:400])
    return d, integrate(5, 400, boundary_modal, d, x0, T=1.0, dt=1e-4)


def test_zero_initial_data_stays_zero(boundary_modal):
    d = design(boundary_modal, 5, KAPPA, NU)
    tr = integrate(5, 50, boundary_modal, d, np.zeros(50), T=0.1, dt=1e-3)
    assert np.all(tr.xs == 0) and np.all(tr.es == 0) and np.all(tr.xf == 0)


def test_diagonal_decay_is_exact(passive):
    md, d = passive
    x0 = np.linspace(1, 2, 60)
    tr = integrate(3, 60, md, d, x0, T=0.05, dt=1e-3)
    full = np.hstack([tr.xs, tr.xf])
    ref = np.exp(np.multiply.outer(tr.t, md.lam)) * x0
    np.testing.assert_allclose(full, ref, rtol=1e-12, atol=1e-300)


def test_one_step_matches_scalar_exponentials(passive):
    md, d = passive
    A = assemble(3, 60, md, d).A
    P = propagator(A, 1e-3)
    np.testing.assert_allclose(np.diag(P)[6:], np.exp(md.lam[3:60] * 1e-3), rtol=1e-12)


@given(st.floats(1e-4, 1e-1))
def test_propagator_semigroup(dt):
    A = np.array([[-1.0, 2.0], [0.0, -30.0]])
    np.testing.assert_allclose(propagator(A, dt) @ propagator(A, dt), propagator(A, 2 * dt), rtol=1e-12, atol=1e-15)


def test_observer_defaults_to_rest(boundary_run):
    _, tr = boundary_run
    np.testing.assert_array_equal(tr.w[0], 0.0)
    np.testing.assert_array_equal(tr.u[0], 0.0)


def test_output_identity(boundary_run):
    _, tr = boundary_run
    ref = tr.C[:, :5] @ tr.xs.T + tr.C[:, 5:] @ tr.xf.T
    np.testing.assert_allclose(tr.y, ref.T, rtol=1e-13, atol=1e-13)


def test_fit_exact_exponential():
    t = np.linspace(0, 5, 501)
    fit = fit_decay(t, 3.0 * np.exp(-2.0 * t))
    assert fit.decay == pytest.approx(2.0, abs=1e-8)
    assert fit.growth == pytest.approx(-2.0, abs=1e-8)
    assert fit.prefactor == pytest.approx(3.0, rel=1e-8)


def test_fit_ignores_values_below_floor():
    t = np.linspace(0, 50, 5001)
    fit = fit_decay(t, np.exp(-3.0 * t))
    assert fit.decay == pytest.approx(3.0, rel=1e-6)
    assert fit.window[1] < 10


def test_fit_window_too_short():
    with pytest.raises(WindowTooShort):
        fit_decay(np.array([0.0]), np.array([1.0]))
    with pytest.raises(WindowTooShort):
        fit_decay(np.linspace(0, 1, 50), np.ones(50), window=(0.0, 0.05))


def test_unforced_bounds_hold_exactly(passive):
    md, d = passive
    tr = integrate(3, 60, md, d, np.ones(60), T=0.2, dt=1e-3)
    assert validate_lemma_xk(tr, 0.0, 2.0).ok
    assert all(r.ok for r in validate_l2_l1_bounds(tr, 0.0, 2.0))


def test_boundary_run_passes_and_halved_xk_fails(boundary_run, boundary_modal):
    d, tr = boundary_run
    rep = check_all(boundary_modal, 5, design=d)
    const = lemma_constants(rep, boundary_modal, d)
    assert const.regime == "grouped" and const.alpha == 1.0
    full = validate_lemmas(tr, boundary_modal, d, const)
    assert [r.name for r in full] == ["xk", "xf_l2", "z_l1_grouped", "slow_iss"]
    assert all(r.ok for r in full)
    halved = validate_lemmas(tr, boundary_modal, d, const, scale=0.5)
    assert not halved[0].ok


def test_pulse_run_uses_decay_regime(indomain_modal):
    d = design(indomain_modal, 5, KAPPA, NU)
    rep = check_all(indomain_modal, 5, design=d)
    const = lemma_constants(rep, indomain_modal, d)
    assert const.regime == "decay" and const.alpha > 2
    tr = integrate(5, 300, indomain_modal, d, constant_profile_coords(indomain_modal.pairs[:300]), T=0.5, dt=1e-4)
    reps = validate_lemmas(tr, indomain_modal, d, const)
    assert [r.name for r in reps] == ["xk", "xf_l2", "xf_l1", "z_l1_decay", "slow_iss"]
    assert all(r.ok for r in reps)
    halved = {r.name: r.ok for r in validate_lemmas(tr, indomain_modal, d, const, scale=0.5)}
    assert not halved["xk"] and not halved["z_l1_decay"]


def test_slow_constants_against_dense_sampling(boundary_modal):
    d = design(boundary_modal, 5, KAPPA, NU)
    A = separation_matrix(d, boundary_modal)
    lt, Mt = slow_decay_constants(A)
    a = -np.max(np.linalg.eigvals(A).real)
    assert lt == pytest.approx(0.95 * a)
    ts = np.linspace(0, 3, 30001)
    dense = max(np.linalg.norm(expm((A + lt * np.eye(len(A))) * s), 2) for s in ts)
    assert Mt == pytest.approx(dense, rel=1e-3)
    assert Mt >= dense * (1 - 1e-9)


def test_slow_iss_trivial(boundary_modal):
    d = design(boundary_modal, 5, KAPPA, NU)
    tr = integrate(5, 40, boundary_modal, d, np.zeros(40), T=0.05, dt=1e-3)
    r = validate_slow_iss(tr, boundary_modal, d, z_series(tr))
    assert r.ok and r.min_slack == 0.0


def test_single_mode_field_is_separable(passive):
    md, d = passive
    x0 = np.zeros(60)
    x0[3] = 1.0
    tr = integrate(3, 60, md, d, x0, T=0.1, dt=1e-2)
    z = np.linspace(0, 1, 21)
    field = reconstruct_field(tr, md.pairs, z)
    ref = np.exp(md.lam[3] * tr.t)[:, None] * np.sqrt(2) * np.cos(omega(4) * z)[None, :]
    np.testing.assert_allclose(field, ref, atol=1e-12)


def test_constant_reconstruction_error_matches_coefficient_tail():
    M = 400
    md = build_modal(ScalarPlant(15.0), M)
    coords = constant_profile_coords(md.pairs)
    z = np.linspace(0, 1, 20001)
    err = l2_error(reconstruct_field_coords(coords, md.pairs, z), np.ones_like(z), z)
    # Parseval: the L2 error of the truncated series is the coefficient tail
    k = np.arange(M + 1, 2_000_001)
    tail = np.sqrt(np.sum(2 / omega(k) ** 2))
    assert err == pytest.approx(tail, rel=0.02)
    assert 0.02 < err < 0.03


def reconstruct_field_coords(coords, pairs, z):
    return sum(c * p.phi(z) for c, p in zip(coords, pairs))


def test_constant_projection_coupled(coupled_modal):
    coords = constant_profile_coords(coupled_modal.pairs[:3], 1.0)
    for c, p in zip(coords, coupled_modal.pairs[:3]):
        assert c == pytest.approx(float(np.sum(p.psi.integral(0.0, 1.0))))


def test_boundary_n5_rate_below_sweep_bound(boundary_modal):
    d = design(boundary_modal, 5, KAPPA, NU)
    x0 = constant_profile_coords(boundary_modal.pairs[:400])
    tr = integrate(5, 400, boundary_modal, d, x0, T=20.0, dt=1e-2)
    fit = fit_decay(tr.t, tr.norm_total)
    assert fit.growth < 0
    assert fit.growth <= rho(assemble(5, 400, boundary_modal, d)) + 0.1
    # the field decays uniformly in z
    z = np.linspace(0, 1, 51)
    field = reconstruct_field(tr, boundary_modal.pairs, z, every=200)
    peaks = np.abs(field).max(axis=1)
    assert peaks[-1] < 1e-6 * peaks[0]


def test_coupled_large_n_rate_near_assigned_eigenvalue(coupled_modal):
    d = design(coupled_modal, 40, KAPPA, NU)
    x0 = constant_profile_coords(coupled_modal.pairs[:200])
    tr = integrate(40, 200, coupled_modal, d, x0, T=2.5, dt=1e-3)
    fit = fit_decay(tr.t, tr.norm_total)
    assert fit.decay == pytest.approx(10.0, rel=0.1)


def test_doubling_modes_leaves_rate_unchanged(indomain_modal):
    d = design(indomain_modal, 5, KAPPA, NU)
    rates = []
    for M in (150, 300):
        x0 = constant_profile_coords(indomain_modal.pairs[:M])
        tr = integrate(5, M, indomain_modal, d, x0, T=4.0, dt=1e-3)
        rates.append(fit_decay(tr.t, tr.norm_total, window=(2.0, 4.0)).growth)
    assert abs(rates[0] - rates[1]) < 1e-3
