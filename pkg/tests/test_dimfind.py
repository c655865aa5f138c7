import numpy as np
import pytest
from hypothesis import given, strategies as st

from modalstab.design import design
from modalstab.dimfind import RhoCurve, assemble, find_min_n, rho, sweep
from modalstab.errors import DimensionMismatch, EigenSolverFailure, NoneStabilizes, NotConverged
from modalstab.modal import build_modal
from modalstab.spectral import ScalarPlant

KAPPA, NU = (-10.0, -11.0), (-15.0, -16.0)


@pytest.mark.parametrize("n", [3, 5, 8])
def test_square_loop_reduces_to_separation(boundary_modal, n):
    d = design(boundary_modal, n, KAPPA, NU)
    expected = max(max(KAPPA), max(NU), *boundary_modal.lam[2:n])
    assert rho(assemble(n, n, boundary_modal, d)) == pytest.approx(expected, abs=1e-8)


def test_block_layout(boundary_modal):
    n, m = 4, 9
    d = design(boundary_modal, n, KAPPA, NU)
    A = assemble(n, m, boundary_modal, d).A
    assert A.shape == (2 * n + m - n, 2 * n + m - n)
    # fast block is diagonal and untouched by the gains
    np.testing.assert_array_equal(A[2 * n :, 2 * n :], np.diag(boundary_modal.lam[n:m]))
    # state block does not see the fast modes
    np.testing.assert_array_equal(A[:n, 2 * n :], 0.0)
    np.testing.assert_array_equal(A[n : 2 * n, :n], 0.0)


def test_sweep_uses_leading_submatrices(boundary_modal):
    n = 4
    d = design(boundary_modal, n, KAPPA, NU)
    c = sweep(n, n, 30, boundary_modal, d, threads=1)
    direct = [rho(assemble(n, m, boundary_modal, d)) for m in range(n, 31)]
    np.testing.assert_allclose(c.rho, direct, rtol=1e-12, atol=1e-12)


def test_threads_do_not_change_results(coupled_modal):
    d = design(coupled_modal, 5, KAPPA, NU)
    a = sweep(5, 6, 60, coupled_modal, d, threads=1)
    b = sweep(5, 6, 60, coupled_modal, d, threads=4)
    np.testing.assert_array_equal(a.rho, b.rho)


def test_curve_statistics():
    m = np.arange(10, 40)
    vals = np.r_[np.linspace(1, -2, 10), -2.0 + 1e-6 * np.arange(20)]
    c = RhoCurve(3, m, vals, window=20, tol=1e-4, margin=1e-3)
    assert c.converged and c.certified
    assert c.lam_bar == pytest.approx(vals[-1])
    assert c.rho_limit == pytest.approx(vals[-20:].mean())
    assert c.m0 == 20
    wobble = RhoCurve(3, m, np.r_[vals[:10], -2.0 + 0.1 * np.sin(np.arange(20))])
    assert not wobble.converged and wobble.certified


@given(st.lists(st.floats(-5, 5), min_size=20, max_size=40))
def test_lam_bar_bounds_the_tail(vals):
    c = RhoCurve(1, np.arange(len(vals)), np.array(vals))
    assert np.all(c.tail <= c.lam_bar)
    assert c.certified == (c.lam_bar <= -c.margin)


def test_strict_sweep_raises_with_curve(boundary_modal):
    d = design(boundary_modal, 3, KAPPA, NU)
    with pytest.raises(NotConverged) as exc:
        sweep(3, 4, 40, boundary_modal, d, strict=True, tol=1e-12)
    assert exc.value.curve.n == 3


def test_dimension_errors(boundary_modal):
    d = design(boundary_modal, 4, KAPPA, NU)
    with pytest.raises(DimensionMismatch):
        assemble(4, 3, boundary_modal, d)
    with pytest.raises(DimensionMismatch):
        assemble(5, 10, boundary_modal, d)
    with pytest.raises(DimensionMismatch):
        assemble(4, 2000, boundary_modal, d)
    with pytest.raises(DimensionMismatch):
        sweep(4, 2, 10, boundary_modal, d)


def test_non_finite_matrix():
    with pytest.raises(EigenSolverFailure):
        rho(np.array([[np.nan]]))


def test_none_stabilizes_carries_table():
    md = build_modal(ScalarPlant(40.0), 120)
    with pytest.raises(NoneStabilizes) as exc:
        find_min_n(md, range(2, 4), 120, KAPPA, NU)
    table = exc.value.table
    assert table.n_min is None and np.all(table.rho_at_mmax > 0)


def test_find_min_n_on_coupled(coupled_modal):
    table = find_min_n(coupled_modal, range(3, 6), 200, KAPPA, NU)
    assert table.n_min == 3
    assert set(table.curves) == {3, 4, 5}
    assert all(len(c.rho) == 20 for c in table.curves.values())
