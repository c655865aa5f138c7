import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm

from modalstab import _kernels_py, kernels
from modalstab.spectral import coupled_char_residual, shooting_det

compiled = pytest.importorskip("modalstab._kernels") if kernels.BACKEND == "cython" else None


def raw_det(lam_bar, r12, r21):
    # unbalanced shooting matrix, fine for moderate |lam_bar|
    M = np.array(
        [[0, 1, 0, 0], [lam_bar, 0, -r12, 0], [0, 0, 0, 1], [-r21 / 2, 0, lam_bar / 2, 0]],
        dtype=float,
    )
    P = expm(M)
    return P[0, 0] * P[3, 3] - P[0, 3] * P[3, 0]


def test_backend_name():
    assert kernels.BACKEND in ("cython", "python")


def test_env_var_forces_fallback():
    env = dict(os.environ, MODALSTAB_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "from modalstab import kernels; print(kernels.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"


@given(
    st.floats(-300.0, 30.0),
    st.floats(-20.0, 20.0),
    st.floats(-20.0, 20.0),
)
def test_fallback_det_matches_unbalanced_expm(lam_bar, r12, r21):
    got = _kernels_py.char_det_batch(np.array([lam_bar]), r12, r21)[0]
    ref = raw_det(lam_bar, r12, r21)
    assert got == pytest.approx(ref, rel=1e-8, abs=1e-10 * max(1.0, abs(ref)))


@pytest.mark.skipif(compiled is None, reason="extension not built")
@given(
    st.lists(st.floats(-5000.0, 50.0), min_size=1, max_size=30),
    st.floats(-20.0, 20.0),
    st.floats(-20.0, 20.0),
)
def test_compiled_det_matches_fallback(lams, r12, r21):
    lam = np.array(lams)
    a = _kernels_py.char_det_batch(lam, r12, r21)
    b = compiled.char_det_batch(lam, r12, r21)
    scale = np.maximum(np.abs(a), np.abs(a).max() * 1e-12)
    np.testing.assert_array_less(np.abs(a - b) / scale, 1e-7)


def test_det_sign_changes_where_residual_vanishes():
    # the closed-form residual and the shooting determinant share roots
    grid = np.linspace(-60.0, 5.0, 4001)
    d = shooting_det(grid, 5.0, 10.0)
    roots = grid[:-1][np.sign(d[:-1]) != np.sign(d[1:])]
    assert len(roots) >= 3
    for x in roots:
        r = coupled_char_residual(np.array([x, x + grid[1] - grid[0]]), 5.0, 10.0)
        assert np.sign(r[0]) != np.sign(r[1]) or np.min(np.abs(r)) < 1e-6


@pytest.mark.parametrize("impl", ["python", "compiled"])
def test_propagate_matches_repeated_products(impl, rng):
    if impl == "compiled" and compiled is None:
        pytest.skip("extension not built")
    mod = _kernels_py if impl == "python" else compiled
    A = rng.standard_normal((7, 7)) * 0.3
    x0 = rng.standard_normal(7)
    out = np.asarray(mod.propagate(np.ascontiguousarray(A), x0, 5))
    assert out.shape == (6, 7)
    x = x0.copy()
    for i in range(6):
        np.testing.assert_allclose(out[i], x, rtol=1e-13, atol=1e-14)
        x = A @ x


def test_propagate_zero_steps_returns_initial():
    out = kernels.propagate(np.eye(3), np.arange(3.0), 0)
    np.testing.assert_array_equal(out, [[0.0, 1.0, 2.0]])
