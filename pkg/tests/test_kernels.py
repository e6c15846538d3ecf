import math
import os
import subprocess
import sys

import numpy as np
import pytest

from opideal.kernels import BACKEND, available_backends, load_backend

BACKENDS = available_backends()
needs_both = pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled backend not built")


@pytest.fixture(scope="module")
def pair():
    return load_backend("cython"), load_backend("python")


def test_fallback_always_available():
    assert "python" in BACKENDS
    assert BACKEND in BACKENDS


def test_env_var_forces_fallback():
    env = dict(os.environ, OPIDEAL_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import opideal; print(opideal.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@needs_both
@pytest.mark.parametrize("r", [1.0, 1.5, 2.0, 3.0, math.inf])
def test_norm_kernels_agree(pair, r):
    cy, py = pair
    rng = np.random.default_rng(0)
    w = rng.uniform(0.5, 2, 4)
    for _ in range(20):
        x = rng.standard_normal(4)
        assert cy.lr_norm(x, r, w) == pytest.approx(py.lr_norm(x, r, w), rel=1e-13)
        np.testing.assert_allclose(cy.norming(x, r, w), py.norming(x, r, w), rtol=1e-12, atol=1e-15)
        np.testing.assert_allclose(cy.retract(3 * x, r, w), py.retract(3 * x, r, w), rtol=1e-12)


@needs_both
def test_power_sum_kernels_agree(pair):
    cy, py = pair
    rng = np.random.default_rng(1)
    X = rng.standard_normal((5, 3))
    logc = rng.standard_normal(5)
    V = np.array(np.meshgrid(*[[-1.0, 1.0]] * 3)).reshape(3, -1).T
    for theta in (0.7, 1.0, 2.5):
        x = rng.standard_normal(3)
        assert cy.log_power_sum(X, logc, theta, x) == pytest.approx(py.log_power_sum(X, logc, theta, x), rel=1e-12)
        np.testing.assert_allclose(cy.power_sum_grad(X, logc, theta, x, 1e-8),
                                   py.power_sum_grad(X, logc, theta, x, 1e-8), rtol=1e-10)
        np.testing.assert_allclose(cy.vertex_log_power_sums(X, logc, theta, V),
                                   py.vertex_log_power_sums(X, logc, theta, V), rtol=1e-12)


@needs_both
@pytest.mark.parametrize("r", [1.5, 2.0, 4.0])
def test_ascent_kernels_agree(pair, r):
    cy, py = pair
    rng = np.random.default_rng(2)
    X = rng.standard_normal((4, 3))
    logc = np.zeros(4)
    w = np.ones(3)
    rd = 1.0 / (1.0 - 1.0 / r)
    x0 = rng.standard_normal(3)
    a = cy.ascend_power_sum(X, logc, 1.5, r, w, rd, w, x0, 200, 0.5, 0.97, 1e-8)
    b = py.ascend_power_sum(X, logc, 1.5, r, w, rd, w, x0, 200, 0.5, 0.97, 1e-8)
    assert a[0] == pytest.approx(b[0], rel=1e-9)
    np.testing.assert_allclose(a[1], b[1], rtol=1e-7, atol=1e-9)


@needs_both
def test_min_norm_kernels_agree(pair):
    cy, py = pair
    rng = np.random.default_rng(3)
    for n in (3, 5, 9):
        A = rng.standard_normal((n, 6))
        M = A @ A.T
        a, b = cy.min_norm_weights(M, 500), py.min_norm_weights(M, 500)
        assert a.sum() == pytest.approx(1.0, abs=1e-12) and np.all(a >= 0)
        assert np.linalg.norm(a @ A) == pytest.approx(np.linalg.norm(b @ A), rel=1e-9)


@needs_both
def test_end_to_end_backends_agree():
    script = ("import opideal as o\n"
              "u = o.Operator([[1.0, 0.5], [0.2, -1.0]], o.NormedSpace(2, 3), o.NormedSpace(2, 1.5))\n"
              "r = o.pi_norm_lb(u, o.SummingParams(2, 1, 0.3), 2, o.SearchConfig(restarts=3, iterations=80))\n"
              "print(o.BACKEND, repr(r.value))\n")
    vals = {}
    for pure in ("0", "1"):
        env = dict(os.environ, OPIDEAL_PURE_PYTHON=pure)
        out = subprocess.run([sys.executable, "-c", script], env=env, capture_output=True, text=True, check=True)
        backend, value = out.stdout.split()
        vals[backend] = float(value)
    assert set(vals) == {"cython", "python"}
    assert vals["cython"] == pytest.approx(vals["python"], rel=1e-6)
