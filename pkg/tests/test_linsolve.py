"""Direct solves: residual contracts, antilinear block system, failure modes."""

import numpy as np
import pytest
import scipy.sparse as sp

from kerrhelm import linsolve
from kerrhelm.assembly import ComplexSparseMatrix


def test_identity():
    n = 7
    eye = ComplexSparseMatrix(sp.eye(n, format="csr", dtype=complex))
    b = np.arange(1, n + 1, dtype=complex)
    x, rep = linsolve.solve(eye, b)
    assert rep.success
    assert np.allclose(x, b, rtol=0, atol=1e-15)


def test_two_by_two():
    m = ComplexSparseMatrix(sp.csr_matrix(np.array([[2.0, 1.0], [1.0, 2.0]], dtype=complex)))
    x, rep = linsolve.solve(m, np.array([3.0, 3.0], dtype=complex))
    assert rep.success
    assert np.allclose(x, [1.0, 1.0], atol=1e-14)


def test_random_shifted_system_residual():
    rng = np.random.default_rng(0)
    n = 500
    density = 0.01
    a = sp.random(n, n, density=density, random_state=np.random.RandomState(1), format="csr")
    spd = a @ a.T + sp.eye(n) * n * density
    m = ComplexSparseMatrix((spd + 1j * sp.eye(n)).tocsr())
    b = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    x, rep = linsolve.solve(m, b)
    assert rep.success
    res = np.linalg.norm(m.to_scipy() @ x - b) / np.linalg.norm(b)
    assert res <= 1e-10
    assert rep.relative_residual == pytest.approx(res, rel=1e-6)


def test_dimension_mismatch():
    m = ComplexSparseMatrix(sp.eye(3, format="csr", dtype=complex))
    with pytest.raises(ValueError, match="shape"):
        linsolve.solve(m, np.ones(4, dtype=complex))


def test_singular_matrix_raises_with_report():
    m = ComplexSparseMatrix(sp.csr_matrix(np.array([[1.0, 1.0], [1.0, 1.0]], dtype=complex)))
    with pytest.raises(linsolve.LinearSolveError) as err:
        linsolve.solve(m, np.array([1.0, 2.0], dtype=complex))
    assert not err.value.report.success


def test_factorization_reuse():
    rng = np.random.default_rng(3)
    n = 50
    m = ComplexSparseMatrix((sp.eye(n) * 4 + sp.random(
        n, n, density=0.05, random_state=np.random.RandomState(2))).tocsr().astype(complex))
    fac = linsolve.Factorization(m)
    for _ in range(3):
        b = rng.standard_normal(n) + 0j
        x, rep = fac.solve(b)
        assert rep.success


def test_antilinear_reduces_to_linear():
    rng = np.random.default_rng(4)
    n = 40
    l_mat = ComplexSparseMatrix((sp.eye(n) * (2 + 1j) + sp.random(
        n, n, density=0.1, random_state=np.random.RandomState(5))).tocsr().astype(complex))
    q = ComplexSparseMatrix(sp.csr_matrix((n, n), dtype=complex))
    b = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    x_anti, rep1 = linsolve.solve_antilinear(l_mat, q, b)
    x_lin, rep2 = linsolve.solve(l_mat, b)
    assert rep1.success and rep2.success
    assert np.abs(x_anti - x_lin).max() <= 1e-12 * np.abs(x_lin).max()


def test_antilinear_closed_form():
    # L = I, Q = c I: x = (b - c conj(b)) / (1 - |c|^2)
    n = 1
    l_mat = ComplexSparseMatrix(sp.eye(1, format="csr", dtype=complex))
    q = ComplexSparseMatrix(sp.eye(1, format="csr", dtype=complex) * 0.5j)
    b = np.array([1.0 + 1.0j])
    x, rep = linsolve.solve_antilinear(l_mat, q, b)
    assert rep.success
    assert x[0] == pytest.approx(2.0 / 3.0 + 2.0j / 3.0, rel=1e-13)


def test_antilinear_random_residual():
    rng = np.random.default_rng(6)
    n = 200
    base = sp.eye(n) * 3.0 + sp.random(n, n, density=0.05,
                                       random_state=np.random.RandomState(7))
    l_mat = ComplexSparseMatrix((base + 1j * sp.random(
        n, n, density=0.05, random_state=np.random.RandomState(8))).tocsr())
    q = ComplexSparseMatrix((0.3 * sp.random(
        n, n, density=0.05, random_state=np.random.RandomState(9))).tocsr().astype(complex))
    b = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    x, rep = linsolve.solve_antilinear(l_mat, q, b)
    assert rep.success
    res = np.linalg.norm(l_mat.to_scipy() @ x + q.to_scipy() @ np.conj(x) - b)
    assert res / np.linalg.norm(b) <= 1e-10


def test_determinism():
    rng = np.random.default_rng(10)
    n = 120
    m = ComplexSparseMatrix((sp.eye(n) * 2 + 1j * sp.random(
        n, n, density=0.08, random_state=np.random.RandomState(11))).tocsr())
    b = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    x1, _ = linsolve.solve(m, b)
    x2, _ = linsolve.solve(m, b)
    assert np.array_equal(x1, x2)
