"""Assembly of the PML form, penalty form, sources and cubic linearizations."""

import numpy as np
import pytest
import scipy.sparse as sp

from kerrhelm import analytic, assembly, geometry, pml
from kerrhelm.assembly import (ComplexSparseMatrix, Load, NlhProblem, Wavenumber,
                               default_rule, penalty_gamma)

from conftest import reference_problem, sweep_problem


# ----------------------------------------------------------------------
# quadrature and containers
# ----------------------------------------------------------------------

def test_default_rule():
    rule = default_rule()
    assert rule.weights.sum() == pytest.approx(0.5, abs=1e-15)
    assert np.all(rule.weights > 0)
    assert rule.degree == 4
    # degree-4 exactness on the reference triangle: int x^a y^b
    def exact(a, b):
        import math
        return math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)
    x = rule.points[:, 1]
    y = rule.points[:, 2]
    for a, b in [(0, 0), (1, 0), (2, 1), (4, 0), (2, 2), (0, 4), (1, 3)]:
        got = (rule.weights * x ** a * y ** b).sum()
        assert got == pytest.approx(exact(a, b), rel=1e-13)


def test_sparse_container():
    m = ComplexSparseMatrix.from_triplets(3, [0, 0, 1, 2], [0, 0, 1, 0], [1, 1, 2j, 3.0])
    assert m.n == 3
    assert m.nnz == 3                       # duplicates summed
    assert np.all(np.diff(m.indptr) >= 0)
    got = m @ np.array([1.0, 1.0, 1.0], dtype=complex)
    assert np.allclose(got, [2.0, 2j, 3.0])
    z = ComplexSparseMatrix.zeros(3)
    assert (m + z).nnz == m.nnz


# ----------------------------------------------------------------------
# small hand-checkable meshes
# ----------------------------------------------------------------------

def one_triangle_problem(k=1.0):
    """Unit right triangle placed inside the homogeneous region."""
    vertices = np.array([[0.0, 0.0], [0.2, 0.0], [0.0, 0.2]])
    triangles = np.array([[0, 1, 2]], dtype=np.int32)
    mesh = geometry.Mesh(
        vertices=vertices, triangles=triangles,
        tri_region=np.array([0], dtype=np.int8),
        boundary_vertices=np.array([], dtype=np.int32),
        edge_vertices=np.zeros((0, 2), dtype=np.int32),
        edge_tris=np.zeros((0, 2), dtype=np.int32),
        edge_in_omega=np.zeros(0, dtype=bool),
        h_max=0.2 * np.sqrt(2), radii=(0.5, 1.0, 2.0))
    return NlhProblem(mesh=mesh, pml=pml.PmlProfile(4.0, 1.0, 2.0),
                      wavenumber=Wavenumber(k), kerr_epsilon=0.0,
                      incident=None, load=Load("zero"), penalty=None)


def test_element_matrix_is_stiffness_minus_mass():
    # A = I, B = 1, k = 1 on a triangle with legs 0.2: exact P1 matrices
    prob = one_triangle_problem(k=1.0)
    m = assembly.assemble_linear(prob).to_scipy().toarray()
    area = 0.5 * 0.2 * 0.2
    grads = np.array([[-5.0, -5.0], [5.0, 0.0], [0.0, 5.0]])
    k_ref = area * grads @ grads.T
    m_ref = area / 12.0 * (np.ones((3, 3)) + np.eye(3))
    assert np.abs(m - (k_ref - m_ref)).max() < 1e-14


def test_laplacian_reduction_at_k_zero():
    # with k -> 0 limit emulated by tiny k, the matrix approaches the pure
    # stiffness matrix of the interior vertices
    prob = reference_problem(geometry.build_disk_mesh((0.5, 1.0, 2.0), 0.35), k=1e-6,
                             epsilon=0.0)
    m = assembly.assemble_linear(prob).to_scipy()
    d = prob.discretization
    stiff = sp.lil_matrix((d.n, d.n), dtype=complex)
    mesh = prob.mesh
    inside = mesh.tri_region != geometry.Region.PML
    for t in range(mesh.num_triangles):
        tri = mesh.triangles[t]
        g = d.grads[t]
        loc = d.areas[t] * (g @ g.T)
        for i in range(3):
            for j in range(3):
                ri, rj = d.full_to_free[tri[i]], d.full_to_free[tri[j]]
                if ri >= 0 and rj >= 0 and inside[t]:
                    stiff[ri, rj] += loc[i, j]
    # restrict comparison to rows whose support avoids the layer, where A = I
    r = np.sqrt((mesh.vertices[d.free] ** 2).sum(axis=1))
    rows = np.nonzero(r < 0.9)[0]
    diff = (m - stiff.tocsr())[rows][:, rows]
    assert np.abs(diff.toarray()).max() < 1e-10


def test_complex_symmetry(ref_problem):
    m = assembly.assemble_linear(ref_problem)
    scale = np.abs(m.data).max()
    assert m.transpose_difference() <= 1e-13 * scale


def test_mismatched_layer_raises(coarse_mesh):
    with pytest.raises(ValueError, match="mismatch"):
        NlhProblem(mesh=coarse_mesh, pml=pml.PmlProfile(4.0, 1.0, 1.5),
                   wavenumber=Wavenumber(10.0), kerr_epsilon=0.0,
                   incident=None, load=Load("zero"))


# ----------------------------------------------------------------------
# penalty form
# ----------------------------------------------------------------------

def test_penalty_gamma_values():
    assert penalty_gamma(1.0, 1e-9).real == pytest.approx(-np.sqrt(3) / 24, rel=1e-12)
    assert penalty_gamma(1.0, 1e-9).imag == 0.0
    # evaluated from the formula at k h = pi/5 (frozen via an exact oracle)
    v = penalty_gamma(5.0, np.pi / 25.0)
    assert v.real == pytest.approx(-0.07256449328467494, abs=1e-12)
    # decreasing in h at fixed k
    assert penalty_gamma(10.0, 0.01).real > penalty_gamma(10.0, 0.02).real
    with pytest.raises(ValueError):
        penalty_gamma(-1.0, 0.1)


def test_cip_zero_rule_gives_zero_matrix(ref_problem):
    import dataclasses
    prob = dataclasses.replace(ref_problem, penalty=lambda k, h: 0.0)
    prob.__dict__.pop("discretization", None)
    j = assembly.assemble_cip(prob)
    assert np.all(j.data == 0.0) or j.nnz == 0


def test_cip_fem_bitwise_identical(coarse_mesh):
    fem = assembly.assemble_linear(reference_problem(coarse_mesh, method="fem"))
    prob0 = reference_problem(coarse_mesh, method="fem")
    prob0.penalty = lambda k, h: 0.0
    full0 = prob0.discretization.system_matrix
    assert np.array_equal(full0.indptr, fem.indptr)
    assert np.array_equal(full0.indices, fem.indices)
    assert np.array_equal(full0.data, fem.data)


def test_single_edge_penalty_pattern():
    # two triangles sharing the edge (0,1): penalty block equals
    # gamma * h_e^2 * outer(jump, jump)
    vertices = np.array([[0.0, 0.0], [0.1, 0.0], [0.05, 0.09], [0.05, -0.09]])
    triangles = np.array([[0, 1, 2], [0, 3, 1]], dtype=np.int32)
    mesh = geometry.Mesh(
        vertices=vertices, triangles=triangles,
        tri_region=np.array([0, 0], dtype=np.int8),
        boundary_vertices=np.array([], dtype=np.int32),
        edge_vertices=np.array([[0, 1]], dtype=np.int32),
        edge_tris=np.array([[0, 1]], dtype=np.int32),
        edge_in_omega=np.array([True]),
        h_max=0.2, radii=(0.5, 1.0, 2.0))
    prob = NlhProblem(mesh=mesh, pml=pml.PmlProfile(4.0, 1.0, 2.0),
                      wavenumber=Wavenumber(1.0), kerr_epsilon=0.0,
                      incident=None, load=Load("zero"), penalty=lambda k, h: 1.0)
    j = assembly.assemble_cip(prob).to_scipy().toarray()
    h_e = 0.1
    normal = np.array([0.0, -1.0])
    jump = np.zeros(4)
    d = prob.discretization
    for loc in range(3):
        jump[triangles[0, loc]] += d.grads[0, loc] @ normal
        jump[triangles[1, loc]] -= d.grads[1, loc] @ normal
    expect = h_e ** 2 * np.outer(jump, jump)
    assert np.abs(j - expect).max() < 1e-13


def test_penalty_quadratic_form_nonpositive(ref_problem_level2):
    import dataclasses
    prob = dataclasses.replace(ref_problem_level2, penalty=lambda k, h: -0.25)
    prob.__dict__.pop("discretization", None)
    j = assembly.assemble_cip(prob).to_scipy()
    rng = np.random.default_rng(8)
    for _ in range(10):
        v = rng.standard_normal(j.shape[0]) + 1j * rng.standard_normal(j.shape[0])
        q = np.vdot(v, j @ v)
        assert abs(q.imag) < 1e-10 * abs(q.real)
        assert q.real <= 0.0


def test_positive_imag_penalty_rejected(ref_problem):
    import dataclasses
    prob = dataclasses.replace(ref_problem, penalty=lambda k, h: 1.0 + 1.0j)
    prob.__dict__.pop("discretization", None)
    with pytest.raises(ValueError, match="imaginary"):
        assembly.assemble_cip(prob)


# ----------------------------------------------------------------------
# loads
# ----------------------------------------------------------------------

def test_zero_load(ref_problem):
    import dataclasses
    prob = dataclasses.replace(ref_problem, load=Load("zero"))
    prob.__dict__.pop("discretization", None)
    assert np.all(assembly.assemble_load(prob) == 0.0)


def test_constant_load_partition_of_unity(level2_mesh):
    import dataclasses
    prob = reference_problem(level2_mesh)
    prob = dataclasses.replace(prob, load=Load("constant", value=1.0))
    prob.__dict__.pop("discretization", None)
    f = assembly.assemble_load(prob)
    # summing (f, phi_i) over interior hats integrates 1 over the polygonal
    # unit disk minus the boundary-hat strip: O(h^2) from both effects
    total = f.sum().real
    assert total == pytest.approx(np.pi, abs=0.05)
    # entries vanish for hats supported outside the unit disk
    d = prob.discretization
    r = np.sqrt((prob.mesh.vertices[d.free] ** 2).sum(axis=1))
    far = r > 1.0 + prob.mesh.h_max + 1e-12
    assert np.all(f[far] == 0.0)


def test_transmission_load_support(small_sweep_mesh):
    prob = sweep_problem(small_sweep_mesh, amplitude=2.0)
    f = assembly.assemble_load(prob)
    d = prob.discretization
    r = np.sqrt((prob.mesh.vertices[d.free] ** 2).sum(axis=1))
    outside_core = r > 0.5 + prob.mesh.h_max + 1e-12
    assert np.all(f[outside_core] == 0.0)
    assert np.abs(f).max() > 0.0
    # linear in the amplitude
    f2 = assembly.assemble_load(prob, incident=prob.incident.scaled(3.0))
    assert np.allclose(f2, 3.0 * f, rtol=1e-13)


# ----------------------------------------------------------------------
# cubic-term linearizations
# ----------------------------------------------------------------------

def test_kerr_zero_epsilon(ref_problem):
    import dataclasses
    prob = dataclasses.replace(ref_problem, kerr_epsilon=0.0)
    prob.__dict__.pop("discretization", None)
    w = np.ones(prob.discretization.n, dtype=complex)
    mat, rhs = assembly.assemble_kerr_frozen(prob, w)
    assert mat.nnz == 0 and np.all(rhs == 0)
    lin, anti, rhs = assembly.assemble_kerr_newton(prob, w)
    assert lin.nnz == 0 and anti.nnz == 0 and np.all(rhs == 0)


def test_kerr_frozen_constant_modulus(small_sweep_mesh):
    # plane-wave incident with w = 0: |W|^2 = I^2 so the matrix is a scaled
    # core mass matrix
    prob = sweep_problem(small_sweep_mesh, amplitude=3.0)
    d = prob.discretization
    w = np.zeros(d.n, dtype=complex)
    mat, rhs = assembly.assemble_kerr_frozen(prob, w)
    k0 = prob.wavenumber.background
    fac = k0 ** 2 * prob.kerr_epsilon * 9.0
    mass = assembly._assemble_k2_mass(prob, prob.mesh.tri_region == geometry.Region.KERR)
    expect = mass.to_scipy() * (-fac / prob.wavenumber.in_kerr ** 2)
    assert np.abs((mat.to_scipy() - expect).toarray()).max() < 1e-15
    # rhs correction reduces to +k^2 eps |I|^2 (u_inc, phi) on the core
    load_like = assembly._vector_like(
        d, d.kerr_tris,
        2.0 * d.areas[d.kerr_tris][:, None] * d.rule.weights[None, :],
        fac * analytic.incident_value(prob.incident,
                                      d.quad_points[d.kerr_tris].reshape(-1, 2)
                                      ).reshape(d.kerr_tris.size, -1))
    assert np.allclose(rhs, load_like, rtol=1e-13)


def test_modified_newton_matrix_is_twice_frozen(ref_problem_level2):
    d = ref_problem_level2.discretization
    rng = np.random.default_rng(12)
    w = rng.standard_normal(d.n) + 1j * rng.standard_normal(d.n)
    m1, _ = assembly.assemble_kerr_frozen(ref_problem_level2, w)
    m2, _ = assembly.assemble_kerr_modified_newton(ref_problem_level2, w)
    assert np.abs((m2.to_scipy() - 2.0 * m1.to_scipy()).toarray()).max() < 1e-18


def test_newton_antilinear_half_of_linear_for_real_iterate(small_sweep_mesh):
    # with a real-valued W at all quadrature points, W^2 = |W|^2
    import dataclasses
    prob = sweep_problem(small_sweep_mesh)
    prob = dataclasses.replace(prob, incident=None, load=Load("zero"))
    prob.__dict__.pop("discretization", None)
    d = prob.discretization
    rng = np.random.default_rng(13)
    w = rng.standard_normal(d.n).astype(complex)
    lin, anti, _ = assembly.assemble_kerr_newton(prob, w)
    assert np.abs((lin.to_scipy() - 2.0 * anti.to_scipy()).toarray()).max() < 1e-18


def test_newton_matrices_complex_symmetric(small_sweep_mesh):
    prob = sweep_problem(small_sweep_mesh, amplitude=2.0e5)
    d = prob.discretization
    rng = np.random.default_rng(14)
    w = 1e4 * (rng.standard_normal(d.n) + 1j * rng.standard_normal(d.n))
    lin, anti, _ = assembly.assemble_kerr_newton(prob, w)
    for m in (lin, anti):
        scale = np.abs(m.data).max()
        assert m.transpose_difference() <= 1e-13 * scale


def test_residual_zero_cases(ref_problem_level2):
    import dataclasses
    from kerrhelm import linsolve
    prob = dataclasses.replace(ref_problem_level2, kerr_epsilon=0.0)
    prob.__dict__.pop("discretization", None)
    d = prob.discretization
    # u = 0 with f = 0 and no incident wave
    prob0 = dataclasses.replace(prob, load=Load("zero"), incident=None)
    prob0.__dict__.pop("discretization", None)
    res = assembly.nonlinear_residual(prob0, np.zeros(prob0.discretization.n, complex))
    assert np.all(res == 0)
    # u = linear solve of the eps = 0 problem
    u, rep = linsolve.solve(d.system_matrix, d.load_vector)
    assert rep.success
    res = assembly.nonlinear_residual(prob, u)
    assert np.linalg.norm(res) <= 1e-9 * np.linalg.norm(d.load_vector)


def test_frechet_consistency(ref_problem_level2):
    # residual(u + t d) - residual(u) matches the full linearization to O(t^2)
    prob = ref_problem_level2
    d = prob.discretization
    rng = np.random.default_rng(15)
    u = rng.standard_normal(d.n) + 1j * rng.standard_normal(d.n)
    delta = rng.standard_normal(d.n) + 1j * rng.standard_normal(d.n)
    base = d.system_matrix
    lin, anti, _ = assembly.assemble_kerr_newton(prob, u)
    r0 = assembly.nonlinear_residual(prob, u)
    ts = np.array([1e-2, 1e-3, 1e-4, 1e-5])
    errs = []
    for t in ts:
        r1 = assembly.nonlinear_residual(prob, u + t * delta)
        step = base @ (t * delta) + lin @ (t * delta) + anti @ np.conj(t * delta)
        errs.append(np.linalg.norm(r1 - r0 - step))
    slope = np.polyfit(np.log(ts), np.log(errs), 1)[0]
    assert slope >= 1.9
