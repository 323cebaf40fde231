import io

import numpy as np
import pytest
import scipy.io
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from fracplate.assembly import (AssembledSystem, NonlocalSettings, PointLoad, UniformLoad, apply_essential_bcs,
                                assemble_force, assemble_mass, assemble_stiffness, assemble_stiffness_rows,
                                assemble_system, boundary_conditions, export_matrix_market, integer_b_row,
                                nonlocal_b_row)
from fracplate.mesh import build_mesh
from fracplate.model import PlateModel, isotropic
from oracles import kirchhoff_oracle, mindlin_oracle, rel, rigid_modes

MINDLIN = PlateModel(1.0, 1.0, 0.1, isotropic(30e9, 0.3))
KIRCHHOFF = PlateModel(1.0, 1.0, 0.01, isotropic(30e9, 0.25))


@pytest.mark.parametrize("nx,ny", [(1, 1), (3, 2), (8, 8)])
def test_mindlin_local_matches_oracle(nx, ny):
    mesh, dm = build_mesh(1.0, 1.0, nx, ny, "mindlin")
    s = assemble_system("mindlin", mesh, dm, MINDLIN.constitutive, MINDLIN.inertia, UniformLoad(1.0))
    K, M, F = mindlin_oracle(mesh, dm, MINDLIN)
    assert rel(s.K, K) < 1e-8
    assert rel(s.M, M) < 1e-8
    assert rel(s.F, F) < 1e-8


@pytest.mark.parametrize("nx,ny", [(1, 1), (2, 3), (8, 8)])
def test_kirchhoff_local_matches_oracle(nx, ny):
    mesh, dm = build_mesh(1.0, 1.0, nx, ny, "kirchhoff")
    K0 = assemble_stiffness("kirchhoff", mesh, dm, KIRCHHOFF.constitutive, NonlocalSettings(ngp=4))
    M0 = assemble_mass("kirchhoff", mesh, dm, KIRCHHOFF.inertia)
    F0 = assemble_force(mesh, dm, UniformLoad(1.0))
    K, M, F = kirchhoff_oracle(mesh, dm, KIRCHHOFF)
    assert rel(K0, K) < 1e-8
    assert rel(M0, M) < 1e-8
    assert rel(F0, F) < 1e-8


def test_total_load_and_mass():
    for theory, plate in (("mindlin", MINDLIN), ("kirchhoff", KIRCHHOFF)):
        mesh, dm = build_mesh(2.0, 1.0, 4, 3, theory)
        F = assemble_force(mesh, dm, UniformLoad(5.0))
        assert F[dm.block("w")].sum() == pytest.approx(10.0)
        M = assemble_mass(theory, mesh, dm, plate.inertia)
        ones = np.zeros(dm.n_dofs)
        ones[dm.block("w")] = 1.0
        assert ones @ (M @ ones) == pytest.approx(plate.inertia.I0 * 2.0)


def test_point_load_grid_shape_checked():
    mesh, dm = build_mesh(1, 1, 2, 2, "mindlin")
    with pytest.raises(ValueError):
        assemble_force(mesh, dm, PointLoad(Fz=lambda x, y: np.ones(3)))
    _, dk = build_mesh(1, 1, 2, 2, "kirchhoff")
    with pytest.raises(ValueError):
        assemble_force(mesh, dk, PointLoad(Mtx=lambda x, y: np.ones((len(y), len(x)))))
    with pytest.raises(TypeError):
        assemble_force(mesh, dm, 3.0)


# ---------------------------------------------------------------------------
# Fractional stiffness: tensor route vs per-anchor row route
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("theory,plate,n,whole", [("mindlin", MINDLIN, 4, True), ("mindlin", MINDLIN, 3, False),
                                                   ("kirchhoff", KIRCHHOFF, 3, True)])
def test_tensor_route_matches_row_route(theory, plate, n, whole):
    mesh, dm = build_mesh(1.0, 1.0, n, n, theory)
    st_ = NonlocalSettings(0.8, 0.45, whole_elements=whole)
    K = assemble_stiffness(theory, mesh, dm, plate.constitutive, st_)
    K_rows = assemble_stiffness_rows(theory, mesh, dm, plate.constitutive, st_)
    assert rel(K, K_rows) < 1e-10


def test_transverse_only_drops_in_plane_blocks():
    mesh, dm = build_mesh(1.0, 1.0, 4, 4, "mindlin")
    st_ = NonlocalSettings(0.8, 0.3)
    full = assemble_stiffness("mindlin", mesh, dm, MINDLIN.constitutive, st_).toarray()
    tr = assemble_stiffness("mindlin", mesh, dm, MINDLIN.constitutive, st_, transverse_only=True).toarray()
    t = np.concatenate([np.arange(dm.n_dofs)[dm.block(c)] for c in ("w", "tx", "ty")])
    assert np.allclose(tr[np.ix_(t, t)], full[np.ix_(t, t)], rtol=1e-12, atol=0)
    inplane = np.setdiff1d(np.arange(dm.n_dofs), t)
    assert not np.any(tr[inplane])


# ---------------------------------------------------------------------------
# System invariants
# ---------------------------------------------------------------------------

CASES = [("mindlin", MINDLIN, 6, 1.0, 0.0), ("mindlin", MINDLIN, 6, 0.7, 0.5), ("mindlin", MINDLIN, 8, 0.9, 0.25),
         ("kirchhoff", KIRCHHOFF, 5, 1.0, 0.0), ("kirchhoff", KIRCHHOFF, 6, 0.7, 0.5)]


def _stiff(theory, plate, n, alpha, lf):
    mesh, dm = build_mesh(1.0, 1.0, n, n, theory)
    st_ = NonlocalSettings(alpha, lf)
    return mesh, dm, assemble_stiffness(theory, mesh, dm, plate.constitutive, st_)


@pytest.mark.parametrize("theory,plate,n,alpha,lf", CASES)
def test_symmetry_and_definiteness(theory, plate, n, alpha, lf):
    mesh, dm, K = _stiff(theory, plate, n, alpha, lf)
    assert abs(K - K.T).max() <= 1e-10 * abs(K).max()
    for bc in ("CCCC", "SSSS"):
        s = apply_essential_bcs(AssembledSystem(K, None, np.zeros(dm.n_dofs), mesh, dm),
                                boundary_conditions(bc, theory))
        np.linalg.cholesky(s.reduced_K().toarray())


@pytest.mark.parametrize("theory,plate,n,alpha,lf", CASES)
def test_rigid_modes_annihilated(theory, plate, n, alpha, lf):
    mesh, dm, K = _stiff(theory, plate, n, alpha, lf)
    normK = sp.linalg.norm(K)
    for U in rigid_modes(mesh, dm):
        assert np.linalg.norm(K @ U) <= 1e-8 * normK * np.linalg.norm(U)


@pytest.mark.parametrize("theory,plate,n,alpha,lf", [c for c in CASES if c[3] < 1])
def test_locality_bound(theory, plate, n, alpha, lf):
    mesh, dm, K = _stiff(theory, plate, n, alpha, lf)
    node = np.concatenate([np.arange(mesh.n_nodes)] * dm.dofs_per_node)
    xy = mesh.node_coords[node]
    C = K.tocoo()
    d = np.abs(xy[C.row] - xy[C.col])
    reach = 2 * (lf + 2 * max(mesh.lex, mesh.ley))
    assert np.all(d <= reach + 1e-12)
    assert K.nnz < dm.n_dofs ** 2


def test_local_stiffness_is_sparse_and_fractional_widens():
    mesh, dm = build_mesh(1, 1, 10, 10, "mindlin")
    K1 = assemble_stiffness("mindlin", mesh, dm, MINDLIN.constitutive)
    Ka = assemble_stiffness("mindlin", mesh, dm, MINDLIN.constitutive, NonlocalSettings(0.8, 0.3))
    C = K1.tocoo()
    xy = mesh.node_coords[np.concatenate([np.arange(mesh.n_nodes)] * 5)]
    assert np.all(np.abs(xy[C.row] - xy[C.col]) <= mesh.lex + 1e-12)
    assert Ka.nnz > K1.nnz


# ---------------------------------------------------------------------------
# Row operators
# ---------------------------------------------------------------------------


@settings(max_examples=25, deadline=None)
@given(st.floats(0.01, 0.99), st.floats(0.01, 0.99), st.floats(0.3, 0.99), st.floats(0.05, 0.6),
       st.sampled_from(["x", "y"]), st.booleans())
def test_nonlocal_row_reproduces_linear_fields(x, y, alpha, lf, direction, whole):
    mesh, dm = build_mesh(1.0, 1.0, 7, 5, "mindlin")
    xs, ys = mesh.node_coords.T
    U = np.zeros(dm.n_dofs)
    U[dm.block("tx")] = 0.3 - 1.7 * xs + 2.2 * ys
    row = nonlocal_b_row((x, y), "tx", direction, NonlocalSettings(alpha, lf, whole_elements=whole), mesh, dm)
    assert row.dot(U) == pytest.approx(-1.7 if direction == "x" else 2.2, abs=1e-9)
    assert row.to_sparse().shape == (1, dm.n_dofs)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.01, 0.99), st.floats(0.01, 0.99), st.floats(0.3, 0.99), st.floats(0.05, 0.6))
def test_hermite_row_second_derivative_of_quadratic(x, y, alpha, lf):
    mesh, dm = build_mesh(1.0, 1.0, 5, 4, "kirchhoff")
    xs, ys = mesh.node_coords.T
    U = np.zeros(dm.n_dofs)
    U[dm.block("w")] = xs ** 2 + xs * ys
    U[dm.block("wx")] = 2 * xs + ys
    U[dm.block("wy")] = xs
    U[dm.block("wxy")] = 1.0
    row = nonlocal_b_row((x, y), "w", "x", NonlocalSettings(alpha, lf), mesh, dm, inner=(1, 0))
    assert row.dot(U) == pytest.approx(2.0, abs=1e-8)


def test_row_at_alpha_one_is_integer_row():
    mesh, dm = build_mesh(1.0, 1.0, 3, 3, "mindlin")
    row = nonlocal_b_row((0.4, 0.5), "w", "y", NonlocalSettings(), mesh, dm)
    r, idx = integer_b_row(mesh, dm, mesh.element_of(0.4, 0.5), (0.4, 0.5), "w", "y")
    assert np.allclose(row.to_sparse().toarray()[0, idx], r)
    with pytest.raises(ValueError):
        integer_b_row(mesh, dm, 0, (0.1, 0.1), "q", "x")
    with pytest.raises(ValueError):
        integer_b_row(mesh, dm, 0, (0.1, 0.1), "w", "z")


# ---------------------------------------------------------------------------
# Boundary conditions and export
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("theory,bc,n,retained", [("mindlin", "CCCC", 4, 45), ("mindlin", "SSSS", 4, 69),
                                                  ("kirchhoff", "CCCC", 3, 24), ("kirchhoff", "SSSS", 3, 52)])
def test_bc_counts_and_idempotence(theory, bc, n, retained):
    mesh, dm = build_mesh(1.0, 1.0, n, n, theory)
    s = AssembledSystem(sp.identity(dm.n_dofs, format="csr"), None, np.zeros(dm.n_dofs), mesh, dm)
    bcs = boundary_conditions(bc, theory)
    once = apply_essential_bcs(s, bcs)
    assert once.free.size == retained
    assert np.array_equal(apply_essential_bcs(once, bcs).free, once.free)
    U = once.expand(np.ones(retained))
    assert U.sum() == retained and U.shape == (dm.n_dofs,)


def test_bc_errors():
    with pytest.raises(ValueError):
        boundary_conditions("CFCF", "mindlin")
    mesh, dm = build_mesh(1.0, 1.0, 1, 1, "mindlin")
    s = AssembledSystem(sp.identity(dm.n_dofs, format="csr"), None, np.zeros(dm.n_dofs), mesh, dm)
    with pytest.raises(ValueError):
        apply_essential_bcs(s, boundary_conditions("CCCC", "mindlin"))


def test_matrix_market_symmetric_roundtrip():
    mesh, dm, K = _stiff("mindlin", MINDLIN, 3, 0.8, 0.4)
    buf = io.BytesIO()
    export_matrix_market(K, buf, comment="test")
    text = buf.getvalue().decode()
    assert text.splitlines()[0] == "%%MatrixMarket matrix coordinate real symmetric"
    back = scipy.io.mmread(io.BytesIO(buf.getvalue()))
    assert rel(back, K) < 1e-15
    assert int(text.splitlines()[2].split()[2]) == sp.tril(K).nnz


def test_settings_validation():
    with pytest.raises(ValueError):
        NonlocalSettings(0.0, 0.1)
    with pytest.raises(ValueError):
        NonlocalSettings(0.8, 0.0)
