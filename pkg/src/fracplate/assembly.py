"""Global stiffness, mass and load assembly for fractional-order plates.

Both element families are tensor products of 1D bases and every
fractional derivative convolves along one axis at a fixed transverse
coordinate.  The production path therefore builds small 1D operators
(values, integer derivatives and their kernel convolutions sampled at the
Gauss points of one axis) and forms every 2D block as a Kronecker product
of 1D Gram matrices.  ``nonlocal_b_row`` builds the same operator one
anchor at a time from the 2D shape functions; it backs the cross-check
assembler ``assemble_stiffness_rows``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
import scipy.io
import scipy.sparse as sp

from .fracops import (FractionalParams, gauss_jacobi_rule, gauss_legendre_rule,
                      signed_power_moments)
from .mesh import (HERMITE_DOF_ORDERS, DofMap, StructuredMesh, Theory, _window,
                   hermite_1d, hermite_shape, horizon_stencil, lagrange_shape)
from .model import ConstitutiveMatrices, InertiaCoeffs

__all__ = [
    "NonlocalSettings",
    "AxisOperators",
    "axis_operators",
    "NonlocalRowOperator",
    "integer_b_row",
    "nonlocal_b_row",
    "assemble_stiffness",
    "assemble_stiffness_rows",
    "assemble_mass",
    "UniformLoad",
    "PointLoad",
    "assemble_force",
    "AssembledSystem",
    "BoundaryConditionSet",
    "boundary_conditions",
    "apply_essential_bcs",
    "assemble_system",
    "export_matrix_market",
]

_P = np.polynomial.polynomial


@dataclass(frozen=True)
class NonlocalSettings:
    """Fractional model and quadrature choices for the stiffness.

    Parameters
    ----------
    alpha : float
        Fractional order in (0, 1].
    l_f : float
        Nominal horizon length (same for both axes).
    whole_elements : bool
        Integrate over whole elements (``ceil`` on the left, ``floor`` on
        the right of the anchor element) instead of the exact horizon.
    far_gauss : int or None
        Gauss-Legendre points on non-singular horizon elements; ``None``
        integrates them with the closed-form moments.
    ngp : int or None
        Outer Gauss points per element per axis; defaults to 2 for
        Mindlin and 3 for Kirchhoff.
    """

    alpha: float = 1.0
    l_f: float = 0.0
    whole_elements: bool = True
    far_gauss: int | None = None
    ngp: int | None = None

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise ValueError("alpha must lie in (0, 1]")
        if self.alpha < 1.0 and self.l_f <= 0:
            raise ValueError("a fractional order needs a positive horizon l_f")
        if self.far_gauss is not None and self.far_gauss < 1:
            raise ValueError("far_gauss must be >= 1")


# ---------------------------------------------------------------------------
# 1D operators
# ---------------------------------------------------------------------------


def _basis_coeffs(kind: str, le: float) -> np.ndarray:
    """Ascending xi-coefficients of the 1D element basis, padded to cubic."""
    if kind == "lagrange":
        return np.array([[0.5, -0.5, 0.0, 0.0], [0.5, 0.5, 0.0, 0.0]])
    if kind == "hermite":
        return hermite_1d(le)
    raise ValueError(f"unknown basis {kind!r}")


def _dofs_per_node(kind: str) -> int:
    return 1 if kind == "lagrange" else 2


def _deriv_coeffs(c: np.ndarray, order: int, le: float) -> np.ndarray:
    """Physical-coordinate derivative of xi-polynomials, kept 4 wide."""
    out = np.zeros_like(c)
    for r in range(c.shape[0]):
        d = _P.polyder(c[r], order) * (2.0 / le) ** order if order else c[r]
        out[r, : len(d)] = d
    return out


def _shift_matrix(xi0: float, scale: float, deg: int = 3) -> np.ndarray:
    """T with (T @ a) = coefficients in s of sum_j a_j (xi0 + scale*s)**j."""
    T = np.zeros((deg + 1, deg + 1))
    for j in range(deg + 1):
        for i in range(j + 1):
            T[i, j] = math.comb(j, i) * xi0 ** (j - i) * scale ** i
    return T


@dataclass(frozen=True)
class AxisOperators:
    """1D basis operators sampled at the Gauss points of one axis.

    Each matrix has one row per Gauss point and one column per 1D DOF.
    ``C1``/``C2`` are kernel convolutions of the first/second integer
    derivative; at ``alpha = 1`` they equal ``D1``/``D2``.
    """

    kind: str
    n: int
    length: float
    coords: np.ndarray
    weights: np.ndarray
    V: np.ndarray
    D1: np.ndarray
    D2: np.ndarray
    C1: np.ndarray
    C2: np.ndarray

    @property
    def ndof(self) -> int:
        return self.V.shape[1]

    def op(self, name: str) -> np.ndarray:
        return getattr(self, name)

    def gram(self, a: str, b: str) -> np.ndarray:
        A, B = self.op(a), self.op(b)
        return A.T @ (self.weights[:, None] * B)


def _conv_segment_row(coef, xi_k, le, s0, s1, alpha, far_gauss, singular):
    """Contribution of one segment [s0, s1] (relative to the anchor) of element k.

    Returns the vector over local basis functions of
    ``int |s|**(-alpha) * phi(xi_k + 2 s/le) ds``.
    """
    if far_gauss and not singular:
        r = gauss_legendre_rule(far_gauss)
        s = 0.5 * (s0 + s1) + 0.5 * (s1 - s0) * r.points
        w = 0.5 * (s1 - s0) * r.weights * np.abs(s) ** (-alpha)
        xi = xi_k + 2.0 * s / le
        return np.array([np.dot(w, _P.polyval(xi, c)) for c in coef])
    m = signed_power_moments(s0, s1, alpha, 3)
    T = _shift_matrix(xi_k, 2.0 / le)
    return coef @ T.T @ m


def axis_operators(n: int, length: float, kind: str, ngp: int, settings: NonlocalSettings) -> AxisOperators:
    """Build the 1D operators of one axis with ``n`` uniform elements."""
    le = length / n
    base = _basis_coeffs(kind, le)
    nloc = base.shape[0]
    dpn = _dofs_per_node(kind)
    ndof = (n + 1) * dpn
    rule = gauss_legendre_rule(ngp)
    ng = n * ngp
    d1 = _deriv_coeffs(base, 1, le)
    d2 = _deriv_coeffs(base, 2, le)
    coords = np.empty(ng)
    weights = np.empty(ng)
    V = np.zeros((ng, ndof))
    D1 = np.zeros((ng, ndof))
    D2 = np.zeros((ng, ndof))
    for e in range(n):
        cols = slice(e * dpn, e * dpn + nloc)
        for q, (xi, wq) in enumerate(zip(rule.points, rule.weights)):
            g = e * ngp + q
            coords[g] = (e + 0.5 + 0.5 * xi) * le
            weights[g] = wq * 0.5 * le
            V[g, cols] = _P.polyval(xi, base.T)
            D1[g, cols] = _P.polyval(xi, d1.T)
            D2[g, cols] = _P.polyval(xi, d2.T)
    a = settings.alpha
    if a == 1.0:
        return AxisOperators(kind, n, length, coords, weights, V, D1, D2, D1.copy(), D2.copy())

    C1 = np.zeros((ng, ndof))
    C2 = np.zeros((ng, ndof))
    for g in range(ng):
        e = g // ngp
        xg = coords[g]
        lA = min(settings.l_f, xg)
        lB = min(settings.l_f, length - xg)
        lo, hi, k0, k1 = _window(xg, e, le, n, lA, lB, settings.whole_elements)
        # Each side is normalized by its integrated extent so that the
        # kernel integrates to one and linear fields are reproduced.
        cA = 0.5 * (1.0 - a) * (xg - lo) ** (a - 1.0)
        cB = 0.5 * (1.0 - a) * (hi - xg) ** (a - 1.0)
        for k in range(k0, k1 + 1):
            ea, eb = k * le, (k + 1) * le
            s0, s1 = max(ea, lo) - xg, min(eb, hi) - xg
            if s1 <= s0:
                continue
            xi_k = (2.0 * xg - (ea + eb)) / le
            if k == e:
                segs = ((s0, 0.0, cA), (0.0, s1, cB))
            else:
                segs = ((s0, s1, cA if s1 <= 0 else cB),)
            cols = slice(k * dpn, k * dpn + nloc)
            for u0, u1, c in segs:
                C1[g, cols] += c * _conv_segment_row(d1, xi_k, le, u0, u1, a, settings.far_gauss, k == e)
                if kind == "hermite":
                    C2[g, cols] += c * _conv_segment_row(d2, xi_k, le, u0, u1, a, settings.far_gauss, k == e)
    return AxisOperators(kind, n, length, coords, weights, V, D1, D2, C1, C2)


# ---------------------------------------------------------------------------
# Field layout: which 1D basis each unknown uses and where it lands globally
# ---------------------------------------------------------------------------


def _fields(theory: Theory) -> dict[str, str]:
    if theory is Theory.MINDLIN:
        return {c: "lagrange" for c in ("u", "v", "w", "tx", "ty")}
    return {"u": "lagrange", "v": "lagrange", "w": "hermite"}


def _embedding(mesh: StructuredMesh, dofmap: DofMap, fname: str, kind: str) -> np.ndarray:
    """Global DOF index of every tensor-product DOF of a field.

    Tensor index is ``ty * ndof_x + tx`` with per-axis DOF ``node*dpn + order``.
    """
    nx1, ny1 = mesh.Nx + 1, mesh.Ny + 1
    if kind == "lagrange":
        return np.asarray(dofmap.index(np.arange(nx1 * ny1), fname))
    comp_of = {o: c for o, c in zip(HERMITE_DOF_ORDERS, ("w", "wx", "wy", "wxy"))}
    ty, tx = np.divmod(np.arange(4 * nx1 * ny1), 2 * nx1)
    j, ay = np.divmod(ty, 2)
    i, ax = np.divmod(tx, 2)
    node = j * nx1 + i
    out = np.empty_like(node)
    for (ox, oy), comp in comp_of.items():
        sel = (ax == ox) & (ay == oy)
        out[sel] = dofmap.index(node[sel], comp)
    return out


# A strain row is a list of terms (field, coefficient, y-operator, x-operator).
Term = tuple[str, float, str, str]


def _stiffness_rows(theory: Theory) -> tuple[list[list[Term]], list[list[Term]]]:
    membrane = [
        [("u", 1.0, "V", "C1")],
        [("v", 1.0, "C1", "V")],
        [("u", 1.0, "C1", "V"), ("v", 1.0, "V", "C1")],
    ]
    if theory is Theory.MINDLIN:
        bending = [
            [("tx", 1.0, "V", "C1")],
            [("ty", 1.0, "C1", "V")],
            [("tx", 1.0, "C1", "V"), ("ty", 1.0, "V", "C1")],
        ]
        shear = [
            [("w", 1.0, "C1", "V"), ("ty", -1.0, "V", "V")],
            [("w", 1.0, "V", "C1"), ("tx", -1.0, "V", "V")],
        ]
        return membrane + bending, shear
    bending = [
        [("w", 1.0, "V", "C2")],
        [("w", 1.0, "C2", "V")],
        [("w", 1.0, "C1", "D1"), ("w", 1.0, "D1", "C1")],
    ]
    return membrane + bending, []


def _mass_rows(theory: Theory, inertia: InertiaCoeffs) -> tuple[list[list[Term]], np.ndarray]:
    if theory is Theory.MINDLIN:
        rows = [[(c, 1.0, "V", "V")] for c in ("u", "v", "w", "tx", "ty")]
        dens = [inertia.I0] * 3 + [inertia.I2] * 2
    else:
        rows = [[("u", 1.0, "V", "V")], [("v", 1.0, "V", "V")], [("w", 1.0, "V", "V")],
                [("w", 1.0, "V", "D1")], [("w", 1.0, "D1", "V")]]
        dens = [inertia.I0] * 3 + [inertia.I2] * 2
    return rows, np.diag(dens)


def _tensor_assemble(rows: Sequence[Sequence[Term]], S: np.ndarray, ops: dict, fields: dict,
                     embed: dict, n_dofs: int) -> sp.csr_matrix:
    """sum_ab S_ab int (row_a)^T (row_b) as a global sparse matrix."""
    cache: dict = {}

    def gram(kind, axis, a, b):
        key = (kind, axis, a, b)
        if key not in cache:
            cache[key] = sp.csr_matrix(ops[kind][axis].gram(a, b))
        return cache[key]

    blocks: dict[tuple[str, str], sp.spmatrix] = {}
    for ia, ra in enumerate(rows):
        for ib, rb in enumerate(rows):
            s = S[ia, ib]
            if s == 0.0:
                continue
            for fa, ca, ya, xa in ra:
                for fb, cb, yb, xb in rb:
                    ka, kb = fields[fa], fields[fb]
                    if ka != kb:
                        raise NotImplementedError("mixed-basis coupling is not needed by either theory")
                    blk = sp.kron(gram(ka, "y", ya, yb), gram(ka, "x", xa, xb), format="csr")
                    key = (fa, fb)
                    blocks[key] = blocks[key] + s * ca * cb * blk if key in blocks else s * ca * cb * blk
    out = sp.csr_matrix((n_dofs, n_dofs))
    for (fa, fb), blk in blocks.items():
        coo = blk.tocoo()
        out = out + sp.csr_matrix((coo.data, (embed[fa][coo.row], embed[fb][coo.col])), shape=(n_dofs, n_dofs))
    out.sum_duplicates()
    out.eliminate_zeros()
    return out.tocsr()


def _default_ngp(theory: Theory) -> int:
    return 2 if theory is Theory.MINDLIN else 3


def _operator_sets(mesh: StructuredMesh, theory: Theory, ngp: int, settings: NonlocalSettings) -> dict:
    kinds = set(_fields(theory).values())
    return {k: {"x": axis_operators(mesh.Nx, mesh.L, k, ngp, settings),
                "y": axis_operators(mesh.Ny, mesh.B, k, ngp, settings)} for k in kinds}


def _embeddings(mesh, dofmap, theory) -> dict:
    return {f: _embedding(mesh, dofmap, f, k) for f, k in _fields(theory).items()}


def _restrict(rows, keep):
    return [[t for t in r if t[0] in keep] for r in rows]


def assemble_stiffness(theory, mesh: StructuredMesh, dofmap: DofMap, constitutive: ConstitutiveMatrices,
                       settings: NonlocalSettings = NonlocalSettings(), transverse_only: bool = False) -> sp.csr_matrix:
    """Nonlocal stiffness ``int B_B^T S_B B_B + B_S^T S_S B_S`` (no shear block for Kirchhoff).

    With ``transverse_only`` the in-plane terms are skipped; the result is
    the full-size matrix with zero ``u``/``v`` rows and columns, which is
    exact because the two blocks are uncoupled.
    """
    theory = Theory.parse(theory)
    ngp = settings.ngp or _default_ngp(theory)
    fields = _fields(theory)
    if transverse_only:
        fields = {f: k for f, k in fields.items() if f not in ("u", "v")}
    ops = _operator_sets(mesh, theory, ngp, settings)
    embed = {f: _embedding(mesh, dofmap, f, k) for f, k in fields.items()}
    rows_b, rows_s = _stiffness_rows(theory)
    if transverse_only:
        rows_b, rows_s = _restrict(rows_b, fields), _restrict(rows_s, fields)
    K = _tensor_assemble(rows_b, constitutive.S_B, ops, fields, embed, dofmap.n_dofs)
    if rows_s:
        K = K + _tensor_assemble(rows_s, constitutive.S_S, ops, fields, embed, dofmap.n_dofs)
    return _symmetrize(K)


def assemble_mass(theory, mesh: StructuredMesh, dofmap: DofMap, inertia: InertiaCoeffs, ngp: int | None = None) -> sp.csr_matrix:
    """Consistent local mass matrix (no fractional convolution)."""
    theory = Theory.parse(theory)
    ngp = ngp or (2 if theory is Theory.MINDLIN else 4)
    ops = _operator_sets(mesh, theory, ngp, NonlocalSettings())
    rows, S = _mass_rows(theory, inertia)
    M = _tensor_assemble(rows, S, ops, _fields(theory), _embeddings(mesh, dofmap, theory), dofmap.n_dofs)
    return _symmetrize(M)


def _symmetrize(A: sp.csr_matrix) -> sp.csr_matrix:
    # Exact symmetry; the Kronecker sums are symmetric up to round-off only.
    return ((A + A.T) * 0.5).tocsr()


# ---------------------------------------------------------------------------
# Loads
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UniformLoad:
    """Uniformly distributed transverse pressure ``q`` (N/m^2)."""

    q: float


@dataclass(frozen=True)
class PointLoad:
    """Pointwise transverse load and distributed moments.

    Each callable takes 1D coordinate arrays ``(x, y)`` and returns the
    field on their tensor grid with shape ``(len(y), len(x))``.  ``None``
    means the field is zero.
    """

    Fz: Callable | None = None
    Mtx: Callable | None = None
    Mty: Callable | None = None


def assemble_force(mesh: StructuredMesh, dofmap: DofMap, load, ngp: int = 4) -> np.ndarray:
    """Consistent load vector from shape-function projection."""
    theory = dofmap.theory
    if isinstance(load, UniformLoad):
        q = float(load.q)
        load = PointLoad(Fz=lambda x, y: np.full((len(y), len(x)), q))
    if not isinstance(load, PointLoad):
        raise TypeError(f"unsupported load type {type(load).__name__}")
    if theory is Theory.KIRCHHOFF and (load.Mtx is not None or load.Mty is not None):
        raise ValueError("distributed moments are only defined for the Mindlin plate")
    ops = _operator_sets(mesh, theory, ngp, NonlocalSettings())
    fields = _fields(theory)
    embed = _embeddings(mesh, dofmap, theory)
    F = np.zeros(dofmap.n_dofs)
    for fname, fun in (("w", load.Fz), ("tx", load.Mtx), ("ty", load.Mty)):
        if fun is None:
            continue
        kind = fields[fname]
        ox, oy = ops[kind]["x"], ops[kind]["y"]
        vals = np.asarray(fun(ox.coords, oy.coords), dtype=float)
        if vals.shape != (len(oy.coords), len(ox.coords)):
            raise ValueError("load callable returned the wrong grid shape")
        weighted = vals * oy.weights[:, None] * ox.weights[None, :]
        f_t = (oy.V.T @ weighted @ ox.V).ravel()
        np.add.at(F, embed[fname], f_t)
    return F


# ---------------------------------------------------------------------------
# Row operators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NonlocalRowOperator:
    """Sparse row over global DOFs giving one derivative value at an anchor."""

    anchor: tuple[float, float]
    variable: str
    direction: str
    inner: tuple[int, int]
    indices: np.ndarray
    values: np.ndarray
    n_dofs: int

    def dot(self, U: np.ndarray) -> float:
        return float(np.dot(self.values, np.asarray(U)[self.indices]))

    def to_sparse(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.values, (np.zeros_like(self.indices), self.indices)), shape=(1, self.n_dofs))


def _element_dofs(mesh: StructuredMesh, dofmap: DofMap, e: int, variable: str) -> np.ndarray:
    nodes = mesh.connectivity[e]
    if dofmap.theory is Theory.KIRCHHOFF and variable == "w":
        comps = ("w", "wx", "wy", "wxy")
        return np.array([dofmap.index(nd, c) for nd in nodes for c in comps])
    return np.asarray(dofmap.index(nodes, variable))


def _element_local(mesh: StructuredMesh, e: int, x: float, y: float) -> tuple[float, float]:
    p, q = e % mesh.Nx, e // mesh.Nx
    xi = 2.0 * (x - (p + 0.5) * mesh.lex) / mesh.lex
    eta = 2.0 * (y - (q + 0.5) * mesh.ley) / mesh.ley
    return xi, eta


def _local_derivative(mesh, dofmap, e, variable, x, y, order) -> np.ndarray:
    """Local row of d^(ox+oy)/dx^ox dy^oy of ``variable`` at (x, y) using element e's polynomials."""
    xi, eta = _element_local(mesh, e, x, y)
    ox, oy = order
    if dofmap.theory is Theory.KIRCHHOFF and variable == "w":
        N, dN, d2N = hermite_shape(xi, eta, mesh.lex, mesh.ley)
        table = {(0, 0): N, (1, 0): dN[:, 0], (0, 1): dN[:, 1], (2, 0): d2N[:, 0],
                 (0, 2): d2N[:, 1], (1, 1): d2N[:, 2]}
    else:
        N, dN = lagrange_shape(xi, eta)
        twist = np.array([1.0, -1.0, 1.0, -1.0]) / (mesh.lex * mesh.ley)
        table = {(0, 0): N, (1, 0): dN[:, 0] * 2.0 / mesh.lex, (0, 1): dN[:, 1] * 2.0 / mesh.ley,
                 (2, 0): np.zeros(4), (0, 2): np.zeros(4), (1, 1): twist}
    if order not in table:
        raise ValueError(f"derivative order {order} not available")
    return table[order]


def integer_b_row(mesh: StructuredMesh, dofmap: DofMap, element: int, point: tuple[float, float],
                  variable: str, direction: str, inner: tuple[int, int] = (0, 0)) -> tuple[np.ndarray, np.ndarray]:
    """Local classical derivative row and its global DOF indices.

    ``direction`` adds one derivative along x or y on top of the ``inner``
    derivative orders (used for the Kirchhoff composites).
    """
    if variable not in dofmap.components:
        raise ValueError(f"unknown variable {variable!r}")
    if direction not in ("x", "y"):
        raise ValueError("direction must be 'x' or 'y'")
    order = (inner[0] + (direction == "x"), inner[1] + (direction == "y"))
    row = _local_derivative(mesh, dofmap, element, variable, point[0], point[1], order)
    return row, _element_dofs(mesh, dofmap, element, variable)


def _side_integral(g: Callable[[np.ndarray], np.ndarray], t: float, alpha: float, npts: int) -> np.ndarray:
    """int_0^t |s|**(-alpha) g(s) ds for signed t, by Gauss-Jacobi (exact for polynomial g)."""
    if t == 0.0:
        return 0.0
    r = gauss_jacobi_rule(npts, alpha)
    at = abs(t)
    vals = np.array([g(math.copysign(1.0, t) * at * u) for u in r.points])
    return math.copysign(1.0, t) * at ** (1.0 - alpha) * (r.weights @ vals)


def nonlocal_b_row(anchor: tuple[float, float], variable: str, direction: str, settings: NonlocalSettings,
                   mesh: StructuredMesh, dofmap: DofMap, inner: tuple[int, int] = (0, 0)) -> NonlocalRowOperator:
    """Fractional derivative row at one anchor, built element by element.

    Every crossed element contributes ``int |s|**(-alpha) g(s) ds`` over its
    part of the window, where ``g`` is the element's polynomial derivative
    row along the convolution line.  The integral over ``[s0, s1]`` is taken
    as the difference of two end-point-singular Gauss-Jacobi integrals from
    the anchor, which is exact for polynomial integrands.
    """
    x, y = anchor
    a = settings.alpha
    e0 = mesh.element_of(x, y)
    if a == 1.0:
        row, idx = integer_b_row(mesh, dofmap, e0, anchor, variable, direction, inner)
        return NonlocalRowOperator((x, y), variable, direction, inner, idx, row, dofmap.n_dofs)
    st = horizon_stencil(anchor, direction, settings.l_f, mesh, a, settings.whole_elements)
    lo, hi = st.window
    c = x if direction == "x" else y
    le = mesh.lex if direction == "x" else mesh.ley
    cA = 0.5 * (1.0 - a) * (c - lo) ** (a - 1.0)
    cB = 0.5 * (1.0 - a) * (hi - c) ** (a - 1.0)
    order = (inner[0] + (direction == "x"), inner[1] + (direction == "y"))
    acc: dict[int, float] = {}
    for e in st.elements:
        p, q = e % mesh.Nx, e // mesh.Nx
        k = p if direction == "x" else q
        ea, eb = k * le, (k + 1) * le
        s0, s1 = max(ea, lo) - c, min(eb, hi) - c

        def g(s, e=e):
            px, py = (x + s, y) if direction == "x" else (x, y + s)
            return _local_derivative(mesh, dofmap, e, variable, px, py, order)

        if s0 < 0 < s1:
            contrib = cA * -_side_integral(g, s0, a, 4) + cB * _side_integral(g, s1, a, 4)
        else:
            cc = cA if s1 <= 0 else cB
            contrib = cc * (_side_integral(g, s1, a, 4) - _side_integral(g, s0, a, 4))
        for gi, v in zip(_element_dofs(mesh, dofmap, e, variable), contrib):
            acc[int(gi)] = acc.get(int(gi), 0.0) + float(v)
    idx = np.array(sorted(acc), dtype=int)
    return NonlocalRowOperator((x, y), variable, direction, inner, idx,
                               np.array([acc[i] for i in idx]), dofmap.n_dofs)


def _row_strain_terms(theory: Theory):
    """Strain rows as (variable, coefficient, conv direction or None, inner order)."""
    if theory is Theory.MINDLIN:
        bending = [
            [("u", 1, "x", (0, 0))], [("v", 1, "y", (0, 0))], [("u", 1, "y", (0, 0)), ("v", 1, "x", (0, 0))],
            [("tx", 1, "x", (0, 0))], [("ty", 1, "y", (0, 0))], [("tx", 1, "y", (0, 0)), ("ty", 1, "x", (0, 0))],
        ]
        shear = [[("w", 1, "y", (0, 0)), ("ty", -1, None, (0, 0))],
                 [("w", 1, "x", (0, 0)), ("tx", -1, None, (0, 0))]]
        return bending, shear
    bending = [
        [("u", 1, "x", (0, 0))], [("v", 1, "y", (0, 0))], [("u", 1, "y", (0, 0)), ("v", 1, "x", (0, 0))],
        [("w", 1, "x", (1, 0))], [("w", 1, "y", (0, 1))], [("w", 1, "y", (1, 0)), ("w", 1, "x", (0, 1))],
    ]
    return bending, []


def assemble_stiffness_rows(theory, mesh: StructuredMesh, dofmap: DofMap, constitutive: ConstitutiveMatrices,
                            settings: NonlocalSettings = NonlocalSettings()) -> sp.csr_matrix:
    """Reference assembler looping over 2D Gauss points and row operators.

    Slow; intended for cross-checking ``assemble_stiffness`` on small meshes.
    """
    theory = Theory.parse(theory)
    ngp = settings.ngp or _default_ngp(theory)
    rule = gauss_legendre_rule(ngp)
    n = dofmap.n_dofs
    K = sp.lil_matrix((n, n))
    bending, shear = _row_strain_terms(theory)
    for e in range(mesh.n_elements):
        p, q = e % mesh.Nx, e // mesh.Nx
        for xi, wx in zip(rule.points, rule.weights):
            for eta, wy in zip(rule.points, rule.weights):
                x = (p + 0.5 + 0.5 * xi) * mesh.lex
                y = (q + 0.5 + 0.5 * eta) * mesh.ley
                w = wx * wy * mesh.lex * mesh.ley / 4.0
                for rows, S in ((bending, constitutive.S_B), (shear, constitutive.S_S)):
                    if not rows:
                        continue
                    B = sp.vstack([_strain_row(terms, (x, y), e, settings, mesh, dofmap) for terms in rows])
                    K += w * (B.T @ (sp.csr_matrix(S) @ B))
    return _symmetrize(K.tocsr())


def _strain_row(terms, anchor, e, settings, mesh, dofmap) -> sp.csr_matrix:
    out = sp.csr_matrix((1, dofmap.n_dofs))
    for var, coef, direction, inner in terms:
        if direction is None:
            row = _local_derivative(mesh, dofmap, e, var, anchor[0], anchor[1], inner)
            idx = _element_dofs(mesh, dofmap, e, var)
            r = sp.csr_matrix((row, (np.zeros_like(idx), idx)), shape=(1, dofmap.n_dofs))
        else:
            r = nonlocal_b_row(anchor, var, direction, settings, mesh, dofmap, inner).to_sparse()
        out = out + coef * r
    return out


# ---------------------------------------------------------------------------
# Systems and boundary conditions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundaryConditionSet:
    """Named set of (edge selector, constrained components).

    Selectors: ``'x'`` for the edges x = 0 and x = L, ``'y'`` for y = 0 and
    y = B.
    """

    name: str
    constraints: tuple[tuple[str, tuple[str, ...]], ...]


def boundary_conditions(name: str, theory) -> BoundaryConditionSet:
    """CCCC (all unknowns fixed on every edge) or hard simple support SSSS."""
    theory = Theory.parse(theory)
    comps = ("u", "v", "w", "tx", "ty") if theory is Theory.MINDLIN else ("u", "v", "w", "wx", "wy", "wxy")
    key = name.upper()
    if key == "CCCC":
        return BoundaryConditionSet("CCCC", (("x", comps), ("y", comps)))
    if key == "SSSS":
        if theory is Theory.MINDLIN:
            return BoundaryConditionSet("SSSS", (("x", ("w", "v", "ty")), ("y", ("w", "u", "tx"))))
        return BoundaryConditionSet("SSSS", (("x", ("w", "wy", "v")), ("y", ("w", "wx", "u"))))
    raise ValueError(f"unknown boundary condition set {name!r}")


@dataclass(frozen=True)
class AssembledSystem:
    """Global K, M, F with an optional essential-BC reduction.

    ``retained`` lists the free global DOFs; ``None`` means unconstrained.
    ``K_local`` is an optional stiffness of the same plate with the local
    (integer-order) operator; large solves use it as a preconditioner.
    """

    K: sp.csr_matrix
    M: sp.csr_matrix | None
    F: np.ndarray
    mesh: StructuredMesh
    dofmap: DofMap
    retained: np.ndarray | None = None
    bc_name: str = ""
    meta: dict = field(default_factory=dict)
    K_local: sp.csr_matrix | None = None

    @property
    def free(self) -> np.ndarray:
        return np.arange(self.dofmap.n_dofs) if self.retained is None else self.retained

    def reduced_K(self) -> sp.csr_matrix:
        f = self.free
        return self.K[f][:, f].tocsr()

    def reduced_K_local(self) -> sp.csr_matrix | None:
        if self.K_local is None:
            return None
        f = self.free
        return self.K_local[f][:, f].tocsr()

    def reduced_M(self) -> sp.csr_matrix:
        if self.M is None:
            raise ValueError("system has no mass matrix")
        f = self.free
        return self.M[f][:, f].tocsr()

    def reduced_F(self) -> np.ndarray:
        return self.F[self.free]

    def expand(self, u_red: np.ndarray) -> np.ndarray:
        """Reinstate constrained DOFs as zeros; works for vectors and column stacks."""
        u_red = np.asarray(u_red)
        out = np.zeros((self.dofmap.n_dofs,) + u_red.shape[1:])
        out[self.free] = u_red
        return out

    def subsystem(self, components: Sequence[str]) -> "AssembledSystem":
        """Restrict the retained set to the listed components."""
        keep = np.zeros(self.dofmap.n_dofs, dtype=bool)
        for c in components:
            keep[self.dofmap.block(c)] = True
        keep &= np.isin(np.arange(self.dofmap.n_dofs), self.free)
        return replace(self, retained=np.flatnonzero(keep))


def _constrained_dofs(mesh: StructuredMesh, dofmap: DofMap, bcs: BoundaryConditionSet) -> np.ndarray:
    masks = mesh.boundary_nodes()
    out = []
    for sel, comps in bcs.constraints:
        if sel in masks:
            nodes = np.flatnonzero(masks[sel])
        else:
            raise ValueError(f"unknown boundary selector {sel!r}")
        for c in comps:
            if c not in dofmap.components:
                raise ValueError(f"component {c!r} not in the DOF map")
            out.append(np.atleast_1d(dofmap.index(nodes, c)))
    return np.unique(np.concatenate(out)) if out else np.array([], dtype=int)


def apply_essential_bcs(system: AssembledSystem, bcs: BoundaryConditionSet) -> AssembledSystem:
    """Eliminate constrained DOFs (kept as a retained-index map; idempotent)."""
    fixed = _constrained_dofs(system.mesh, system.dofmap, bcs)
    free = np.setdiff1d(system.free, fixed)
    if free.size == 0:
        raise ValueError("boundary conditions remove every DOF")
    return replace(system, retained=free, bc_name=bcs.name)


def assemble_system(theory, mesh: StructuredMesh, dofmap: DofMap, constitutive: ConstitutiveMatrices,
                    inertia: InertiaCoeffs | None, load=None,
                    settings: NonlocalSettings = NonlocalSettings(), transverse_only: bool = False) -> AssembledSystem:
    K = assemble_stiffness(theory, mesh, dofmap, constitutive, settings, transverse_only)
    M = assemble_mass(theory, mesh, dofmap, inertia) if inertia is not None else None
    F = assemble_force(mesh, dofmap, load) if load is not None else np.zeros(dofmap.n_dofs)
    return AssembledSystem(K, M, F, mesh, dofmap,
                           meta={"alpha": settings.alpha, "l_f": settings.l_f})


def export_matrix_market(A: sp.spmatrix, target, comment: str = "") -> None:
    """Write a symmetric matrix in Matrix Market coordinate format (lower triangle)."""
    A = sp.csr_matrix(A)
    scipy.io.mmwrite(target, sp.tril(A).tocoo(), comment=comment, symmetry="symmetric")
