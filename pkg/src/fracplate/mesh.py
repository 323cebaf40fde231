"""Structured Q4 grids, element bases, DOF numbering and horizon stencils."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .fracops import FractionalParams

__all__ = [
    "Theory",
    "StructuredMesh",
    "DofMap",
    "HorizonStencil",
    "build_mesh",
    "lagrange_shape",
    "hermite_1d",
    "hermite_shape",
    "horizon_stencil",
    "jacobian",
    "line_jacobian",
    "MINDLIN_COMPONENTS",
    "KIRCHHOFF_COMPONENTS",
]

MINDLIN_COMPONENTS = ("u", "v", "w", "tx", "ty")
KIRCHHOFF_COMPONENTS = ("u", "v", "w", "wx", "wy", "wxy")

# Reference node order, counterclockwise from (-1, -1).
_REF_NODES = np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])
_EPS = 1e-9


class Theory(str, enum.Enum):
    MINDLIN = "mindlin"
    KIRCHHOFF = "kirchhoff"

    @classmethod
    def parse(cls, s) -> "Theory":
        if isinstance(s, Theory):
            return s
        key = str(s).strip().lower()
        # Accept the common misspelling as well.
        if key in ("kirchoff", "kirchhoff"):
            return cls.KIRCHHOFF
        if key == "mindlin":
            return cls.MINDLIN
        raise ValueError(f"unknown plate theory {s!r}")


@dataclass(frozen=True)
class StructuredMesh:
    """Uniform Nx x Ny grid of Q4 elements on [0, L] x [0, B].

    Node (i, j) has global index ``j*(Nx+1) + i``; element (p, q) has index
    ``q*Nx + p``.
    """

    L: float
    B: float
    Nx: int
    Ny: int
    node_coords: np.ndarray = field(repr=False)
    connectivity: np.ndarray = field(repr=False)

    @property
    def lex(self) -> float:
        return self.L / self.Nx

    @property
    def ley(self) -> float:
        return self.B / self.Ny

    @property
    def element_size(self) -> tuple[float, float]:
        return self.lex, self.ley

    @property
    def n_nodes(self) -> int:
        return (self.Nx + 1) * (self.Ny + 1)

    @property
    def n_elements(self) -> int:
        return self.Nx * self.Ny

    def node_index(self, i: int, j: int) -> int:
        return j * (self.Nx + 1) + i

    def element_of(self, x: float, y: float) -> int:
        """Element containing (x, y); closed-form location on the uniform grid."""
        if not (-_EPS <= x <= self.L + _EPS and -_EPS <= y <= self.B + _EPS):
            raise ValueError(f"point ({x}, {y}) outside the plate")
        p = min(max(int(math.floor(x / self.lex)), 0), self.Nx - 1)
        q = min(max(int(math.floor(y / self.ley)), 0), self.Ny - 1)
        return q * self.Nx + p

    def boundary_nodes(self) -> dict[str, np.ndarray]:
        """Boolean masks of nodes on the edges x=0|L (``'x'``) and y=0|B (``'y'``)."""
        ij = np.indices((self.Ny + 1, self.Nx + 1)).reshape(2, -1)
        j, i = ij
        return {"x": (i == 0) | (i == self.Nx), "y": (j == 0) | (j == self.Ny)}


@dataclass(frozen=True)
class DofMap:
    """Global numbering of nodal unknowns.

    Unknowns are blocked by component: ``index = comp * n_nodes + node``.
    """

    theory: Theory
    n_nodes: int
    components: tuple[str, ...]

    @property
    def dofs_per_node(self) -> int:
        return len(self.components)

    @property
    def n_dofs(self) -> int:
        return self.dofs_per_node * self.n_nodes

    def index(self, node, comp) -> np.ndarray | int:
        c = self.components.index(comp) if isinstance(comp, str) else int(comp)
        if not (0 <= c < self.dofs_per_node):
            raise ValueError(f"unknown component {comp!r}")
        return c * self.n_nodes + np.asarray(node)

    def block(self, comp: str) -> slice:
        c = self.components.index(comp)
        return slice(c * self.n_nodes, (c + 1) * self.n_nodes)

    @property
    def table(self) -> np.ndarray:
        """(n_nodes, dofs_per_node) array of global indices."""
        return np.arange(self.n_dofs).reshape(self.dofs_per_node, self.n_nodes).T


@dataclass(frozen=True)
class HorizonStencil:
    """Elements crossed by the 1D convolution line through an anchor point.

    ``params`` holds the boundary-truncated horizon lengths; ``window`` is
    the integrated segment, which spans whole elements (or the exact
    horizon when built with ``whole_elements=False``).
    """

    anchor: tuple[float, float]
    direction: str
    params: FractionalParams
    singular_element: int
    left_elements: tuple[int, ...]
    right_elements: tuple[int, ...]
    window: tuple[float, float]

    @property
    def elements(self) -> tuple[int, ...]:
        return self.left_elements + (self.singular_element,) + self.right_elements


def build_mesh(L: float, B: float, Nx: int, Ny: int, theory="mindlin") -> tuple[StructuredMesh, DofMap]:
    """Uniform Q4 mesh and the DOF map for the requested plate theory."""
    if Nx < 1 or Ny < 1:
        raise ValueError("element counts must be >= 1")
    if L <= 0 or B <= 0:
        raise ValueError("plate dimensions must be positive")
    theory = Theory.parse(theory)
    xs = np.linspace(0.0, L, Nx + 1)
    ys = np.linspace(0.0, B, Ny + 1)
    X, Y = np.meshgrid(xs, ys)
    coords = np.column_stack([X.ravel(), Y.ravel()])
    p, q = np.meshgrid(np.arange(Nx), np.arange(Ny))
    n0 = (q * (Nx + 1) + p).ravel()
    conn = np.column_stack([n0, n0 + 1, n0 + Nx + 2, n0 + Nx + 1])
    mesh = StructuredMesh(float(L), float(B), int(Nx), int(Ny), coords, conn)
    comps = MINDLIN_COMPONENTS if theory is Theory.MINDLIN else KIRCHHOFF_COMPONENTS
    return mesh, DofMap(theory, mesh.n_nodes, comps)


def lagrange_shape(xi: float, eta: float) -> tuple[np.ndarray, np.ndarray]:
    """Bilinear Q4 basis values and reference gradients, shape (4,) and (4, 2)."""
    xs, es = _REF_NODES[:, 0], _REF_NODES[:, 1]
    N = 0.25 * (1 + xs * xi) * (1 + es * eta)
    dN = np.column_stack([0.25 * xs * (1 + es * eta), 0.25 * es * (1 + xs * xi)])
    return N, dN


def hermite_1d(le: float) -> np.ndarray:
    """Ascending coefficients in xi of the four cubic Hermite functions on [-1, 1].

    Rows: value at -1, slope at -1, value at +1, slope at +1.  Slope
    functions carry the ``le/2`` factor so they interpolate physical slopes.
    """
    h = le / 2.0
    return np.array([
        [2.0, -3.0, 0.0, 1.0],
        [h, -h, -h, h],
        [2.0, 3.0, 0.0, -1.0],
        [-h, -h, h, h],
    ]) / 4.0


def _herm_eval(le: float, xi: float) -> np.ndarray:
    """(3, 4) array of values, d/dx, d2/dx2 of the 1D Hermite functions."""
    P = np.polynomial.polynomial
    c = hermite_1d(le)
    s = 2.0 / le
    out = np.empty((3, 4))
    for k in range(4):
        out[0, k] = P.polyval(xi, c[k])
        out[1, k] = P.polyval(xi, P.polyder(c[k])) * s
        out[2, k] = P.polyval(xi, P.polyder(c[k], 2)) * s * s
    return out


# Local node k sits at 1D end (ax_end, ay_end); end 0 is xi=-1, end 1 is xi=+1.
_NODE_ENDS = ((0, 0), (1, 0), (1, 1), (0, 1))
# Per-node Hermite DOFs as (x derivative order, y derivative order).
HERMITE_DOF_ORDERS = ((0, 0), (1, 0), (0, 1), (1, 1))


def hermite_shape(xi: float, eta: float, lex: float = 2.0, ley: float = 2.0):
    """Conforming bicubic Hermite basis on one element.

    Returns ``(N, dN, d2N)`` with shapes (16,), (16, 2) and (16, 3).  Local
    function ``4*k + c`` belongs to node ``k`` and DOF ``c`` in the order
    w, w_x, w_y, w_xy.  Derivatives are with respect to physical
    coordinates; ``d2N`` columns are xx, yy, xy.
    """
    hx = _herm_eval(lex, xi)
    hy = _herm_eval(ley, eta)
    N = np.empty(16)
    dN = np.empty((16, 2))
    d2N = np.empty((16, 3))
    for k, (ex, ey) in enumerate(_NODE_ENDS):
        for c, (ox, oy) in enumerate(HERMITE_DOF_ORDERS):
            fx = 2 * ex + ox
            fy = 2 * ey + oy
            r = 4 * k + c
            N[r] = hx[0, fx] * hy[0, fy]
            dN[r] = hx[1, fx] * hy[0, fy], hx[0, fx] * hy[1, fy]
            d2N[r] = hx[2, fx] * hy[0, fy], hx[0, fx] * hy[2, fy], hx[1, fx] * hy[1, fy]
    return N, dN, d2N


def _window(xg: float, e: int, le: float, n: int, lA: float, lB: float, whole: bool) -> tuple[float, float, int, int]:
    """Integrated segment and first/last crossed element along one axis."""
    if whole:
        NA = math.ceil(lA / le - _EPS)
        NB = math.floor(lB / le + _EPS)
        k0 = max(e - NA, 0)
        k1 = min(e + NB, n - 1)
        return k0 * le, (k1 + 1) * le, k0, k1
    lo, hi = xg - lA, xg + lB
    k0 = max(int(math.floor(lo / le + _EPS)), 0)
    k1 = min(int(math.ceil(hi / le - _EPS)) - 1, n - 1)
    return lo, hi, k0, max(k1, e)


def horizon_stencil(anchor, direction: str, l_f: float, mesh: StructuredMesh,
                    alpha: float = 0.5, whole_elements: bool = True) -> HorizonStencil:
    """Horizon of an anchor point along one axis, truncated at the plate edges.

    The left side spans ``ceil(l_A/l_e)`` elements and the right side
    ``floor(l_B/l_e)`` elements beyond the one holding the anchor, both
    clipped at the boundary.
    """
    x, y = anchor
    e2 = mesh.element_of(x, y)
    p, q = e2 % mesh.Nx, e2 // mesh.Nx
    if direction == "x":
        c, e, le, n, ext = x, p, mesh.lex, mesh.Nx, mesh.L
    elif direction == "y":
        c, e, le, n, ext = y, q, mesh.ley, mesh.Ny, mesh.B
    else:
        raise ValueError("direction must be 'x' or 'y'")
    params = FractionalParams.truncated(alpha, c, l_f, 0.0, ext)
    lo, hi, k0, k1 = _window(c, e, le, n, params.l_A, params.l_B, whole_elements)

    def el(k):
        return q * mesh.Nx + k if direction == "x" else k * mesh.Nx + p

    return HorizonStencil(
        anchor=(float(x), float(y)),
        direction=direction,
        params=params,
        singular_element=e2,
        left_elements=tuple(el(k) for k in range(k0, e)),
        right_elements=tuple(el(k) for k in range(e + 1, k1 + 1)),
        window=(lo, hi),
    )


def jacobian(mesh: StructuredMesh) -> float:
    """Area scale of the reference-to-physical map of every element."""
    return 0.25 * mesh.lex * mesh.ley


def line_jacobian(le: float) -> float:
    return 0.5 * le
