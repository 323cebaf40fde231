"""Static and modal solvers, transverse-mode filtering and scaling."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import AssembledSystem
from .mesh import Theory

__all__ = [
    "StaticSolution",
    "ModalSolution",
    "static_solve",
    "modal_solve",
    "classify_transverse",
    "NondimContext",
    "nondimensionalize",
    "center_deflection",
    "TRANSVERSE_COMPONENTS",
    "distinct_frequencies",
]

TRANSVERSE_COMPONENTS = {
    Theory.MINDLIN: ("w", "tx", "ty"),
    Theory.KIRCHHOFF: ("w", "wx", "wy", "wxy"),
}

# Reduced systems up to this size are factorized densely; beyond it the
# sparse route is used.
DENSE_LIMIT = 3000

# Relative residual target of the preconditioned iterative routes.
ITERATIVE_RTOL = 1e-10


class FactorizationError(RuntimeError):
    """Reduced stiffness is not positive definite (usually a BC problem)."""


@dataclass(frozen=True)
class StaticSolution:
    U: np.ndarray
    residual: float
    system: AssembledSystem = field(repr=False)

    def value(self, component: str, node: int) -> float:
        return float(self.U[self.system.dofmap.index(node, component)])


@dataclass(frozen=True)
class ModalSolution:
    """Ascending natural frequencies and mass-orthonormal modes (full length)."""

    omega: np.ndarray
    modes: np.ndarray
    participation: np.ndarray
    system: AssembledSystem = field(repr=False)


def _dense_cholesky(K: sp.spmatrix):
    try:
        return sla.cho_factor(K.toarray(), lower=True, check_finite=False)
    except sla.LinAlgError as exc:
        raise FactorizationError("reduced stiffness is not positive definite") from exc


def _sparse_cholesky_like(K: sp.spmatrix):
    lu = spla.splu(K.tocsc(), permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                   options={"SymmetricMode": True})
    if np.any(lu.U.diagonal() <= 0):
        raise FactorizationError("matrix has a nonpositive pivot")
    return lu


def _local_preconditioner(system: AssembledSystem) -> spla.LinearOperator | None:
    P = system.reduced_K_local()
    if P is None:
        return None
    lu = _sparse_cholesky_like(P)
    return spla.LinearOperator(P.shape, matvec=lu.solve, dtype=float)


def static_solve(system: AssembledSystem, dense_limit: int = DENSE_LIMIT) -> StaticSolution:
    """Solve the reduced system ``K u = F`` and reinstate zero BC values.

    Small systems use a dense Cholesky factorization.  Larger ones use
    conjugate gradients preconditioned by the local stiffness when the
    system carries one, and a sparse LU otherwise.
    """
    K = system.reduced_K()
    F = system.reduced_F()
    n = K.shape[0]
    if not np.any(F):
        return StaticSolution(system.expand(np.zeros(n)), 0.0, system)
    if n <= dense_limit:
        u = sla.cho_solve(_dense_cholesky(K), F, check_finite=False)
    elif (P := _local_preconditioner(system)) is not None:
        u, info = spla.cg(K, F, rtol=ITERATIVE_RTOL, atol=0.0, M=P, maxiter=10 * int(np.sqrt(n)) + 100)
        if info != 0:
            raise FactorizationError(f"preconditioned CG did not converge (info={info})")
    else:
        u = _sparse_cholesky_like(K).solve(F)
    res = float(np.linalg.norm(K @ u - F) / np.linalg.norm(F))
    return StaticSolution(system.expand(u), res, system)


def _lobpcg(K, M, P, n_modes: int):
    """Lowest eigenpairs by LOBPCG with a few guard vectors for robustness."""
    n = K.shape[0]
    block = min(n_modes + max(4, n_modes // 2), n // 3)
    X0 = np.random.default_rng(0).standard_normal((n, block))
    # LOBPCG's absolute stopping test does not suit stiffness-scaled residuals;
    # convergence is judged by the relative residual check below.
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        lam, X = spla.lobpcg(K, X0, B=M, M=P, largest=False, tol=1e-9, maxiter=400)
    order = np.argsort(lam)[:n_modes]
    lam, X = lam[order], X[:, order]
    r = np.linalg.norm(K @ X - (M @ X) * lam, axis=0) / np.linalg.norm(K @ X, axis=0)
    if np.any(r > 1e-6):
        raise FactorizationError(f"LOBPCG did not converge (max relative residual {r.max():.2e})")
    X = X / np.sqrt(np.einsum("ij,ij->j", X, M @ X))
    return lam, X


def _transverse_mask(system: AssembledSystem) -> np.ndarray:
    dm = system.dofmap
    mask = np.zeros(dm.n_dofs, dtype=bool)
    for c in TRANSVERSE_COMPONENTS[dm.theory]:
        mask[dm.block(c)] = True
    return mask


def modal_solve(system: AssembledSystem, n_modes: int, dense_limit: int = DENSE_LIMIT) -> ModalSolution:
    """Lowest ``n_modes`` of the symmetric generalized problem ``K x = w^2 M x``."""
    K = system.reduced_K()
    M = system.reduced_M()
    n = K.shape[0]
    if not (1 <= n_modes <= n):
        raise ValueError(f"n_modes must lie in [1, {n}]")
    if n <= dense_limit or n_modes >= n - 1:
        lam, X = sla.eigh(K.toarray(), M.toarray(), subset_by_index=[0, n_modes - 1])
    elif (P := _local_preconditioner(system)) is not None:
        lam, X = _lobpcg(K, M, P, n_modes)
    else:
        lam, X = spla.eigsh(K.tocsc(), k=n_modes, M=M.tocsc(), sigma=0.0, which="LM")
        order = np.argsort(lam)
        lam, X = lam[order], X[:, order]
        # Normalize to unit modal mass.
        X = X / np.sqrt(np.einsum("ij,ij->j", X, M @ X))
    if np.any(lam <= 0):
        raise FactorizationError("nonpositive eigenvalue; system not positive definite")
    modes = system.expand(X)
    Mfull = system.M
    mask = _transverse_mask(system)
    part = np.empty(n_modes)
    for k in range(n_modes):
        phi = modes[:, k]
        t = np.where(mask, phi, 0.0)
        part[k] = float(t @ (Mfull @ t)) / float(phi @ (Mfull @ phi))
    return ModalSolution(np.sqrt(lam), modes, part, system)


def classify_transverse(sol: ModalSolution, threshold: float = 0.99) -> ModalSolution:
    """Keep modes whose transverse mass participation exceeds ``threshold``."""
    keep = sol.participation > threshold
    return ModalSolution(sol.omega[keep], sol.modes[:, keep], sol.participation[keep], sol.system)


def distinct_frequencies(omega, rtol: float = 1e-6) -> np.ndarray:
    """Ascending frequencies with repeated (degenerate) values listed once."""
    omega = np.sort(np.asarray(omega, dtype=float))
    if omega.size == 0:
        return omega
    keep = [omega[0]]
    for w in omega[1:]:
        if w - keep[-1] > rtol * abs(keep[-1]):
            keep.append(w)
    return np.array(keep)


@dataclass(frozen=True)
class NondimContext:
    """Quantities entering the nondimensional deflection and frequency."""

    theory: Theory
    bc: str
    E: float
    h: float
    L: float
    B: float
    rho: float = 1.0
    D11: float | None = None
    Fz: float | None = None


def nondimensionalize(raw: float, quantity: str, ctx: NondimContext) -> float:
    """Scale a center deflection or a natural frequency.

    Deflection: ``w * 100 E h^3 / (F_z L^4)``.  Frequency: the Mindlin
    tables use ``w (L^2/h) sqrt(rho/E)`` and the Kirchhoff tables use
    ``w (B/pi)^2 sqrt(rho h / D11)``, for either boundary condition.
    """
    if quantity == "deflection":
        if ctx.Fz is None:
            raise ValueError("deflection scaling needs F_z")
        return raw * 100.0 * ctx.E * ctx.h ** 3 / (ctx.Fz * ctx.L ** 4)
    if quantity == "frequency":
        if ctx.theory is Theory.MINDLIN:
            return raw * ctx.L ** 2 / ctx.h * np.sqrt(ctx.rho / ctx.E)
        if ctx.D11 is None:
            raise ValueError("Kirchhoff frequency scaling needs D11")
        return raw * (ctx.B / np.pi) ** 2 * np.sqrt(ctx.rho * ctx.h / ctx.D11)
    raise ValueError(f"unknown quantity {quantity!r}")


def center_deflection(sol: StaticSolution) -> float:
    """Transverse displacement at (L/2, B/2).

    The nodal value is used when a node sits at the center (even Nx and
    Ny); otherwise the element interpolant is evaluated there.
    """
    mesh = sol.system.mesh
    if mesh.Nx % 2 or mesh.Ny % 2:
        return _interpolate_center(sol)
    node = mesh.node_index(mesh.Nx // 2, mesh.Ny // 2)
    return sol.value("w", node)


def _interpolate_center(sol: StaticSolution) -> float:
    from .mesh import hermite_shape, lagrange_shape

    mesh, dm = sol.system.mesh, sol.system.dofmap
    x, y = mesh.L / 2, mesh.B / 2
    e = mesh.element_of(x, y)
    p, q = e % mesh.Nx, e // mesh.Nx
    xi = 2.0 * (x - (p + 0.5) * mesh.lex) / mesh.lex
    eta = 2.0 * (y - (q + 0.5) * mesh.ley) / mesh.ley
    nodes = mesh.connectivity[e]
    if dm.theory is Theory.KIRCHHOFF:
        N = hermite_shape(xi, eta, mesh.lex, mesh.ley)[0]
        idx = [dm.index(nd, c) for nd in nodes for c in ("w", "wx", "wy", "wxy")]
    else:
        N = lagrange_shape(xi, eta)[0]
        idx = dm.index(nodes, "w")
    return float(N @ sol.U[np.asarray(idx)])
