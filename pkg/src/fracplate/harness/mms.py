"""Manufactured-solution forcing for the fractional Mindlin plate.

The assumed field is ``u = v = 0`` and ``w = theta_x = theta_y = p(x) q(y)``
with ``p(x) = x (x - L)`` and ``q(y) = y (y - B)``.  Because the field is
separable and every fractional operator acts along a single axis, each
load is a sum of products of 1D quantities: the field itself, its
truncated-horizon Riesz-Caputo derivative ``A = D^alpha p`` and an outer
derivative of ``p`` and ``A``.  By default the outer operator is the exact
adjoint of the truncated Riesz-Caputo convolution, which makes the loads
consistent with the weak form; the fixed-terminal Riesz Riemann-Liouville
derivative is available as an alternative.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from ..assembly import PointLoad
from ..fracops import (FractionalParams, polynomial_field, riesz_adjoint_derivative, riesz_rl_derivative,
                       truncated_caputo_field)
from ..model import PlateModel

__all__ = ["MmsCase", "AxisTables", "axis_tables", "mms_forcing", "mms_load", "mms_forcing_local"]


@dataclass(frozen=True)
class MmsCase:
    model: PlateModel
    alpha: float
    l_f: float
    rtol: float = 1e-10
    outer: str = "adjoint"

    def w_exact(self, x, y):
        return x * (x - self.model.L) * y * (y - self.model.B)


@dataclass(frozen=True)
class AxisTables:
    """1D factors sampled at ``coords``."""

    coords: np.ndarray
    p: np.ndarray
    A: np.ndarray
    Rp: np.ndarray
    RA: np.ndarray


def _shifted(alpha: float, s: float, l_f: float, length: float) -> FractionalParams:
    # The Riemann-Liouville interval is (s - l_B, s + l_A); both ends stay
    # inside the plate.
    return FractionalParams(alpha, min(l_f, length - s), min(l_f, s))


def axis_tables(coords, length: float, alpha: float, l_f: float, rtol: float = 1e-10,
                outer: str = "adjoint") -> AxisTables:
    """Sample the 1D factors of the manufactured loads along one axis.

    ``outer`` picks the operator applied to the resultants: ``'adjoint'``
    is the exact adjoint of the truncated Riesz-Caputo convolution, and
    ``'rl'`` is the fixed-terminal Riesz Riemann-Liouville derivative.
    """
    if outer not in ("adjoint", "rl"):
        raise ValueError("outer must be 'adjoint' or 'rl'")
    coords = np.asarray(coords, dtype=float)
    return _axis_tables_cached(tuple(coords.tolist()), float(length), float(alpha), float(l_f), float(rtol), outer)


@lru_cache(maxsize=32)
def _axis_tables_cached(coords, length, alpha, l_f, rtol, outer) -> AxisTables:
    with warnings.catch_warnings():
        # ``A`` has kinks where a horizon meets the plate edge; the adaptive
        # rule reports them but still meets the requested tolerance.
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return _axis_tables_impl(coords, length, alpha, l_f, rtol, outer)


def _axis_tables_impl(coords, length, alpha, l_f, rtol, outer) -> AxisTables:
    p = polynomial_field([0.0, -length, 1.0], (0.0, length))
    A = truncated_caputo_field(p, alpha, l_f, 0.0, length, rtol)
    n = len(coords)
    out = {k: np.empty(n) for k in ("p", "A", "Rp", "RA")}
    for i, s in enumerate(coords):
        out["p"][i] = p.value(s)
        out["A"][i] = A.value(s)
        if alpha == 1.0:
            out["Rp"][i] = p.derivative(s)
            out["RA"][i] = A.derivative(s)
            continue
        if outer == "rl":
            prm = _shifted(alpha, s, l_f, length)
            out["Rp"][i] = riesz_rl_derivative(p, s, prm, rtol)
            out["RA"][i] = riesz_rl_derivative(A, s, prm, max(rtol, 1e-8))
        else:
            out["Rp"][i] = riesz_adjoint_derivative(p, s, alpha, l_f, 0.0, length, rtol)
            out["RA"][i] = riesz_adjoint_derivative(A, s, alpha, l_f, 0.0, length, max(rtol, 1e-8))
    return AxisTables(np.asarray(coords), out["p"], out["A"], out["Rp"], out["RA"])


def _loads(tx: AxisTables, ty: AxisTables, model: PlateModel):
    """Forcing on the tensor grid (rows follow y, columns follow x)."""
    C = model.constitutive
    D = C.D
    D11, D12, D22, D66 = D[0, 0], D[0, 1], D[1, 1], D[2, 2]
    A44, A55 = C.S_S[0, 0], C.S_S[1, 1]
    px, Ax, Rpx, RAx = (v[None, :] for v in (tx.p, tx.A, tx.Rp, tx.RA))
    py, Ay, Rpy, RAy = (v[:, None] for v in (ty.p, ty.A, ty.Rp, ty.RA))
    Fz = -(A55 * py * (RAx - Rpx) + A44 * px * (RAy - Rpy))
    Mtx = -(D11 * py * RAx + D12 * Ay * Rpx + D66 * (px * RAy + Ax * Rpy)) - A55 * (Ax - px) * py
    Mty = -(D12 * Ax * Rpy + D22 * px * RAy + D66 * (Ay * Rpx + py * RAx)) - A44 * px * (Ay - py)
    return Fz, Mtx, Mty


def mms_forcing(point, alpha: float, l_f: float, model: PlateModel, rtol: float = 1e-10,
                outer: str = "adjoint") -> tuple[float, float, float]:
    """Loads ``(F_z, M_theta_x, M_theta_y)`` that make the assumed field exact.

    Inner derivatives use the Riesz-Caputo operator with boundary-truncated
    horizons; see ``axis_tables`` for the choice of outer operator.
    """
    x, y = point
    if not (0.0 <= x <= model.L and 0.0 <= y <= model.B):
        raise ValueError("point outside the plate")
    tx = axis_tables([x], model.L, alpha, l_f, rtol, outer)
    ty = axis_tables([y], model.B, alpha, l_f, rtol, outer)
    return tuple(float(v[0, 0]) for v in _loads(tx, ty, model))


def mms_load(case: MmsCase) -> PointLoad:
    """Manufactured loads as a ``PointLoad`` for ``assemble_force``."""
    m = case.model
    memo: dict = {}

    def grid(x, y):
        key = (tuple(np.round(x, 15)), tuple(np.round(y, 15)))
        if key not in memo:
            tx = axis_tables(x, m.L, case.alpha, case.l_f, case.rtol, case.outer)
            ty = axis_tables(y, m.B, case.alpha, case.l_f, case.rtol, case.outer)
            memo[key] = _loads(tx, ty, m)
        return memo[key]

    return PointLoad(Fz=lambda x, y: grid(x, y)[0],
                     Mtx=lambda x, y: grid(x, y)[1],
                     Mty=lambda x, y: grid(x, y)[2])


def mms_forcing_local(x: float, y: float, model: PlateModel) -> tuple[float, float, float]:
    """Closed-form classical (alpha = 1) loads for the assumed field."""
    C = model.constitutive
    D = C.D
    D11, D12, D22, D66 = D[0, 0], D[0, 1], D[1, 1], D[2, 2]
    A44, A55 = C.S_S[0, 0], C.S_S[1, 1]
    L, B = model.L, model.B
    p, dp, d2p = x * (x - L), 2 * x - L, 2.0
    q, dq, d2q = y * (y - B), 2 * y - B, 2.0
    # w = theta_x = theta_y = p q
    w_x, w_y = dp * q, p * dq
    tx, ty = p * q, p * q
    Fz = -(A55 * (d2p * q - dp * q) + A44 * (p * d2q - p * dq))
    Mtx = -(D11 * d2p * q + D12 * dp * dq + D66 * (p * d2q + dp * dq)) - A55 * (w_x - tx)
    Mty = -(D12 * dp * dq + D22 * p * d2q + D66 * (dp * dq + d2p * q)) - A44 * (w_y - ty)
    return Fz, Mtx, Mty
