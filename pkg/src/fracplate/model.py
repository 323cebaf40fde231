"""Plate material constants, constitutive matrices and inertia coefficients."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Material", "PlateModel", "ConstitutiveMatrices", "InertiaCoeffs", "isotropic", "constitutive", "inertia"]


@dataclass(frozen=True)
class Material:
    """Orthotropic plate material.

    Parameters
    ----------
    E1, E2 : float
        Young's moduli along x and y (Pa).
    nu12 : float
        Major Poisson ratio.
    G12, G13, G23 : float
        Shear moduli (Pa).
    rho : float
        Density (kg/m^3).
    Ks : float
        Transverse shear correction factor.
    """

    E1: float
    E2: float
    nu12: float
    G12: float
    G13: float
    G23: float
    rho: float = 1.0
    Ks: float = 5.0 / 6.0

    def __post_init__(self):
        if min(self.E1, self.E2, self.G12, self.G13, self.G23) <= 0:
            raise ValueError("moduli must be positive")
        if self.rho <= 0:
            raise ValueError("density must be positive")
        if not (0 < self.Ks <= 1):
            raise ValueError("shear correction factor must lie in (0, 1]")
        if 1.0 - self.nu12 * self.nu21 <= 0:
            raise ValueError("Poisson ratios violate 1 - nu12*nu21 > 0")

    @property
    def nu21(self) -> float:
        return self.nu12 * self.E2 / self.E1


@dataclass(frozen=True)
class ConstitutiveMatrices:
    """Resultant-strain matrices.

    ``S_B`` is 6x6 over (Nxx, Nyy, Nxy, Mxx, Myy, Mxy); ``S_S`` is 2x2 over
    (Qyz, Qxz).
    """

    S_B: np.ndarray
    S_S: np.ndarray
    h: float

    @property
    def A(self) -> np.ndarray:
        return self.S_B[:3, :3]

    @property
    def D(self) -> np.ndarray:
        return self.S_B[3:, 3:]

    @property
    def D11(self) -> float:
        return float(self.S_B[3, 3])


@dataclass(frozen=True)
class InertiaCoeffs:
    I0: float
    I2: float


def isotropic(E: float, nu: float, rho: float = 1.0, Ks: float = 5.0 / 6.0) -> Material:
    """Isotropic material with G = E / (2 (1 + nu)) on all three planes."""
    if not (0.0 <= nu < 0.5):
        raise ValueError(f"Poisson ratio must lie in [0, 0.5), got {nu}")
    G = E / (2.0 * (1.0 + nu))
    return Material(E, E, nu, G, G, G, rho, Ks)


def constitutive(material: Material, h: float) -> ConstitutiveMatrices:
    if h <= 0:
        raise ValueError("thickness must be positive")
    m = material
    den = 1.0 - m.nu12 * m.nu21
    Q = np.array([
        [m.E1 / den, m.nu12 * m.E2 / den, 0.0],
        [m.nu12 * m.E2 / den, m.E2 / den, 0.0],
        [0.0, 0.0, m.G12],
    ])
    S_B = np.zeros((6, 6))
    S_B[:3, :3] = Q * h
    S_B[3:, 3:] = Q * h ** 3 / 12.0
    S_S = m.Ks * np.diag([m.G23 * h, m.G13 * h])
    return ConstitutiveMatrices(S_B, S_S, h)


def inertia(material: Material, h: float) -> InertiaCoeffs:
    if h <= 0:
        raise ValueError("thickness must be positive")
    return InertiaCoeffs(material.rho * h, material.rho * h ** 3 / 12.0)


@dataclass(frozen=True)
class PlateModel:
    """Rectangular plate of size L x B and thickness h."""

    L: float
    B: float
    h: float
    material: Material

    def __post_init__(self):
        if min(self.L, self.B, self.h) <= 0:
            raise ValueError("plate dimensions must be positive")

    @property
    def constitutive(self) -> ConstitutiveMatrices:
        return constitutive(self.material, self.h)

    @property
    def inertia(self) -> InertiaCoeffs:
        return inertia(self.material, self.h)
