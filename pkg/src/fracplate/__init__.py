"""Finite elements for fractional-order nonlocal Mindlin and Kirchhoff plates."""

from .assembly import (AssembledSystem, NonlocalSettings, PointLoad, UniformLoad, apply_essential_bcs,
                       assemble_force, assemble_mass, assemble_stiffness, assemble_system, boundary_conditions,
                       export_matrix_market)
from .fracops import FractionalParams, riesz_caputo_derivative, riesz_rl_derivative
from .mesh import Theory, build_mesh
from .model import Material, PlateModel, isotropic
from .solve import center_deflection, modal_solve, nondimensionalize, static_solve

__version__ = "0.1.0"
