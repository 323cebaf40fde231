"""Study drivers: manufactured-solution validation, convergence, static and modal sweeps.

Every study expands its configuration into independent cells (one
assemble/solve pipeline each), runs them on a thread pool and emits
report rows in a fixed parameter order, so the CSV does not depend on the
thread count.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..assembly import (AssembledSystem, NonlocalSettings, UniformLoad, apply_essential_bcs, assemble_force,
                        assemble_mass, assemble_stiffness, boundary_conditions, export_matrix_market)
from ..mesh import Theory, build_mesh
from ..solve import (DENSE_LIMIT, TRANSVERSE_COMPONENTS, NondimContext, center_deflection, distinct_frequencies, modal_solve,
                     nondimensionalize, static_solve)
from . import references as refs
from .config import StudyConfig
from .mms import MmsCase, mms_load

__all__ = [
    "CSV_HEADER",
    "ReportRow",
    "Cell",
    "mesh_divisions",
    "build_system",
    "run_validation",
    "run_convergence",
    "run_static",
    "run_modal",
    "run_study",
    "rows_to_csv",
    "write_csv",
    "within",
    "export_system",
]

CSV_HEADER = ("theory", "bc", "alpha", "lf_frac", "Nx", "Ny", "quantity", "value", "reference", "pct_error")


@dataclass(frozen=True)
class ReportRow:
    theory: str
    bc: str
    alpha: float
    lf_frac: float | None
    Nx: int
    Ny: int
    quantity: str
    value: float
    reference: float | None = None

    @property
    def pct_error(self) -> float | None:
        if self.reference is None or self.reference == 0:
            return None
        return 100.0 * (self.value - self.reference) / abs(self.reference)

    def cells(self) -> list[str]:
        def num(v):
            return "" if v is None else repr(float(v))

        return [self.theory, self.bc, num(self.alpha), num(self.lf_frac), str(self.Nx), str(self.Ny),
                self.quantity, num(self.value), num(self.reference), num(self.pct_error)]


@dataclass(frozen=True)
class Cell:
    """One assemble/solve pipeline; ``lf_frac`` is ignored when ``alpha == 1``."""

    kind: str
    alpha: float
    lf_frac: float
    Nx: int
    Ny: int


def mesh_divisions(lf_frac: float, rate: int) -> int:
    """Elements per side when ``rate`` elements span the horizon ``lf_frac * L``."""
    return max(1, int(round(rate / lf_frac)))


def _key(v: float) -> float:
    return round(float(v), 6)


def _settings(cfg: StudyConfig, alpha: float, lf_frac: float) -> NonlocalSettings:
    if alpha == 1.0:
        return NonlocalSettings(far_gauss=cfg.far_gauss)
    return NonlocalSettings(alpha, lf_frac * cfg.L, whole_elements=cfg.horizon == "whole",
                            far_gauss=cfg.far_gauss)


def build_system(cfg: StudyConfig, cell: Cell, with_mass: bool = False, load=None,
                 transverse_only: bool = True) -> AssembledSystem:
    """Assemble, constrain and (optionally) restrict one cell to its transverse unknowns."""
    theory = Theory.parse(cfg.theory)
    plate = cfg.plate
    mesh, dm = build_mesh(cfg.L, cfg.B, cell.Nx, cell.Ny, theory)
    settings = _settings(cfg, cell.alpha, cell.lf_frac)
    K = assemble_stiffness(theory, mesh, dm, plate.constitutive, settings, transverse_only=transverse_only)
    K_local = None
    if settings.alpha < 1.0 and dm.n_dofs > DENSE_LIMIT:
        # Spectrally close to K and cheap to factorize: preconditions the large solves.
        K_local = assemble_stiffness(theory, mesh, dm, plate.constitutive, NonlocalSettings(ngp=settings.ngp),
                                     transverse_only=transverse_only)
    M = assemble_mass(theory, mesh, dm, plate.inertia) if with_mass else None
    F = assemble_force(mesh, dm, load) if load is not None else np.zeros(dm.n_dofs)
    system = AssembledSystem(K, M, F, mesh, dm, meta={"alpha": cell.alpha, "l_f": settings.l_f,
                                                      "Ks": cfg.Ks}, K_local=K_local)
    system = apply_essential_bcs(system, boundary_conditions(cfg.bc, theory))
    if transverse_only:
        system = system.subsystem(TRANSVERSE_COMPONENTS[theory])
    return system


def _context(cfg: StudyConfig) -> NondimContext:
    return NondimContext(Theory.parse(cfg.theory), cfg.bc, cfg.E, cfg.h, cfg.L, cfg.B, cfg.rho,
                         cfg.plate.constitutive.D11, cfg.load)


def _static_cell(cfg: StudyConfig, cell: Cell) -> float:
    sol = static_solve(build_system(cfg, cell, load=UniformLoad(cfg.load)))
    return nondimensionalize(center_deflection(sol), "deflection", _context(cfg))


def _modal_cell(cfg: StudyConfig, cell: Cell) -> np.ndarray:
    system = build_system(cfg, cell, with_mass=True)
    n_dof = system.free.size
    # Degenerate pairs are collapsed, so ask for enough modes to fill the list.
    want = min(2 * cfg.n_modes + 2, n_dof)
    sol = modal_solve(system, want)
    omega = distinct_frequencies(sol.omega)[: cfg.n_modes]
    return np.array([nondimensionalize(w, "frequency", _context(cfg)) for w in omega])


def _mms_cell(cfg: StudyConfig, cell: Cell) -> float:
    case = MmsCase(cfg.plate, cell.alpha, cell.lf_frac * cfg.L)
    sol = static_solve(build_system(cfg, cell, load=mms_load(case)))
    return 100.0 * center_deflection(sol)


_RUNNERS = {"static": _static_cell, "modal": _modal_cell, "mms": _mms_cell}


def _run_cells(cfg: StudyConfig, cells: list[Cell], threads: int) -> dict[Cell, object]:
    unique = list(dict.fromkeys(cells))
    if threads <= 1 or len(unique) == 1:
        return {c: _RUNNERS[c.kind](cfg, c) for c in unique}
    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = list(pool.map(lambda c: _RUNNERS[c.kind](cfg, c), unique))
    return dict(zip(unique, results))


def _grid_cells(cfg: StudyConfig, kind: str) -> list[tuple[float, float, Cell]]:
    """(alpha, lf) pairs in canonical order with the mesh rule applied.

    Classical rows carry no nonlocality, so they all use the mesh of the
    smallest horizon in the sweep.
    """
    rate = cfg.rate[0]
    ry = cfg.rate_y or rate
    lf_min = min(cfg.lf)
    out = []
    for a in cfg.alpha:
        for lf in cfg.lf:
            base = lf_min if a == 1.0 else lf
            cell = Cell(kind, a, base, mesh_divisions(base, rate), mesh_divisions(base, ry))
            out.append((a, lf, cell))
    return out


def run_validation(cfg: StudyConfig, threads: int = 1) -> list[ReportRow]:
    """Center value ``100 w`` of the manufactured field against the exact 6.25."""
    if cfg.theory != "mindlin":
        raise ValueError("the manufactured-solution study is defined for the Mindlin plate")
    rate = cfg.rate[0]
    ry = cfg.rate_y or rate
    lf_min = min(cfg.lf)
    plan = []
    for a in cfg.alpha:
        for lf in ((lf_min,) if a == 1.0 else cfg.lf):
            plan.append((a, None if a == 1.0 else lf,
                         Cell("mms", a, lf, mesh_divisions(lf, rate), mesh_divisions(lf, ry))))
    res = _run_cells(cfg, [c for *_, c in plan], threads)
    return [ReportRow(cfg.theory, cfg.bc, a, lf, c.Nx, c.Ny, "w100_center", res[c], refs.MMS_EXACT_W100)
            for a, lf, c in plan]


def run_convergence(cfg: StudyConfig, threads: int = 1) -> list[ReportRow]:
    """Center deflection over the rate sweep plus the change between successive rates."""
    plan = []
    for lf in cfg.lf:
        for a in cfg.alpha:
            for r in cfg.rate:
                ry = cfg.rate_y or r
                plan.append((lf, a, r, Cell("static", a, lf, mesh_divisions(lf, r), mesh_divisions(lf, ry))))
    res = _run_cells(cfg, [c for *_, c in plan], threads)
    table = refs.CONVERGENCE.get(cfg.theory, {}) if cfg.bc == "CCCC" else {}
    rows = []
    prev: dict = {}
    for lf, a, r, c in plan:
        v = res[c]
        rows.append(ReportRow(cfg.theory, cfg.bc, a, lf, c.Nx, c.Ny, "w_bar", v,
                              table.get((_key(lf), r, _key(a)))))
        if (lf, a) in prev:
            change = 100.0 * abs(v - prev[(lf, a)]) / abs(prev[(lf, a)])
            rows.append(ReportRow(cfg.theory, cfg.bc, a, lf, c.Nx, c.Ny, "refinement_change_pct", change))
        prev[(lf, a)] = v
    return rows


def run_static(cfg: StudyConfig, threads: int = 1) -> list[ReportRow]:
    """Nondimensional center deflection over the (alpha, lf) grid."""
    plan = _grid_cells(cfg, "static")
    res = _run_cells(cfg, [c for *_, c in plan], threads)
    table = refs.STATIC.get((cfg.theory, cfg.bc), {})
    return [ReportRow(cfg.theory, cfg.bc, a, lf, c.Nx, c.Ny, "w_bar", res[c], table.get((_key(a), _key(lf))))
            for a, lf, c in plan]


def run_modal(cfg: StudyConfig, threads: int = 1) -> list[ReportRow]:
    """Lowest ``n_modes`` distinct nondimensional transverse frequencies over the grid."""
    plan = _grid_cells(cfg, "modal")
    res = _run_cells(cfg, [c for *_, c in plan], threads)
    fund = refs.FUNDAMENTAL.get((cfg.theory, cfg.bc), {})
    eight = refs.FIRST_EIGHT_MINDLIN_CCCC if (cfg.theory, cfg.bc) == ("mindlin", "CCCC") else {}
    rows = []
    for a, lf, c in plan:
        key = (_key(a), _key(lf))
        listing = eight.get(key)
        for k, v in enumerate(res[c]):
            ref = fund.get(key) if k == 0 else (listing[k] if listing and k < len(listing) else None)
            rows.append(ReportRow(cfg.theory, cfg.bc, a, lf, c.Nx, c.Ny, f"omega_bar_{k}", float(v), ref))
    return rows


STUDIES = {"validate": run_validation, "converge": run_convergence, "static": run_static, "modal": run_modal}


def run_study(cfg: StudyConfig, threads: int = 1) -> list[ReportRow]:
    if threads < 1:
        raise ValueError("threads must be >= 1")
    return STUDIES[cfg.study](cfg, threads)


def rows_to_csv(rows: list[ReportRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow(r.cells())
    return buf.getvalue()


def write_csv(rows: list[ReportRow], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(rows_to_csv(rows))
    return path


def within(row: ReportRow, tolerance: float) -> bool | None:
    """Whether a row meets a relative tolerance; ``None`` when nothing to compare."""
    if row.quantity == "refinement_change_pct":
        return row.value <= 100.0 * tolerance
    if row.pct_error is None or math.isnan(row.pct_error):
        return None
    return abs(row.pct_error) <= 100.0 * tolerance


def export_system(cfg: StudyConfig, prefix) -> dict:
    """Write the reduced stiffness and mass of the first grid cell as Matrix Market files.

    Files are ``<prefix>_K.mtx``, ``<prefix>_M.mtx`` and ``<prefix>_free.txt``
    (global indices of the retained unknowns, one per line).
    """
    a, lf = cfg.alpha[0], cfg.lf[0]
    r = cfg.rate[0]
    cell = Cell("static", a, lf, mesh_divisions(lf, r), mesh_divisions(lf, cfg.rate_y or r))
    system = build_system(cfg, cell, with_mass=True, transverse_only=False)
    prefix = Path(prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    tag = f"theory={cfg.theory} bc={cfg.bc} alpha={a} lf_frac={lf} Nx={cell.Nx} Ny={cell.Ny} Ks={cfg.Ks}"
    out = {"K": prefix.with_name(prefix.name + "_K.mtx"), "M": prefix.with_name(prefix.name + "_M.mtx"),
           "free": prefix.with_name(prefix.name + "_free.txt")}
    export_matrix_market(system.reduced_K(), out["K"], comment="reduced stiffness " + tag)
    export_matrix_market(system.reduced_M(), out["M"], comment="reduced mass " + tag)
    np.savetxt(out["free"], system.free, fmt="%d")
    return {**{k: str(v) for k, v in out.items()}, "n_free": int(system.free.size)}
