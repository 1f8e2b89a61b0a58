"""
Convergence and inf-sup studies over refinement levels, with resumable
progress and CSV tables.
"""
import logging
import math
import os
from typing import Dict, List, Optional, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel

from ..assembly_submodule.dof_map import prism_counts
from ..assembly_submodule.function_space import build_space
from ..assembly_submodule.saddle_assembly import assemble, assemble_system, dump_system
from ..mesh_submodule.mesh import build_level_mesh
from ..solver_submodule.infsup import infsup_constant, restrict_stress
from ..solver_submodule.saddle_solver import check_energy_identity, solve_saddle
from ..utils_module.config import ElastfemSettings, Material, load_settings
from ..utils_module.errors import ElastfemError
from ..utils_module.timeit_decorator import timeit
from ..utils_module.utils import (
    CONVERGENCE_CSV,
    CONVERGENCE_HEADERS,
    INFSUP_CSV,
    INFSUP_HEADERS,
    check_levels,
    load_progress_from_file,
    return_element_folder_name,
    save_rows_to_file,
)
from .error_norms import error_norms
from .manufactured import manufactured_case

ELEMENT_DIM = {"prism": 3, "tet": 3, "tri": 2}
ERROR_COLUMNS = ("h", "err_sigma_l2", "err_u_l2", "err_div_l2")
ORDER_COLUMNS = ("order_sigma", "order_u", "order_div")
ORDER_PAIRS = (("err_sigma_l2", "order_sigma"), ("err_u_l2", "order_u"), ("err_div_l2", "order_div"))


class ConvergenceRow(BaseModel):
    level: int
    h: float
    err_sigma_l2: float
    order_sigma: float = 0.0
    err_u_l2: float
    order_u: float = 0.0
    err_div_l2: float
    order_div: float = 0.0


class InfSupRow(BaseModel):
    level: int
    h: float
    beta_h: float
    eig_residual: float
    n_sigma: int
    n_u: int
    beta_h_ablated: Optional[float] = None


def convergence_order(coarse, fine):
    """log2(coarse / fine); 0.0 when either error vanishes."""
    if coarse <= 0.0 or fine <= 0.0:
        return 0.0
    return math.log2(coarse / fine)


def compute_orders(rows: List[ConvergenceRow]) -> List[ConvergenceRow]:
    """Orders between consecutive rows; the first row gets 0.0."""
    ordered = []
    for i, row in enumerate(rows):
        update = {}
        for err, order in ORDER_PAIRS:
            update[order] = 0.0 if i == 0 else convergence_order(getattr(rows[i - 1], err), getattr(row, err))
        ordered.append(row.model_copy(update=update))
    return ordered


def convergence_frame(rows: List[ConvergenceRow]) -> pd.DataFrame:
    """Table in the published layout: errors and h with 8 decimals, orders with 2."""
    frame = pd.DataFrame([row.model_dump() for row in rows], columns=CONVERGENCE_HEADERS)
    for column in ERROR_COLUMNS:
        frame[column] = frame[column].map(lambda v: f"{v:.8f}")
    for column in ORDER_COLUMNS:
        frame[column] = frame[column].map(lambda v: f"{v:.2f}")
    return frame


def infsup_frame(rows: List[InfSupRow]) -> pd.DataFrame:
    headers = list(INFSUP_HEADERS)
    if any(row.beta_h_ablated is not None for row in rows):
        headers.append("beta_h_ablated")
    frame = pd.DataFrame([row.model_dump() for row in rows], columns=headers)
    frame["h"] = frame["h"].map(lambda v: f"{v:.8f}")
    return frame


def write_table(frame: pd.DataFrame, path: str) -> str:
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    frame.to_csv(path, index=False)
    return path


class ConvergenceStudy:
    """
    Manufactured-solution convergence study of one element over levels 1..L.

    run_obj keys: "element", "logger", "artifacts_dir", and optionally "out",
    "solver", "resume", "dump_system", "allow_level_5", "progress".
    """

    def __init__(self, run_obj: Dict[str, Union[int, str]], settings: Optional[ElastfemSettings] = None):
        self.run_obj = run_obj
        self.element = run_obj["element"]
        if self.element not in ELEMENT_DIM:
            raise ValueError(f"unknown element {self.element!r}; expected one of {sorted(ELEMENT_DIM)}")
        self.settings = settings or load_settings()
        self.logger = run_obj.get("logger") or logging.getLogger(__name__)
        self.solver = run_obj.get("solver") or "direct"
        self.dim = ELEMENT_DIM[self.element]
        self.material = Material(dim=self.dim)
        self.case = manufactured_case(self.dim, self.material)

    def table_path(self):
        return self.run_obj.get("out") or os.path.join(return_element_folder_name(self.run_obj), CONVERGENCE_CSV)

    def _completed_rows(self):
        if not self.run_obj.get("resume"):
            return {}
        progress = load_progress_from_file(self.run_obj)
        if not progress or progress.get("element") != self.element:
            return {}
        return {row["level"]: ConvergenceRow(**row) for row in progress.get("rows", [])}

    @timeit
    def run_level(self, level) -> ConvergenceRow:
        self.logger.info(f"Level {level} of the {self.element} study started")
        space = build_space(self.element, build_level_mesh(self.element, level))
        degree = self.settings.quad_degree
        system = assemble_system(
            space,
            self.material,
            source=self.case.f,
            degree=degree,
            num_workers=self.settings.num_workers,
            progress=bool(self.run_obj.get("progress")),
            logger=self.logger,
        )
        if self.run_obj.get("dump_system"):
            written = dump_system(system, f"{self.run_obj['dump_system']}_level{level}")
            self.logger.info(f"Wrote {', '.join(written)}")

        solution = solve_saddle(system, self.settings.solver_tol, self.solver, self.logger)
        check_energy_identity(system, solution, logger=self.logger)

        norms = error_norms(space, solution, self.case, degree, self.logger)
        return ConvergenceRow(
            level=level,
            h=space.mesh_size,
            err_sigma_l2=norms.sigma,
            err_u_l2=norms.u,
            err_div_l2=norms.div,
        )

    @timeit
    def run_study(self, levels: int) -> List[ConvergenceRow]:
        """
        Run levels 1..levels and write the table.

        A failed level writes the rows computed so far before re-raising.
        """
        check_levels(levels, bool(self.run_obj.get("allow_level_5")), self.settings.max_level)
        completed = self._completed_rows()
        rows: List[ConvergenceRow] = []
        for level in range(1, levels + 1):
            if level in completed:
                self.logger.info(f"Level {level} already computed, skipping step.")
                rows.append(completed[level])
                continue
            try:
                row = self.run_level(level)
            except (ElastfemError, ValueError) as e:
                self.logger.error(f"Level {level} failed: {e}")
                if rows:
                    path = write_table(convergence_frame(compute_orders(rows)), self.table_path())
                    self.logger.error(f"Partial table with {len(rows)} levels written to {path}")
                raise
            rows = compute_orders(rows + [row])
            save_rows_to_file(self.run_obj, [r.model_dump() for r in rows])
            latest = rows[-1]
            self.logger.info(
                f"Level {level}: h={latest.h:.6f} err_sigma={latest.err_sigma_l2:.8f} ({latest.order_sigma:.2f}) "
                f"err_u={latest.err_u_l2:.8f} ({latest.order_u:.2f}) err_div={latest.err_div_l2:.8f} ({latest.order_div:.2f})"
            )
        rows = compute_orders(rows)
        path = write_table(convergence_frame(rows), self.table_path())
        self.logger.info(f"Convergence table written to {path}")
        return rows


def convergence_study(element, levels, run_obj=None, settings=None) -> List[ConvergenceRow]:
    run_obj = dict(run_obj or {})
    run_obj["element"] = element
    return ConvergenceStudy(run_obj, settings).run_study(levels)


class InfSupStudy:
    """Discrete inf-sup constant per level, optionally with the tau3 fields removed."""

    def __init__(self, run_obj: Dict[str, Union[int, str]], settings: Optional[ElastfemSettings] = None):
        self.run_obj = run_obj
        self.element = run_obj["element"]
        if self.element not in ELEMENT_DIM:
            raise ValueError(f"unknown element {self.element!r}; expected one of {sorted(ELEMENT_DIM)}")
        self.ablate_tau3 = bool(run_obj.get("ablate_tau3"))
        if self.ablate_tau3 and self.element != "prism":
            raise ValueError("the tau3 ablation only applies to the prism element")
        self.settings = settings or load_settings()
        self.logger = run_obj.get("logger") or logging.getLogger(__name__)

    def table_path(self):
        return self.run_obj.get("out") or os.path.join(return_element_folder_name(self.run_obj), INFSUP_CSV)

    @timeit
    def run_level(self, level) -> InfSupRow:
        self.logger.info(f"Inf-sup level {level} of {self.element} started")
        mesh = build_level_mesh(self.element, level)
        space = build_space(self.element, mesh)
        system = assemble(
            space,
            Material(dim=ELEMENT_DIM[self.element]),
            degree=self.settings.quad_degree,
            num_workers=self.settings.num_workers,
            progress=bool(self.run_obj.get("progress")),
            with_norms=True,
            logger=self.logger,
        )
        result = infsup_constant(system, logger=self.logger)
        ablated = None
        if self.ablate_tau3:
            keep = np.arange(prism_counts(mesh)["offset_tau3"])
            ablated = infsup_constant(restrict_stress(system, keep), logger=self.logger).beta
            self.logger.info(f"Level {level}: beta_h without tau3 = {ablated:.6e}")
        return InfSupRow(
            level=level,
            h=space.mesh_size,
            beta_h=result.beta,
            eig_residual=result.residual,
            n_sigma=result.n_sigma,
            n_u=result.n_u,
            beta_h_ablated=ablated,
        )

    @timeit
    def run_study(self, levels: int) -> List[InfSupRow]:
        check_levels(levels, bool(self.run_obj.get("allow_level_5")), self.settings.max_level)
        rows = [self.run_level(level) for level in range(1, levels + 1)]
        path = write_table(infsup_frame(rows), self.table_path())
        self.logger.info(f"Inf-sup table written to {path}")
        return rows
