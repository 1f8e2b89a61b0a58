# ! /usr/bin/env python
import datetime
import json
import logging
import os

from .elements_submodule.element_verification import ElementCertificate
from .harness_submodule.convergence_study import ConvergenceStudy, InfSupStudy
from .mesh_submodule.mesh import build_mesh, mesh_counts, mesh_to_dict
from .utils_module.config import load_settings
from .utils_module.custom_logger import LOG_FORMAT, get_elastfem_logger
from .utils_module.timeit_decorator import timeit
from .utils_module.utils import (
    CERTIFICATE_JSON,
    MESH_JSON,
    StudyTask,
    return_element_folder_name,
)


class StudyRunner:
    def __init__(self, element, settings=None, run_id=None):
        self.element = element
        self.settings = settings or load_settings()
        self.run_id = run_id or f"{element}-{datetime.datetime.now().strftime('%Y%m%d-%H%M%S-%f')}"

    def setup_logger(self, run_obj):
        run_log_folder = os.path.join(self.settings.log_dir, "runs")
        os.makedirs(run_log_folder, exist_ok=True)
        log_file = os.path.join(run_log_folder, f"{run_obj['run_id']}_{run_obj['task']}.log")

        log_mode = "a" if os.path.exists(log_file) else "w"
        logger = logging.getLogger(f"StudyLogger-{run_obj['run_id']}")
        logger.setLevel(logging.INFO)
        if not any(isinstance(h, logging.FileHandler) and h.baseFilename == os.path.abspath(log_file)
                   for h in logger.handlers):
            file_handler = logging.FileHandler(log_file, mode=log_mode)
            file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
            logger.addHandler(file_handler)
        return logger

    def run_obj(self, task, **options):
        run_obj = {
            "run_id": self.run_id,
            "task": task,
            "element": self.element,
            "artifacts_dir": self.settings.artifacts_dir,
        }
        run_obj["logger"] = self.setup_logger(run_obj)
        run_obj.update(options)
        get_elastfem_logger().info(f"Run {self.run_id}: {task} on {self.element}")
        return run_obj

    @timeit
    def run_mesh(self, n, out=None):
        run_obj = self.run_obj(StudyTask.MESH.value)
        mesh = build_mesh(self.element, n)
        counts = mesh_counts(mesh)
        run_obj["logger"].info(f"Built {self.element} mesh with n={n}: {counts}")
        path = out or os.path.join(return_element_folder_name(run_obj), MESH_JSON)
        _write_json(path, mesh_to_dict(mesh))
        run_obj["logger"].info(f"Mesh written to {path}")
        return counts, path

    @timeit
    def run_verify(self, tol, out=None):
        run_obj = self.run_obj(StudyTask.VERIFY.value)
        certificate = ElementCertificate(run_obj, tol).run_certificate()
        path = out or os.path.join(return_element_folder_name(run_obj), CERTIFICATE_JSON)
        _write_json(path, certificate)
        run_obj["logger"].info(f"Certificate written to {path}")
        return certificate, path

    @timeit
    def run_converge(self, levels, out=None, dump_system=None, resume=False, allow_level_5=False,
                     solver="direct", progress=False):
        run_obj = self.run_obj(
            StudyTask.CONVERGE.value,
            out=out,
            dump_system=dump_system,
            resume=resume,
            allow_level_5=allow_level_5,
            solver=solver,
            progress=progress,
        )
        study = ConvergenceStudy(run_obj, self.settings)
        rows = study.run_study(levels)
        return rows, study.table_path()

    @timeit
    def run_infsup(self, levels, out=None, ablate_tau3=False, allow_level_5=False, progress=False):
        run_obj = self.run_obj(
            StudyTask.INFSUP.value,
            out=out,
            ablate_tau3=ablate_tau3,
            allow_level_5=allow_level_5,
            progress=progress,
        )
        study = InfSupStudy(run_obj, self.settings)
        rows = study.run_study(levels)
        return rows, study.table_path()


def _write_json(path, data):
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    with open(path, "w") as file_obj:
        json.dump(data, file_obj, indent=2)
