"""Shared fixtures: coarse spaces, materials and run objects."""
import logging

import numpy as np
import pytest

from elastfem_module.assembly_submodule.function_space import build_space
from elastfem_module.mesh_submodule.mesh import build_mesh
from elastfem_module.utils_module.config import ElastfemSettings, Material


# =============================================================================
# Spaces on the coarsest meshes
# =============================================================================


@pytest.fixture(scope="session")
def prism_space_n1():
    return build_space("prism", build_mesh("prism", 1))


@pytest.fixture(scope="session")
def tet_space_n1():
    return build_space("tet", build_mesh("tet", 1))


@pytest.fixture(scope="session")
def tri_space_n1():
    return build_space("tri", build_mesh("tri", 1))


@pytest.fixture(scope="session")
def tri_space_n2():
    return build_space("tri", build_mesh("tri", 2))


# =============================================================================
# Materials and run configuration
# =============================================================================


@pytest.fixture
def material_3d():
    return Material(dim=3)


@pytest.fixture
def material_2d():
    return Material(dim=2)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def settings(tmp_path):
    return ElastfemSettings(
        log_dir=str(tmp_path / "logs"),
        artifacts_dir=str(tmp_path / "artifacts"),
    )


@pytest.fixture
def run_obj(tmp_path):
    def make(element, **options):
        obj = {
            "run_id": f"test-{element}",
            "element": element,
            "artifacts_dir": str(tmp_path / "artifacts"),
            "logger": logging.getLogger(f"elastfem.test.{element}"),
        }
        obj.update(options)
        return obj
    return make
