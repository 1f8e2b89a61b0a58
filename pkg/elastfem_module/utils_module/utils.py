#!/usr/bin/python
# -*- coding: utf-8 -*-

PROGRESS_FILE_NAME = 'progress.json'
CONVERGENCE_CSV = 'convergence.csv'
INFSUP_CSV = 'infsup.csv'
CERTIFICATE_JSON = 'certificate.json'
MESH_JSON = 'mesh.json'

## CONVERGENCE CSV HEADERS

LEVEL_SELECTOR = 'level'
H_SELECTOR = 'h'
ERR_SIGMA_SELECTOR = 'err_sigma_l2'
ORDER_SIGMA_SELECTOR = 'order_sigma'
ERR_U_SELECTOR = 'err_u_l2'
ORDER_U_SELECTOR = 'order_u'
ERR_DIV_SELECTOR = 'err_div_l2'
ORDER_DIV_SELECTOR = 'order_div'

CONVERGENCE_HEADERS = [
    LEVEL_SELECTOR,
    H_SELECTOR,
    ERR_SIGMA_SELECTOR,
    ORDER_SIGMA_SELECTOR,
    ERR_U_SELECTOR,
    ORDER_U_SELECTOR,
    ERR_DIV_SELECTOR,
    ORDER_DIV_SELECTOR,
]

INFSUP_HEADERS = ['level', 'h', 'beta_h', 'eig_residual', 'n_sigma', 'n_u']

## LEVEL LIMITS

DEFAULT_MAX_LEVEL = 4
HARD_MAX_LEVEL = 5

import copy
from enum import Enum
import json
import os
# Define a lock for thread safety
import threading
from typing import Dict, List, Optional, Union

progress_lock = threading.Lock()


class ElementKind(Enum):
    PRISM = "prism"
    TET = "tet"
    TRI = "tri"


class StudyTask(Enum):
    MESH = "mesh"
    VERIFY = "verify"
    CONVERGE = "converge"
    INFSUP = "infsup"


DEFAULT_SAVE_PROGRESS = {
    "element": None,
    "completed_levels": [],
    "rows": [],
}


def level_to_cells_per_axis(level: int) -> int:
    """
    Number of cells per axis of the structured mesh at a refinement level.

    Parameters:
    level (int): refinement level, 1 being the initial mesh.

    Returns:
    int: 2 ** (level - 1).
    """
    if level < 1:
        raise ValueError(f"refinement level must be >= 1, got {level}")
    return 2 ** (level - 1)


def check_levels(levels: int, allow_level_5: bool = False, max_level: int = HARD_MAX_LEVEL) -> int:
    """Validate a requested number of refinement levels against the memory guard."""
    if levels < 1:
        raise ValueError(f"levels must be >= 1, got {levels}")
    if levels > HARD_MAX_LEVEL:
        raise ValueError(f"levels above {HARD_MAX_LEVEL} are not supported (memory guard), got {levels}")
    if levels > max_level:
        raise ValueError(f"levels {levels} exceeds ELASTFEM_MAX_LEVEL={max_level}")
    if levels == HARD_MAX_LEVEL and not allow_level_5:
        raise ValueError(f"level {HARD_MAX_LEVEL} requires --allow-level-5")
    return levels


def return_element_folder_name(run_obj: Dict[str, Union[int, str]]) -> str:
    """
    Returns the artifacts folder for an element kind.

    Parameters:
    run_obj (Dict[str, Union[int, str]]): A dictionary that contains the information of the run.
        The keys used are "artifacts_dir" and "element".

    Returns:
    str: The folder name for the element artifacts.
    """
    artifacts_dir = run_obj.get("artifacts_dir") or os.environ.get("ELASTFEM_ARTIFACTS_DIR", "./elastfem_artifacts")
    return os.path.join(artifacts_dir, str(run_obj.get("element")))


def return_progress_file(run_obj: Dict[str, Union[int, str]]) -> str:
    """
    Returns the progress file for a convergence study.

    Parameters:
    run_obj (Dict[str, Union[int, str]]): A dictionary that contains the information of the run.

    Returns:
    str: The progress file path.
    """
    return os.path.join(return_element_folder_name(run_obj), PROGRESS_FILE_NAME)


def load_progress_from_file(run_obj: Dict[str, Union[int, str]]) -> Optional[Dict]:
    """
    Load progress from a JSON file.

    Parameters:
        run_obj (Dict[str, Union[int, str]]): A dictionary that contains the information of the run.

    Returns:
        dict: The loaded progress dictionary, or None if the file doesn't exist or cannot be read.
    """
    progress_file = return_progress_file(run_obj)
    logger = run_obj.get("logger")
    try:
        with progress_lock:
            if not os.path.exists(progress_file):
                return None
            with open(progress_file, 'r') as progress_file_obj:
                return json.load(progress_file_obj)
    except (OSError, json.JSONDecodeError) as e:
        if logger:
            logger.error(f"Error loading progress from file: {e}")
        return None


def save_progress_to_file(run_obj: Dict[str, Union[int, str]], progress_data: Dict) -> None:
    """
    Save progress data to a JSON file.

    Parameters:
        run_obj (Dict[str, Union[int, str]]): A dictionary that contains the information of the run.
        progress_data (Dict): The progress data to be saved to the file.

    Returns:
        None
    """
    progress_file = return_progress_file(run_obj)
    os.makedirs(os.path.dirname(progress_file), exist_ok=True)
    with progress_lock:
        with open(progress_file, 'w') as progress_file_obj:
            json.dump(progress_data, progress_file_obj, indent=2)


def new_progress(element: str) -> Dict:
    progress = copy.deepcopy(DEFAULT_SAVE_PROGRESS)
    progress["element"] = element
    return progress


def save_rows_to_file(run_obj: Dict[str, Union[int, str]], rows: List[Dict]) -> None:
    """
    Record completed convergence rows in the progress file of the run.

    Parameters:
        run_obj (Dict[str, Union[int, str]]): A dictionary that contains the information of the run.
        rows (List[Dict]): Rows as plain dictionaries, one per completed level.

    Returns:
        None
    """
    progress = load_progress_from_file(run_obj) or new_progress(str(run_obj.get("element")))
    progress["rows"] = rows
    progress["completed_levels"] = [row[LEVEL_SELECTOR] for row in rows]
    save_progress_to_file(run_obj, progress)
