# ! /usr/bin/env python
from concurrent.futures import ThreadPoolExecutor

from tqdm import tqdm


def run_cells_multi_thread(process_cell, cells, num_workers=1, progress=False, desc="cells"):
    """
    Apply process_cell to every cell index and return the results in cell order.

    Parameters:
    process_cell (callable): pure function of a cell index.
    cells (iterable of int): cell indices.
    num_workers (int): thread count; 1 runs in the calling thread.
    progress (bool): show a tqdm bar.

    Returns:
    list: one result per cell, ordered like `cells` whatever the thread count.
    """
    cells = list(cells)
    if num_workers < 1:
        raise ValueError(f"num_workers must be >= 1, got {num_workers}")
    bar = tqdm(total=len(cells), desc=desc, disable=not progress, leave=False)

    def run_one(k):
        result = process_cell(k)
        bar.update(1)
        return result

    try:
        if num_workers == 1:
            return [run_one(k) for k in cells]
        ## executor.map keeps the input order
        with ThreadPoolExecutor(max_workers=num_workers) as executor:
            return list(executor.map(run_one, cells))
    finally:
        bar.close()
