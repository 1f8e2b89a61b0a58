from typing import List, Optional


class ElastfemError(Exception):
    """Base class for numerical failures raised by the package."""


class UnisolvenceError(ElastfemError):
    pass


class SolverError(ElastfemError):
    def __init__(self, message: str, residual_history: Optional[List[float]] = None):
        super().__init__(message)
        self.residual_history = list(residual_history or [])

    def __str__(self):
        if not self.residual_history:
            return super().__str__()
        history = ", ".join(f"{r:.3e}" for r in self.residual_history)
        return f"{super().__str__()} (residual history: {history})"


class EigenSolveError(ElastfemError):
    pass
