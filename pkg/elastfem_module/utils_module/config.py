import os

from pydantic import BaseModel, Field, field_validator, model_validator

from .utils import HARD_MAX_LEVEL


class ElastfemSettings(BaseModel):
    log_dir: str = "./elastfem_logs"
    artifacts_dir: str = "./elastfem_artifacts"
    num_workers: int = Field(default=1, ge=1)
    solver_tol: float = Field(default=1e-10, gt=0.0, lt=1.0)
    quad_degree: int = Field(default=13, ge=1, le=14)
    max_level: int = Field(default=HARD_MAX_LEVEL, ge=1, le=HARD_MAX_LEVEL)
    model_config = {
        "json_schema_extra": {
            "examples": [
                {
                    "log_dir": "./elastfem_logs",
                    "artifacts_dir": "./elastfem_artifacts",
                    "num_workers": 4,
                    "solver_tol": 1e-10,
                    "quad_degree": 13,
                    "max_level": 5,
                }
            ]
        }
    }


def load_settings() -> ElastfemSettings:
    """
    Build the settings from the environment (after load_dotenv in app.py).

    Returns:
    ElastfemSettings: validated settings; raises pydantic.ValidationError on bad values.
    """
    return ElastfemSettings(
        log_dir=os.environ.get("ELASTFEM_LOG_DIR", "./elastfem_logs"),
        artifacts_dir=os.environ.get("ELASTFEM_ARTIFACTS_DIR", "./elastfem_artifacts"),
        num_workers=int(os.environ.get("ELASTFEM_NUM_WORKERS", 1)),
        solver_tol=float(os.environ.get("ELASTFEM_SOLVER_TOL", 1e-10)),
        quad_degree=int(os.environ.get("ELASTFEM_QUAD_DEGREE", 13)),
        max_level=int(os.environ.get("ELASTFEM_MAX_LEVEL", HARD_MAX_LEVEL)),
    )


class Material(BaseModel):
    """Isotropic Lame parameters; defaults are mu=1/2, lambda=1."""

    mu: float = 0.5
    lam: float = 1.0
    dim: int = 3

    @field_validator("mu")
    @classmethod
    def mu_positive(cls, value):
        if value <= 0.0:
            raise ValueError(f"mu must be positive, got {value}")
        return value

    @field_validator("dim")
    @classmethod
    def dim_supported(cls, value):
        if value not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {value}")
        return value

    @model_validator(mode="after")
    def bulk_positive(self):
        if 2.0 * self.mu + self.dim * self.lam <= 0.0:
            raise ValueError(f"2*mu + {self.dim}*lambda must be positive")
        return self

    def compliance_coefficients(self):
        """
        Coefficients (a, c) with A sigma = a * (sigma - c * tr(sigma) * I).

        Returns:
        tuple: a = 1/(2 mu), c = lambda / (2 mu + dim * lambda).
        """
        return 1.0 / (2.0 * self.mu), self.lam / (2.0 * self.mu + self.dim * self.lam)
