import os

from dotenv import load_dotenv
from pydantic import BaseModel

load_dotenv()


class Settings(BaseModel):
    # Units
    hbar: float = float(os.getenv("GAUGE_HBAR", "1.0"))
    mass: float = float(os.getenv("GAUGE_MASS", "1.0"))

    # Grid
    grid_points: int = int(os.getenv("GAUGE_GRID_POINTS", "256"))
    domain_length: float = float(os.getenv("GAUGE_DOMAIN_LENGTH", "40.0"))

    # Time stepping
    time_step: float = float(os.getenv("GAUGE_TIME_STEP", "1e-3"))
    snapshots: int = int(os.getenv("GAUGE_SNAPSHOTS", "101"))
    cfl_limit: float = float(os.getenv("GAUGE_CFL_LIMIT", "0.5"))

    # Thresholds
    determinant_threshold: float = float(os.getenv("GAUGE_DETERMINANT_THRESHOLD", "1e-12"))
    degeneracy_threshold: float = float(os.getenv("GAUGE_DEGENERACY_THRESHOLD", "1e-12"))
    subgroup_tolerance: float = float(os.getenv("GAUGE_SUBGROUP_TOLERANCE", "1e-12"))
    subgroup_samples: int = int(os.getenv("GAUGE_SUBGROUP_SAMPLES", "16"))
    node_threshold: float = float(os.getenv("GAUGE_NODE_THRESHOLD", "1e-8"))
    instability_threshold: float = float(os.getenv("GAUGE_INSTABILITY_THRESHOLD", "1e12"))
    seam_threshold: float = float(os.getenv("GAUGE_SEAM_THRESHOLD", "1e-8"))
    winding_tolerance: float = float(os.getenv("GAUGE_WINDING_TOLERANCE", "1e-9"))
    fd_step: float = float(os.getenv("GAUGE_FD_STEP", "1e-6"))

    # Validation
    validation_tolerance: float = float(os.getenv("GAUGE_VALIDATION_TOLERANCE", "1e-10"))
    validation_samples: int = int(os.getenv("GAUGE_VALIDATION_SAMPLES", "20"))

    # Runtime
    max_workers: int = int(os.getenv("GAUGE_MAX_WORKERS", "2"))
    log_level: str = os.getenv("GAUGE_LOG_LEVEL", "INFO")


settings = Settings()
