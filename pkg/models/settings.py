import os
from dataclasses import dataclass
from typing import Optional

from dotenv import load_dotenv

# Load environment variables once when the module is imported
load_dotenv()


_settings = None


def _clean_value(raw: str) -> str:
    """Strip extra quotes/whitespace around an environment value."""
    return raw.strip().strip('"').strip("'")


def _read(name: str, default, cast):
    raw = os.getenv(name)
    if raw is None or _clean_value(raw) == "":
        return default
    value = _clean_value(raw)
    try:
        return cast(value)
    except ValueError:
        raise ValueError(f"{name} environment variable has an invalid value: {value!r}") from None


@dataclass(frozen=True)
class Settings:
    """Numeric knobs shared by the solvers and the command line."""
    solve_tol: float = 1e-12
    indifference_tol: float = 1e-9
    verify_tol: float = 1e-8
    max_iter: int = 10000
    damping: float = 0.5
    restarts: int = 16
    seed: int = 0
    samples: int = 100000
    n_jobs: int = 1
    log_level: str = "WARNING"


def load_settings() -> Settings:
    """Build settings from DYNKIN_* environment variables (or .env)."""
    defaults = Settings()
    return Settings(
        solve_tol=_read("DYNKIN_SOLVE_TOL", defaults.solve_tol, float),
        indifference_tol=_read("DYNKIN_INDIFFERENCE_TOL", defaults.indifference_tol, float),
        verify_tol=_read("DYNKIN_VERIFY_TOL", defaults.verify_tol, float),
        max_iter=_read("DYNKIN_MAX_ITER", defaults.max_iter, int),
        damping=_read("DYNKIN_DAMPING", defaults.damping, float),
        restarts=_read("DYNKIN_RESTARTS", defaults.restarts, int),
        seed=_read("DYNKIN_SEED", defaults.seed, int),
        samples=_read("DYNKIN_SAMPLES", defaults.samples, int),
        n_jobs=_read("DYNKIN_N_JOBS", defaults.n_jobs, int),
        log_level=_read("DYNKIN_LOG_LEVEL", defaults.log_level, str).upper(),
    )


def get_settings(reload: bool = False) -> Settings:
    """Return the process-wide settings, read from the environment on first use."""
    global _settings
    if _settings is None or reload:
        _settings = load_settings()
    return _settings


def resolve(value: Optional[float], name: str):
    """Return ``value`` unless it is None, in which case use the configured field."""
    return getattr(get_settings(), name) if value is None else value
