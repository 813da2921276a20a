"""
Configuration module for loading environment variables and settings.
"""

import os
from dataclasses import asdict, dataclass
from typing import Any, Dict
from dotenv import load_dotenv

from errors import ConfigError

# Load environment variables from .env file
load_dotenv()


class Config:
    """Application configuration loaded from environment variables."""

    # Reproducibility: every randomized command defaults to this seed
    SEED = int(os.getenv('HQ_SEED', '0'))

    # Parallelism (restarts and sample batches)
    WORKERS = int(os.getenv('HQ_WORKERS', '1'))
    CHUNK_SIZE = int(os.getenv('HQ_CHUNK_SIZE', '100000'))

    # Equivalence estimation
    EQUIV_SAMPLES = int(os.getenv('HQ_EQUIV_SAMPLES', '100000'))
    REFINE_MAX_ITER = int(os.getenv('HQ_REFINE_MAX_ITER', '10000'))
    REFINE_TOL = float(os.getenv('HQ_REFINE_TOL', '1e-10'))
    VERIFY_TOL = float(os.getenv('HQ_VERIFY_TOL', '1e-9'))

    # Carnot-Caratheodory solver
    CC_STEPS = int(os.getenv('HQ_CC_STEPS', '32'))
    CC_RESTARTS = int(os.getenv('HQ_CC_RESTARTS', '8'))
    CC_TOL = float(os.getenv('HQ_CC_TOL', '1e-6'))
    CC_MU0 = float(os.getenv('HQ_CC_MU0', '1e2'))
    CC_MU_GROWTH = float(os.getenv('HQ_CC_MU_GROWTH', '10'))
    CC_STAGES = int(os.getenv('HQ_CC_STAGES', '5'))
    CC_EPS = float(os.getenv('HQ_CC_EPS', '1e-8'))
    CC_MAXITER = int(os.getenv('HQ_CC_MAXITER', '2000'))

    # Haar scaling Monte Carlo window enlargement
    HAAR_MARGIN = float(os.getenv('HQ_HAAR_MARGIN', '1.1'))

    # Verification suite sizes
    VERIFY_SAMPLES = int(os.getenv('HQ_VERIFY_SAMPLES', '100000'))
    VERIFY_CC_TARGETS = int(os.getenv('HQ_VERIFY_CC_TARGETS', '10'))
    VERIFY_GAUGE_TARGETS = int(os.getenv('HQ_VERIFY_GAUGE_TARGETS', '100'))

    # Logging (stderr; stdout is reserved for tables)
    LOG_LEVEL = os.getenv('HQ_LOG_LEVEL', 'WARNING')

    # Sentry Configuration
    SENTRY_DSN = os.getenv('SENTRY_DSN')  # Optional, if not set Sentry won't initialize
    SENTRY_ENVIRONMENT = os.getenv('SENTRY_ENVIRONMENT', 'development')
    SENTRY_TRACES_SAMPLE_RATE = float(os.getenv('SENTRY_TRACES_SAMPLE_RATE', '0.0'))

    @classmethod
    def validate(cls):
        """Validate that counts and tolerances are usable."""
        positive_ints = {
            'HQ_WORKERS': cls.WORKERS,
            'HQ_CHUNK_SIZE': cls.CHUNK_SIZE,
            'HQ_EQUIV_SAMPLES': cls.EQUIV_SAMPLES,
            'HQ_REFINE_MAX_ITER': cls.REFINE_MAX_ITER,
            'HQ_CC_STEPS': cls.CC_STEPS,
            'HQ_CC_RESTARTS': cls.CC_RESTARTS,
            'HQ_CC_STAGES': cls.CC_STAGES,
            'HQ_CC_MAXITER': cls.CC_MAXITER,
            'HQ_VERIFY_SAMPLES': cls.VERIFY_SAMPLES,
            'HQ_VERIFY_CC_TARGETS': cls.VERIFY_CC_TARGETS,
            'HQ_VERIFY_GAUGE_TARGETS': cls.VERIFY_GAUGE_TARGETS,
        }
        for key, value in positive_ints.items():
            if value < 1:
                raise ConfigError(f"{key} must be a positive integer, got {value}")

        positive_floats = {
            'HQ_REFINE_TOL': cls.REFINE_TOL,
            'HQ_VERIFY_TOL': cls.VERIFY_TOL,
            'HQ_CC_TOL': cls.CC_TOL,
            'HQ_CC_MU0': cls.CC_MU0,
            'HQ_CC_EPS': cls.CC_EPS,
        }
        for key, value in positive_floats.items():
            if not value > 0:
                raise ConfigError(f"{key} must be positive, got {value}")

        if cls.CC_MU_GROWTH <= 1:
            raise ConfigError(f"HQ_CC_MU_GROWTH must exceed 1, got {cls.CC_MU_GROWTH}")
        if cls.HAAR_MARGIN < 1:
            raise ConfigError(f"HQ_HAAR_MARGIN must be at least 1, got {cls.HAAR_MARGIN}")

    @classmethod
    def get_seed(cls, override=None) -> int:
        """Return the explicit seed if given, otherwise the configured default."""
        return cls.SEED if override is None else int(override)


COMMANDS = ('norm', 'equiv', 'ccdist', 'ops', 'haar', 'verify')
OUTPUT_FORMATS = ('json', 'csv', 'text')


@dataclass(frozen=True)
class RunConfig:
    """Resolved settings of one CLI invocation."""
    command: str
    seed: int = Config.SEED
    samples: int = Config.VERIFY_SAMPLES
    output_format: str = 'json'
    n: int = 1
    workers: int = Config.WORKERS

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"Unknown command '{self.command}', expected one of {', '.join(COMMANDS)}")
        if self.output_format not in OUTPUT_FORMATS:
            raise ConfigError(f"Unknown output format '{self.output_format}'")
        if self.samples < 1:
            raise ConfigError(f"samples must be a positive integer, got {self.samples}")
        if self.n < 1:
            raise ConfigError(f"n must be a positive integer, got {self.n}")
        if self.workers < 1:
            raise ConfigError(f"workers must be a positive integer, got {self.workers}")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)
