# cli/schemas.py

import hashlib
import json

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

import config


class VortexEntry(BaseModel):
    point: tuple[float, float]
    multiplicity: int = 1

    @field_validator("point")
    @classmethod
    def _relative_coordinates(cls, value: tuple[float, float]) -> tuple[float, float]:
        if not all(0.0 <= x < 1.0 for x in value):
            raise ValueError(f"Vortex coordinates are period-relative and must lie in [0, 1), got {value}")
        return value

    @field_validator("multiplicity")
    @classmethod
    def _positive(cls, value: int) -> int:
        if value < 1:
            raise ValueError(f"Vortex multiplicity must be at least 1, got {value}")
        return value


class ContinuationConfig(BaseModel):
    initial_step: float = config.CONTINUATION_INITIAL_STEP
    step_floor: float = config.CONTINUATION_STEP_FLOOR
    newton_tolerance: float = config.NEWTON_TOLERANCE
    newton_max_iters: int = config.NEWTON_MAX_ITERS
    envelope_constant: float = config.ENVELOPE_CONSTANT


class MinimizeConfig(BaseModel):
    max_iters: int = config.MIN_MAX_ITERS
    gradient_tolerance: float = Field(config.GRADIENT_TOLERANCE, gt=0)
    armijo_c: float = Field(config.ARMIJO_C, gt=0, lt=1)
    backtrack_ratio: float = Field(config.BACKTRACK_RATIO, gt=0, lt=1)
    max_backtracks: int = config.MAX_BACKTRACKS
    admissibility_margin: float = Field(config.ADMISSIBILITY_MARGIN, gt=0, le=1)
    verify_tolerance: float = Field(config.VERIFY_TOLERANCE, gt=0)


class MountainPassConfig(BaseModel):
    nodes: int = Field(config.PATH_NODES, ge=3)
    deformation_step: float = Field(config.DEFORMATION_STEP, gt=0)
    max_sweeps: int = config.MAX_SWEEPS
    stagnation_tolerance: float = config.STAGNATION_TOLERANCE
    stagnation_window: int = config.STAGNATION_WINDOW
    gradient_tolerance: float = Field(config.MP_GRADIENT_TOLERANCE, gt=0)
    polish_threshold: float = config.POLISH_THRESHOLD
    xi0_growth: float = Field(config.XI0_GROWTH, gt=1)
    energy_drop: float = Field(config.ENERGY_DROP, gt=0)
    distinctness_radius: float = Field(config.DISTINCTNESS_RADIUS, gt=0)
    verify_tolerance: float = Field(config.VERIFY_TOLERANCE, gt=0)


class AppendixConfig(BaseModel):
    samples: int = Field(config.APPENDIX_SAMPLES, ge=1)
    max_size: int = Field(config.APPENDIX_MAX_SIZE, ge=1, le=config.DET_ORACLE_MAX_SIZE)
    fd_step: float = Field(config.FD_STEP, gt=0)
    fd_tolerance: float = Field(config.FD_RELATIVE_TOLERANCE, gt=0)


class SweepConfig(BaseModel):
    samples: int = Field(config.SWEEP_SAMPLES, ge=1)
    amplitude: float = Field(config.SWEEP_AMPLITUDE, gt=0)
    modes: int = Field(config.SWEEP_MODES, ge=1)
    uniqueness_tolerance: float = Field(config.UNIQUENESS_TOLERANCE, gt=0)


class RunConfig(BaseModel):
    """JSON run configuration shared by every command"""
    model_config = ConfigDict(populate_by_name=True)

    N: int = Field(ge=1)
    lambda_: float | None = Field(default=None, alias="lambda", gt=0)
    lambda_multiple: float | None = Field(default=None, gt=0)
    periods: tuple[float, float] = config.DEFAULT_PERIODS
    resolution: int = config.DEFAULT_RESOLUTION
    vortices: list[list[VortexEntry]]
    seed: int = 0
    background_mode: str = config.DEFAULT_BACKGROUND_MODE
    preconditioner_shift: str = config.PRECONDITIONER_SHIFT
    field_format: str = config.DEFAULT_FIELD_FORMAT
    continuation: ContinuationConfig = Field(default_factory=ContinuationConfig)
    minimize: MinimizeConfig = Field(default_factory=MinimizeConfig)
    mountain_pass: MountainPassConfig = Field(default_factory=MountainPassConfig)
    appendix: AppendixConfig = Field(default_factory=AppendixConfig)
    sweep: SweepConfig = Field(default_factory=SweepConfig)

    @field_validator("periods")
    @classmethod
    def _positive_periods(cls, value: tuple[float, float]) -> tuple[float, float]:
        if not all(p > 0 for p in value):
            raise ValueError(f"Periods must be positive, got {value}")
        return value

    @field_validator("resolution")
    @classmethod
    def _power_of_two(cls, value: int) -> int:
        if value < config.MIN_RESOLUTION or value & (value - 1):
            raise ValueError(f"Resolution must be a power of two >= {config.MIN_RESOLUTION}, got {value}")
        return value

    @field_validator("background_mode")
    @classmethod
    def _known_mode(cls, value: str) -> str:
        if value not in ("gaussian", "exact"):
            raise ValueError(f"Unknown background mode '{value}'. Available: ['gaussian', 'exact']")
        return value

    @field_validator("preconditioner_shift")
    @classmethod
    def _known_shift(cls, value: str) -> str:
        if value not in ("vacuum", "identity"):
            raise ValueError(f"Unknown preconditioner shift '{value}'. Available: ['vacuum', 'identity']")
        return value

    @model_validator(mode="after")
    def _consistent(self) -> "RunConfig":
        if (self.lambda_ is None) == (self.lambda_multiple is None):
            raise ValueError("Give exactly one of 'lambda' and 'lambda_multiple'")
        if len(self.vortices) != self.N:
            raise ValueError(f"Expected {self.N} vortex lists (one per component), got {len(self.vortices)}")
        if not any(self.vortices):
            raise ValueError("At least one component needs a vortex point")
        return self

    def counts(self) -> list[int]:
        return [sum(entry.multiplicity for entry in component) for component in self.vortices]

    def config_hash(self) -> str:
        canonical = json.dumps(self.model_dump(mode="json", by_alias=True), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()
