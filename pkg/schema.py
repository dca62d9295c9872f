from datetime import datetime
from enum import Enum
from typing import Dict, List, Optional, Any

from pydantic import BaseModel, Field, computed_field, field_validator, model_validator


def _split_list(value: Any) -> Any:
    """Accept comma separated strings for list-valued config keys"""
    if isinstance(value, str):
        return [token.strip() for token in value.split(",") if token.strip()]
    if isinstance(value, (int, float)):
        return [value]
    return value


class FluxKind(str, Enum):
    P_LAPLACIAN = "pLaplacian"
    PERTURBED_P_LAPLACIAN = "perturbedPLaplacian"


class ExponentKind(str, Enum):
    CONSTANT = "constant"
    AFFINE = "affine"
    TABLE = "table"


class ExpressionKind(str, Enum):
    CONSTANT = "constant"
    AFFINE = "affine"
    QUADRATIC_BUMP = "quadratic_bump"
    RADIAL_POWER = "radial_power"
    PRODUCT_OF_SINES = "product_of_sines"
    STEP = "step"
    FILE = "file"


class SolverMethod(str, Enum):
    NEWTON_PGS = "newton-pgs"
    PGS = "pgs"


class PresetName(str, Enum):
    SOLVE = "solve"
    LS_AUDIT = "ls-audit"
    EQUATION_AUDIT = "equation-audit"
    CHAIN = "chain"
    CONTRACTION = "contraction"
    STABILITY = "stability"
    CHI_CONVERGENCE = "chi-convergence"
    EXPONENT_REPORT = "exponent-report"
    STRUCTURE_AUDIT = "structure-audit"
    MANUFACTURED = "manufactured"


class EventType(str, Enum):
    RUN_STARTED = "run_started"
    CHECK_RECORDED = "check_recorded"
    ARTIFACT_WRITTEN = "artifact_written"
    RUN_FINISHED = "run_finished"


class RunStatus(str, Enum):
    RUNNING = "running"
    PASSED = "passed"
    CHECK_FAILED = "check_failed"
    CONFIG_ERROR = "config_error"
    SOLVER_FAILURE = "solver_failure"


class ExitCode(int, Enum):
    PASSED = 0
    CHECK_FAILED = 1
    CONFIG_ERROR = 2
    SOLVER_FAILURE = 3


# Reports

class ExponentReport(BaseModel):
    N: int
    p_min: float
    p_max: float
    log_holder_constant: float = Field(ge=0.0)
    bounds_ok: bool
    conjugate_condition_ok: bool
    w11_regime: bool
    ls_regime: bool

    @property
    def in_hypotheses(self) -> bool:
        return self.bounds_ok and self.ls_regime


class StructureAudit(BaseModel):
    sample_count: int
    seed: int
    alpha: float
    gamma: float
    coercivity_margin: float
    growth_margin: float
    monotonicity_margin: float
    axis_coercivity_margin: float
    axis_growth_margin: float
    axis_monotonicity_margin: float
    excluded_pairs: int = 0

    @computed_field
    @property
    def passed(self) -> bool:
        # relative margins, rounding tolerated at 1e-12
        return all(margin >= -1e-12 for margin in (
            self.coercivity_margin, self.growth_margin, self.axis_coercivity_margin, self.axis_growth_margin,
        )) and self.monotonicity_margin > 0.0 and self.axis_monotonicity_margin > 0.0


class LSReport(BaseModel):
    lower_violation: float = Field(ge=0.0)
    upper_violation: float = Field(ge=0.0)
    tolerance: float
    collar_lower_violation: float = 0.0
    collar_upper_violation: float = 0.0
    excluded_nodes: int = 0
    in_hypotheses: bool = True

    @computed_field
    @property
    def lower_ok(self) -> bool:
        return self.lower_violation <= self.tolerance

    @computed_field
    @property
    def upper_ok(self) -> bool:
        return self.upper_violation <= self.tolerance

    @property
    def passed(self) -> bool:
        return self.lower_ok and self.upper_ok


class EntropyCertificate(BaseModel):
    test_function_id: str
    t: float
    lhs: float
    rhs: float

    @computed_field
    @property
    def margin(self) -> float:
        return self.lhs - self.rhs


class ChainRow(BaseModel):
    n: float
    iterations: int
    residual: float
    converged: bool
    in_measure: Optional[float] = None
    modular_u: float
    modular_grad: float
    marcinkiewicz_m: float
    marcinkiewicz_grad_m: float


class ChiRow(BaseModel):
    level: int
    distance: float
    sym_diff_measure: float
    in_measure_to_limit: float
    degenerate_nodes: int = 0
    converged: bool = True


class CheckResult(BaseModel):
    name: str
    value: float
    threshold: float
    passed: bool
    detail: Dict[str, Any] = {}


class RunEvent(BaseModel):
    id: str = Field(default_factory=lambda: f"{datetime.now().timestamp()}")
    event_type: EventType
    run_id: str
    payload: Dict[str, Any] = {}
    timestamp: datetime = Field(default_factory=datetime.now)


# Experiment configuration

class GridBlock(BaseModel):
    dim: int = Field(ge=1, le=2)
    n: List[int]
    extent: List[float] = [1.0]

    @field_validator("n", "extent", mode="before")
    @classmethod
    def _lists(cls, value):
        return _split_list(value)

    @model_validator(mode="after")
    def _broadcast(self):
        if len(self.n) == 1:
            self.n = self.n * self.dim
        if len(self.extent) == 1:
            self.extent = self.extent * self.dim
        if len(self.n) != self.dim or len(self.extent) != self.dim:
            raise ValueError("n and extent need one entry or one entry per axis")
        if min(self.n) < 3:
            raise ValueError("at least 3 nodes per axis are required")
        if min(self.extent) <= 0:
            raise ValueError("extent must be positive")
        return self


class ExponentBlock(BaseModel):
    kind: ExponentKind = ExponentKind.CONSTANT
    value: float = 2.0
    base: float = 2.0
    slope: float = 0.0
    axis: int = Field(default=0, ge=0, le=1)
    path: Optional[str] = None

    @model_validator(mode="after")
    def _check(self):
        if self.kind == ExponentKind.TABLE and not self.path:
            raise ValueError("a table exponent needs a path")
        return self


class ExpressionBlock(BaseModel):
    """Built-in expression id plus its parameters, or a field file"""
    kind: ExpressionKind = ExpressionKind.CONSTANT
    value: float = 0.0
    slope: float = 0.0
    axis: int = Field(default=0, ge=0, le=1)
    center: Optional[List[float]] = None
    width: float = Field(default=0.1, gt=0.0)
    height: float = 1.0
    power: float = Field(default=1.0, ge=0.0)
    amplitude: float = 1.0
    threshold: float = 0.5
    low: float = 0.0
    high: float = 1.0
    path: Optional[str] = None

    @field_validator("center", mode="before")
    @classmethod
    def _lists(cls, value):
        return _split_list(value)

    @model_validator(mode="after")
    def _check(self):
        if self.kind == ExpressionKind.FILE and not self.path:
            raise ValueError("a file expression needs a path")
        return self


class DataBlock(ExpressionBlock):
    pass


class ObstacleBlock(ExpressionBlock):
    pass


class FluxBlock(BaseModel):
    kind: FluxKind = FluxKind.P_LAPLACIAN
    delta: Optional[float] = Field(default=None, ge=0.0)
    alpha: float = Field(default=1.0, gt=0.0)
    gamma: float = Field(default=1.0, gt=0.0)
    j: float = Field(default=0.0, ge=0.0)


class SolverBlock(BaseModel):
    tol: Optional[float] = Field(default=None, gt=0.0)
    max_iter: int = Field(default=1_000_000, ge=1)
    method: SolverMethod = SolverMethod.NEWTON_PGS


class RunBlock(BaseModel):
    preset: PresetName
    out: Optional[str] = None
    seed: int = Field(default=0, ge=0)
    t_levels: Optional[List[float]] = None
    t_count: int = Field(default=64, ge=2)
    chain_levels: List[float] = [4, 8, 16, 32, 64]
    levels: List[int] = [17, 33, 65, 129]
    s: float = Field(default=1e-2, gt=0.0)
    eps: Optional[float] = Field(default=None, ge=0.0)
    ls_tol: Optional[float] = Field(default=None, gt=0.0)
    pairs: int = Field(default=20, ge=1)
    delta_f: float = -1.0
    lam: Optional[float] = Field(default=None, gt=0.0)
    test_count: int = Field(default=8, ge=1)
    sample_count: int = Field(default=2000, ge=1)
    q: float = Field(default=1.0, ge=1.0)
    workers: int = Field(default=1, ge=1)

    @field_validator("t_levels", "chain_levels", "levels", mode="before")
    @classmethod
    def _lists(cls, value):
        return _split_list(value)

    @field_validator("chain_levels", "t_levels")
    @classmethod
    def _increasing(cls, value):
        if value is not None:
            if any(v <= 0 for v in value):
                raise ValueError("levels must be positive")
            if any(b <= a for a, b in zip(value, value[1:])):
                raise ValueError("levels must be strictly increasing")
        return value


class ExperimentConfig(BaseModel):
    grid: GridBlock
    exponent: ExponentBlock = ExponentBlock()
    flux: FluxBlock = FluxBlock()
    data: DataBlock
    obstacle: ObstacleBlock
    solver: SolverBlock = SolverBlock()
    run: RunBlock
