from pydantic import BaseModel, model_validator, validator
from typing import Dict, List, Optional

VERDICTS = ('NOT_COBOUNDARY', 'COBOUNDARY_SUSPECTED')


class CovarianceEstimate(BaseModel):
    sigma2: List[List[float]]
    per_lag: List[List[List[float]]]  # per_lag[j] = integral of F (x) F o psi^j
    partial_sums: List[List[List[float]]]  # sigma2 truncated at every J' <= J
    J: int
    stderr: List[List[float]]
    n_samples: int
    seed: int

    @validator('J')
    def validate_lag(cls, v):
        if v < 1:
            raise ValueError('Truncation lag must be at least 1')
        return v

    @model_validator(mode='after')
    def check_shapes(self):
        d = len(self.sigma2)
        if any(len(row) != d for row in self.sigma2):
            raise ValueError('sigma2 must be a square matrix')
        if len(self.per_lag) != self.J + 1 or len(self.partial_sums) != self.J + 1:
            raise ValueError('Need one lag term and one partial sum for every lag 0..J')
        return self


class VarianceRow(BaseModel):
    K: int
    variance: float
    ratio: float


class VarianceGrowthReport(BaseModel):
    rows: List[VarianceRow]
    slope: float
    slope_stderr: float
    t_statistic: float
    verdict: str
    n_samples: int
    seed: int

    @validator('verdict')
    def validate_verdict(cls, v):
        if v not in VERDICTS:
            raise ValueError(f'Verdict must be one of: {list(VERDICTS)}')
        return v


class LLTBin(BaseModel):
    M: List[int]
    frequency: float
    gaussian_pred: float


class LLTReport(BaseModel):
    K: int
    bins: List[LLTBin]
    sup_error: float
    n_samples: int
    seed: int

    @validator('bins')
    def validate_total(cls, v):
        total = sum(b.frequency for b in v)
        if v and abs(total - 1.0) > 1e-9:
            raise ValueError(f'Frequencies must sum to 1, got {total}')
        return v

    @property
    def counts(self) -> Dict[tuple, float]:
        return {tuple(b.M): b.frequency for b in self.bins}


class LambdaEstimate(BaseModel):
    u: List[float]
    K: int
    magnitude: float
    phase: float
    phase_stderr: float
    curvature_sigma2: Optional[float] = None  # -2 log|lambda_u| / |u|^2
    n_samples: int
    seed: int


class DriftReport(BaseModel):
    estimate: List[float]
    stderr: List[float]
    n_samples: int
    seed: int


class ExpansionReport(BaseModel):
    T: float
    K: int
    xi_K: List[int]
    measured: float
    predicted: float
    ratio: Optional[float] = None
    G_integral: float
    sigma_or_Sigma: List[List[float]]
    residual_band: float  # declared size of the O(1/K) correction

    @validator('T')
    def validate_time(cls, v):
        if v < 1:
            raise ValueError('T must be at least 1')
        return v


class ExpansionSummary(BaseModel):
    median_abs_ratio_err_by_T: Dict[str, Optional[float]]
    sigma_used: List[List[float]]
    lambda_: float


class ExpansionRun(BaseModel):
    reports: List[ExpansionReport]
    summary: ExpansionSummary


class WREReport(BaseModel):
    lhs: float
    rhs: float
    ratio: Optional[float] = None
    K: int
    n_samples: int


class HoreReport(BaseModel):
    value: float
    ci_low: Optional[float] = None
    ci_high: Optional[float] = None
    N: float
    mode: str
    grid: List[float]

    @validator('mode')
    def validate_mode(cls, v):
        if v not in ('measured', 'synthetic'):
            raise ValueError("Mode must be 'measured' or 'synthetic'")
        return v


class CheckResult(BaseModel):
    name: str
    passed: bool
    detail: str
    seconds: float


class SuiteReport(BaseModel):
    suite: str
    quick: bool
    checks: List[CheckResult]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


class AscltReport(BaseModel):
    sigma: float
    N: int
    mean: float
    stderr: float
    n_runs: int
    seed: int
    limit: float
