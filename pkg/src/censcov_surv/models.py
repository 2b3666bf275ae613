"""Pydantic models for censored data, Weibull parametrizations, settings and fit results."""

import math
from enum import Enum, IntEnum
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


# Weibull parametrizations
class WeibullPH(BaseModel):
    """Proportional-hazards parametrization: h(z) = lambda * gamma * z^(gamma - 1)."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    lambda_: float = Field(
        ..., gt=0, allow_inf_nan=False, alias="lambda", description="Scale rate (time^-gamma)"
    )
    gamma: float = Field(..., gt=0, allow_inf_nan=False, description="Shape")


class WeibullShapeScale(BaseModel):
    """Shape/scale parametrization: S(z) = exp(-(z / b)^a)."""

    model_config = ConfigDict(frozen=True)

    a: float = Field(..., gt=0, allow_inf_nan=False, description="Shape")
    b: float = Field(..., gt=0, allow_inf_nan=False, description="Scale (time units)")


class WeibullAFT(BaseModel):
    """Accelerated-failure-time parametrization: log Z = mu + alpha'X + sigma * W."""

    model_config = ConfigDict(frozen=True)

    mu: float = Field(..., allow_inf_nan=False, description="Intercept")
    log_sigma: float = Field(..., allow_inf_nan=False, description="Log scale")
    alpha: Tuple[float, ...] = Field(default=(), description="Regression coefficients")

    @property
    def sigma(self) -> float:
        return math.exp(self.log_sigma)


# Covariate densities
class DensityFamily(str, Enum):
    """Parametric families available for the censored covariate."""

    NORMAL = "normal"
    LOGISTIC = "logistic"
    GAMMA = "gamma"
    WEIBULL = "weibull"


# (first, second) parameter names per family
FAMILY_PARAMETERS: Dict[DensityFamily, Tuple[str, str]] = {
    DensityFamily.NORMAL: ("mu", "sigma"),
    DensityFamily.LOGISTIC: ("location", "scale"),
    DensityFamily.GAMMA: ("shape", "rate"),
    DensityFamily.WEIBULL: ("shape", "scale"),
}


class CovariateDensity(BaseModel):
    """Fixed density f_theta of the censored covariate.

    Normal is (mean, sd), Logistic (location, scale), Gamma (shape, rate) and
    Weibull (shape, scale).
    """

    model_config = ConfigDict(frozen=True)

    family: DensityFamily = Field(..., description="Distribution family")
    params: Tuple[float, float] = Field(..., description="Family parameter vector theta")

    @model_validator(mode="after")
    def check_params(self) -> "CovariateDensity":
        first, second = self.params
        if not (math.isfinite(first) and math.isfinite(second)):
            raise ValueError("density parameters must be finite")
        if second <= 0:
            raise ValueError(f"{FAMILY_PARAMETERS[self.family][1]} must be > 0")
        if self.family in (DensityFamily.GAMMA, DensityFamily.WEIBULL) and first <= 0:
            raise ValueError(f"{self.family.value} shape must be > 0")
        return self

    @property
    def parameter_names(self) -> Tuple[str, str]:
        return FAMILY_PARAMETERS[self.family]

    @property
    def positive_support(self) -> bool:
        return self.family in (DensityFamily.GAMMA, DensityFamily.WEIBULL)


# Censoring
class CensKind(str, Enum):
    """How a CensoredValue constrains the true value."""

    EXACT = "exact"
    LEFT = "left"
    RIGHT = "right"
    INTERVAL = "interval"


class CensStatus(IntEnum):
    """Observation status r: 1 when the covariate is exactly observed."""

    CENSORED = 0
    OBSERVED = 1


class CensoredValue(BaseModel):
    """One possibly-censored scalar.

    low == high is exact, a missing low is left-censored at high, a missing high is
    right-censored at low, and low < high is interval-censored.
    """

    model_config = ConfigDict(frozen=True)

    low: Optional[float] = Field(None, allow_inf_nan=False, description="Lower bound")
    high: Optional[float] = Field(None, allow_inf_nan=False, description="Upper bound")

    @model_validator(mode="after")
    def check_bounds(self) -> "CensoredValue":
        if self.low is None and self.high is None:
            raise ValueError("at least one bound must be present")
        if self.low is not None and self.high is not None and self.low > self.high:
            raise ValueError(f"low ({self.low}) exceeds high ({self.high})")
        return self

    @classmethod
    def exact(cls, x: float) -> "CensoredValue":
        return cls(low=x, high=x)

    @classmethod
    def left(cls, high: float) -> "CensoredValue":
        return cls(low=None, high=high)

    @classmethod
    def right(cls, low: float) -> "CensoredValue":
        return cls(low=low, high=None)

    @classmethod
    def interval(cls, low: float, high: float) -> "CensoredValue":
        if not low < high:
            raise ValueError("interval requires low < high")
        return cls(low=low, high=high)

    @property
    def kind(self) -> CensKind:
        if self.low is None:
            return CensKind.LEFT
        if self.high is None:
            return CensKind.RIGHT
        if self.low == self.high:
            return CensKind.EXACT
        return CensKind.INTERVAL

    @property
    def status(self) -> CensStatus:
        return CensStatus.OBSERVED if self.kind is CensKind.EXACT else CensStatus.CENSORED

    @property
    def finite_bound(self) -> float:
        """Value used by limit-of-detection imputation (interval: midpoint)."""
        if self.low is None:
            assert self.high is not None
            return self.high
        if self.high is None:
            return self.low
        return 0.5 * (self.low + self.high)


# Numerical settings
class IntegrationSettings(BaseModel):
    """Tolerances for the censored-region quadrature."""

    model_config = ConfigDict(frozen=True)

    rel_tol: float = Field(1e-8, gt=0, description="Relative tolerance")
    abs_tol: float = Field(1e-12, gt=0, description="Absolute tolerance")
    trunc_eps: float = Field(
        1e-100, gt=0, description="Integrand values below this are set to 0"
    )
    max_subdivisions: int = Field(200, ge=1, description="Maximum adaptive subdivisions")


class OptimizerSettings(BaseModel):
    """Nelder-Mead controls."""

    model_config = ConfigDict(frozen=True)

    max_iterations: int = Field(5000, ge=10, description="Iterations per simplex run")
    xatol: float = Field(1e-8, gt=0, description="Simplex size tolerance")
    fatol_rel: float = Field(
        1e-10, gt=0, description="Value spread tolerance, relative to 1 + |f|"
    )
    restart: bool = Field(True, description="Restart once from the incumbent")


class HessianSettings(BaseModel):
    """Central differences with Richardson extrapolation."""

    model_config = ConfigDict(frozen=True)

    richardson_steps: int = Field(4, ge=2, description="Number of halved step sizes")
    initial_step: float = Field(1e-4, gt=0, description="Relative initial step")


class CensCovSettings(BaseModel):
    """Everything fit_censcov needs besides the data."""

    model_config = ConfigDict(frozen=True)

    integration: IntegrationSettings = Field(default_factory=IntegrationSettings)
    optimizer: OptimizerSettings = Field(default_factory=OptimizerSettings)
    # quadrature noise at the 1e-10 level needs a coarser first step
    hessian: HessianSettings = Field(
        default_factory=lambda: HessianSettings(initial_step=1e-3)
    )
    conf_level: float = Field(0.95, gt=0, lt=1, description="Wald interval level")


class OptimResult(BaseModel):
    """Outcome of a maximization."""

    model_config = ConfigDict(frozen=True)

    argmax: Tuple[float, ...] = Field(..., description="Maximizer on the natural scale")
    value: float = Field(..., description="Maximized objective")
    converged: bool
    iterations: int = Field(..., ge=0)
    function_evals: int = Field(..., ge=0)
    message: str = ""

    @model_validator(mode="after")
    def check_value(self) -> "OptimResult":
        if self.converged and not math.isfinite(self.value):
            raise ValueError("converged result must have a finite value")
        return self


# Coefficient tables
class CoefficientRow(BaseModel):
    """One row of a coefficient table: estimate with Wald inference."""

    model_config = ConfigDict(frozen=True)

    name: str
    estimate: float
    std_error: Optional[float] = None
    ci_low: Optional[float] = None
    ci_high: Optional[float] = None
    p_value: Optional[float] = None

    @model_validator(mode="after")
    def check_interval(self) -> "CoefficientRow":
        if self.ci_low is not None and self.ci_high is not None:
            if not self.ci_low <= self.estimate <= self.ci_high:
                raise ValueError(f"interval for {self.name} does not bracket the estimate")
        return self


def _rows_by_name(rows: List[CoefficientRow], name: str) -> CoefficientRow:
    for row in rows:
        if row.name == name:
            return row
    raise KeyError(name)


class OneSampleFit(BaseModel):
    """Maximum-likelihood fit of one censored sample."""

    model_config = ConfigDict(frozen=True)

    family: DensityFamily
    coefficients: List[CoefficientRow]
    loglik: float
    n_exact: int = Field(..., ge=0)
    n_left: int = Field(..., ge=0)
    n_right: int = Field(..., ge=0)
    n_interval: int = Field(..., ge=0)
    converged: bool
    covariance_available: bool
    covariance: Optional[List[List[float]]] = None
    conf_level: float = 0.95

    @property
    def n(self) -> int:
        return self.n_exact + self.n_left + self.n_right + self.n_interval

    @property
    def estimates(self) -> Tuple[float, ...]:
        return tuple(row.estimate for row in self.coefficients)

    @property
    def std_errors(self) -> Tuple[Optional[float], ...]:
        return tuple(row.std_error for row in self.coefficients)

    def coefficient(self, name: str) -> CoefficientRow:
        return _rows_by_name(self.coefficients, name)


class MeanDiffFit(BaseModel):
    """Two independent censored Normal samples and their mean difference."""

    model_config = ConfigDict(frozen=True)

    mu1: CoefficientRow
    mu2: CoefficientRow
    sigma1: CoefficientRow
    sigma2: CoefficientRow
    delta: CoefficientRow
    conf_level: float = 0.95

    @property
    def rows(self) -> List[CoefficientRow]:
        return [self.mu1, self.mu2, self.sigma1, self.sigma2, self.delta]


class AFTFit(BaseModel):
    """Weibull regression fitted in the AFT convention on (mu, log sigma, alpha)."""

    model_config = ConfigDict(frozen=True)

    params: WeibullAFT
    names: Tuple[str, ...] = Field(default=(), description="Covariate names")
    covariance: Optional[List[List[float]]] = None
    loglik: float
    n: int = Field(..., ge=1)
    n_events: int = Field(..., ge=0)
    converged: bool
    warnings: List[str] = Field(default_factory=list)

    @field_validator("covariance")
    @classmethod
    def validate_covariance(
        cls, v: Optional[List[List[float]]]
    ) -> Optional[List[List[float]]]:
        """Covariance must be square and symmetric."""
        if v is None:
            return v
        size = len(v)
        for i, row in enumerate(v):
            if len(row) != size:
                raise ValueError("covariance must be square")
            for j in range(i):
                if abs(row[j] - v[j][i]) > 1e-9 * (1.0 + abs(row[j])):
                    raise ValueError("covariance must be symmetric")
        return v


class PHSummary(BaseModel):
    """Proportional-hazards view of a Weibull regression with delta-method inference."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    lambda_: CoefficientRow = Field(..., alias="lambda")
    gamma: CoefficientRow
    beta: List[CoefficientRow] = Field(default_factory=list)
    hazard_ratios: List[CoefficientRow] = Field(default_factory=list)
    event_time_ratios: List[CoefficientRow] = Field(default_factory=list)
    inference_available: bool
    conf_level: float = 0.95


class WeibullRegReport(BaseModel):
    """AFT fit plus its PH conversion."""

    model_config = ConfigDict(frozen=True)

    aft: AFTFit
    aft_coefficients: List[CoefficientRow]
    ph: PHSummary


# Survival data
class SurvObservation(BaseModel):
    """Follow-up time, event indicator, exact covariates, and one censored covariate."""

    model_config = ConfigDict(frozen=True)

    time: float = Field(..., gt=0, allow_inf_nan=False, description="Follow-up time T")
    event: int = Field(..., ge=0, le=1, description="1 = event observed")
    x_exact: Tuple[float, ...] = Field(default=(), description="Fully observed covariates")
    x_cens: Optional[CensoredValue] = Field(None, description="The censored covariate X_1")


class CensCovFit(BaseModel):
    """Weibull PH regression maximizing L2 (one censored covariate).

    Coefficient rows are lambda, gamma, then one row per beta; lambda and gamma
    carry no p-value.
    """

    model_config = ConfigDict(frozen=True)

    coefficients: List[CoefficientRow]
    loglik: float
    aic: float
    n: int = Field(..., ge=1)
    n_events: int = Field(..., ge=0)
    n_cens_cov: int = Field(..., ge=0)
    converged: bool
    covariance_available: bool
    covariance: Optional[List[List[float]]] = None
    iterations: int = 0
    function_evals: int = 0
    conf_level: float = 0.95
    warnings: List[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_aic(self) -> "CensCovFit":
        if len(self.coefficients) < 2:
            raise ValueError("lambda and gamma rows are required")
        expected = -2.0 * self.loglik + 2.0 * len(self.coefficients)
        if math.isfinite(self.loglik) and abs(self.aic - expected) > 1e-9 * (
            1.0 + abs(expected)
        ):
            raise ValueError("aic must equal -2 loglik + 2 (2 + d)")
        return self

    @property
    def lambda_(self) -> float:
        return self.coefficients[0].estimate

    @property
    def gamma(self) -> float:
        return self.coefficients[1].estimate

    @property
    def beta(self) -> Tuple[float, ...]:
        return tuple(row.estimate for row in self.coefficients[2:])

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(row.name for row in self.coefficients[2:])

    @property
    def std_errors(self) -> Tuple[Optional[float], ...]:
        return tuple(row.std_error for row in self.coefficients)

    def coefficient(self, name: str) -> CoefficientRow:
        return _rows_by_name(self.coefficients, name)


class CoxFit(BaseModel):
    """Breslow partial-likelihood fit."""

    model_config = ConfigDict(frozen=True)

    coefficients: List[CoefficientRow]
    partial_loglik: float
    converged: bool
    iterations: int = Field(..., ge=0)
    max_abs_score: float
    warnings: List[str] = Field(default_factory=list)

    @property
    def beta(self) -> Tuple[float, ...]:
        return tuple(row.estimate for row in self.coefficients)

    @property
    def std_errors(self) -> Tuple[Optional[float], ...]:
        return tuple(row.std_error for row in self.coefficients)

    def coefficient(self, name: str) -> CoefficientRow:
        return _rows_by_name(self.coefficients, name)


# Simulation study
class SimConfig(BaseModel):
    """Generative model of the two-arm trial and study controls.

    Arm R has tmt = 0 and arm O has tmt = 1. Defaults reproduce the reference
    configuration.
    """

    model_config = ConfigDict(frozen=True, populate_by_name=True, extra="forbid")

    mu_r: float = Field(-1.5, description="Covariate mean, arm R")
    sigma_r: float = Field(1.5, gt=0, description="Covariate sd, arm R")
    mu_o: float = Field(-3.5, description="Covariate mean, arm O")
    sigma_o: float = Field(1.5, gt=0, description="Covariate sd, arm O")
    lambda_: float = Field(0.75, gt=0, alias="lambda", description="Baseline Weibull scale")
    gamma: float = Field(3.1, gt=0, description="Baseline Weibull shape")
    beta_tmt: float = Field(0.0, description="True treatment coefficient")
    beta_mrd: float = Field(0.7, description="True covariate coefficient")
    cens_prop_r: float = Field(0.05, ge=0, lt=1, description="Left-censored share, arm R")
    cens_prop_o: float = Field(0.35, ge=0, lt=1, description="Left-censored share, arm O")
    n_per_arm: int = Field(200, ge=10, description="Patients per arm")
    endpoint_horizon: float = Field(
        2.6, gt=0, description="Administrative censoring time of the endpoint"
    )
    replications: int = Field(200, ge=1, description="Number of simulated trials M")
    seed: int = Field(20150315, ge=0, description="Root RNG seed")
    alpha: float = Field(0.05, gt=0, lt=1, description="Level of the treatment test")
    workers: int = Field(1, ge=1, description="Worker processes")


class SimMethod(str, Enum):
    """The three compared estimators."""

    CENSCOV = "censcov"
    WEIBULL_LOD = "weibull_lod"
    COX_LOD = "cox_lod"


class ReplicationEstimate(BaseModel):
    """Estimates of one method on one simulated trial."""

    model_config = ConfigDict(frozen=True)

    replication: int = Field(..., ge=0)
    method: SimMethod
    converged: bool
    estimates: Dict[str, float] = Field(default_factory=dict)
    p_value_tmt: Optional[float] = None


class ParameterSummary(BaseModel):
    """Bias and MSE of one method for one parameter."""

    model_config = ConfigDict(frozen=True)

    method: SimMethod
    parameter: str
    true_value: float
    n_used: int = Field(..., ge=0)
    mean_estimate: float
    bias: float
    mse: float
    empirical_se: float
    relative_bias: Optional[float] = Field(
        None, description="bias / bias of the censored-covariate method"
    )
    relative_mse: Optional[float] = Field(
        None, description="mse / mse of the censored-covariate method"
    )


class MethodDiagnostics(BaseModel):
    """Replication bookkeeping and type-I error of one method."""

    model_config = ConfigDict(frozen=True)

    method: SimMethod
    n_converged: int = Field(..., ge=0)
    n_failed: int = Field(..., ge=0)
    rejection_rate_tmt: Optional[float] = None


class SimReport(BaseModel):
    """Outcome of a simulation study."""

    model_config = ConfigDict(frozen=True)

    config: SimConfig
    summaries: List[ParameterSummary]
    methods: List[MethodDiagnostics]
    replications: List[ReplicationEstimate] = Field(default_factory=list)
    mean_cens_fraction_r: float = 0.0
    mean_cens_fraction_o: float = 0.0
    mean_endpoint_censored: float = 0.0

    def summary(self, method: SimMethod, parameter: str) -> ParameterSummary:
        for item in self.summaries:
            if item.method is method and item.parameter == parameter:
                return item
        raise KeyError((method, parameter))

    def diagnostics(self, method: SimMethod) -> MethodDiagnostics:
        for item in self.methods:
            if item.method is method:
                return item
        raise KeyError(method)


# Diagnostics
class KMCurve(BaseModel):
    """Product-limit estimate for one stratum."""

    model_config = ConfigDict(frozen=True)

    stratum: str
    n: int = Field(..., ge=1)
    event_times: Tuple[float, ...] = ()
    survival: Tuple[float, ...] = ()
    at_risk: Tuple[int, ...] = ()
    events: Tuple[int, ...] = ()

    @model_validator(mode="after")
    def check_steps(self) -> "KMCurve":
        if not (
            len(self.event_times) == len(self.survival) == len(self.at_risk) == len(self.events)
        ):
            raise ValueError("KM arrays must have equal length")
        previous = 1.0
        for value in self.survival:
            if value > previous + 1e-15 or value < 0:
                raise ValueError("survival must be non-increasing within [0, 1]")
            previous = value
        return self

    def survival_at(self, t: float) -> float:
        """Right-continuous step function value at t."""
        value = 1.0
        for time, surv in zip(self.event_times, self.survival):
            if time > t:
                break
            value = surv
        return value


class DiagSeries(BaseModel):
    """Points (log t, log(-log S(t))) and their least-squares line."""

    model_config = ConfigDict(frozen=True)

    stratum: str
    log_time: Tuple[float, ...]
    loglog_surv: Tuple[float, ...]
    slope: float = Field(..., description="Estimates gamma")
    intercept: float = Field(..., description="Estimates log lambda")

    @property
    def fitted(self) -> Tuple[float, ...]:
        return tuple(self.intercept + self.slope * x for x in self.log_time)


# CLI plumbing
class ColumnKind(str, Enum):
    """Declared type of a CSV column."""

    NUMERIC = "numeric"
    NUMERIC_OR_NA = "numeric_or_na"
    BINARY = "binary"
    POSITIVE = "positive"


class ColumnSpec(BaseModel):
    """One column of an ingestion schema."""

    model_config = ConfigDict(frozen=True)

    name: str = Field(..., min_length=1)
    kind: ColumnKind


class Dataset(BaseModel):
    """Parsed CSV table: raw tokens plus typed values of the declared columns."""

    model_config = ConfigDict(frozen=True)

    columns: List[str]
    raw: Dict[str, List[str]]
    values: Dict[str, List[Optional[float]]]
    row_count: int = Field(..., ge=0)
    digest: str = Field("", description="sha256 of the file bytes")

    def column(self, name: str) -> List[Optional[float]]:
        return self.values[name]


class ReportEnvelope(BaseModel):
    """Machine-readable CLI output."""

    model_config = ConfigDict(ser_json_inf_nan="constants")

    command: str
    argv: List[str]
    input_digest: Optional[str] = None
    payload: Dict[str, Any]
    warnings: List[str] = Field(default_factory=list)
    version: str


# MCP tool inputs
class CensoredRecord(BaseModel):
    """interval2 pair; None marks a missing bound."""

    low: Optional[float] = Field(None, description="Lower bound, None if left-censored")
    high: Optional[float] = Field(None, description="Upper bound, None if right-censored")


class ObservationRecord(BaseModel):
    """One row of survival data with an optional censored covariate."""

    time: float = Field(..., gt=0, description="Follow-up time")
    event: int = Field(..., ge=0, le=1, description="1 = event")
    low: Optional[float] = Field(None, description="Censored covariate lower bound")
    high: Optional[float] = Field(None, description="Censored covariate upper bound")
    covariates: List[float] = Field(
        default_factory=list, description="Exactly observed covariates"
    )
