"""censcov-surv - Weibull regression with a censored covariate, plus censored-sample tools."""

__version__ = "1.0.0"
