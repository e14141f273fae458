# Schemas package
from .config import RunConfig
from .surface import CylinderSummary, SurfaceSummary
from .reports import CovarianceEstimate, LLTReport, ExpansionReport, VarianceGrowthReport, LambdaEstimate
