from .base import Check, CheckResult, VERDICTS
from .dummy import DummyCheck
from .slope import SlopeCheck, SlopeFit, slope_check
from .l2 import L2ConvergenceCheck, L2Curve, L2Point, l2_convergence_check
from .covariance import CovarianceMatchCheck, CovarianceRow, as_rectangle, covariance_match, discrete_covariance
from .summability import SummabilityCheck, SummabilityDiagnostics, SectionFit, summability_diagnostics
