"""Online myopic network covering: crawling policies and cover-size predictors."""

from .cover import CoverState, Trace
from .graph import DegreeDistribution, Graph, GraphStats
from .harness import ErrorReport, TraceStats, compare_curves, export_csv, run_experiment
from .policies import POLICY_NAMES, PolicySpec, run_policy
from .predictors import MODELS, PredictorCurve, predict

__all__ = ["CoverState", "DegreeDistribution", "ErrorReport", "Graph", "GraphStats",
           "MODELS", "POLICY_NAMES", "PolicySpec", "PredictorCurve", "Trace",
           "TraceStats", "compare_curves", "export_csv", "predict", "run_experiment",
           "run_policy"]
