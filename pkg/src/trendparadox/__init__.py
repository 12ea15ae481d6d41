"""Find trends that reverse or vanish when data are split into subgroups."""
__version__ = "0.1.0"

from .dataset import (
    Dataset,
    DatasetError,
    VariableSpec,
    actor,
    covariate,
    load_csv,
    outcome,
    timestamp,
    write_csv,
)
from .detector import DetectorConfig, SimpsonsPairReport, Verdict, analyze_pair, scan
from .sessionize import SessionizedDataset, sessionize
from .shuffle import (
    AttributeShuffle,
    IntervalShuffle,
    ShuffleReport,
    ShuffleVerdict,
    WithinSessionShuffle,
    shuffle_test,
)
from .synth import GroundTruth, gen_admissions, gen_sessions, gen_survivor
from .trend import TrendFit, fit_linear, fit_logistic, quantile_bins

__all__ = [
    "Dataset", "DatasetError", "VariableSpec", "actor", "covariate", "load_csv", "outcome",
    "timestamp", "write_csv", "DetectorConfig", "SimpsonsPairReport", "Verdict", "analyze_pair",
    "scan", "SessionizedDataset", "sessionize", "AttributeShuffle", "IntervalShuffle",
    "ShuffleReport", "ShuffleVerdict", "WithinSessionShuffle", "shuffle_test", "GroundTruth",
    "gen_admissions", "gen_sessions", "gen_survivor", "TrendFit", "fit_linear", "fit_logistic",
    "quantile_bins",
]
