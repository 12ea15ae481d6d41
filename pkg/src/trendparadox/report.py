"""JSON serialization of detector and shuffle results with a fixed key order."""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .detector import DetectorConfig, SimpsonsPairReport
from .shuffle import ReplicateSummary, ShuffleReport, strategy_label
from .trend import TrendFit

SCHEMA_PATH = Path(__file__).with_name("schema") / "run_report.schema.json"
REPORT_FORMAT = 1


def number(v):
    """Finite floats pass through; inf, -inf and nan become strings."""
    if v is None:
        return None
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def fit_dict(fit: TrendFit | None):
    if fit is None:
        return None
    return {
        "model": fit.model,
        "slope": number(fit.slope),
        "intercept": number(fit.intercept),
        "slope_stderr": number(fit.slope_stderr),
        "statistic": number(fit.statistic),
        "p_value": number(fit.p_value),
        "n": int(fit.n),
        "converged": bool(fit.converged),
        "iterations": int(fit.iterations),
    }


def config_dict(c: DetectorConfig) -> dict:
    return {
        "alpha": c.alpha,
        "k_bins": c.k_bins,
        "min_subgroup_n": c.min_subgroup_n,
        "tau_reversal": c.tau_reversal,
        "tau_disappear": c.tau_disappear,
    }


def pair_dict(r: SimpsonsPairReport) -> dict:
    return {
        "x": r.x_name,
        "z": r.z_name,
        "model": r.model,
        "verdict": r.verdict.value,
        "score": number(r.score),
        "opposite_mass": number(r.opposite_mass),
        "insignificant_mass": number(r.insignificant_mass),
        "same_mass": number(r.same_mass),
        "sign_opposite_mass": number(r.sign_opposite_mass),
        "aggregate": fit_dict(r.aggregate),
        "disaggregation": r.disaggregation,
        "subgroups": [
            {"label": s.bin_label, "n": s.n, "weight": number(s.weight),
             "fit": fit_dict(s.fit), "note": s.note}
            for s in r.subgroups
        ],
        "skipped": [{"label": s.label, "n": s.n, "reason": s.reason} for s in r.skipped],
        "diagnostic": r.diagnostic,
        "significance_rule": r.significance_rule,
        "p_values": r.p_values,
        "config": config_dict(r.config),
    }


def _replicate_dict(s: ReplicateSummary) -> dict:
    return {
        "replicate": s.replicate,
        "aggregate_slope": number(s.aggregate_slope),
        "aggregate_p": number(s.aggregate_p),
        "persists": s.persists,
        "insignificant_mass": number(s.insignificant_mass),
        "opposite_mass": number(s.opposite_mass),
        "verdict": s.verdict.value,
    }


def shuffle_dict(r: ShuffleReport) -> dict:
    return {
        "strategy": strategy_label(r.strategy),
        "replicates": r.replicates,
        "seed": r.seed,
        "timeout": number(r.timeout),
        "resessionized": r.resessionized,
        "pi_persist": r.pi_persist,
        "pi_disappear": r.pi_disappear,
        "aggregate_persistence": number(r.aggregate_persistence),
        "mean_disappearance_mass": number(r.mean_disappearance_mass),
        "verdict": r.verdict.value,
        "original": pair_dict(r.original),
        "per_replicate": [_replicate_dict(s) for s in r.per_replicate],
    }


def _plain(v):
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return number(v)
    return v


def dumps(report: dict) -> str:
    return json.dumps(_plain(report), indent=2, allow_nan=False) + "\n"


def load_schema() -> dict:
    return json.loads(SCHEMA_PATH.read_text(encoding="utf-8"))
