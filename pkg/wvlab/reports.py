"""JSON run reports and comma-separated sweep tables"""
import json
import logging
from typing import List, Optional, Sequence

import pandas as pd

from . import scenario_file
from .__version__ import __version__
from .pointer import PointerMoments, SweepPoint
from .protocol import ProtocolResult, Scenario

logger = logging.getLogger(__name__)

REPORT_KEYS = (
    "scenario",
    "scenario_hash",
    "mode",
    "resource",
    "accepted_bell_outcome",
    "seed",
    "analytic_wv",
    "pointer_estimate",
    "bell_outcome_probs",
    "joint_success_prob",
    "shots_used",
    "accepted_shots",
    "pointer_moments",
    "grid_moments",
    "sweep",
    "outcome_weak_values",
    "transcript",
)
SWEEP_COLUMNS = ["g", "meanQ", "meanP", "reEst", "imEst", "successProb"]


def complex_pair(value: Optional[complex]) -> Optional[list]:
    """[re, im], or None"""
    if value is None:
        return None
    value = complex(value)
    return [value.real, value.imag]


def moments_to_dict(moments: Optional[PointerMoments]) -> Optional[dict]:
    if moments is None:
        return None
    return {key: float(value) for key, value in moments._asdict().items()}


def sweep_rows(points: Sequence[SweepPoint]) -> List[dict]:
    return [
        {
            "g": point.g,
            "meanQ": point.mean_q,
            "meanP": point.mean_p,
            "reEst": point.re_est,
            "imEst": point.im_est,
            "successProb": point.success_prob,
        }
        for point in points
    ]


def sweep_table(points: Sequence[SweepPoint]) -> pd.DataFrame:
    """Per-coupling readouts as a table with the SWEEP_COLUMNS columns"""
    return pd.DataFrame(sweep_rows(points), columns=SWEEP_COLUMNS)


def build_report(
    scenario: Scenario,
    result: ProtocolResult,
    mode: str,
    seed: Optional[int] = None,
    outcome_weak_values: Optional[dict] = None,
    grid_moments: Optional[PointerMoments] = None,
) -> dict:
    """JSON-ready report of one run; always carries every REPORT_KEYS key.

    Args:
        scenario: the scenario that was run.
        result: its ProtocolResult.
        mode: conditional, sample or sweep.
        seed: sampling seed, for sampled runs.
        outcome_weak_values: weak value per Bell outcome (None entries allowed).
        grid_moments: grid cross-check of the pointer moments.
    """
    outcome_weak_values = outcome_weak_values or {}
    report = {
        "scenario": scenario.name,
        "scenario_hash": scenario_file.scenario_digest(scenario),
        "mode": mode,
        "resource": scenario_file.scenario_to_dict(scenario)["resource"],
        "accepted_bell_outcome": scenario.accepted_bell_outcome,
        "seed": seed,
        "analytic_wv": complex_pair(result.analytic_wv),
        "pointer_estimate": complex_pair(result.pointer_estimate),
        "bell_outcome_probs": [float(prob) for prob in result.bell_outcome_probs],
        "joint_success_prob": float(result.joint_success_prob),
        "shots_used": result.shots_used,
        "accepted_shots": result.accepted_shots,
        "pointer_moments": moments_to_dict(result.pointer_moments),
        "grid_moments": moments_to_dict(grid_moments),
        "sweep": sweep_rows(result.sweep),
        "outcome_weak_values": {
            str(outcome): complex_pair(value)
            for outcome, value in sorted(outcome_weak_values.items())
        },
        "transcript": [event._asdict() for event in result.transcript],
    }
    if tuple(report) != REPORT_KEYS:
        raise ValueError(
            f"Report keys {sorted(report)} do not match {sorted(REPORT_KEYS)}"
        )
    return report


def write_report(reports: List[dict], path: str):
    """Writes the runs of one invocation to a JSON file"""
    document = {"version": __version__, "runs": reports}
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(document, handle, indent=2, sort_keys=True, allow_nan=False)
        handle.write("\n")
    logger.info(f"WROTE REPORT {path}")


def write_sweep_table(points: Sequence[SweepPoint], path: str):
    sweep_table(points).to_csv(path, index=False)
    logger.info(f"WROTE SWEEP TABLE {path}")
