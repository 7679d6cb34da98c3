"""Identity and property checks run by the verify command"""
import logging
from typing import Dict, Iterable, List, NamedTuple, Type

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

SUITES = ("decompositions", "weakvalues", "pointer", "protocol")
ALL_SUITES = "all"
TABLE_COLUMNS = ["name", "suite", "max_error", "tolerance", "status"]


class CheckResult(NamedTuple):
    name: str
    suite: str
    max_error: float
    tolerance: float
    passed: bool
    detail: str = ""


class IdentityCheck:
    """Base class of every registered check.

    Subclasses set _checkname and _suite and implement _errors, which yields
    one non-negative error per trial. A check passes when the largest error
    is within _tolerance.
    """

    _checkname = None

    _suite = None

    _tolerance = 1e-10

    _trials = 100

    _seed = 20240101

    def __init__(self, trials: int = None, seed: int = None):
        self.trials = self._trials if trials is None else trials
        self.seed = self._seed if seed is None else seed

    def _errors(self, rng: np.random.Generator) -> Iterable[float]:
        raise NotImplementedError

    def run(self) -> CheckResult:
        """Runs every trial and compares the worst error to the tolerance.

        An exception raised by a trial fails the check and is kept in the
        result detail.
        """
        logger.info(f"RUNNING CHECK {self._checkname}")
        rng = np.random.default_rng(self.seed)
        detail = ""
        try:
            errors = [float(error) for error in self._errors(rng)]
            max_error = max(errors) if errors else 0.0
        except Exception as err:
            max_error = float("inf")
            detail = f"{type(err).__name__}: {err}"
        if np.isnan(max_error):
            max_error = float("inf")
            detail = detail or "error is NaN"
        passed = max_error <= self._tolerance
        logger.debug(f"{self._checkname}: max error {max_error:.3g}")
        return CheckResult(
            name=self._checkname,
            suite=self._suite,
            max_error=max_error,
            tolerance=self._tolerance,
            passed=passed,
            detail=detail,
        )


def run_checks(
    registry: Dict[str, Type[IdentityCheck]], suite: str = ALL_SUITES
) -> List[CheckResult]:
    """Runs the registered checks of a suite in name order.

    Args:
        registry: check name to check class.
        suite: one of SUITES, or "all".

    Returns:
        list of CheckResult
    """
    if suite != ALL_SUITES and suite not in SUITES:
        choices = ", ".join((ALL_SUITES,) + SUITES)
        raise ValueError(f"Unknown suite '{suite}'. Choose from {choices}.")
    selected = [
        registry[name]
        for name in sorted(registry)
        if suite == ALL_SUITES or registry[name]._suite == suite
    ]
    if not selected:
        raise ValueError(f"No checks registered for suite '{suite}'.")
    return [check_cls().run() for check_cls in selected]


def collect_failures(results: List[CheckResult]) -> str:
    """Aggregates failed checks into a message.

    Args:
        results: check results.

    Returns:
        message - one line per failed check
    """
    failures = ""
    for result in results:
        if not result.passed:
            failures += (
                f"{result.name}: max error {result.max_error:.3g} exceeds "
                f"tolerance {result.tolerance:.3g}"
            )
            if result.detail:
                failures += f" ({result.detail})"
            failures += "\n"
    message = "----------------FAILURES----------------\n"
    if failures == "":
        message = "ALL CHECKS PASSED!\n"
        logger.info(message)
    else:
        for failure in failures.split("\n"):
            if failure != "":
                logger.error(failure)
        message += failures
    return message


def build_check_table(results: List[CheckResult]) -> pd.DataFrame:
    """Status table with one row per check"""
    rows = [
        {
            "name": result.name,
            "suite": result.suite,
            "max_error": result.max_error,
            "tolerance": result.tolerance,
            "status": "PASSED" if result.passed else "FAILED",
        }
        for result in results
    ]
    return pd.DataFrame(rows, columns=TABLE_COLUMNS)
