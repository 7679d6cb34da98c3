"""Tests verify.py"""
from unittest.mock import patch

import numpy as np
import pandas as pd
import pytest

from wvlab import config, resources, verify
from wvlab.__main__ import main
from wvlab.qmath import SIGMA_X
from wvlab.verify import CheckResult, IdentityCheck

REGISTRY = config.collect_checks(["wvlab.checks"])


class ExactCheck(IdentityCheck):
    _checkname = "exact"
    _suite = "weakvalues"
    _trials = 3

    def _errors(self, rng):
        for _ in range(self.trials):
            yield 0.0


class LooseCheck(IdentityCheck):
    _checkname = "loose"
    _suite = "weakvalues"
    _tolerance = 1e-3

    def _errors(self, rng):
        yield 0.5


class RaisingCheck(IdentityCheck):
    _checkname = "raising"
    _suite = "pointer"

    def _errors(self, rng):
        raise ZeroDivisionError("division by zero")
        yield


class NanCheck(IdentityCheck):
    _checkname = "nan"
    _suite = "pointer"

    def _errors(self, rng):
        yield float("nan")


def test_identity_check_passes():
    result = ExactCheck().run()
    assert result == CheckResult("exact", "weakvalues", 0.0, 1e-10, True, "")


def test_identity_check_fails_above_tolerance():
    result = LooseCheck().run()
    assert not result.passed
    assert result.max_error == 0.5


def test_identity_check_trials_and_seed():
    check = ExactCheck(trials=7, seed=1)
    assert (check.trials, check.seed) == (7, 1)
    assert (ExactCheck().trials, ExactCheck().seed) == (3, IdentityCheck._seed)


def test_exception_fails_check():
    result = RaisingCheck().run()
    assert not result.passed
    assert result.max_error == float("inf")
    assert result.detail == "ZeroDivisionError: division by zero"


def test_nan_fails_check():
    result = NanCheck().run()
    assert not result.passed
    assert result.detail == "error is NaN"


def test_run_checks_selects_suite_in_name_order():
    registry = {"loose": LooseCheck, "exact": ExactCheck, "raising": RaisingCheck}
    results = verify.run_checks(registry, "weakvalues")
    assert [result.name for result in results] == ["exact", "loose"]
    assert len(verify.run_checks(registry)) == 3


def test_run_checks_unknown_suite():
    with pytest.raises(ValueError, match="Unknown suite"):
        verify.run_checks({"exact": ExactCheck}, "teleportation")


def test_run_checks_empty_suite():
    with pytest.raises(ValueError, match="No checks registered"):
        verify.run_checks({"exact": ExactCheck}, "protocol")


def test_collect_failures_all_passed():
    results = [ExactCheck().run()]
    assert verify.collect_failures(results) == "ALL CHECKS PASSED!\n"


def test_collect_failures_message():
    results = [
        ExactCheck().run(),
        LooseCheck().run(),
        RaisingCheck().run(),
    ]
    expected = (
        "----------------FAILURES----------------\n"
        "loose: max error 0.5 exceeds tolerance 0.001\n"
        "raising: max error inf exceeds tolerance 1e-10 "
        "(ZeroDivisionError: division by zero)\n"
    )
    assert verify.collect_failures(results) == expected


def test_build_check_table():
    table = verify.build_check_table([ExactCheck().run(), LooseCheck().run()])
    expected = pd.DataFrame(
        {
            "name": ["exact", "loose"],
            "suite": ["weakvalues", "weakvalues"],
            "max_error": [0.0, 0.5],
            "tolerance": [1e-10, 1e-3],
            "status": ["PASSED", "FAILED"],
        }
    )
    pd.testing.assert_frame_equal(table, expected)


def test_decompositions_suite_passes():
    results = verify.run_checks(REGISTRY, "decompositions")
    assert [result.name for result in results] == [
        "eq12-reconstruction",
        "eq7-reconstruction",
        "generalized-basis-orthonormality",
        "generalized-basis-unit-parameter",
        "werner-spectrum",
    ]
    assert all(result.passed for result in results)


@pytest.mark.parametrize("suite", ["weakvalues", "pointer", "protocol"])
def test_registered_suites_pass(suite):
    failures = [
        result for result in verify.run_checks(REGISTRY, suite) if not result.passed
    ]
    assert failures == []


def test_verify_cli_passes(tmp_path, capsys):
    out = tmp_path / "checks.csv"
    assert main(["verify", "--suite", "decompositions", "--out", str(out)]) == 0
    assert "ALL CHECKS PASSED!" in capsys.readouterr().out
    table = pd.read_csv(out)
    assert list(table.columns) == verify.TABLE_COLUMNS
    assert set(table["status"]) == {"PASSED"}


def test_corrupted_unitary_fails_verify(capsys):
    """A wrong Bell unitary must be caught by the decomposition check"""
    corrupted = list(resources.BELL_UNITARIES)
    corrupted[1] = -np.asarray(SIGMA_X)
    with patch.object(resources, "BELL_UNITARIES", tuple(corrupted)):
        exit_code = main(["verify", "--suite", "decompositions"])
    assert exit_code == 1
    output = capsys.readouterr().out
    assert "eq7-reconstruction: max error" in output
    assert "eq12-reconstruction: max error" not in output
