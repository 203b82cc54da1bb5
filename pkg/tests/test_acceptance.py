"""Reproduction criteria, one test per check, each printing a PASS/FAIL line."""

import json

import pytest

from clobs import verify


@pytest.fixture(scope="module")
def scenarios():
    return verify._Scenarios()


@pytest.mark.parametrize("name", sorted(verify.CHECKS))
def test_criterion(name, scenarios, capsys):
    result = verify._run_one(name, scenarios)
    with capsys.disabled():
        print(f"\n{'PASS' if result.passed else 'FAIL'} {name}: got {json.dumps(verify._jsonable(result.got))}"
              f" expected {json.dumps(verify._jsonable(result.expected))}"
              f" tolerance {json.dumps(verify._jsonable(result.tolerance))}")
    assert result.passed, json.dumps(verify._jsonable(result.details), indent=1)[:4000]
