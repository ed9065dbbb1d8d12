from pathlib import Path

import pytest

from kbdebug import DiagnosisProblem, FaultProfile, Reasoner, parse_kb

DATA = Path(__file__).resolve().parent.parent / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA


@pytest.fixture(scope="session")
def ex1_kb():
    return parse_kb((DATA / "ex1.kb").read_text())


@pytest.fixture(scope="session")
def ex2_kb():
    return parse_kb((DATA / "ex2.kb").read_text())


@pytest.fixture()
def ex1_problem(ex1_kb):
    return DiagnosisProblem.from_kb(ex1_kb)


@pytest.fixture()
def ex2_problem(ex2_kb):
    return DiagnosisProblem.from_kb(ex2_kb)


@pytest.fixture(scope="session")
def uniform_profile():
    return FaultProfile.from_json((DATA / "profile_uniform.json").read_text())


@pytest.fixture(scope="session")
def ex2_profile():
    return FaultProfile.from_json((DATA / "profile_ex2.json").read_text())


@pytest.fixture()
def reasoner():
    return Reasoner()
