import sys
from pathlib import Path

import pytest

from mlnjoint.extraction.schema import data_path, load_bundles, load_compatibility
from mlnjoint.parser import parse_evidence, parse_program

HERE = Path(__file__).parent
sys.path.insert(0, str(HERE))

FIXTURES = HERE / "fixtures"


@pytest.fixture(scope="session")
def worked_example():
    program = parse_program(data_path("worked_example.mln").read_text())
    evidence = parse_evidence(data_path("worked_example.db").read_text(), program)
    return program, evidence


@pytest.fixture(scope="session")
def example_bundle():
    return load_bundles(data_path("example_sentence.json"))[0]


@pytest.fixture(scope="session")
def synthetic_bundles():
    return load_bundles(FIXTURES / "synthetic_bundles.json")


@pytest.fixture(scope="session")
def compat():
    return load_compatibility()


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    if acceptance is None or not acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in acceptance.summary_lines():
        terminalreporter.write_line(line)
