import numpy as np
import pytest

from reelprint.tunebase import default_tunebase_path, load_tunebase


@pytest.fixture(scope="session")
def tunebase():
    return load_tunebase(default_tunebase_path())


@pytest.fixture(scope="session")
def galway_abc(tunebase):
    return tunebase.resolve("The Galway Rambler")[1]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# PASS/FAIL lines from the acceptance tests, repeated at the end of the run
VERDICTS = []


@pytest.fixture
def verdict():
    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        VERDICTS.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
