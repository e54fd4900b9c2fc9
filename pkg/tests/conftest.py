import numpy as np
import pytest

from finslercheck import finsler as fs
from finslercheck.config import default_config
from finslercheck.verifier import build_contexts, run_campaign

ACCEPTANCE_LINES = {}


@pytest.fixture(scope="session")
def euclid():
    return fs.make_pair(fs.EuclideanNorm(2))


@pytest.fixture(scope="session")
def ellipse():
    return fs.make_pair(fs.EllipsoidNorm(np.diag([4.0, 1.0])))


@pytest.fixture(scope="session")
def l4():
    return fs.make_pair(fs.PNorm(4.0, 2))


@pytest.fixture(scope="session")
def l43():
    return fs.make_pair(fs.PNorm(4.0 / 3.0, 2))


@pytest.fixture(scope="session")
def builtin_pairs(euclid, ellipse, l4, l43):
    return {"euclidean": euclid, "ellipse": ellipse, "l4": l4, "l4_3": l43}


@pytest.fixture(scope="session")
def default_contexts():
    return build_contexts(default_config())


@pytest.fixture(scope="session")
def default_reports(default_contexts):
    return run_campaign(default_config(), contexts=default_contexts)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
