import os
import sys

import pytest
from hypothesis import HealthCheck, settings

from nrvol import kernels

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("nrvol", max_examples=80, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("nrvol")

_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    previous = kernels.backend_name()
    kernels.use_backend(request.param)
    yield request.param
    kernels.use_backend(previous)


@pytest.fixture(scope="session")
def acceptance_log():
    """Criterion number -> one-line PASS/FAIL summary, echoed at the end of the run."""
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[n])
