import numpy as np
import pytest

from qadapose import numerics
from qadapose._backend import available_backends
from qadapose.geometry import square_beacons
from qadapose.qada import IDEAL_CALIBRATION, REFERENCE_CALIBRATION

_ACCEPTANCE = []


@pytest.fixture
def beacons():
    return square_beacons(1.2, (1.0, 1.0), 3.4)


@pytest.fixture
def ref_cal():
    return REFERENCE_CALIBRATION


@pytest.fixture
def ideal_cal():
    return IDEAL_CALIBRATION


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=sorted(available_backends()))
def backend(request, monkeypatch):
    """Run the test once per importable kernel backend."""
    monkeypatch.setattr(numerics, "kernels", available_backends()[request.param])
    return request.param


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance.py" not in report.nodeid:
        return
    props = dict(report.user_properties)
    _ACCEPTANCE.append((props.get("criterion", report.nodeid.split("::")[-1]), report.outcome.upper(),
                        props.get("measured", "")))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, measured in sorted(_ACCEPTANCE):
        terminalreporter.write_line(f"{outcome:<7} {name}  {measured}")
