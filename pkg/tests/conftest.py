import numpy as np
import pytest

from gridsysid import EmulationScenario, ExcitationSpec, PreprocessConfig
from gridsysid.emulator import REFERENCE_PLANT


def prbs_scenario(plant=REFERENCE_PLANT, **kw):
    """Noise-free PRBS record with a quiet tail (the demeaned input then has no DC offset)."""
    params = dict(
        plant=plant,
        ts=0.1,
        duration=800.0,
        excitation=ExcitationSpec(kind="prbs", switch_times=(5.0, 500.0), prbs_bit_period=0.5, amplitude=6.0),
    )
    params.update(kw)
    return EmulationScenario(**params)


#: keeps the raw samples; the emulated records carry no spikes or drift
CLEAN = PreprocessConfig(median_window=1, detrend=False, demean=True, split_fraction=0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance bookkeeping: one pass/fail line per criterion at the end of the run
_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or (rep.when != "call" and not rep.failed):
        return
    number, title = mark.args
    detail = "; ".join(f"{k}={v}" for k, v in item.user_properties)
    _ACCEPTANCE[number] = (title, "FAIL" if rep.failed else "PASS", detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, status, detail = _ACCEPTANCE[number]
        line = f"AC{number} {status}  {title}"
        terminalreporter.write_line(f"{line}  [{detail}]" if detail else line)
