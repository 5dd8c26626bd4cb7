import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import oracles  # noqa: E402
from romanoff.sieve import build_prime_table  # noqa: E402


@pytest.fixture(scope="session")
def t6():
    return build_prime_table(10**6)


@pytest.fixture(scope="session")
def t4():
    return build_prime_table(10**4)


@pytest.fixture(scope="session")
def primes6():
    return oracles.primes_list(10**6)


# -- acceptance verdicts --------------------------------------------------------

_VERDICTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        detail = "; ".join(str(v) for k, v in rep.user_properties if k == "detail")
        _VERDICTS[mark.args[0]] = ("PASS" if rep.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_VERDICTS):
        verdict, detail = _VERDICTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {verdict}  {detail}")
