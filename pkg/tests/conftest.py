import pytest

from eosched.instance_model import load_bundled_instance


@pytest.fixture(scope="session")
def bundled_instance():
    return load_bundled_instance()


def pytest_terminal_summary(terminalreporter):
    from .acceptance_log import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
