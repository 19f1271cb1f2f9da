import sys
from pathlib import Path

# helper modules (small_configs, _oracles) live next to the tests
sys.path.insert(0, str(Path(__file__).parent))

from test_acceptance import VERDICTS  # noqa: E402


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in VERDICTS:
        terminalreporter.write_line(line)
