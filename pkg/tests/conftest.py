import sys
from pathlib import Path

import pytest
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from cdmloc import Fingerprint  # noqa: E402

ATTRS = list("abcdefgh")


def fingerprints(attrs=ATTRS, lo=-100, hi=-30, min_size=0):
    values = st.integers(lo, hi).map(float) | st.floats(lo, hi, allow_nan=False)
    return st.dictionaries(st.sampled_from(attrs), values, min_size=min_size).map(Fingerprint)


@pytest.fixture
def worked_pair():
    return Fingerprint({"a": -50, "b": -60}), Fingerprint({"a": -55, "c": -70})


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "CRITERION_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=_criterion_key):
            terminalreporter.write_line(line)


def _criterion_key(line):
    tag = line.split(":")[0].split()[1]
    digits = tag.rstrip("abcdefghijklmnopqrstuvwxyz")
    return int(digits), tag[len(digits):]
