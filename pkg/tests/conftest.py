from __future__ import annotations

import json
from pathlib import Path

import pytest

from sharpwaves.charspec import make_context
from sharpwaves.kinetics import nicholson_reference

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def oracle():
    return json.loads((FIXTURES / "oracles.json").read_text())


@pytest.fixture(scope="session")
def ref_ctx():
    return make_context(nicholson_reference(1.0))


def pytest_terminal_summary(terminalreporter):
    lines = []
    for key in ("passed", "failed"):
        for rep in terminalreporter.stats.get(key, []):
            if rep.when != "call":
                continue
            lines += [v for k, v in rep.user_properties if k == "acceptance"]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
