from __future__ import annotations

import sys

import pytest

from lpcost.benchmarks import load_benchmarks


@pytest.fixture(scope="session")
def benchmarks():
    return {b.id: b for b in load_benchmarks()}


def pytest_terminal_summary(terminalreporter):
    mod = next((m for name, m in sys.modules.items() if name.rpartition(".")[2] == "test_acceptance"), None)
    if mod is not None and getattr(mod, "RESULTS", None):
        lines = mod.summary_lines()
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
