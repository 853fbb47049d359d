"""Shared fixtures and the acceptance summary.

Tests marked @pytest.mark.criterion("<label>") are collected into a
per-criterion pass/fail table printed at the end of the run, one line per
criterion, so a full-suite run doubles as the acceptance report.
"""

from __future__ import annotations

import os
import shutil
import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).resolve().parent
if str(TESTS_DIR) not in sys.path:
    sys.path.insert(0, str(TESTS_DIR))

from kindmc import oracle  # noqa: E402
from randsys import corpus  # noqa: E402

_criterion_results: dict[str, tuple[str, float]] = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "criterion(label): an acceptance criterion; reported one line per"
        " label in the terminal summary",
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    label = marker.args[0]
    # setup-time skips count; otherwise the call phase decides
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _criterion_results[label] = (report.outcome, report.duration)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _criterion_results:
        return
    tr = terminalreporter
    tr.write_sep("=", "acceptance criteria")
    word = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}
    for label in sorted(_criterion_results):
        outcome, duration = _criterion_results[label]
        tr.write_line(f"{word.get(outcome, outcome.upper()):<5} {label}  ({duration:.1f}s)")


# ---------------------------------------------------------------------------
# Shared fixtures


def shim_command() -> str:
    """The bundled SMT-LIB solver as an external command line."""
    return f"{sys.executable} {TESTS_DIR / 'smt_micro_solver.py'}"


def fake_solver(name: str) -> str:
    return f"{sys.executable} {TESTS_DIR / 'fake_solvers' / (name + '.py')}"


@pytest.fixture(scope="session")
def shim_cmd() -> str:
    return shim_command()


@pytest.fixture(scope="session")
def external_cmd() -> str:
    """External solver for backend-agreement checks: KINDMC_SOLVER when the
    environment provides one, the bundled shim otherwise."""
    spec = os.environ.get("KINDMC_SOLVER")
    if spec:
        if spec.startswith("external:"):
            spec = spec[len("external:"):]
        head = spec.split()[0] if spec.split() else ""
        if not head or (shutil.which(head) is None and not Path(head).exists()):
            pytest.skip(f"KINDMC_SOLVER points at an unavailable command: {spec!r}")
        return spec
    return shim_command()


@pytest.fixture(scope="session")
def random_corpus():
    """200 seeded random systems, small enough for the ground-truth search:
    at most 8 state bits and 2 input bits each."""
    return corpus(seed=20260816, n=200, max_state_bits=8)


@pytest.fixture(scope="session")
def oracled_corpus(random_corpus):
    """The random corpus paired with its exhaustive-search verdicts."""
    return tuple((s, oracle.bfs_check(s)) for s in random_corpus)
