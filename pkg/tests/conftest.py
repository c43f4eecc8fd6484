"""Shared fixtures, plus a terminal summary with one line per acceptance criterion."""
from __future__ import annotations

import dataclasses
from pathlib import Path

import pytest
from hypothesis import settings

from autoaim.scenario import load_scenario

settings.register_profile("default", deadline=None, max_examples=200)
settings.load_profile("default")

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"

_ACCEPTANCE: dict[int, tuple[str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    crit = dict(report.user_properties).get("criterion")
    if crit is None:
        return
    n, title = crit
    detail = dict(report.user_properties).get("detail", "")
    _ACCEPTANCE[n] = ("PASS" if report.passed else "FAIL", title, detail)


@pytest.hookimpl(tryfirst=True)
def pytest_runtest_setup(item):
    m = item.get_closest_marker("criterion")
    if m is not None:
        item.user_properties.append(("criterion", tuple(m.args)))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        status, title, detail = _ACCEPTANCE[n]
        line = f"[{status}] criterion {n:2d}: {title}"
        if detail:
            line += f" ({detail})"
        terminalreporter.write_line(line)


@pytest.fixture
def detail(request):
    """Attach a short measured-value note to the acceptance summary line."""
    def note(text: str) -> None:
        request.node.user_properties.append(("detail", text))
    return note


def occlusion_scenario(seed: int, start: float = 2.0, end: float = 4.0):
    base = load_scenario(SCENARIO_DIR / "occlusion.yaml").with_seed(seed)
    tgt = dataclasses.replace(base.targets[0], occlusions=[(start, end)])
    duration = max(base.duration, end + 1.5)
    return dataclasses.replace(base, targets=[tgt], duration=duration)

