import json
import os

import pytest
from hypothesis import HealthCheck, settings

from eitcool import cli
from eitcool.config import load_config

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def bundled_run(tmp_path_factory):
    """Run a bundled config once per session; returns (output dir, metadata)."""
    cache = {}

    def get(name):
        if name not in cache:
            out = tmp_path_factory.mktemp(name)
            cli.run(load_config(name), out)
            with open(out / "metadata.json") as fh:
                cache[name] = (out, json.load(fh))
        return cache[name]

    return get


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
