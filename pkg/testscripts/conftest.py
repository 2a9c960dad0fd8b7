"""
Shared pytest setup: full-size reproduction runs are marked slow and only
run when TLL_LAB_SLOW is set.
"""

import os

import pytest


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-size reproduction run (set TLL_LAB_SLOW=1)")


def pytest_collection_modifyitems(config, items):
    if os.environ.get("TLL_LAB_SLOW"):
        return
    skip_slow = pytest.mark.skip(reason="full-size run; set TLL_LAB_SLOW=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)
