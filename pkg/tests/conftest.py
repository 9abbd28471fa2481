"""Shared test wiring."""
import logging

import pytest


@pytest.fixture(autouse=True)
def _fresh_root_logger():
    """Drop handlers installed by main()'s basicConfig so each test's CLI run
    binds logging to that test's stderr, as a fresh process would."""
    root = logging.getLogger()
    saved = root.handlers[:]
    root.handlers.clear()
    yield
    root.handlers[:] = saved
