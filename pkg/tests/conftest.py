import logging

import pytest


@pytest.fixture(autouse=True)
def _quiet_warnings(caplog):
    caplog.set_level(logging.WARNING, logger="tbiga")
