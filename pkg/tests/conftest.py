# Shared fixtures for the test suite

import os

import pytest

from models import settings as settings_module
from models.catalog_model import (
    two_state_med_game,
    two_state_randomized_game,
    two_state_war_of_attrition_game,
    war_of_attrition_game,
)


@pytest.fixture(autouse=True)
def default_settings(monkeypatch):
    """Run every test with the built-in defaults, whatever the local .env says."""
    for name in list(os.environ):
        if name.startswith("DYNKIN_"):
            monkeypatch.delenv(name)
    settings_module.get_settings(reload=True)
    yield
    settings_module.get_settings(reload=True)


@pytest.fixture
def randomized_game():
    return two_state_randomized_game()


@pytest.fixture
def med_game():
    return two_state_med_game()


@pytest.fixture
def war_game():
    return war_of_attrition_game()


@pytest.fixture
def two_state_war_game():
    return two_state_war_of_attrition_game()
