from __future__ import annotations

import pytest

from adaptplan.domains import cartpole_model, crafting_model


@pytest.fixture(scope="session")
def cartpole():
    return cartpole_model()


@pytest.fixture(scope="session")
def crafting():
    return crafting_model()
