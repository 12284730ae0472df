# Copyright 2026 ropf-toolkit contributors.
# See LICENSE file for licensing details.

import pytest

from config import GenerateConfig
from datagen import Dataset, generate
from grid import Network, load_case


@pytest.fixture(scope="session")
def two_bus() -> Network:
    """One generator serving 50 MW over one line."""
    return load_case("two_bus")


@pytest.fixture(scope="session")
def three_bus() -> Network:
    """Triangle whose bus-1 to bus-3 line binds at the optimum."""
    return load_case("three_bus")


@pytest.fixture(scope="session")
def rts24() -> Network:
    """The bundled 24-bus case."""
    return load_case("rts24")


@pytest.fixture(scope="session")
def three_bus_dataset(three_bus) -> Dataset:
    """Twenty labeled samples of the triangle, timing disabled."""
    config = GenerateConfig(
        case="three_bus", samples=20, seed=7, split="0.75,0.25", record_timing=False
    )
    return generate(three_bus, config)
