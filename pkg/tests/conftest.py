"""Shared fixtures: the bundled 1989 bond-option chain and its csv copy."""

from pathlib import Path

import pytest

from expopt.calibration import BOND_CHAIN_DT, BOND_CHAIN_P0, bond_chain_quotes
from expopt.types import PricingContext

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def market_quotes():
    return bond_chain_quotes("market")


@pytest.fixture(scope="session")
def reference_quotes():
    return bond_chain_quotes("reference")


@pytest.fixture
def bond_ctx():
    # discount and carry are placeholders; calibration supplies its own
    return PricingContext(p0=BOND_CHAIN_P0, discount_rate=0.05,
                          carry_rate=0.0, dt=BOND_CHAIN_DT)


@pytest.fixture(scope="session")
def quotes_csv_path():
    return DATA_DIR / "bond_quotes_1989.csv"
