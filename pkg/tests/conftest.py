from __future__ import annotations

from pathlib import Path

import pytest

from chainharvest.abi import parse_abi
from chainharvest.fixture import DEMO_TOKEN, build_demo_chain

PACKAGE_DIR = Path(__file__).resolve().parents[1] / "src" / "chainharvest"
ABI_DIR = PACKAGE_DIR / "fixtures" / "abi"
DEMO_CHAIN_FILE = PACKAGE_DIR / "fixtures" / "chains" / "demo.json"
FIXTURE_DIR = Path(__file__).resolve().parent / "fixtures"


@pytest.fixture(scope="session")
def erc20_abi():
    return parse_abi((ABI_DIR / "erc20.json").read_text())


@pytest.fixture(scope="session")
def doubler_abi():
    return parse_abi((ABI_DIR / "doubler.json").read_text())


@pytest.fixture(scope="session")
def workflow_abi():
    return parse_abi((ABI_DIR / "workflow_audit.json").read_text())


@pytest.fixture()
def demo_chain():
    return build_demo_chain()


@pytest.fixture(scope="session")
def abi_registry(erc20_abi):
    return {DEMO_TOKEN: erc20_abi}
