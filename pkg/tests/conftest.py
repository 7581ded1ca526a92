import pytest

from qualinet.compile import compile_model
from qualinet.data import path as data_path
from qualinet.model import parse_model
from qualinet.network import CompiledNetwork, NetworkNode


@pytest.fixture(scope="session")
def cm1_source() -> str:
    return data_path("cm1.qm").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def cm1_model(cm1_source):
    return parse_model(cm1_source)


@pytest.fixture(scope="session")
def cm1_net(cm1_model) -> CompiledNetwork:
    return compile_model(cm1_model, "maintenance")


@pytest.fixture(scope="session")
def table1_net() -> CompiledNetwork:
    """Two-parent example network: X in {low,high}, Y in {low,med,high}."""
    return CompiledNetwork(
        name="table1",
        nodes=(
            NetworkNode("X", "fact", ("low", "high"), (), (0.5, 0.5)),
            NetworkNode("Y", "fact", ("low", "med", "high"), (), (1 / 3, 1 / 3, 1 / 3)),
            NetworkNode(
                "C",
                "activity",
                ("true", "false"),
                ("X", "Y"),
                (
                    0.6, 0.65, 0.3, 0.45, 0.23, 0.05,
                    0.4, 0.35, 0.7, 0.55, 0.77, 0.95,
                ),
            ),
        ),
    )
