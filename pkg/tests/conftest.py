import numpy as np
import pytest

from natslab.qops import ChargeFamily, HermitianOperator, spin_family

SZ_HALF = np.diag([0.5, -0.5])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def sz_family():
    return ChargeFamily([HermitianOperator(SZ_HALF)], labels=["Sz"])


@pytest.fixture
def number_family():
    return ChargeFamily([HermitianOperator(np.diag([0.0, 1.0]))], labels=["n"])


@pytest.fixture
def qutrit_diag_family():
    return ChargeFamily(
        [HermitianOperator(np.diag([1.0, 0.0, 0.0])), HermitianOperator(np.diag([0.0, 1.0, 0.0]))],
        labels=["P0", "P1"],
    )


@pytest.fixture
def spin_half():
    return spin_family(0.5)
