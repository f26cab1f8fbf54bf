import numpy as np
import pytest

from noma_secrecy.channel import PowerAllocation, PowerSplit, SystemParams

OMEGA_5DB = 10.0 ** 0.5


def nominal_params(snr_db=10.0, eta=0.7, m_shape=1.0, omega=OMEGA_5DB):
    """The reference operating point: 10 dB transmit SNR, 5 dB mean gains."""
    return SystemParams(
        p_tx=10.0 ** (snr_db / 10.0), n0=1.0, eta=eta, m_shape=m_shape,
        omega_su_n=omega, omega_su_f=omega, omega_se=omega,
        omega_un_e=omega, omega_un_uf=omega,
    )


@pytest.fixture
def params():
    return nominal_params()


@pytest.fixture
def alloc():
    return PowerAllocation.from_far(0.8)


@pytest.fixture
def split():
    return PowerSplit.uniform(0.3)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
