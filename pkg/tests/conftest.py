import numpy as np
import pytest

from z2chain import DeviceParams, device_default, uniform_params
from z2chain.exact import StateVector


@pytest.fixture
def device():
    return device_default()


@pytest.fixture
def uniform6():
    return uniform_params(6)


def random_state(L, seed=0) -> StateVector:
    rng = np.random.default_rng(seed)
    amps = rng.standard_normal(1 << L) + 1j * rng.standard_normal(1 << L)
    return StateVector(amps, L).normalized()


def small_device(L) -> DeviceParams:
    """Device-like inhomogeneous parameter set truncated to L sites."""
    dev = device_default()
    return DeviceParams(
        n_sites=L,
        g_nn=dev.g_nn[: L - 1],
        lambda_nnn=dev.lambda_nnn[: L - 2],
        v_long=dev.v_long[:L],
        h_x=dev.h_x,
        h_z=dev.h_z,
        g_eff=dev.g_eff[: L // 2 - 1],
    )
