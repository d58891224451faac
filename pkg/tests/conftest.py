import pytest

from app.schemas.device import DeviceParams
from app.services.presets import load_config


@pytest.fixture(scope="session")
def inhibitory_default() -> DeviceParams:
    return load_config("scn-inhibitory-default").params


@pytest.fixture(scope="session")
def excitatory_default() -> DeviceParams:
    return load_config("scn-mg-excitatory-default").params
