import pytest

from lzero.scripted import ScriptNet


@pytest.fixture
def script_net():
    return ScriptNet
