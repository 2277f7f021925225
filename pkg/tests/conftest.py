import pytest

from priormap import PatchExtent

from helpers import demo_map


@pytest.fixture
def patch():
    return PatchExtent()


@pytest.fixture
def demo():
    return demo_map()
