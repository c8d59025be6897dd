import pytest

from slicegcn import _accel


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # Jit compilation happens here, outside any timed assertion.
    _accel.warmup()
