import pytest

from bernet import kernels


@pytest.fixture(params=sorted(kernels.backends()))
def backend(request):
    """Each available kernel implementation in turn."""
    return kernels.backends()[request.param]
