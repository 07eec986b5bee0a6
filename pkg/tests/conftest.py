import pytest
from hypothesis import HealthCheck, settings

from paravec import kernels

settings.register_profile(
    "default",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # Compile numba kernels once up front so timed tests measure compute only.
    kernels.warmup()
