import hypothesis
import pytest

from feasikit.numerics import PrecisionContext

hypothesis.settings.register_profile(
    "default", max_examples=50, deadline=None, derandomize=True
)
hypothesis.settings.load_profile("default")


@pytest.fixture(scope="session")
def ctx():
    return PrecisionContext()
