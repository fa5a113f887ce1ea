import pytest

from bnsolve.client import EndpointConfig, SamplingParams


@pytest.fixture
def endpoint():
    # retry_backoff 0 keeps retry-path tests instant
    return EndpointConfig(
        base_url="http://endpoint.test",
        model_name="test-model",
        retry_backoff=0.0,
    )


@pytest.fixture
def params():
    return SamplingParams()
