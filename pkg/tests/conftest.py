import numpy as np
import pytest

from scaledcg.manifolds import PeculiarSphere, ProductStiefel, Sphere, Stiefel


def all_manifolds():
    return [
        Sphere(20, "qr"),
        Sphere(20, "orthographic"),
        PeculiarSphere(20),
        Stiefel(6, 3),
        ProductStiefel(5, 4, 2),
    ]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=all_manifolds(), ids=repr)
def manifold(request):
    return request.param


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import VERDICTS
    except ImportError:
        return
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(VERDICTS):
        terminalreporter.write_line(VERDICTS[n])
