import numpy as np
import pytest

from ascfmap import backend
from ascfmap.tensor import FeatureMap, SampleFormat

BACKENDS = sorted(backend.available())


@pytest.fixture(params=BACKENDS)
def kernels(request, monkeypatch):
    """Run a test once per importable kernel backend."""
    mod = backend.available()[request.param]
    monkeypatch.setattr(backend, "kernels", mod)
    return mod


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def random_map(rng, fmt, dims, nonneg=False, zero_frac=0.0):
    w, h, c = dims
    if fmt is SampleFormat.FP16:
        data = (rng.standard_normal((c, h, w)) * rng.choice([0.01, 1, 50, 3000])).astype(np.float16)
    else:
        info = np.iinfo(fmt.dtype)
        data = rng.integers(info.min, info.max + 1, (c, h, w)).astype(fmt.dtype)
    if nonneg:
        data = np.abs(data.astype(np.float64)).clip(0, fmt.peak).astype(fmt.dtype)
    if zero_frac:
        data[rng.random(data.shape) < zero_frac] = 0
    return FeatureMap(fmt, data)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
