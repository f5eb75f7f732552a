import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from lionlstm.dataio import WindowedSamples  # noqa: E402
from lionlstm.synth import generate_series  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def synthetic_series():
    return generate_series(228, seed=7)


@pytest.fixture
def small_samples(rng):
    inputs = rng.uniform(0, 1, size=(8, 4, 2))
    targets = rng.uniform(0, 1, size=8)
    return WindowedSamples(inputs, targets, np.arange(4, 12))


@pytest.fixture
def csv_file(tmp_path):
    def write(text, name="series.csv"):
        p = tmp_path / name
        p.write_text(text, encoding="utf-8")
        return p
    return write



def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
