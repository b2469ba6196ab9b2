import os
import tempfile

import numpy as np
import pytest

# Settings are read once at import time, so the log location has to be set before the
# first `app` import anywhere in the test session.
os.environ.setdefault("AUDIT_LOG_PATH", os.path.join(tempfile.mkdtemp(prefix="dxsync-tests-"), "audit.log"))
os.environ.setdefault("ENVIRONMENT", "test")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def random_file(rng):
    """A 1024-bit file."""
    return rng.integers(0, 256, size=128, dtype=np.uint8).tobytes()
