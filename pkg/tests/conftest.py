import os
import sys
import tempfile
from pathlib import Path

import numpy as np
import pytest
from dotenv import load_dotenv

ROOT = Path(__file__).resolve().parents[1]
sys.path.append(str(ROOT))
load_dotenv()
os.environ.setdefault("CPD_DATA_ROOT", tempfile.mkdtemp(prefix="cpd-test-"))

from cpd.signals import make_signal, signal_stats  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def two_level():
    return make_signal(10, [1, 6], [0.0, 1.0])


@pytest.fixture
def small_stats():
    # n=6, segments [1..3] and [4..6]
    return signal_stats(make_signal(6, [1, 4], [0.0, 1.0]))


@pytest.fixture
def vector_signal():
    return make_signal(40, [1, 21], [[0.0, 0.0], [3.0, 4.0]], vector=True)


def write_cfg(path: Path, **items) -> Path:
    lines = [f"{k} = {v}" for k, v in items.items()]
    path.write_text("# experiment\n" + "\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def cfg_file(tmp_path):
    def make(name="exp.cfg", **items):
        return write_cfg(tmp_path / name, **items)
    return make
