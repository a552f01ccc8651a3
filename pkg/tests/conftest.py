import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from helpers import seed_matrix_operations  # noqa: E402

from toolforge.kb import Registry


@pytest.fixture
def kb_root(tmp_path):
    root = tmp_path / "kb"
    root.mkdir()
    return root


@pytest.fixture
def seeded_kb(kb_root):
    seed_matrix_operations(kb_root)
    return kb_root


@pytest.fixture
def registry(kb_root):
    return Registry(kb_root)


@pytest.fixture
def seeded_registry(seeded_kb):
    return Registry(seeded_kb)
