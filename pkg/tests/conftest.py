"""Pytest configuration and fixtures."""

import os

import pytest

from sb_stirling.atlas import Atlas, classify_n
from sb_stirling.zeros import ZeroLimits


@pytest.fixture
def shallow_limits():
    """Zero-finder limits small enough for unit tests."""
    return ZeroLimits(depth=16, cap=512, max_log_modulus=8)


@pytest.fixture(scope="session")
def small_atlas():
    """Atlas for 1 <= n <= 12 at witness depth 16."""
    limits = ZeroLimits(depth=16, cap=512, max_log_modulus=8)
    atlas = Atlas()
    for n in range(1, 13):
        atlas.add(n, classify_n(n, limits))
    return atlas


@pytest.fixture
def atlas_file(small_atlas, tmp_path):
    """The small atlas written as JSON lines."""
    path = tmp_path / "atlas.jsonl"
    small_atlas.write(path)
    return path


@pytest.fixture
def clean_env():
    """Remove the sb-stirling environment variables for the duration of a test."""
    original_env = dict(os.environ)
    for key in ("SB_STIRLING_WORKERS", "SB_STIRLING_CACHE_DIR"):
        os.environ.pop(key, None)
    yield
    os.environ.clear()
    os.environ.update(original_env)
