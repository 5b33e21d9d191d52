import hashlib
from pathlib import Path

import numpy as np
import pytest

from covprep.ingest import filter_location, parse_owid_csv

FIXTURES = Path(__file__).parent / "fixtures"
INDIA_CSV = FIXTURES / "owid_india.csv"
INDIA_SHA256 = "8b114f01c04ca1012b092071707cf4d9c29515fdf91413e9502c1154ab7946d3"
INDIA_START = "2020-01-05"
INDIA_END = "2024-08-11"


@pytest.fixture(scope="session")
def india_csv() -> Path:
    digest = hashlib.sha256(INDIA_CSV.read_bytes()).hexdigest()
    assert digest == INDIA_SHA256, "pinned fixture changed; regenerate and re-pin deliberately"
    return INDIA_CSV


@pytest.fixture(scope="session")
def india_frames(india_csv):
    return parse_owid_csv(india_csv)


@pytest.fixture(scope="session")
def india(india_frames):
    return filter_location(india_frames, "IND", INDIA_START, INDIA_END)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def run_both(csv_path, out_dir, **overrides):
    """Run both pipelines and the comparison; returns results and wall time."""
    import time

    from covprep.config import PipelineConfig
    from covprep.pipeline import compare, run_custom, run_standard

    config = PipelineConfig(input=str(csv_path), out=str(out_dir), **overrides)
    start = time.perf_counter()
    standard = run_standard(config)
    custom = run_custom(config)
    delta = compare(config)
    return {"config": config, "standard": standard, "custom": custom, "delta": delta,
            "seconds": time.perf_counter() - start}


@pytest.fixture(scope="session")
def full_runs(india_csv, tmp_path_factory):
    """Both pipelines on the pinned fixture with default settings, run once per session."""
    return run_both(india_csv, tmp_path_factory.mktemp("full") / "out")
