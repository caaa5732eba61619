import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).parent
if str(TESTS_DIR) not in sys.path:
    sys.path.insert(0, str(TESTS_DIR))

FIXTURE_SCENES = TESTS_DIR / "fixtures" / "scenes"
GOLDEN_RUN = TESTS_DIR / "fixtures" / "golden_run"


@pytest.fixture(scope="session")
def fixture_scenes_dir() -> Path:
    return FIXTURE_SCENES


@pytest.fixture(scope="session")
def golden_run_dir() -> Path:
    return GOLDEN_RUN


@pytest.fixture(scope="session")
def s1():
    from spatialqa import load_scene

    return load_scene(FIXTURE_SCENES / "s1_table_mug.json")


@pytest.fixture(scope="session")
def s1_view(s1):
    return s1.views[0]


@pytest.fixture(scope="session")
def s1_table(s1):
    return s1.object_by_id("table_1")


@pytest.fixture(scope="session")
def s1_mug(s1):
    return s1.object_by_id("mug_1")
