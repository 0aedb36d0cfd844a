import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gridplan.grid import load_map


@pytest.fixture
def corridor():
    return load_map("S...G", name="corridor")


@pytest.fixture
def open_5x5():
    text = "S....\n.....\n.....\n.....\n....G"
    return load_map(text, name="open5")


@pytest.fixture
def l_corridor():
    # L-shaped corridor: along the top row, then down the right column
    text = (
        "S....\n"
        "####.\n"
        "####.\n"
        "####.\n"
        "####G"
    )
    return load_map(text, name="l_corridor")
