import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from helpers import note, piece  # noqa: E402


@pytest.fixture
def simple_piece():
    """Two pitched tracks plus a drum note, 4/4, 120 bpm."""
    return piece([
        note(0, 1, 60, 80, program=0, track=0),
        note(1, "1/2", 64, 70, program=0, track=0),
        note(2, 2, 67, 90, program=24, track=1),
        note(0, "1/4", 38, 100, drum=True, track=2),
    ])


@pytest.fixture
def drum_only_piece():
    return piece([note(0, 1, 36, 90, drum=True),
                  note(1, 1, 38, 80, drum=True)], id="artist/drums.mid")
