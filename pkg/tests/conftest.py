import json
import math

import pytest

from core.lattice import certify_special_form
from core.window import Box

ALPHA = (math.sqrt(5.0) - 1.0) / 2.0
BETA = math.sqrt(3.0)


@pytest.fixture
def alpha():
    return ALPHA


@pytest.fixture
def golden_lattice():
    return certify_special_form([ALPHA], [BETA])


@pytest.fixture
def kesten_window():
    """[0, alpha): a bounded remainder set for the golden rotation."""
    return Box.from_bounds([0.0], [ALPHA])


@pytest.fixture
def kesten_partner():
    """[1 - alpha, 1): same measure as the Kesten window."""
    return Box.from_bounds([1.0 - ALPHA], [1.0])


@pytest.fixture
def half_window():
    """[0, 1/2): not a bounded remainder set, 1/2 is not in Z alpha + Z."""
    return Box.from_bounds([0.0], [0.5])


@pytest.fixture
def write_json(tmp_path):
    def _write(name, payload):
        path = tmp_path / name
        path.write_text(json.dumps(payload), encoding="utf-8")
        return str(path)

    return _write
