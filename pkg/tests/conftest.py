import numpy as np
import pytest

from walkopt.instance import WALKSCORE_CURVE, AmenityTypeSpec, Instance
from walkopt.presets import counterexample_instance


def make_toy(**overrides) -> Instance:
    """3 residents, 2 candidates, one existing grocery, one plain and one depth type."""
    kw = dict(
        residents=[10, 11, 12],
        candidates=[20, 21],
        capacities=[1, 2],
        existing={0: (30,), 1: ()},
        dist=np.array(
            [
                [100.0, 900.0, 1500.0],
                [700.0, 300.0, 2500.0],
                [2000.0, 50.0, 800.0],
            ]
        ),
        amenity_specs=[
            AmenityTypeSpec(0, "grocery", (3.0,), 1),
            AmenityTypeSpec(1, "restaurant", (0.75, 0.45), 2),
        ],
        curve=WALKSCORE_CURVE,
        d_infinity=2400.0,
        name="toy",
    )
    kw.update(overrides)
    return Instance(**kw)


@pytest.fixture
def toy():
    return make_toy()


@pytest.fixture
def counterexample():
    return counterexample_instance()


@pytest.fixture
def rng():
    return np.random.default_rng(20231016)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
