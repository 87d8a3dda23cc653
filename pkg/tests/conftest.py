import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from polydiv.division import init_division, random_refinement
from polydiv.geometry import Box
from polydiv.numerics import Rng

settings.register_profile("polydiv", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("polydiv")


def refined(d: int, steps: int, seed: int = 0, box: Box | None = None):
    box = box or Box.cube(d)
    return random_refinement(init_division(box, box.center), Rng(seed).split(f"refine-{d}"), steps)


@pytest.fixture
def rng():
    return Rng(1234)


@pytest.fixture
def np_rng():
    return np.random.default_rng(1234)


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(n: int, ok: bool, detail: str) -> None:
    if n in ACCEPTANCE:  # parametrized criteria accumulate
        prev_ok, prev = ACCEPTANCE[n]
        ok, detail = prev_ok and ok, f"{prev}; {detail}"
    ACCEPTANCE[n] = (bool(ok), detail)
    print(f"[acceptance {n:2d}] {'PASS' if ok else 'FAIL'} {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
