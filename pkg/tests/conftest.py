import pytest

from frontlab.cross_section import CrossSectionMesh
from frontlab.nonlinearity import example61, kpp


@pytest.fixture(scope="session")
def bistable():
    return example61()


@pytest.fixture(scope="session")
def logistic():
    return kpp()


@pytest.fixture(scope="session")
def point():
    return CrossSectionMesh.point()


ACCEPTANCE: dict[int, str] = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[number] = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
