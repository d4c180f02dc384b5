import numpy as np
import pytest

from chiralqed import _backend
from chiralqed.lattice import Geometry, Kind, build_lattice, field_hamiltonian

KERNELS = _backend.kernels()


@pytest.fixture(params=sorted(KERNELS))
def kernel(request):
    return KERNELS[request.param]


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def clean(kind, cells, **params):
    geometry = Geometry(kind, cells, **params)
    lattice = build_lattice(geometry)
    return geometry, lattice, field_hamiltonian(lattice)


GEOMETRIES = [
    pytest.param(Geometry(Kind.DOUBLE_COMB, 20), id="double_comb"),
    pytest.param(Geometry(Kind.DIAMOND, 31), id="diamond"),
    pytest.param(Geometry(Kind.STUB, 31, v=1.0), id="stub"),
]


# One summary line per acceptance criterion, collected as the criteria run.
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
