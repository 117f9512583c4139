"""
Pytest fixtures for varpn tests.

Provides equation contexts from the bundled corpus, the two KdV Hamiltonian
operators, and helpers for building polynomials from text.
"""

import json
from pathlib import Path

import pytest

from varpn.config import Settings, set_settings
from varpn.eqctx import CoveringMode
from varpn.gpoly import Role
from varpn.parsing import load_equation, parse_expr, parse_op, parse_vec


@pytest.fixture(autouse=True)
def isolated_settings(monkeypatch):
    """Keep tests independent of the caller's VARPN_* environment."""
    monkeypatch.delenv("VARPN_CONFIG", raising=False)
    monkeypatch.delenv("VARPN_THREADS", raising=False)
    set_settings(Settings())
    yield
    set_settings(None)


@pytest.fixture
def equations_dir():
    """Return path to the bundled equation corpus."""
    return Path(__file__).parent.parent / "equations"


@pytest.fixture
def golden_dir():
    """Return path to golden data files."""
    return Path(__file__).parent / "golden"


@pytest.fixture
def calibration(golden_dir):
    """The bracket normalization golden case."""
    return json.loads((golden_dir / "calibration.json").read_text())


@pytest.fixture
def kdv():
    """u_t = u u_1 + u_3."""
    return load_equation("kdv")


@pytest.fixture
def linear3():
    """u_t = u_3."""
    return load_equation("linear3")


@pytest.fixture
def burgers():
    """u_t = u u_1 + u_2."""
    return load_equation("burgers")


@pytest.fixture
def toy2():
    """u_t = v_1, v_t = u_1."""
    return load_equation("toy2")


@pytest.fixture
def kdv_A1(kdv):
    """First KdV Hamiltonian operator D."""
    return parse_op("D", 1, kdv)


@pytest.fixture
def kdv_A2(kdv):
    """Second KdV Hamiltonian operator D^3 + 2/3 u D + 1/3 u_1."""
    return parse_op("D^3 + 2/3*u1_0*D + 1/3*u1_1", 1, kdv)


@pytest.fixture
def expr():
    """Parse a polynomial in any covering."""

    def build(source, mode=CoveringMode.WHITNEY):
        return parse_expr(source, mode)

    return build


@pytest.fixture
def vec():
    """Parse a vector function with a given role."""

    def build(source, role=Role.SECTION, mode=CoveringMode.WHITNEY):
        return parse_vec(source, mode, role=role)

    return build


@pytest.fixture
def op():
    """Parse an operator of a given size."""

    def build(source, m=1):
        return parse_op(source, m)

    return build


@pytest.fixture(params=["kdv", "linear3", "burgers", "toy2"])
def any_equation(request):
    """Parametrized fixture over the bundled corpus."""
    return load_equation(request.param)
