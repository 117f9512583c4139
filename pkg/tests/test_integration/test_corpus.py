"""
Corpus-wide checks over the bundled equations.

Runs the basic facts every evolution equation shares:
- x-translation u_x is a symmetry of autonomous equations
- The equation's own right-hand side is a symmetry
- The identity is a Nijenhuis recursion operator
- Derived operators (linearization, adjoint) are consistent
"""

import json

from varpn.cdop import CDOp, adjoint, linearize
from varpn.eqctx import CoveringMode
from varpn.gpoly import Kind, VecFun
from varpn.parsing import EquationFile
from varpn.verify import is_nijenhuis_recursion, is_symmetry


class TestCorpus:
    """Test facts shared by every bundled equation."""

    def test_files_are_well_formed(self, equations_dir):
        for path in sorted(equations_dir.glob("*.json")):
            data = json.loads(path.read_text())
            eq = EquationFile.from_json(data, str(path))
            assert eq.name == path.stem, f"{path.name} should be named {path.stem}"
            assert "description" in eq.metadata, f"{path.name} lacks a description"

    def test_translation_symmetry(self, any_equation):
        ux = VecFun.generators(Kind.U, any_equation.m, 1)
        assert is_symmetry(any_equation, ux).holds, f"u_x should be a symmetry of {any_equation}"

    def test_flow_is_symmetry(self, any_equation):
        assert is_symmetry(any_equation, any_equation.f).holds

    def test_identity_recursion(self, any_equation):
        assert is_nijenhuis_recursion(any_equation, CDOp.identity(any_equation.m)).holds

    def test_linearization_consistent(self, any_equation):
        ell = linearize(any_equation, CoveringMode.PLAIN, any_equation.f)
        assert ell == any_equation.ell_f
        assert adjoint(ell) == any_equation.ell_f_star
        assert ell.order == any_equation.order
