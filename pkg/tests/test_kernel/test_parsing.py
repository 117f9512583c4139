"""
Tests for the expression front end and equation files.

Validates:
- Polynomial, vector and operator expressions parse with standard precedence
- Syntax errors report a position and what was expected
- Covering modes and equation contexts restrict the admissible generators
- Equation files are validated and the bundled corpus loads
"""

import json
from fractions import Fraction

import pytest

from varpn.cdop import CDOp
from varpn.eqctx import CoveringMode
from varpn.errors import ExprSyntaxError, IllegalGenerator, VarPNError
from varpn.gpoly import DPoly, Role, p, param, u, x
from varpn.parsing import (
    EquationFile,
    bundled_equations,
    load_equation,
    parse_expr,
    parse_op,
    parse_vec,
    print_op,
    tokenize,
)


class TestExpressions:
    """Test polynomial expressions."""

    def test_kdv_rhs(self):
        assert parse_expr("u1_0*u1_1 + u1_3") == u(1) * u(1, 1) + u(1, 3)

    def test_precedence(self):
        assert parse_expr("2*u1_0^2 - u1_1") == u(1) ** 2 * 2 - u(1, 1)
        assert parse_expr("-u1_0^2") == -(u(1) ** 2), "Unary minus binds looser than ^"
        assert parse_expr("(u1_0 + 1)^2") == u(1) ** 2 + u(1) * 2 + 1

    def test_rational_division(self):
        assert parse_expr("u1_0/2") == u(1).scale(Fraction(1, 2))
        assert parse_expr("2/3*u1_0") == u(1).scale(Fraction(2, 3))

    def test_division_by_polynomial_rejected(self):
        with pytest.raises(ExprSyntaxError):
            parse_expr("u1_0/u1_1")
        with pytest.raises(ExprSyntaxError):
            parse_expr("1/0")

    def test_odd_and_params(self):
        value = parse_expr("{c0}*p1_1 + x", CoveringMode.LSTAR)
        assert value == param("c0") * p(1, 1) + x()

    def test_odd_order_sign(self):
        assert parse_expr("p1_1*p1_0", CoveringMode.LSTAR) == -parse_expr("p1_0*p1_1", CoveringMode.LSTAR)

    def test_tokens(self):
        kinds = [t.kind for t in tokenize("u1_2 + {a} * x^3")]
        assert kinds == ["jet", "op", "param", "op", "name", "op", "int", "end"]


class TestSyntaxErrors:
    """Test error positions and expectations."""

    def test_dangling_operator(self):
        with pytest.raises(ExprSyntaxError) as exc:
            parse_expr("u1_0 + * u1_1")
        assert exc.value.position == 7
        assert exc.value.expected is not None

    def test_bad_character(self):
        with pytest.raises(ExprSyntaxError) as exc:
            parse_expr("u1_0 $ 2")
        assert exc.value.position == 5

    def test_trailing_input(self):
        with pytest.raises(ExprSyntaxError, match="end of input"):
            parse_expr("u1_0 u1_1")

    def test_zero_component(self):
        with pytest.raises(ExprSyntaxError):
            parse_expr("u0_1")

    def test_d_outside_operators(self):
        with pytest.raises(ExprSyntaxError):
            parse_expr("D")

    def test_is_value_error(self):
        """Callers treating bad input generically can catch ValueError."""
        with pytest.raises(ValueError):
            parse_expr("(")


class TestModes:
    """Test generator restrictions."""

    def test_plain_rejects_odd(self):
        with pytest.raises(IllegalGenerator):
            parse_expr("p1_0")

    def test_lstar_rejects_q(self):
        with pytest.raises(IllegalGenerator):
            parse_expr("q1_0", CoveringMode.LSTAR)

    def test_context_component_bound(self, kdv):
        with pytest.raises(IllegalGenerator):
            parse_expr("u2_0", ctx=kdv)

    def test_time_derivative_needs_context(self, kdv):
        with pytest.raises(IllegalGenerator):
            parse_expr("ut1_1")
        assert parse_expr("ut1_1", ctx=kdv) == kdv.u_t(1, 1)


class TestVectorsAndOperators:
    """Test vectors and operator expressions."""

    def test_vector(self, toy2):
        value = parse_vec("[u1_0, u2_1]", ctx=toy2, role=Role.COVECTOR)
        assert value.entries == (u(1), u(2, 1))
        assert value.role is Role.COVECTOR

    def test_vector_length_checked(self, toy2):
        with pytest.raises(IllegalGenerator):
            parse_vec("u1_0", ctx=toy2)

    def test_operator_normal_form(self):
        assert parse_op("D*u1_0") == CDOp.from_entries([[{1: u(1), 0: u(1, 1)}]])
        assert parse_op("(D + 1)^2") == CDOp.from_entries([[{2: 1, 1: 2, 0: 1}]])

    def test_scalar_expression_is_diagonal(self):
        assert parse_op("D", 2) == CDOp.diagonal(2, 1)

    def test_matrix(self, toy2):
        A = parse_op("[[0, D], [D, x*D]]", 2, toy2)
        assert A.entry(0, 1) == {1: DPoly.constant(1)}
        assert A.entry(1, 1) == {1: x()}

    def test_ragged_matrix(self):
        with pytest.raises(ExprSyntaxError):
            parse_op("[[D, 0], [D]]", 2)

    def test_matrix_shape_checked(self, kdv):
        with pytest.raises(IllegalGenerator):
            parse_op("[[D, 0], [0, D]]", 1, kdv)

    def test_printing(self):
        assert print_op(parse_op("D^3 + 2/3*u1_0*D + 1/3*u1_1")) == "D^3 + 2/3*u1_0*D + 1/3*u1_1"


class TestEquationFiles:
    """Test the equation file format."""

    def test_bundled_corpus(self):
        assert {"kdv", "linear3", "burgers", "toy2"} <= set(bundled_equations())

    def test_loads_with_and_without_suffix(self):
        assert load_equation("kdv") == load_equation("kdv.json")

    def test_metadata_kept(self):
        eq = EquationFile.from_json({"name": "e", "components": 1, "f": "u1_2", "note": "heat"})
        assert eq.f == ("u1_2",)
        assert eq.metadata == {"note": "heat"}

    @pytest.mark.parametrize("data", [
        [],
        {"name": "e", "f": ["u1_1"]},
        {"name": "e", "components": 2, "f": ["u1_1"]},
    ])
    def test_invalid_files(self, data):
        with pytest.raises(VarPNError):
            EquationFile.from_json(data)

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(VarPNError, match="invalid JSON"):
            load_equation(path)

    def test_rhs_validated(self, tmp_path):
        path = tmp_path / "odd.json"
        path.write_text(json.dumps({"name": "odd", "components": 1, "f": ["p1_0"]}))
        with pytest.raises(IllegalGenerator):
            load_equation(path)
