"""
Tests for operator brackets and the variational calculus around them.

Validates:
- Normalization of the Schouten bracket on the calibration case
- Known Hamiltonian operators have vanishing brackets on generic arguments
- Two routes to the Frolicher-Nijenhuis bracket agree
- Adjoints of l_{A,psi} agree up to total derivatives
- Euler operator, divergences and generic arguments
- Green's identity, the Jacobi identity and Euler on divergences over wide sweeps
"""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from varpn.brackets import (
    Density,
    c_compat,
    c_star,
    ell_op,
    ell_op_operator,
    ell_star,
    euler_operator,
    fn_bracket,
    fn_bracket_jacobi,
    generic_argument,
    generic_degree,
    is_divergence,
    jacobi,
    lie_on_sections,
    pairing,
    schouten,
)
from varpn.cdop import CDOp, apply
from varpn.eqctx import CoveringMode
from varpn.errors import ShapeMismatch
from varpn.gpoly import DPoly, Role, VecFun, u, x
from varpn.parsing import load_equation, parse_op, parse_vec
from varpn.sampling import random_dpoly, random_operator, random_section, rng_for

KDV = load_equation("kdv")
PLAIN = CoveringMode.PLAIN

seeds = st.integers(min_value=0, max_value=10_000)


def generic_pair(ctx, *ops, role=Role.COVECTOR):
    degree = generic_degree(ctx, *ops)
    return generic_argument(ctx.m, "a", degree, role), generic_argument(ctx.m, "b", degree, role)


class TestSchouten:
    """Test the variational Schouten bracket."""

    def test_calibration_case(self, calibration):
        """The normalization fixed by the golden file."""
        ctx = load_equation(calibration["equation"])
        A = parse_op(calibration["A"], ctx.m, ctx)
        B = parse_op(calibration["B"], ctx.m, ctx)
        psi1 = parse_vec(calibration["psi1"], ctx=ctx, role=Role.COVECTOR)
        psi2 = parse_vec(calibration["psi2"], ctx=ctx, role=Role.COVECTOR)
        expected = parse_vec(calibration["schouten"], ctx=ctx)
        value = schouten(ctx, PLAIN, A, B, psi1, psi2)
        assert value.entries == expected.entries, \
            f"[[A,B]](psi1,psi2) should be {expected}, got {value}"

    def test_constant_operators_commute(self, kdv):
        D, D3 = CDOp.diagonal(1, 1), CDOp.diagonal(1, 3)
        psi1, psi2 = generic_pair(kdv, D, D3)
        assert schouten(kdv, PLAIN, D, D3, psi1, psi2).is_zero

    @pytest.mark.slow
    def test_second_kdv_operator_is_poisson(self, kdv, kdv_A2):
        psi1, psi2 = generic_pair(kdv, kdv_A2, kdv_A2)
        value = schouten(kdv, PLAIN, kdv_A2, kdv_A2, psi1, psi2)
        assert value.is_zero, f"[[A2,A2]] should vanish, got {value}"

    def test_kdv_operators_are_compatible(self, kdv, kdv_A1, kdv_A2):
        psi1, psi2 = generic_pair(kdv, kdv_A1, kdv_A2)
        assert schouten(kdv, PLAIN, kdv_A1, kdv_A2, psi1, psi2).is_zero

    def test_incompatible_pair_detected(self, calibration):
        """Generic arguments specialize to the calibration arguments, so the bracket stays nonzero."""
        ctx = load_equation(calibration["equation"])
        A = parse_op(calibration["A"], ctx.m, ctx)
        B = parse_op(calibration["B"], ctx.m, ctx)
        psi1, psi2 = generic_pair(ctx, A, B)
        assert not schouten(ctx, PLAIN, A, B, psi1, psi2).is_zero

    def test_symmetric_in_operators(self, kdv, kdv_A1, kdv_A2):
        psi1 = VecFun.of(u(1) + x(), role=Role.COVECTOR)
        psi2 = VecFun.of(x() ** 2, role=Role.COVECTOR)
        assert schouten(kdv, PLAIN, kdv_A2, kdv_A1, psi1, psi2) == \
            schouten(kdv, PLAIN, kdv_A1, kdv_A2, psi1, psi2)

    def test_shape_checked(self, kdv):
        with pytest.raises(ShapeMismatch):
            psi = VecFun.of(1, role=Role.COVECTOR)
            schouten(kdv, PLAIN, CDOp.identity(2), CDOp.identity(2), psi, psi)


class TestFrolicherNijenhuis:
    """Test the Frolicher-Nijenhuis bracket of recursion operators."""

    def test_constant_operators(self, kdv):
        R = CDOp.diagonal(1, 2)
        phi1, phi2 = generic_pair(kdv, R, R, role=Role.SECTION)
        assert fn_bracket(kdv, PLAIN, R, R, phi1, phi2).is_zero

    @settings(max_examples=10, deadline=None)
    @given(seed=seeds)
    def test_two_routes_agree(self, seed):
        rng = rng_for(seed)
        R = random_operator(rng, order=1, jet_order=1)
        S = random_operator(rng, order=1, jet_order=1)
        phi1 = random_section(rng, jet_order=1, role=Role.SECTION)
        phi2 = random_section(rng, jet_order=1, role=Role.SECTION)
        assert fn_bracket(KDV, PLAIN, R, S, phi1, phi2) == fn_bracket_jacobi(KDV, R, S, phi1, phi2)

    def test_two_routes_agree_on_two_components(self, toy2):
        rng = rng_for(7)
        R = random_operator(rng, 2, order=1, jet_order=1)
        phi1 = random_section(rng, 2, jet_order=1, role=Role.SECTION)
        phi2 = random_section(rng, 2, jet_order=1, role=Role.SECTION)
        assert fn_bracket(toy2, PLAIN, R, R, phi1, phi2) == fn_bracket_jacobi(toy2, R, R, phi1, phi2)


class TestCompatibility:
    """Test C(A, R) and C*(A, R)."""

    def test_constant_pair(self, kdv):
        A, R = CDOp.diagonal(1, 1), CDOp.diagonal(1, 2)
        psi1, psi2 = generic_pair(kdv, A, R)
        assert c_compat(kdv, PLAIN, A, R, psi1, psi2).is_zero
        phi = generic_argument(1, "c", 4, Role.SECTION)
        assert c_star(kdv, PLAIN, A, R, psi1, phi).is_zero


class TestLinearizedOperators:
    """Test l_{A,psi} and its adjoint."""

    def test_explicit_operator_matches_evaluation(self, kdv, kdv_A2):
        psi = VecFun.of(x() ** 2 + u(1), role=Role.COVECTOR)
        phi = VecFun.of(u(1, 1) * x())
        explicit = apply(kdv, PLAIN, ell_op_operator(kdv, PLAIN, kdv_A2, psi), phi)
        assert explicit == ell_op(kdv, PLAIN, kdv_A2, psi, phi).with_role(explicit.role)

    @settings(max_examples=10, deadline=None)
    @given(seed=seeds)
    def test_adjoint_up_to_divergence(self, seed):
        rng = rng_for(seed)
        A = random_operator(rng, order=2, jet_order=1)
        psi = random_section(rng, jet_order=1)
        phi = random_section(rng, jet_order=1, role=Role.SECTION)
        chi = random_section(rng, jet_order=1)
        lhs = pairing(chi, ell_op(KDV, PLAIN, A, psi, phi))
        rhs = pairing(ell_star(KDV, PLAIN, A, psi, chi), phi)
        assert is_divergence(KDV, lhs - rhs)


class TestJacobiBracket:
    def test_antisymmetric(self, kdv):
        phi, psi = VecFun.of(u(1) ** 2), VecFun.of(u(1, 2) + x())
        assert jacobi(kdv, phi, psi) == -jacobi(kdv, psi, phi)

    def test_translation_commutes_with_flow(self, kdv):
        assert jacobi(kdv, VecFun.of(u(1, 1)), kdv.f).is_zero

    def test_lie_derivative_on_sections(self, kdv):
        phi, psi = VecFun.of(u(1) * u(1, 1)), VecFun.of(u(1, 3))
        assert lie_on_sections(kdv, phi, psi) == jacobi(kdv, phi, psi).with_role(psi.role)

    @settings(max_examples=10, deadline=None)
    @given(seed=seeds)
    def test_jacobi_identity(self, seed):
        rng = rng_for(seed)
        a, b, c = (random_section(rng, x_degree=1, jet_order=2, role=Role.SECTION) for _ in range(3))
        cyclic = (
            jacobi(KDV, a, jacobi(KDV, b, c))
            + jacobi(KDV, b, jacobi(KDV, c, a))
            + jacobi(KDV, c, jacobi(KDV, a, b))
        )
        assert cyclic.is_zero, f"Jacobi identity fails for {a}, {b}, {c}"


class TestEulerOperator:
    """Test variational derivatives and divergences."""

    @pytest.mark.parametrize("density,expected", [
        ("u1_0", "1"),
        ("1/2*u1_0^2", "u1_0"),
        ("u1_0*u1_2", "2*u1_2"),
        ("u1_1^2", "-2*u1_2"),
        ("u1_1", "0"),
    ])
    def test_known_densities(self, kdv, density, expected):
        omega = Density(parse_vec(density, ctx=kdv)[0])
        value = euler_operator(kdv, omega)
        assert value[0] == parse_vec(expected, ctx=kdv)[0], f"E({density}) should be {expected}, got {value}"

    def test_total_derivatives_are_divergences(self, kdv):
        assert is_divergence(kdv, Density(kdv.dx(u(1) * u(1, 2) + x() * u(1))))
        assert not is_divergence(kdv, Density(u(1) ** 2))

    @settings(max_examples=20, deadline=None)
    @given(seed=seeds)
    def test_euler_kills_total_derivatives(self, seed):
        a = random_dpoly(rng_for(seed), jet_order=2, degree=2, with_x=True)
        assert euler_operator(KDV, Density(KDV.dx(a))).is_zero, f"E(D_x({a})) should vanish"

    def test_pairing_shapes(self):
        with pytest.raises(ShapeMismatch):
            pairing(VecFun.of(u(1)), VecFun.of(u(1), u(2)))


class TestGenericArguments:
    def test_structure(self):
        value = generic_argument(2, "a", 2)
        assert len(value) == 2
        assert len(value[0].params()) == 3, "Degree 2 needs three parameters per entry"
        assert value[0].params().isdisjoint(value[1].params())
        assert value.role is Role.COVECTOR

    def test_taylor_coefficients(self):
        value = generic_argument(1, "a", 2)
        top = [c for mono, c in value[0].terms.items() if mono.degree == 3]
        assert top == [Fraction(1, 2)], "x^2 term should carry 1/2!"

    def test_degree(self, kdv, kdv_A2):
        assert generic_degree(kdv, kdv_A2, kdv_A2) == 11
        assert generic_degree(kdv, kdv_A2, slack=0) == 6
        assert generic_degree(kdv, CDOp.zero(1)) == 5


@pytest.mark.slow
class TestBracketSweeps:
    """Wide randomized sweeps of the bracket identities."""

    @settings(max_examples=100, deadline=None)
    @given(seed=seeds, order=st.integers(0, 2), jet_order=st.integers(0, 2))
    def test_adjoint_up_to_divergence(self, seed, order, jet_order):
        rng = rng_for(seed)
        A = random_operator(rng, order=order, jet_order=jet_order)
        psi = random_section(rng, jet_order=jet_order)
        phi = random_section(rng, jet_order=jet_order, role=Role.SECTION)
        chi = random_section(rng, jet_order=jet_order)
        lhs = pairing(chi, ell_op(KDV, PLAIN, A, psi, phi))
        rhs = pairing(ell_star(KDV, PLAIN, A, psi, chi), phi)
        assert is_divergence(KDV, lhs - rhs), f"Green's identity fails for A = {A}"

    @settings(max_examples=100, deadline=None)
    @given(seed=seeds, jet_order=st.integers(1, 3))
    def test_jacobi_identity(self, seed, jet_order):
        rng = rng_for(seed)
        a, b, c = (random_section(rng, x_degree=1, jet_order=jet_order, role=Role.SECTION) for _ in range(3))
        assert jacobi(KDV, a, b) == -jacobi(KDV, b, a)
        cyclic = (
            jacobi(KDV, a, jacobi(KDV, b, c))
            + jacobi(KDV, b, jacobi(KDV, c, a))
            + jacobi(KDV, c, jacobi(KDV, a, b))
        )
        assert cyclic.is_zero, f"Jacobi identity fails for {a}, {b}, {c}"

    @settings(max_examples=200, deadline=None)
    @given(seed=seeds, jet_order=st.integers(0, 3), degree=st.integers(1, 3))
    def test_euler_kills_total_derivatives(self, seed, jet_order, degree):
        a = random_dpoly(rng_for(seed), jet_order=jet_order, degree=degree, with_x=True)
        assert euler_operator(KDV, Density(KDV.dx(a))).is_zero, f"E(D_x({a})) should vanish"
