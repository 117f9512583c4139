"""
Tests for shadows and their lifts to the odd coverings.

Validates:
- Operators and shadows convert into each other
- Hamiltonian operators give l*-shadows, recursion operators give l-shadows
- The shadow equation matches the operator invariance condition
- Lifts carry the expected completions and are symmetries where exact
- Misuse raises NotAShadow or NotLinear
"""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from varpn.cdop import CDOp, ell_E_apply
from varpn.coverings import (
    Side,
    apply_field,
    from_shadow,
    lift_l,
    lift_lstar,
    lift_whitney,
    shadow_of,
    symmetry_residual,
    to_shadow,
)
from varpn.eqctx import CoveringMode
from varpn.errors import NotAShadow, NotLinear
from varpn.gpoly import Kind, Role, VecFun, p, q, u
from varpn.parsing import load_equation
from varpn.sampling import random_operator, rng_for
from varpn.verify import InvarianceKind, invariance_residual

KDV = load_equation("kdv")
LSTAR, L, WHITNEY = CoveringMode.LSTAR, CoveringMode.L, CoveringMode.WHITNEY

seeds = st.integers(min_value=0, max_value=10_000)


class TestShadowConversion:
    """Test to_shadow, from_shadow and shadow_of."""

    def test_second_kdv_operator(self, kdv_A2):
        s = to_shadow(kdv_A2, LSTAR)
        expected = p(1, 3) + (u(1) * p(1, 1)).scale(Fraction(2, 3)) + (u(1, 1) * p(1)).scale(Fraction(1, 3))
        assert s.value[0] == expected, f"Unexpected shadow {s}"
        assert s.value.role is Role.SHADOW_LSTAR
        assert s.covering is LSTAR

    def test_l_shadow_uses_q(self):
        s = to_shadow(CDOp.diagonal(1, 2), L)
        assert s.value.entries == (q(1, 2),)
        assert s.covering is L

    def test_matrix_operator(self):
        A = CDOp.from_entries([[{}, {1: 1}], [{1: 1}, {}]])
        assert to_shadow(A, LSTAR).value.entries == (p(2, 1), p(1, 1))

    @settings(max_examples=20, deadline=None)
    @given(seed=seeds, covering=st.sampled_from([LSTAR, L]))
    def test_operator_recovered(self, seed, covering):
        A = random_operator(rng_for(seed), 2, order=3, jet_order=2)
        s = to_shadow(A, covering)
        assert from_shadow(s) == A
        assert from_shadow(shadow_of(s.value)) == A, "Recovery must not depend on the cached origin"

    def test_plain_mode_rejected(self):
        with pytest.raises(ValueError):
            to_shadow(CDOp.identity(1), CoveringMode.PLAIN)

    def test_shadow_of_rejects_mixed_families(self):
        with pytest.raises(NotLinear):
            shadow_of(VecFun.of(p(1) + q(1)))

    def test_shadow_of_rejects_nonlinear(self):
        with pytest.raises(NotLinear):
            shadow_of(VecFun.of(p(1) * p(1, 1)))

    def test_shadow_of_infers_covering(self):
        assert shadow_of(VecFun.of(u(1) * q(1, 1))).covering is L
        assert shadow_of(VecFun.of(p(1, 1))).covering is LSTAR


class TestShadowEquation:
    """Test that the shadow equation encodes operator invariance."""

    def test_kdv_hamiltonian_shadows(self, kdv, kdv_A1, kdv_A2):
        for A in (kdv_A1, kdv_A2):
            residual = ell_E_apply(kdv, LSTAR, to_shadow(A, LSTAR).value)
            assert residual.is_zero, f"{A} should give an l*-shadow, residual {residual}"

    def test_shadow_equation_of_identity(self, kdv):
        """The identity is a recursion operator of every equation."""
        assert ell_E_apply(kdv, L, to_shadow(CDOp.identity(1), L).value).is_zero

    def test_shadow_operator_on_kdv(self, kdv):
        """l~_E(p_0) = -u_1 p_0 on KdV."""
        value = ell_E_apply(kdv, LSTAR, VecFun.of(p(1)))
        assert value[0] == -(u(1, 1) * p(1)), f"Unexpected residual {value}"

    @settings(max_examples=15, deadline=None)
    @given(seed=seeds, kind=st.sampled_from(list(InvarianceKind)))
    def test_matches_operator_invariance(self, seed, kind):
        A = random_operator(rng_for(seed), order=2, jet_order=1)
        covering = LSTAR if kind is InvarianceKind.HAMILTONIAN else L
        residual = invariance_residual(KDV, A, kind)
        shadow_residual = ell_E_apply(KDV, covering, to_shadow(A, covering).value)
        assert to_shadow(residual, covering).value.entries == shadow_residual.entries


class TestLifts:
    """Test completions of shadows to symmetries of the coverings."""

    def test_lstar_lift_of_second_kdv_operator(self, kdv, kdv_A2):
        lifted = lift_lstar(kdv, to_shadow(kdv_A2, LSTAR))
        alpha = lifted.component(Kind.P)
        assert alpha[0] == (p(1) * p(1, 1)).scale(Fraction(1, 3)), f"Unexpected completion {alpha}"
        residual = symmetry_residual(kdv, LSTAR, lifted)
        assert residual.is_zero, f"Lift should be a symmetry, residual {residual}"

    def test_lstar_lift_of_constant_operator(self, kdv, kdv_A1):
        lifted = lift_lstar(kdv, to_shadow(kdv_A1, LSTAR))
        assert lifted.component(Kind.P).is_zero
        assert symmetry_residual(kdv, LSTAR, lifted).is_zero

    def test_field_acts_as_derivation(self, kdv, kdv_A2):
        lifted = lift_lstar(kdv, to_shadow(kdv_A2, LSTAR))
        H = lifted.base[0]
        assert apply_field(lifted, u(1)) == H
        assert apply_field(lifted, u(1, 1)) == kdv.dx(H)
        assert apply_field(lifted, u(1) * u(1, 1)) == u(1, 1) * H + u(1) * kdv.dx(H)
        assert apply_field(lifted, p(1)) == lifted.component(Kind.P)[0]

    def test_l_lift(self, linear3):
        lifted = lift_l(linear3, to_shadow(CDOp.diagonal(1, 2), L))
        assert lifted.component(Kind.Q).is_zero
        assert lifted.component(Kind.U).entries == (q(1, 2),)
        assert symmetry_residual(linear3, L, lifted).is_zero

    def test_non_shadow_rejected(self, kdv):
        with pytest.raises(NotAShadow):
            lift_lstar(kdv, to_shadow(CDOp.diagonal(1, 3), LSTAR))

    def test_verification_can_be_skipped(self, kdv):
        lifted = lift_lstar(kdv, to_shadow(CDOp.diagonal(1, 3), LSTAR), verify=False)
        assert not symmetry_residual(kdv, LSTAR, lifted).is_zero

    def test_whitney_from_lstar(self, kdv, kdv_A2):
        lifted = lift_whitney(kdv, to_shadow(kdv_A2, LSTAR), Side.FROM_LSTAR)
        assert set(lifted.completions) == {Kind.P, Kind.Q}
        assert lifted.component(Kind.P)[0] == (p(1) * p(1, 1)).scale(Fraction(1, 3))
        expected = (p(1, 1) * q(1)).scale(Fraction(2, 3)) + (p(1) * q(1, 1)).scale(Fraction(1, 3))
        assert lifted.component(Kind.Q)[0] == expected, f"Unexpected q-completion {lifted.component(Kind.Q)}"
        assert lifted.covering is WHITNEY

    def test_whitney_from_l(self, kdv):
        lifted = lift_whitney(kdv, to_shadow(CDOp.identity(1), L), Side.FROM_L)
        assert lifted.component(Kind.Q).is_zero
        assert lifted.component(Kind.P).is_zero

    def test_whitney_side_must_match(self, kdv, kdv_A2):
        with pytest.raises(NotLinear):
            lift_whitney(kdv, to_shadow(kdv_A2, LSTAR), Side.FROM_L)
        with pytest.raises(NotLinear):
            lift_whitney(kdv, to_shadow(CDOp.identity(1), L), Side.FROM_LSTAR)
