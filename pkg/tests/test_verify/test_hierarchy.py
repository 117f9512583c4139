"""
Tests for hierarchies of Hamiltonian operators.

Validates:
- R^i A operators and their pairwise compatibility matrix
- Auxiliary A(C(R^i A, R^j)) verdicts
- Precondition failure outside Poisson-Nijenhuis pairs
- Thread count from settings does not change results
"""

import pytest

from varpn.cdop import CDOp
from varpn.config import Settings
from varpn.errors import PreconditionFailed
from varpn.verify import hierarchy


class TestHierarchy:
    """Test hierarchy construction on u_t = u_3."""

    def test_operators(self, linear3):
        h = hierarchy(linear3, CDOp.diagonal(1, 1), CDOp.diagonal(1, 2), 2)
        assert h.operators == (CDOp.diagonal(1, 1), CDOp.diagonal(1, 3), CDOp.diagonal(1, 5))

    def test_matrix_all_hold(self, linear3):
        h = hierarchy(linear3, CDOp.diagonal(1, 1), CDOp.diagonal(1, 2), 2)
        assert len(h.matrix) == 3 and all(len(row) == 3 for row in h.matrix)
        assert h.holds, "Constant-coefficient hierarchy should be compatible"

    def test_matrix_is_symmetric(self, linear3):
        h = hierarchy(linear3, CDOp.diagonal(1, 1), CDOp.diagonal(1, 2), 2)
        for i in range(3):
            for j in range(3):
                assert h.matrix[i][j] is h.matrix[j][i]

    def test_auxiliary(self, linear3):
        h = hierarchy(linear3, CDOp.diagonal(1, 1), CDOp.diagonal(1, 2), 2, check_auxiliary=True)
        assert set(h.auxiliary) == {(0, 1), (0, 2), (1, 1)}
        assert all(v.holds for v in h.auxiliary.values())

    def test_length_zero_skips_precondition(self, linear3):
        h = hierarchy(linear3, CDOp.diagonal(1, 1), CDOp.diagonal(1, 1), 0)
        assert h.operators == (CDOp.diagonal(1, 1),)
        assert h.holds

    def test_precondition(self, linear3):
        with pytest.raises(PreconditionFailed, match="R.A=A.R\\*"):
            hierarchy(linear3, CDOp.diagonal(1, 1), CDOp.diagonal(1, 1), 1)

    def test_negative_length(self, linear3):
        with pytest.raises(ValueError):
            hierarchy(linear3, CDOp.diagonal(1, 1), CDOp.diagonal(1, 2), -1)

    def test_thread_count(self, linear3):
        A, R = CDOp.diagonal(1, 1), CDOp.diagonal(1, 2)
        serial = hierarchy(linear3, A, R, 2, settings=Settings(threads=1))
        parallel = hierarchy(linear3, A, R, 2, settings=Settings(threads=4))
        assert [[v.holds for v in row] for row in serial.matrix] == \
            [[v.holds for v in row] for row in parallel.matrix]

    def test_kdv_with_identity(self, kdv, kdv_A1):
        h = hierarchy(kdv, kdv_A1, CDOp.identity(1), 1)
        assert h.operators == (kdv_A1, kdv_A1)
        assert h.holds
