"""Unit tests for the tensor core: ops, tape semantics and gradient checks."""

import numpy as np
import pytest

from varda.errors import ContractViolation, DomainError, TapeError
from varda.tensor import (
    Tensor,
    backward,
    get_default_dtype,
    grad_check,
    no_grad,
    ops,
    set_default_dtype,
)


class TestElementwise:
    """Tests for elementwise ops and their broadcasting rules."""

    def test_add_values(self):
        """Test that add sums elementwise."""
        out = ops.add(Tensor([1.0, 2.0]), Tensor([3.0, 4.0]))
        np.testing.assert_array_equal(out.data, [4.0, 6.0])

    def test_log_inverts_exp(self):
        """Test that log(exp(x)) returns x."""
        out = ops.log(ops.exp(Tensor([0.5])))
        assert out.data[0] == pytest.approx(0.5, abs=1e-15)

    def test_square_backward_at_three(self):
        """Test that the gradient of x² at 3 is 6."""
        x = Tensor(3.0, requires_grad=True)
        backward(ops.square(x))
        assert x.grad == pytest.approx(6.0)

    def test_scalar_and_trailing_broadcast(self):
        """Test that scalars and trailing-suffix shapes broadcast."""
        a = Tensor(np.ones((2, 3)))
        np.testing.assert_array_equal((a * 2.0).data, np.full((2, 3), 2.0))
        np.testing.assert_array_equal((a + Tensor([1.0, 2.0, 3.0])).data[1], [2.0, 3.0, 4.0])

    def test_leading_axis_broadcast_rejected(self):
        """Test that non-suffix shapes raise a contract violation."""
        with pytest.raises(ContractViolation):
            ops.add(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 1))))

    def test_broadcast_gradient_is_summed(self):
        """Test that a broadcast operand receives the summed gradient."""
        a = Tensor(np.ones((4, 3)), requires_grad=True)
        b = Tensor([1.0, 2.0, 3.0], requires_grad=True)
        backward(ops.sum(a * b))
        np.testing.assert_array_equal(b.grad, [4.0, 4.0, 4.0])
        np.testing.assert_array_equal(a.grad, np.tile([1.0, 2.0, 3.0], (4, 1)))

    @pytest.mark.parametrize("values", [[0.0, 1.0], [-1.0, 2.0]])
    def test_log_domain_error(self, values):
        """Test that log of a nonpositive entry raises a domain error."""
        with pytest.raises(DomainError):
            ops.log(Tensor(values))

    def test_log_clamped_is_finite(self):
        """Test that a clamped log accepts zeros and stops their gradient."""
        x = Tensor([0.0, 2.0], requires_grad=True)
        out = ops.log(x, clamp_min=1e-6)
        assert np.all(np.isfinite(out.data))
        backward(ops.sum(out))
        assert x.grad[0] == 0.0
        assert x.grad[1] == pytest.approx(0.5)

    def test_div_by_zero_raises(self):
        """Test that division by an exact zero raises a domain error."""
        with pytest.raises(DomainError):
            ops.div(Tensor([1.0]), Tensor([0.0]))

    def test_sqrt_domain_error(self):
        """Test that sqrt of a negative entry raises a domain error."""
        with pytest.raises(DomainError):
            ops.sqrt(Tensor([-1.0]))

    def test_clamp_gradient_mask(self):
        """Test that clamp passes gradient only inside the interval."""
        x = Tensor([-2.0, 0.0, 2.0], requires_grad=True)
        backward(ops.sum(ops.clamp(x, -1.0, 1.0)))
        np.testing.assert_array_equal(x.grad, [0.0, 1.0, 0.0])

    def test_relu_values(self):
        """Test that relu zeroes negatives."""
        np.testing.assert_array_equal(ops.relu(Tensor([-1.0, 2.0])).data, [0.0, 2.0])


class TestMatmulAndReductions:
    """Tests for matmul, reductions and softmax."""

    def test_identity_matmul(self):
        """Test that the identity leaves a matrix unchanged."""
        m = Tensor([[1.0, 2.0], [3.0, 4.0]])
        np.testing.assert_array_equal((Tensor(np.eye(2)) @ m).data, m.data)

    def test_row_times_column(self):
        """Test a hand-computed inner product."""
        out = ops.matmul(Tensor([[1.0, 2.0]]), Tensor([[3.0], [4.0]]))
        np.testing.assert_array_equal(out.data, [[11.0]])

    def test_matmul_dimension_mismatch(self):
        """Test that mismatched inner dims raise a contract violation."""
        with pytest.raises(ContractViolation):
            ops.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))

    def test_matmul_gradient(self, rng):
        """Test matmul gradients against central differences."""
        b = rng.standard_normal((4, 2))
        err = grad_check(lambda a: ops.sum(ops.square(a @ Tensor(b))), rng.standard_normal((3, 4)))
        assert err < 1e-6
        a = rng.standard_normal((3, 4))
        err = grad_check(lambda w: ops.sum(ops.square(Tensor(a) @ w)), b)
        assert err < 1e-6

    def test_softmax_uniform(self):
        """Test that softmax of equal logits is uniform."""
        out = ops.softmax(Tensor([0.0, 0.0, 0.0]))
        np.testing.assert_allclose(out.data, [1 / 3, 1 / 3, 1 / 3], atol=1e-15)

    def test_softmax_normalised_and_stable(self, rng):
        """Test that softmax rows sum to one even for large logits."""
        logits = rng.standard_normal((5, 7)) * 300.0
        out = ops.softmax(Tensor(logits), axis=1).data
        assert np.all(out >= 0)
        np.testing.assert_allclose(out.sum(axis=1), 1.0, atol=1e-12)

    def test_log_softmax_matches_log_of_softmax(self, rng):
        """Test that log_softmax agrees with log(softmax)."""
        logits = Tensor(rng.standard_normal((3, 4)))
        expected = np.log(ops.softmax(logits, axis=1).data)
        np.testing.assert_allclose(ops.log_softmax(logits, axis=1).data, expected, atol=1e-12)

    def test_mean_backward_distributes(self):
        """Test that mean spreads 1/N to every entry."""
        x = Tensor(np.ones((2, 5)), requires_grad=True)
        backward(ops.mean(x))
        np.testing.assert_allclose(x.grad, np.full((2, 5), 0.1))

    def test_axis_out_of_range(self):
        """Test that a bad axis raises a contract violation."""
        with pytest.raises(ContractViolation):
            ops.sum(Tensor(np.ones((2, 2))), axis=2)

    @pytest.mark.parametrize(
        "fn",
        [
            lambda x: ops.sum(ops.exp(x)),
            lambda x: ops.sum(ops.log(ops.square(x) + 1.0)),
            lambda x: ops.sum(ops.sqrt(ops.square(x) + 1.0)),
            lambda x: ops.sum(ops.square(ops.softmax(x, axis=1))),
            lambda x: ops.sum(ops.log_softmax(x, axis=0) * 0.3),
            lambda x: ops.sum(ops.mean(x, axis=1) * ops.mean(x, axis=1)),
            lambda x: ops.sum(ops.transpose(x, (1, 0)) @ x),
            lambda x: ops.sum(ops.square(ops.concat([x, x * 2.0], axis=1))),
            lambda x: ops.sum(ops.square(ops.take(x, 1, axis=0))),
            lambda x: ops.sum(ops.square(ops.broadcast_to(ops.reshape(x, (1, 3, 4)), (2, 3, 4)))),
            lambda x: ops.sum(x / (ops.square(x) + 2.0)),
        ],
    )
    def test_op_gradients(self, fn, rng):
        """Test every differentiable op against central differences."""
        assert grad_check(fn, rng.standard_normal((3, 4)), atol=1e-9) < 1e-5


class TestTape:
    """Tests for backward, tape consumption and no_grad."""

    def test_sum_gives_ones(self):
        """Test that d sum(x) / dx is all ones."""
        x = Tensor(np.zeros((2, 3)), requires_grad=True)
        backward(ops.sum(x))
        np.testing.assert_array_equal(x.grad, np.ones((2, 3)))

    def test_product_rule(self, rng):
        """Test a composite x·y against finite differences."""
        y = rng.standard_normal(4)
        assert grad_check(lambda x: ops.sum(x * Tensor(y) * x), rng.standard_normal(4)) < 1e-6

    def test_second_backward_without_forward_fails(self):
        """Test that a consumed tape cannot be replayed."""
        x = Tensor([1.0, 2.0], requires_grad=True)
        loss = ops.sum(ops.square(x))
        backward(loss)
        with pytest.raises(TapeError):
            backward(loss)

    def test_non_scalar_loss_rejected(self):
        """Test that backward needs a scalar."""
        x = Tensor([1.0, 2.0], requires_grad=True)
        with pytest.raises(ContractViolation):
            backward(ops.square(x))

    def test_leaf_gradients_accumulate(self):
        """Test that two passes add into the same grad slot."""
        x = Tensor([1.0], requires_grad=True)
        backward(ops.sum(x * 2.0))
        backward(ops.sum(x * 3.0))
        np.testing.assert_array_equal(x.grad, [5.0])

    def test_no_grad_records_nothing(self):
        """Test that ops under no_grad are not differentiable."""
        x = Tensor([1.0], requires_grad=True)
        with no_grad():
            out = ops.square(x)
        assert out.is_leaf
        with pytest.raises(ContractViolation):
            backward(ops.sum(out))

    def test_forward_is_deterministic(self, rng):
        """Test that identical inputs give bit-identical outputs."""
        a = rng.standard_normal((6, 6))
        first = ops.sum(ops.softmax(Tensor(a), axis=0) @ Tensor(a)).item()
        second = ops.sum(ops.softmax(Tensor(a), axis=0) @ Tensor(a)).item()
        assert first == second

    def test_item_needs_one_element(self):
        """Test that item() rejects tensors with more than one value."""
        assert Tensor([[2.5]]).item() == 2.5
        with pytest.raises(ContractViolation):
            Tensor([1.0, 2.0]).item()

    def test_default_dtype_switch(self):
        """Test that new tensors follow the configured precision."""
        set_default_dtype("float32")
        assert Tensor([1.0]).dtype == np.float32
        set_default_dtype("float64")
        assert get_default_dtype() == np.float64
        with pytest.raises(ContractViolation):
            set_default_dtype("float16")


class TestGradCheck:
    """Tests for the central-difference gradient checker."""

    def test_half_squared_norm(self, rng):
        """Test ½‖x‖² at h=1e-5."""
        err = grad_check(lambda x: 0.5 * ops.sum(ops.square(x)), rng.standard_normal(5), h=1e-5)
        assert err < 1e-8

    def test_constant_function(self):
        """Test that a constant function reports zero error."""
        assert grad_check(lambda x: Tensor(2.0), np.ones(3)) == 0.0

    def test_detects_wrong_gradient(self):
        """Test that a wrong backward rule is reported."""
        from varda.tensor.core import result

        def bad_square(x):
            return result(x.data * x.data, (x,), lambda g: (g * x.data,))

        assert grad_check(lambda x: ops.sum(bad_square(x)), np.array([1.0, 2.0])) > 0.1
