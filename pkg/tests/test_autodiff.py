"""Tape recording, adjoints and the finite-difference oracle."""
import numpy as np
import pytest
import scipy.sparse as sp

from autodiff import ParameterStore, Tape, analytic_grads, grad_check
from autodiff import ops
from errors import ArgumentError, ContractViolation, NumericError, StructuralError


def _vs_target(out, target):
    return ops.mse(out, out.tape.constant(target))


def _op_cases(rng):
    """(name, scalar function, inputs) for every vocabulary op."""
    r, c = (int(v) for v in rng.integers(2, 9, size=2))
    k = int(rng.integers(1, 9))
    idx = np.sort(rng.choice(r, size=max(1, r // 2), replace=False))
    smat = sp.random(r, r, density=0.5, random_state=int(rng.integers(1 << 30)), format="csr")
    t = {
        "rc": rng.standard_normal((r, c)),
        "ck": rng.standard_normal((c, k)),
        "rk": rng.standard_normal((r, k)),
        "row": rng.standard_normal((1, c)),
        "gain": rng.uniform(0.5, 1.5, size=(1, c)),
        "sub": rng.standard_normal((len(idx), c)),
    }
    lo = int(rng.integers(0, c - 1))
    return [
        ("matmul", lambda tp, v: _vs_target(v["a"] @ v["b"], t["rk"]),
         {"a": t["rc"], "b": t["ck"]}),
        ("add", lambda tp, v: _vs_target(v["a"] + v["b"], t["rc"] * 0.5),
         {"a": t["rc"], "b": t["row"]}),
        ("scale", lambda tp, v: _vs_target(ops.scale(v["a"], -1.7), t["rc"] * 0.3),
         {"a": t["rc"]}),
        ("concat_cols", lambda tp, v: _vs_target(ops.concat_cols(v["a"], v["b"]),
                                                 np.zeros((r, c + k))),
         {"a": t["rc"], "b": t["rk"]}),
        ("slice_cols", lambda tp, v: _vs_target(ops.slice_cols(v["a"], lo, c),
                                                np.ones((r, c - lo))),
         {"a": t["rc"]}),
        ("relu", lambda tp, v: _vs_target(ops.relu(v["a"]), t["rc"] * 0.1),
         {"a": t["rc"]}),
        ("silu", lambda tp, v: _vs_target(ops.silu(v["a"]), t["rc"] * 0.1),
         {"a": t["rc"]}),
        ("layer_norm", lambda tp, v: _vs_target(ops.layer_norm(v["x"], v["g"], v["b"]),
                                                t["rc"] * 0.2),
         {"x": t["rc"], "g": t["gain"], "b": t["row"]}),
        ("mse", lambda tp, v: ops.mse(v["a"], v["b"]),
         {"a": t["rc"], "b": t["rc"][::-1].copy()}),
        ("row_select", lambda tp, v: _vs_target(ops.row_select(v["a"], idx, r),
                                                t["sub"] * 0.5),
         {"a": t["rc"]}),
        ("row_select_T", lambda tp, v: _vs_target(ops.row_select(v["a"], idx, r, transpose=True),
                                                  t["rc"]),
         {"a": t["sub"]}),
        ("sparse_matmul", lambda tp, v: _vs_target(ops.sparse_matmul(smat, v["a"]),
                                                   t["rc"]),
         {"a": t["rc"]}),
    ]


class TestRecord:
    def test_matmul_shape(self):
        tape = Tape()
        out = tape.leaf(np.ones((2, 3))) @ tape.leaf(np.ones((3, 4)))
        assert out.shape == (2, 4)
        assert len(tape) == 1

    def test_relu(self):
        tape = Tape()
        out = ops.relu(tape.leaf([[-1.0, 2.0]]))
        np.testing.assert_array_equal(out.numpy(), [[0.0, 2.0]])

    def test_concat(self):
        tape = Tape()
        out = ops.concat_cols(tape.leaf(np.ones((2, 3))), tape.leaf(np.zeros((2, 5))))
        assert out.shape == (2, 8)

    def test_shape_mismatch(self):
        tape = Tape()
        with pytest.raises(StructuralError):
            tape.leaf(np.ones((2, 3))) @ tape.leaf(np.ones((2, 3)))
        with pytest.raises(StructuralError):
            tape.leaf(np.ones((2, 3))) + tape.leaf(np.ones((2, 2)))

    def test_unknown_op(self):
        tape = Tape()
        with pytest.raises(ContractViolation):
            tape.record("softmax", tape.leaf(np.ones((1, 2))))

    def test_cross_tape_inputs(self):
        a, b = Tape(), Tape()
        with pytest.raises(ContractViolation):
            a.leaf(np.ones((1, 1))) + b.leaf(np.ones((1, 1)))

    def test_non_finite_leaf(self):
        with pytest.raises(NumericError):
            Tape().leaf([[np.inf]])

    def test_overflow_trips_numeric_error(self):
        tape = Tape()
        big = tape.leaf([[1e308]])
        with pytest.raises(NumericError):
            ops.scale(big, 10.0)

    def test_tensors_read_only(self):
        t = Tape().leaf(np.zeros((2, 2)))
        with pytest.raises(ValueError):
            t.data[0, 0] = 1.0


class TestBackward:
    def test_chain_rule(self):
        tape = Tape()
        w = tape.leaf([[1.0]], requires_grad=True, name="w")
        x = tape.constant([[2.0]])
        loss = ops.mse(x @ w, tape.constant([[0.0]]))
        assert tape.backward(loss)["w"][0, 0] == 8.0

    def test_square(self):
        tape = Tape()
        x = tape.leaf([[3.0]], requires_grad=True, name="x")
        loss = ops.mse(x, tape.constant([[0.0]]))
        assert tape.backward(loss)["x"][0, 0] == 6.0

    def test_unreached_parameter_is_zero(self):
        tape = Tape()
        x = tape.leaf([[3.0]], requires_grad=True, name="x")
        tape.leaf(np.ones((2, 2)), requires_grad=True, name="p")
        grads = tape.backward(ops.mse(x, tape.constant([[1.0]])))
        np.testing.assert_array_equal(grads["p"], np.zeros((2, 2)))

    def test_non_scalar_loss(self):
        tape = Tape()
        x = tape.leaf(np.ones((2, 1)), requires_grad=True, name="x")
        with pytest.raises(ContractViolation):
            tape.backward(ops.scale(x, 2.0))

    def test_fan_out_accumulates(self):
        tape = Tape()
        x = tape.leaf([[3.0]], requires_grad=True, name="x")
        loss = ops.mse(x + x, tape.constant([[0.0]]))
        assert tape.backward(loss)["x"][0, 0] == 24.0

    def test_watch_parameter_store(self, rng):
        store = ParameterStore({"b": rng.standard_normal((1, 3)), "a": rng.standard_normal((3, 3))})
        assert store.names() == ["a", "b"]
        tape = Tape()
        leaves = tape.watch(store)
        x = tape.constant(rng.standard_normal((4, 3)))
        loss = ops.mse(ops.linear(x, leaves["a"], leaves["b"]), tape.constant(np.zeros((4, 3))))
        grads = tape.backward(loss)
        assert set(grads) == {"a", "b"}
        assert grads["a"].shape == (3, 3)

    def test_deterministic(self, rng):
        case = _op_cases(rng)[7]
        first = analytic_grads(case[1], case[2])
        second = analytic_grads(case[1], case[2])
        for name in first:
            np.testing.assert_array_equal(first[name], second[name])

    def test_linearity(self, rng):
        x0 = rng.standard_normal((3, 4))
        t1, t2 = rng.standard_normal((3, 4)), rng.standard_normal((3, 4))

        def f(tape, v):
            return ops.mse(ops.silu(v["x"]), tape.constant(t1))

        def g(tape, v):
            return ops.mse(ops.layer_norm(v["x"], tape.constant(np.ones((1, 4))),
                                          tape.constant(np.zeros((1, 4)))), tape.constant(t2))

        def combo(tape, v):
            return ops.scale(f(tape, v), 2.5) + ops.scale(g(tape, v), -0.75)

        lhs = analytic_grads(combo, {"x": x0})["x"]
        rhs = 2.5 * analytic_grads(f, {"x": x0})["x"] - 0.75 * analytic_grads(g, {"x": x0})["x"]
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)


class TestGradCheck:
    def test_quadratic(self):
        err = grad_check(lambda tape, v: ops.mse(v["x"], tape.constant([[0.0]])), {"x": [[3.0]]})
        assert err < 1e-8

    def test_constant_function(self):
        err = grad_check(lambda tape, v: tape.constant([[4.0]]) + ops.scale(v["x"], 0.0),
                         {"x": [[1.0]]})
        assert err == 0.0

    def test_layer_norm_mse(self, rng):
        x = rng.standard_normal((4, 8))
        target = rng.standard_normal((4, 8))

        def f(tape, v):
            out = ops.layer_norm(v["x"], tape.constant(np.ones((1, 8))), tape.constant(np.zeros((1, 8))))
            return ops.mse(out, tape.constant(target))

        assert grad_check(f, {"x": x}) < 1e-5

    @pytest.mark.parametrize("step", [1e-9, 1e-3])
    def test_step_bounds(self, step):
        with pytest.raises(ArgumentError):
            grad_check(lambda tape, v: v["x"], {"x": [[1.0]]}, step=step)

    @pytest.mark.parametrize("seed", range(10))
    def test_every_op(self, seed):
        rng = np.random.default_rng(seed)
        for name, f, inputs in _op_cases(rng):
            assert grad_check(f, inputs) < 1e-5, name
