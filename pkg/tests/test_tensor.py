import math
import random

import pytest

from payguard.errors import DimensionError, DomainError
from payguard.tensor import Tensor, ew_binary, matmul, reduce_mean, transpose

from conftest import assert_close, assert_tensors_close


def rand_tensor(rng, rows, cols, lo=-2.0, hi=2.0):
    return Tensor((rows, cols),
                  [rng.uniform(lo, hi) for _ in range(rows * cols)])


def matmul_oracle(a, b):
    """Independent triple-loop reference."""
    m, k = a.shape
    k2, n = b.shape
    assert k == k2
    out = [[0.0] * n for _ in range(m)]
    for i in range(m):
        for j in range(n):
            s = 0.0
            for p in range(k):
                s += a.data[i * k + p] * b.data[p * n + j]
            out[i][j] = s
    return out


class TestMatmul:
    def test_identity(self, kernel_backend):
        a = Tensor.of([[1, 2], [3, 4]])
        assert matmul(Tensor.eye(2), a).tolist() == [[1, 2], [3, 4]]

    def test_forced_2x2(self, kernel_backend):
        a = Tensor.of([[1, 2], [3, 4]])
        b = Tensor.of([[5, 6], [7, 8]])
        assert matmul(a, b).tolist() == [[19, 22], [43, 50]]

    def test_against_triple_loop(self, kernel_backend):
        rng = random.Random(101)
        a = rand_tensor(rng, 7, 5)
        b = rand_tensor(rng, 5, 3)
        want = matmul_oracle(a, b)
        got = matmul(a, b).tolist()
        for gr, wr in zip(got, want):
            for g, w in zip(gr, wr):
                assert_close(g, w, 1e-12)

    def test_shape_mismatch_names_both_shapes(self, kernel_backend):
        a = Tensor.zeros((2, 3))
        b = Tensor.zeros((4, 2))
        with pytest.raises(DimensionError) as exc:
            matmul(a, b)
        assert "(2, 3)" in str(exc.value) and "(4, 2)" in str(exc.value)

    def test_rank_checked(self, kernel_backend):
        with pytest.raises(DimensionError):
            matmul(Tensor.zeros((2,)), Tensor.zeros((2, 2)))

    def test_associativity(self, kernel_backend):
        rng = random.Random(7)
        for _ in range(5):
            a = rand_tensor(rng, 4, 6)
            b = rand_tensor(rng, 6, 3)
            c = rand_tensor(rng, 3, 5)
            left = matmul(matmul(a, b), c)
            right = matmul(a, matmul(b, c))
            for x, y in zip(left.data, right.data):
                assert abs(x - y) <= 1e-9 * max(abs(x), abs(y), 1.0)


class TestEwBinary:
    def test_add_zero_identity(self, kernel_backend):
        rng = random.Random(3)
        a = rand_tensor(rng, 3, 4)
        assert ew_binary("add", a, Tensor.zeros((3, 4))) == a

    def test_mul_forced(self, kernel_backend):
        got = ew_binary("mul", Tensor.of([2.0, 3.0]), Tensor.of([4.0, 5.0]))
        assert got.tolist() == [8.0, 15.0]

    def test_bias_broadcast_matches_loop(self, kernel_backend):
        rng = random.Random(11)
        a = rand_tensor(rng, 4, 3)
        bias = Tensor.of([rng.uniform(-1, 1) for _ in range(3)])
        got = ew_binary("add", a, bias)
        for i in range(4):
            for j in range(3):
                assert got.data[i * 3 + j] == a.data[i * 3 + j] + bias.data[j]

    @pytest.mark.parametrize("op", ["add", "sub", "mul"])
    def test_broadcast_all_ops(self, kernel_backend, op):
        rng = random.Random(13)
        a = rand_tensor(rng, 5, 4)
        b = Tensor.of([rng.uniform(-1, 1) for _ in range(4)])
        got = ew_binary(op, a, b)
        py_op = {"add": lambda x, y: x + y,
                 "sub": lambda x, y: x - y,
                 "mul": lambda x, y: x * y}[op]
        for i in range(5):
            for j in range(4):
                assert_close(got.data[i * 4 + j],
                             py_op(a.data[i * 4 + j], b.data[j]), 0.0)

    def test_commutativity(self, kernel_backend):
        rng = random.Random(17)
        a = rand_tensor(rng, 6, 2)
        b = rand_tensor(rng, 6, 2)
        assert ew_binary("add", a, b) == ew_binary("add", b, a)
        assert ew_binary("mul", a, b) == ew_binary("mul", b, a)

    def test_incompatible_shapes(self, kernel_backend):
        with pytest.raises(DimensionError):
            ew_binary("add", Tensor.zeros((2, 3)), Tensor.zeros((3, 2)))
        with pytest.raises(DimensionError):
            ew_binary("add", Tensor.zeros((2, 3)), Tensor.zeros((2,)))


class TestReduceMean:
    def test_constant(self, kernel_backend):
        assert reduce_mean(Tensor.full((5, 7), 3.25)) == 3.25

    def test_forced(self, kernel_backend):
        assert reduce_mean(Tensor.of([1.0, 2.0, 3.0, 4.0])) == 2.5

    def test_against_kahan_sum(self, kernel_backend):
        rng = random.Random(23)
        vals = [rng.uniform(0, 1) for _ in range(1000)]
        # Kahan compensated summation as the independent oracle
        total, comp = 0.0, 0.0
        for v in vals:
            y = v - comp
            t = total + y
            comp = (t - total) - y
            total = t
        assert_close(reduce_mean(Tensor((1000,), vals)), total / 1000, 1e-12)

    def test_empty_rejected(self, kernel_backend):
        with pytest.raises(DomainError):
            reduce_mean(Tensor((0,), []))

    def test_concatenation_weighted_mean(self, kernel_backend):
        rng = random.Random(29)
        xs = [rng.uniform(-5, 5) for _ in range(40)]
        ys = [rng.uniform(-5, 5) for _ in range(24)]
        whole = reduce_mean(Tensor((64,), xs + ys))
        parts = (40 * reduce_mean(Tensor((40,), xs))
                 + 24 * reduce_mean(Tensor((24,), ys))) / 64
        assert_close(whole, parts, 1e-12)


class TestTranspose:
    def test_involution(self, kernel_backend):
        rng = random.Random(31)
        a = rand_tensor(rng, 4, 7)
        assert transpose(transpose(a)) == a

    def test_forced(self, kernel_backend):
        assert transpose(Tensor.of([[1, 2, 3]])).tolist() == [[1], [2], [3]]

    def test_matmul_transpose_identity(self, kernel_backend):
        rng = random.Random(37)
        a = rand_tensor(rng, 5, 4)
        b = rand_tensor(rng, 4, 6)
        left = transpose(matmul(a, b))
        right = matmul(transpose(b), transpose(a))
        assert_tensors_close(left, right, 1e-12)

    def test_rank_checked(self, kernel_backend):
        with pytest.raises(DimensionError):
            transpose(Tensor.zeros((2, 2, 2)))


class TestTensorBasics:
    def test_shape_data_consistency(self):
        with pytest.raises(DimensionError):
            Tensor((2, 3), [1.0] * 5)

    def test_of_rejects_ragged(self):
        with pytest.raises(DimensionError):
            Tensor.of([[1, 2], [3]])

    def test_reshape_roundtrip(self):
        t = Tensor.of([[1, 2, 3], [4, 5, 6]])
        assert t.reshape((3, 2)).reshape((2, 3)) == t
        with pytest.raises(DimensionError):
            t.reshape((4, 2))

    def test_take_gathers_rows(self):
        t = Tensor.of([[1, 2], [3, 4], [5, 6]])
        assert t.take([2, 0]).tolist() == [[5, 6], [1, 2]]
        with pytest.raises(DomainError):
            t.take([3])

    def test_operations_do_not_mutate_operands(self, kernel_backend):
        a = Tensor.of([[1.0, 2.0], [3.0, 4.0]])
        b = Tensor.of([[5.0, 6.0], [7.0, 8.0]])
        snap_a, snap_b = list(a.data), list(b.data)
        matmul(a, b)
        ew_binary("add", a, b)
        transpose(a)
        reduce_mean(a)
        a.scale(2.0)
        assert list(a.data) == snap_a and list(b.data) == snap_b

    def test_item_and_full(self):
        assert Tensor.full((1, 1), 4.5).item() == 4.5
        with pytest.raises(DomainError):
            Tensor.zeros((2,)).item()


def test_backends_agree_on_matmul():
    from payguard import backend
    if len(backend.available()) < 2:
        pytest.skip("only one backend built")
    rng = random.Random(41)
    a = rand_tensor(rng, 9, 6)
    b = rand_tensor(rng, 6, 8)
    results = {}
    for name in backend.available():
        with backend.use(name):
            results[name] = matmul(a, b)
    assert_tensors_close(results["python"], results["compiled"], 1e-12)
