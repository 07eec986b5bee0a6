import numpy as np
import pytest

from paravec import kernels


@pytest.fixture(params=[kernels.NUMPY, kernels.NUMBA])
def backend(request):
    previous = kernels.active_backend()
    kernels.set_backend(request.param)
    yield request.param
    kernels.set_backend(previous)


def ragged(rng, n_segments, n_rows):
    lengths = rng.integers(0, 6, size=n_segments)
    offsets = np.zeros(n_segments + 1, dtype=np.int64)
    np.cumsum(lengths, out=offsets[1:])
    idx = rng.integers(0, n_rows, size=int(lengths.sum())).astype(np.int64)
    return idx, offsets


class TestMeanRows:
    def test_matches_loop_oracle(self, backend):
        rng = np.random.default_rng(0)
        emb = rng.normal(size=(20, 7))
        idx, offsets = ragged(rng, 12, 20)
        got = kernels.mean_rows(emb, idx, offsets)
        for i in range(12):
            seg = idx[offsets[i] : offsets[i + 1]]
            want = emb[seg].mean(axis=0) if seg.size else np.zeros(7)
            np.testing.assert_allclose(got[i], want, rtol=1e-12, atol=1e-15)

    def test_empty_segment_is_zero(self, backend):
        emb = np.ones((3, 2))
        out = kernels.mean_rows(emb, np.empty(0, dtype=np.int64), np.zeros(4, dtype=np.int64))
        assert np.array_equal(out, np.zeros((3, 2)))

    def test_backends_agree(self):
        rng = np.random.default_rng(1)
        emb = rng.normal(size=(30, 5))
        idx, offsets = ragged(rng, 9, 30)
        kernels.set_backend(kernels.NUMPY)
        a = kernels.mean_rows(emb, idx, offsets)
        kernels.set_backend(kernels.NUMBA)
        b = kernels.mean_rows(emb, idx, offsets)
        np.testing.assert_allclose(a, b, rtol=1e-13, atol=0)


class TestCosineMatrix:
    def test_matches_oracle(self, backend):
        rng = np.random.default_rng(2)
        a = rng.normal(size=(8, 6))
        b = rng.normal(size=(5, 6))
        got = kernels.cosine_matrix(a, b)
        for i in range(8):
            for j in range(5):
                want = float(a[i] @ b[j]) / (np.linalg.norm(a[i]) * np.linalg.norm(b[j]))
                assert got[i, j] == pytest.approx(want, abs=1e-12)

    def test_zero_rows_give_zero(self, backend):
        a = np.array([[0.0, 0.0], [1.0, 0.0]])
        got = kernels.cosine_matrix(a, a)
        assert got[0, 0] == 0.0 and got[0, 1] == 0.0
        assert got[1, 1] == 1.0

    def test_clipped(self, backend):
        a = np.array([[1e-200, 1.0]])
        got = kernels.cosine_matrix(a, a)
        assert got[0, 0] <= 1.0

    def test_dim_mismatch(self, backend):
        with pytest.raises(ValueError):
            kernels.cosine_matrix(np.ones((2, 3)), np.ones((2, 4)))

    def test_backends_agree(self):
        rng = np.random.default_rng(3)
        a = rng.normal(size=(12, 9))
        kernels.set_backend(kernels.NUMPY)
        x = kernels.cosine_matrix(a, a)
        kernels.set_backend(kernels.NUMBA)
        y = kernels.cosine_matrix(a, a)
        np.testing.assert_allclose(x, y, rtol=0, atol=1e-13)


class TestScatterRows:
    def test_matches_loop_oracle(self, backend):
        rng = np.random.default_rng(4)
        idx, offsets = ragged(rng, 7, 15)
        rows = rng.normal(size=(7, 4))
        got = np.zeros((15, 4))
        kernels.scatter_rows(got, idx, offsets, rows)
        want = np.zeros((15, 4))
        for i in range(7):
            for j in range(offsets[i], offsets[i + 1]):
                want[idx[j]] += rows[i]
        np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-15)

    def test_duplicate_indices_accumulate(self, backend):
        out = np.zeros((2, 1))
        idx = np.array([0, 0, 1], dtype=np.int64)
        offsets = np.array([0, 3], dtype=np.int64)
        kernels.scatter_rows(out, idx, offsets, np.array([[2.0]]))
        assert out[0, 0] == 4.0 and out[1, 0] == 2.0

    def test_backends_bit_identical(self):
        # both paths apply updates in the same flat order
        rng = np.random.default_rng(5)
        idx, offsets = ragged(rng, 10, 6)
        rows = rng.normal(size=(10, 3))
        a = np.zeros((6, 3))
        b = np.zeros((6, 3))
        kernels.set_backend(kernels.NUMPY)
        kernels.scatter_rows(a, idx, offsets, rows)
        kernels.set_backend(kernels.NUMBA)
        kernels.scatter_rows(b, idx, offsets, rows)
        assert np.array_equal(a, b)


class TestAdamUpdate:
    def test_matches_reference_formula(self, backend):
        rng = np.random.default_rng(6)
        param = rng.normal(size=(4, 3))
        grad = rng.normal(size=(4, 3))
        m = rng.normal(size=(4, 3)) * 0.01
        v = np.abs(rng.normal(size=(4, 3))) * 0.01
        pr, mr, vr = param.copy(), m.copy(), v.copy()
        kernels.adam_update(param, grad, m, v, 0.002, 0.9, 0.999, 1e-8, 3)
        mr = 0.9 * mr + 0.1 * grad
        vr = 0.999 * vr + 0.001 * grad * grad
        pr -= 0.002 * (mr / (1 - 0.9**3)) / (np.sqrt(vr / (1 - 0.999**3)) + 1e-8)
        np.testing.assert_allclose(param, pr, rtol=1e-13, atol=0)
        np.testing.assert_allclose(m, mr, rtol=1e-13, atol=0)
        np.testing.assert_allclose(v, vr, rtol=1e-13, atol=0)

    def test_backends_bit_identical(self):
        rng = np.random.default_rng(7)
        grad = rng.normal(size=(5, 2))
        state = {}
        for name in (kernels.NUMPY, kernels.NUMBA):
            kernels.set_backend(name)
            param = np.ones((5, 2))
            m = np.zeros((5, 2))
            v = np.zeros((5, 2))
            for t in range(1, 4):
                kernels.adam_update(param, grad, m, v, 0.001, 0.9, 0.999, 1e-8, t)
            state[name] = param
        assert np.array_equal(state[kernels.NUMPY], state[kernels.NUMBA])


def test_set_backend_rejects_unknown():
    with pytest.raises(ValueError):
        kernels.set_backend("fortran")


def test_set_threads_validates():
    with pytest.raises(ValueError):
        kernels.set_threads(0)
    kernels.set_threads(4)  # clamped to whatever the runtime allows
