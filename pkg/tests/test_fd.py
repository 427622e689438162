"""Frequent-directions sketch: shrink arithmetic, the deterministic Gram
bound, and the zero-row occupancy contract."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frosketch.fd import fd_insert, new_sketch, shrink
from frosketch.matrix import spectral_norm


def gram_gap(a, b):
    """||A'A - B'B||_2 by a dense eigensolve (independent oracle)."""
    diff = a.T @ a - b.T @ b
    return float(np.abs(np.linalg.eigvalsh(diff)).max())


class TestNewSketch:
    def test_starts_empty(self):
        s = new_sketch(8, 3)
        assert s.occupied == 0
        assert s.b.shape == (8, 3)
        assert not s.b.any()

    @pytest.mark.parametrize("ell", [0, 1, 3, 7, -2])
    def test_rejects_odd_or_small_ell(self, ell):
        with pytest.raises(ValueError, match="even"):
            new_sketch(ell, 4)

    def test_rejects_bad_d(self):
        with pytest.raises(ValueError, match="d must be positive"):
            new_sketch(4, 0)


class TestShrink:
    def test_diagonal_example(self):
        # b = diag(3, 2, 1, 0): squared values (9, 4, 1, 0), delta is the
        # (ell/2)=2nd largest = 4, so the shrunken values are
        # (sqrt(5), 0, 0, 0) and only one row survives.
        s = new_sketch(4, 4)
        fd_insert(s, np.diag([3.0, 2.0, 1.0, 0.0]))
        shrink(s)
        assert s.occupied == 1
        sv = np.linalg.svd(s.b, compute_uv=False)
        np.testing.assert_allclose(sv[0], np.sqrt(5.0), atol=1e-12)
        assert not s.b[1:].any()

    def test_empty_sketch_is_noop(self):
        s = new_sketch(6, 2)
        shrink(s)
        assert s.occupied == 0
        assert not s.b.any()

    def test_underfull_sketch_is_lossless(self):
        # Fewer than ell/2 nonzero singular values -> delta = 0: the
        # sketch is rewritten in singular-vector coordinates but the Gram
        # is untouched.
        s = new_sketch(8, 5)
        rows = np.random.default_rng(0).standard_normal((3, 5))
        fd_insert(s, rows)
        before = s.b.T @ s.b
        shrink(s)
        np.testing.assert_allclose(s.b.T @ s.b, before, atol=1e-10)
        assert s.occupied == 3

    def test_frees_at_least_half(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            s = new_sketch(8, 6)
            fd_insert(s, rng.standard_normal((8, 6)))
            assert s.occupied == 8
            shrink(s)
            assert s.occupied <= 3  # ell/2 - 1: the delta row itself dies
            # Zero-row contract after shrink.
            assert not s.b[s.occupied :].any()

    def test_returns_same_object(self):
        s = new_sketch(4, 2)
        assert shrink(s) is s


class TestInsert:
    def test_rows_kept_verbatim_until_full(self):
        # Lazy shrink: filling exactly ell rows must not trigger an SVD,
        # so the raw rows are still sitting in the buffer.
        s = new_sketch(4, 3)
        rows = np.arange(12.0).reshape(4, 3) + 1.0
        fd_insert(s, rows)
        assert s.occupied == 4
        np.testing.assert_array_equal(s.b, rows)

    def test_overflow_triggers_shrink(self):
        s = new_sketch(4, 3)
        rng = np.random.default_rng(1)
        fd_insert(s, rng.standard_normal((5, 3)))
        # One shrink happened (occupied drops to <= ell/2 - 1 = 1), then
        # the fifth row landed in a freed slot.
        assert 1 <= s.occupied <= 2

    def test_split_points_do_not_matter(self):
        rng = np.random.default_rng(2)
        rows = rng.standard_normal((37, 4))
        whole = fd_insert(new_sketch(6, 4), rows)
        parts = new_sketch(6, 4)
        for cut in np.array_split(rows, [5, 6, 19, 30]):
            if cut.size:
                fd_insert(parts, cut)
        np.testing.assert_array_equal(whole.b, parts.b)
        assert whole.occupied == parts.occupied

    def test_column_mismatch(self):
        s = new_sketch(4, 3)
        with pytest.raises(ValueError, match="columns"):
            fd_insert(s, np.zeros((2, 5)))

    def test_rejects_non_finite_rows(self):
        s = new_sketch(4, 2)
        with pytest.raises(ValueError, match="non-finite"):
            fd_insert(s, np.array([[1.0, np.nan]]))

    def test_zero_rows_above_occupied(self):
        rng = np.random.default_rng(3)
        s = new_sketch(8, 4)
        for _ in range(10):
            fd_insert(s, rng.standard_normal((int(rng.integers(1, 13)), 4)))
            assert not s.b[s.occupied :].any()


class TestGuarantee:
    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_gram_bound_and_psd(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(10, 200))
        d = int(rng.integers(2, 24))
        ell = int(rng.choice([4, 8, 16]))
        a = rng.standard_normal((n, d))
        s = fd_insert(new_sketch(ell, d), a)
        budget = 2.0 / ell * float(np.sum(a**2))
        assert gram_gap(a, s.b) <= budget + 1e-8
        # A'A - B'B is positive semidefinite: FD only ever underestimates.
        eigs = np.linalg.eigvalsh(a.T @ a - s.b.T @ s.b)
        assert eigs.min() >= -1e-8

    def test_spectral_norm_agrees_with_oracle(self):
        # The library's power iteration and the dense eigensolve must
        # tell the same story about the sketch error.
        rng = np.random.default_rng(17)
        a = rng.standard_normal((300, 16))
        s = fd_insert(new_sketch(8, 16), a)
        diff = a.T @ a - s.b.T @ s.b
        assert spectral_norm(diff) == pytest.approx(gram_gap(a, s.b), rel=1e-6)

    def test_low_rank_input_is_captured_exactly(self):
        # Rank-2 stream into an ell=8 sketch: nothing to forget, the
        # sketch Gram converges to the true Gram (delta stays 0).
        rng = np.random.default_rng(5)
        basis = np.linalg.qr(rng.standard_normal((6, 2)))[0].T
        a = rng.standard_normal((100, 2)) @ basis
        s = fd_insert(new_sketch(8, 6), a)
        np.testing.assert_allclose(s.b.T @ s.b, a.T @ a, atol=1e-9)
