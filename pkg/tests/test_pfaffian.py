import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ncbm.errors import DomainError, SelfDualityError, SkewSymmetryError
from ncbm.pfaffian import pfaffian, pfaffian_reference
from ncbm.quaternion import (
    QKernelMatrix,
    Quaternion,
    dual,
    j_matrix,
    tdet,
    tdet_pf_reference,
    tdet_reference,
)


def rand_skew(rng, n, complex_=False):
    m = rng.uniform(-1, 1, (n, n))
    if complex_:
        m = m + 1j * rng.uniform(-1, 1, (n, n))
    return m - m.T


def rand_selfdual(rng, n):
    b = np.zeros((n, n, 2, 2), dtype=complex)
    for i in range(n):
        b[i, i] = rng.uniform(-1, 1) * np.eye(2)
        for j in range(i + 1, n):
            q = Quaternion.from_components(*rng.uniform(-1, 1, 4))
            b[i, j] = q.m
            b[j, i] = q.dual().m
    return QKernelMatrix(b)


class TestPfaffian:
    @given(st.floats(-10, 10).filter(lambda a: abs(a) > 1e-8))
    @settings(max_examples=30, deadline=None)
    def test_two_by_two(self, a):
        assert pfaffian(np.array([[0.0, a], [-a, 0.0]])) == pytest.approx(a, rel=1e-14)

    def test_j_matrix_any_size(self):
        for n in range(1, 9):
            assert pfaffian(j_matrix(n)) == pytest.approx(1.0, rel=1e-14)

    def test_squared_equals_det(self, rng):
        for n in range(2, 18, 2):
            a = rand_skew(rng, n)
            pf = pfaffian(a)
            det = np.linalg.det(a)
            assert pf * pf == pytest.approx(det, rel=1e-9)

    def test_matches_matching_sum(self, rng):
        for n in (2, 4, 6, 8):
            a = rand_skew(rng, n, complex_=True)
            assert pfaffian(a) == pytest.approx(pfaffian_reference(a), rel=1e-12)

    def test_congruence(self, rng):
        for n in (4, 6, 8, 10):
            a = rand_skew(rng, n)
            b = rng.uniform(-1, 1, (n, n))
            lhs = pfaffian(b @ a @ b.T)
            rhs = np.linalg.det(b) * pfaffian(a)
            assert lhs == pytest.approx(rhs, rel=1e-8)

    def test_pair_swap_flips_sign(self, rng):
        a = rand_skew(rng, 8)
        b = a.copy()
        b[[1, 6], :] = b[[6, 1], :]
        b[:, [1, 6]] = b[:, [6, 1]]
        assert pfaffian(b) == pytest.approx(-pfaffian(a), rel=1e-12)

    def test_odd_dimension_rejected(self):
        with pytest.raises(DomainError):
            pfaffian(np.zeros((3, 3)))

    def test_non_skew_rejected_with_indices(self):
        a = np.array([[0.0, 1.0], [-1.0, 0.5]])
        with pytest.raises(SkewSymmetryError) as err:
            pfaffian(a)
        assert err.value.indices == (1, 1)

    def test_structural_zero_is_exact(self, rng):
        a = rand_skew(rng, 6)
        a[:, 2] = 0.0
        a[2, :] = 0.0
        assert pfaffian(a) == 0.0

    def test_repeated_row_pair_is_zero(self, rng):
        a = rand_skew(rng, 6)
        a[3, :] = a[2, :]
        a[:, 3] = a[:, 2]
        a[2, 3] = a[3, 2] = 0.0
        a[3, 3] = 0.0
        assert pfaffian(a) == pytest.approx(0.0, abs=1e-13)


class TestQuaternion:
    @given(st.tuples(*[st.floats(-3, 3) for _ in range(8)]))
    @settings(max_examples=40, deadline=None)
    def test_representation_is_faithful(self, comps):
        q = Quaternion.from_components(*comps[:4])
        p = Quaternion.from_components(*comps[4:])
        assert np.allclose((q * p).m, q.m @ p.m)

    def test_unit_table(self):
        one = Quaternion.unit("1")
        assert np.allclose(one.m, np.eye(2))
        assert np.allclose(dual(one).m, one.m)
        for name in ("e1", "e2", "e3"):
            u = Quaternion.unit(name)
            assert np.allclose(dual(u).m, -u.m)

    @given(st.tuples(*[st.floats(-3, 3) for _ in range(4)]))
    @settings(max_examples=40, deadline=None)
    def test_dual_is_involution(self, comps):
        q = Quaternion.from_components(*comps)
        assert np.allclose(dual(dual(q)).m, q.m)

    def test_components_roundtrip(self, rng):
        comps = rng.uniform(-1, 1, 4) + 1j * rng.uniform(-1, 1, 4)
        q = Quaternion.from_components(*comps)
        assert np.allclose(q.components(), comps)


class TestTdet:
    def test_identity(self):
        for n in (1, 3, 5):
            v, im = tdet(QKernelMatrix.identity(n))
            assert v == pytest.approx(1.0, rel=1e-14)
            assert im < 1e-14

    def test_one_by_one_is_scalar_part(self, rng):
        q = Quaternion.from_components(*rng.uniform(-1, 1, 4))
        blocks = 0.5 * (q.m + q.dual().m)[None, None]  # self-dual part
        v, _ = tdet(QKernelMatrix(blocks))
        assert v == pytest.approx(Quaternion(blocks[0, 0]).scalar_part.real, rel=1e-14)

    def test_two_by_two_cycle_expansion(self, rng):
        a, c = rng.uniform(-1, 1, 2)
        q = Quaternion.from_components(*rng.uniform(-1, 1, 4))
        blocks = np.zeros((2, 2, 2, 2), dtype=complex)
        blocks[0, 0] = a * np.eye(2)
        blocks[1, 1] = c * np.eye(2)
        blocks[0, 1] = q.m
        blocks[1, 0] = q.dual().m
        v, _ = tdet(QKernelMatrix(blocks))
        want = a * c - (q * dual(q)).scalar_part.real
        assert v == pytest.approx(want, rel=1e-12)

    def test_jc_skew_iff_self_dual(self, rng):
        q = rand_selfdual(rng, 3)
        jc = j_matrix(3) @ q.c_matrix()
        assert np.max(np.abs(jc + jc.T)) < 1e-14

    def test_self_duality_violation_names_block(self, rng):
        q = rand_selfdual(rng, 3)
        blocks = q.blocks.copy()
        blocks[0, 2] += 0.5
        with pytest.raises(SelfDualityError) as err:
            tdet(QKernelMatrix(blocks))
        assert set(err.value.block) == {0, 2}

    def test_against_cycle_sum_and_matching_pfaffian(self, rng):
        for n in (1, 2, 3, 4):
            q = rand_selfdual(rng, n)
            v, im = tdet(q)
            assert im < 1e-12
            assert v == pytest.approx(tdet_reference(q).real, rel=1e-12)
            assert v == pytest.approx(complex(tdet_pf_reference(q)).real, rel=1e-12)

    def test_conjugation_invariance(self, rng):
        n = 4
        q = rand_selfdual(rng, n)
        bfac = rng.uniform(0.2, 4.0, n)
        blocks = q.blocks.copy()
        for i in range(n):
            for j in range(n):
                z = np.diag([bfac[i], 1.0 / bfac[i]])
                zinv = np.diag([1.0 / bfac[j], bfac[j]])
                blocks[i, j] = z @ q.blocks[i, j] @ zinv
        v1, _ = tdet(q)
        v2, _ = tdet(QKernelMatrix(blocks))
        assert v2 == pytest.approx(v1, rel=1e-9)

    def test_block_index_map(self, rng):
        q = QKernelMatrix(rand_selfdual(rng, 2).blocks, block_index={(0, 0): 0, (1, 0): 1})
        assert q.block_index[(1, 0)] == 1
