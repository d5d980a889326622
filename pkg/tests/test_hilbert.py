"""Tests for the operator algebra on truncated spaces."""

import numpy as np
import pytest

from cqt.engine.hilbert import (
    DensityMatrixError,
    DimensionError,
    HilbertSpace,
    Operator,
    coherent_state,
    embed,
    expect,
    fock_annihilation,
    partial_trace,
    tensor,
    thermal_state,
    transition,
)


class TestHilbertSpace:
    def test_total_dim(self):
        assert HilbertSpace((30, 3), fock_slots=(0,)).total_dim == 90

    def test_rejects_trivial_subsystem(self):
        with pytest.raises(DimensionError):
            HilbertSpace((1, 3))

    def test_rejects_bad_fock_slot(self):
        with pytest.raises(DimensionError):
            HilbertSpace((4, 3), fock_slots=(2,))

    def test_basis_projector(self):
        space = HilbertSpace((2, 3))
        proj = space.basis_projector(1, 2, 0).to_dense()
        expected = np.kron(np.eye(2), np.eye(3)[:, [2]] @ np.eye(3)[[0], :])
        assert np.allclose(proj, expected)

    def test_large_spaces_stay_sparse(self):
        assert HilbertSpace((10, 10)).identity().is_sparse
        assert not HilbertSpace((4, 3)).identity().is_sparse


class TestOperator:
    def test_shape_mismatch(self):
        with pytest.raises(DimensionError) as exc_info:
            Operator(HilbertSpace((3,)), np.eye(2))
        assert exc_info.value.expected == (3, 3)
        assert exc_info.value.actual == (2, 2)

    def test_space_mismatch_on_add(self):
        with pytest.raises(DimensionError):
            transition(2, 0, 1) + transition(3, 0, 1)

    def test_algebra(self):
        sm = transition(2, 0, 1)
        sx = sm + sm.dagger()
        assert np.allclose((sx @ sx).to_dense(), np.eye(2))
        assert np.allclose((2 * sm - sm).to_dense(), sm.to_dense())
        assert np.allclose((-sm / 2).to_dense(), -0.5 * sm.to_dense())

    def test_numpy_scalar_multiplies(self):
        op = np.float64(2.0) * transition(2, 0, 1)
        assert isinstance(op, Operator)
        assert op.to_dense()[0, 1] == 2.0

    def test_operator_product_needs_matmul(self):
        sm = transition(2, 0, 1)
        with pytest.raises(TypeError):
            sm * sm

    def test_hermiticity(self):
        sm = transition(2, 0, 1)
        assert not sm.is_hermitian()
        assert (sm + sm.dagger()).is_hermitian()
        assert (1j * (sm - sm.dagger())).is_hermitian()

    def test_eigenvalues(self):
        sm = transition(2, 0, 1)
        assert np.allclose(np.sort((sm + sm.dagger()).eigenvalues()), [-1.0, 1.0])

    def test_check_density_trace(self):
        with pytest.raises(DensityMatrixError) as exc_info:
            Operator(HilbertSpace((2,)), np.diag([0.5, 0.3])).check_density()
        assert exc_info.value.trace == pytest.approx(0.8)

    def test_check_density_positivity(self):
        with pytest.raises(DensityMatrixError) as exc_info:
            Operator(HilbertSpace((2,)), np.diag([1.5, -0.5])).check_density()
        assert exc_info.value.min_eigenvalue == pytest.approx(-0.5)


class TestFock:
    def test_number_operator(self):
        a = fock_annihilation(4)
        assert np.allclose(np.diag((a.dagger() @ a).to_dense()).real, [0, 1, 2, 3])

    def test_truncated_commutator(self):
        a = fock_annihilation(4)
        comm = (a @ a.dagger() - a.dagger() @ a).to_dense()
        assert np.allclose(np.diag(comm).real, [1, 1, 1, -3])

    def test_cutoff_too_small(self):
        with pytest.raises(DimensionError):
            fock_annihilation(1)

    def test_thermal_state_mean(self):
        rho = thermal_state(60, 0.5)
        a = fock_annihilation(60)
        assert expect(a.dagger() @ a, rho).real == pytest.approx(0.5, rel=1e-12)
        rho.check_density()

    def test_thermal_state_vacuum(self):
        rho = thermal_state(5, 0.0)
        assert rho.to_dense()[0, 0] == 1.0

    def test_coherent_state_amplitude(self):
        rho = coherent_state(40, 2.0 - 1.0j)
        a = fock_annihilation(40)
        assert expect(a, rho) == pytest.approx(2.0 - 1.0j, abs=1e-10)
        assert expect(a.dagger() @ a, rho).real == pytest.approx(5.0, abs=1e-9)


class TestComposite:
    def test_embed_and_tensor_agree(self):
        a = fock_annihilation(4)
        o = transition(3, 0, 1)
        space = HilbertSpace((4, 3), fock_slots=(0,))
        product = embed(a, space, 0) @ embed(o, space, 1)
        assert np.allclose(product.to_dense(), tensor(a, o).to_dense())
        assert tensor(a, o).space.fock_slots == (0,)

    def test_embed_dimension_check(self):
        space = HilbertSpace((4, 3))
        with pytest.raises(DimensionError):
            embed(transition(3, 0, 1), space, 0)
        with pytest.raises(DimensionError):
            embed(transition(3, 0, 1), space, 2)

    def test_partial_trace_of_product(self):
        rho_cav = thermal_state(3, 0.5)
        rho_sys = transition(2, 1, 1)
        joint = tensor(rho_cav, rho_sys)
        assert np.allclose(partial_trace(joint, 0).to_dense(), rho_cav.to_dense())
        assert np.allclose(partial_trace(joint, 1).to_dense(), rho_sys.to_dense())
        assert partial_trace(joint, 0).space.fock_slots == (0,)

    def test_expect_sparse_and_dense_agree(self):
        rng = np.random.default_rng(7)
        m = rng.normal(size=(90, 90)) + 1j * rng.normal(size=(90, 90))
        space = HilbertSpace((30, 3))
        op = Operator(space, m)
        rho = Operator(space, np.eye(90) / 90)
        assert op.is_sparse
        assert expect(op, rho) == pytest.approx(np.trace(m) / 90)
