import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dualmode.flc import (GainSet, InteractionBlocks, RelativeDegree,
                          SingularInteractionMatrix, VirtualInput, check_mode,
                          closed_loop_error_poles, compose_drift,
                          compose_interaction_matrix, compose_virtual,
                          control_input, tracking_virtual_input)
from dualmode.mecanum import ExtendedState, interaction_blocks


def random_blocks(rng, p1=2, p2=1, spread=1.0):
    """Well-conditioned random blocks: identity-dominated."""
    def m(r, c):
        return np.eye(r, c) + spread * 0.3 * rng.standard_normal((r, c))
    return InteractionBlocks(a11=m(p1, p1), a12=spread * rng.standard_normal((p1, p2)),
                             a21=spread * rng.standard_normal((p2, p1)), a22=m(p2, p2),
                             abar21=spread * rng.standard_normal((p2, p1)), abar22=m(p2, p2),
                             b1=rng.standard_normal(p1), b2=rng.standard_normal(p2),
                             b3=rng.standard_normal(p2))


def paper_gains():
    return GainSet(position=(np.eye(2), np.eye(2)),
                   heading=(np.array([[0.75]]),),
                   lateral=(np.array([[0.65]]),))


class TestComposition:
    def test_sigma_one_selects_dexterous_matrix(self):
        blocks = random_blocks(np.random.default_rng(0))
        assert np.array_equal(compose_interaction_matrix(blocks, 1), blocks.full_dexterous())

    def test_sigma_zero_selects_energy_saving_matrix(self):
        blocks = random_blocks(np.random.default_rng(1))
        assert np.array_equal(compose_interaction_matrix(blocks, 0), blocks.full_energy_saving())

    def test_mecanum_blocks_energy_saving_assembly(self):
        # theta=0, v1=1, v2=0: rows by direct substitution
        blocks = interaction_blocks(ExtendedState(0, 0, 0.0, 1.0, 0.0))
        assert compose_interaction_matrix(blocks, 0) == pytest.approx(
            np.array([[1, 0, 0], [0, 1, 1], [0, 1, 0]]))

    def test_drift_stacking_selects_exactly(self):
        blocks = InteractionBlocks(a11=np.eye(1), a12=np.zeros((1, 1)),
                                   a21=np.zeros((1, 1)), a22=np.eye(1),
                                   abar21=np.zeros((1, 1)), abar22=np.eye(1),
                                   b1=[1.0], b2=[2.0], b3=[3.0])
        assert compose_drift(blocks, 1).tolist() == [1.0, 2.0]
        assert compose_drift(blocks, 0).tolist() == [1.0, 3.0]

    def test_mecanum_drift_is_zero(self):
        blocks = interaction_blocks(ExtendedState(2.0, -1.0, 0.7, 1.3, -0.4))
        for sigma in (0, 1):
            assert compose_drift(blocks, sigma).tolist() == [0.0, 0.0, 0.0]

    def test_virtual_stacking(self):
        v = VirtualInput([1.0, 2.0], [3.0], [4.0])
        assert compose_virtual(v, 1).tolist() == [1.0, 2.0, 3.0]
        assert compose_virtual(v, 0).tolist() == [1.0, 2.0, 4.0]
        zero = VirtualInput([0.0, 0.0], [0.0], [0.0])
        for sigma in (0, 1):
            assert compose_virtual(zero, sigma).tolist() == [0.0, 0.0, 0.0]

    def test_mode_must_be_binary(self):
        for bad in (0.5, 2, -1, 0.0 + 1e-9):
            with pytest.raises(ValueError):
                check_mode(bad)

    @given(st.integers(min_value=0, max_value=2 ** 32 - 1), st.sampled_from([0, 1]))
    @settings(max_examples=50, deadline=None)
    def test_determinant_identity_randomized(self, seed, sigma):
        blocks = random_blocks(np.random.default_rng(seed))
        det_sel = np.linalg.det(compose_interaction_matrix(blocks, sigma))
        det_a = np.linalg.det(blocks.full_dexterous())
        det_abar = np.linalg.det(blocks.full_energy_saving())
        expected = sigma * det_a + (1 - sigma) * det_abar
        assert abs(det_sel - expected) <= 1e-10 * max(1.0, abs(expected))


class TestControlInput:
    def test_mecanum_dexterous_example(self):
        blocks = interaction_blocks(ExtendedState(0, 0, 0.0, 1.0, 0.0))
        u = control_input(blocks, VirtualInput([1.0, 0.0], [0.0], [0.0]), 1)
        assert u == pytest.approx([1.0, 0.0, 0.0], abs=1e-12)

    def test_mecanum_energy_saving_example(self):
        blocks = interaction_blocks(ExtendedState(0, 0, 0.0, 1.0, 0.0))
        u = control_input(blocks, VirtualInput([0.0, 0.0], [1.0], [1.0]), 0)
        assert u == pytest.approx([0.0, 1.0, -1.0], abs=1e-12)

    def test_singular_at_zero_sagittal_speed(self):
        blocks = interaction_blocks(ExtendedState(0, 0, 0.0, 0.0, 0.0))
        with pytest.raises(SingularInteractionMatrix) as exc:
            control_input(blocks, VirtualInput([0.0, 0.0], [0.0], [0.0]), 0)
        assert exc.value.det == pytest.approx(0.0, abs=1e-15)
        assert exc.value.sigma == 0

    @given(st.integers(min_value=0, max_value=2 ** 32 - 1), st.sampled_from([0, 1]))
    @settings(max_examples=50, deadline=None)
    def test_solve_residual(self, seed, sigma):
        rng = np.random.default_rng(seed)
        blocks = random_blocks(rng)
        v = VirtualInput(rng.standard_normal(2), rng.standard_normal(1), rng.standard_normal(1))
        try:
            u = control_input(blocks, v, sigma)
        except SingularInteractionMatrix:
            return  # randomized blocks may degenerate; nothing to check then
        a = compose_interaction_matrix(blocks, sigma)
        residual = a @ u + compose_drift(blocks, sigma) - compose_virtual(v, sigma)
        assert np.abs(residual).max() < 1e-9


class TestTrackingLaw:
    def test_pure_feedforward_at_zero_error(self):
        g = paper_gains()
        ff = np.array([0.3, -0.7])
        y = [np.array([1.0, 2.0]), np.array([0.1, 0.2])]
        v = tracking_virtual_input(1, [y[0], y[1], ff], y, g)
        assert v == pytest.approx(ff, abs=1e-15)

    def test_first_order_proportional(self):
        # rho=1, gain 0.75, output at -2, reference 0: v = 0.75 * 2
        v = tracking_virtual_input(2, [[0.0], [0.0]], [[-2.0]], paper_gains())
        assert v == pytest.approx([1.5], abs=1e-15)

    def test_second_order_unit_gains(self):
        g = paper_gains()
        v = tracking_virtual_input(1, [np.zeros(2), np.zeros(2), np.zeros(2)],
                                   [np.array([1.0, 0.0]), np.array([0.0, 1.0])], g)
        assert v == pytest.approx([-1.0, -1.0], abs=1e-15)

    def test_dimension_mismatch_rejected(self):
        g = paper_gains()
        with pytest.raises(ValueError):
            tracking_virtual_input(1, [np.zeros(2), np.zeros(2)], [np.zeros(2), np.zeros(2)], g)
        with pytest.raises(ValueError):
            tracking_virtual_input(2, [[0.0], [0.0]], [[0.0, 0.0]], g)

    @given(st.integers(min_value=0, max_value=2 ** 32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_affine_in_output_stack(self, seed):
        # superposition of the output-dependent part
        rng = np.random.default_rng(seed)
        g = paper_gains()
        ref = [rng.standard_normal(2) for _ in range(3)]
        out_a = [rng.standard_normal(2) for _ in range(2)]
        out_b = [rng.standard_normal(2) for _ in range(2)]
        lam = rng.uniform(-2, 2)
        mixed = [lam * a + (1 - lam) * b for a, b in zip(out_a, out_b)]
        va = tracking_virtual_input(1, ref, out_a, g)
        vb = tracking_virtual_input(1, ref, out_b, g)
        vm = tracking_virtual_input(1, ref, mixed, g)
        assert np.abs(vm - (lam * va + (1 - lam) * vb)).max() < 1e-12


class TestGainsAndPoles:
    def test_first_order_poles(self):
        g = paper_gains()
        assert closed_loop_error_poles(g, 2) == pytest.approx([-0.75])
        assert closed_loop_error_poles(g, 3) == pytest.approx([-0.65])

    def test_second_order_poles_per_channel(self):
        g = GainSet(position=(np.array([[1.0]]), np.array([[1.0]])),
                    heading=(np.array([[0.75]]),), lateral=(np.array([[0.65]]),))
        poles = sorted(closed_loop_error_poles(g, 1), key=lambda z: z.imag)
        assert poles[0] == pytest.approx(-0.5 - 0.8660254037844386j, abs=1e-12)
        assert poles[1] == pytest.approx(-0.5 + 0.8660254037844386j, abs=1e-12)

    def test_all_example_poles_strictly_stable(self):
        g = paper_gains()
        for j in (1, 2, 3):
            assert max(closed_loop_error_poles(g, j).real) < 0

    def test_zero_first_order_gain_rejected(self):
        with pytest.raises(ValueError):
            GainSet(position=(np.eye(2), np.eye(2)),
                    heading=(np.array([[0.0]]),), lateral=(np.array([[0.65]]),))

    def test_unstable_gains_rejected(self):
        with pytest.raises(ValueError):
            GainSet(position=(np.eye(2), np.eye(2)),
                    heading=(np.array([[-0.5]]),), lateral=(np.array([[0.65]]),))

    def test_bad_block_index(self):
        with pytest.raises(ValueError):
            paper_gains().block(4)


class TestRelativeDegree:
    def test_mecanum_degrees_sum_to_state_dimension(self):
        rd = RelativeDegree(rho1=(2, 2), rho2=(1,), rho3=(1,))
        rd.check_state_dimension(5)
        with pytest.raises(ValueError):
            rd.check_state_dimension(6)

    def test_block_count_mismatch_rejected(self):
        with pytest.raises(ValueError):
            RelativeDegree(rho1=(2, 2), rho2=(1,), rho3=(1, 1))

    def test_nonpositive_rejected(self):
        with pytest.raises(ValueError):
            RelativeDegree(rho1=(0, 2), rho2=(1,), rho3=(1,))


class TestBlocks:
    def test_shape_validation(self):
        with pytest.raises(ValueError):
            InteractionBlocks(a11=np.eye(2), a12=np.zeros((2, 1)),
                              a21=np.zeros((1, 2)), a22=np.eye(1),
                              abar21=np.zeros((1, 3)), abar22=np.eye(1),
                              b1=np.zeros(2), b2=np.zeros(1), b3=np.zeros(1))

    def test_virtual_input_rejects_non_finite(self):
        with pytest.raises(ValueError):
            VirtualInput([np.nan, 0.0], [0.0], [0.0])
