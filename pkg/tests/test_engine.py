import math

import numpy as np
import pytest

from dualmode.baselines import BaselineGains
from dualmode.engine import (ChannelUnderflow, ScenarioStepper, SimLog, SwitchSchedule,
                             decay_rate_estimate, default_gain_set, rk4_step,
                             run_scenario)
from dualmode.flc import SingularInteractionMatrix
from dualmode.mecanum import ControlInput, ExtendedState
from dualmode.references import circle_reference, line_reference

REF = circle_reference(8.0, 0.15)
S0 = ExtendedState(0.0, -4.0, 0.0, 0.5, 0.0)


class TestSwitchSchedule:
    def test_right_continuous_evaluation(self):
        sched = SwitchSchedule(((0.0, 1), (2.0, 0), (5.0, 1)))
        assert sched.value_at(0.0) == 1
        assert sched.value_at(1.999) == 1
        assert sched.value_at(2.0) == 0
        assert sched.value_at(4.9) == 0
        assert sched.value_at(5.0) == 1
        assert sched.value_at(100.0) == 1

    def test_validation(self):
        with pytest.raises(ValueError):
            SwitchSchedule(((1.0, 1),))  # must start at zero
        with pytest.raises(ValueError):
            SwitchSchedule(((0.0, 1), (2.0, 0), (2.0, 1)))  # strictly increasing
        with pytest.raises(ValueError):
            SwitchSchedule(((0.0, 2),))

    def test_off_grid_switch_time_rejected(self):
        sched = SwitchSchedule(((0.0, 1), (0.0015, 0)))
        with pytest.raises(ValueError):
            sched.step_indices(1e-3)

    def test_per_step_sampling_matches_value_at(self):
        sched = SwitchSchedule(((0.0, 0), (0.004, 1), (0.009, 0)))
        sig = sched.sigma_per_step(1e-3, 12)
        assert sig.tolist() == [sched.value_at(i * 1e-3) for i in range(13)]


class TestRk4Step:
    def test_equilibrium_fixed_point(self):
        s = ExtendedState(1.0, 2.0, 0.5, 0.0, 0.0)
        out = rk4_step(s, ControlInput(0, 0, 0), 0.1)
        assert out == s

    def test_constant_velocity_exact(self):
        out = rk4_step(ExtendedState(0, 0, 0.0, 1.0, 0.0), ControlInput(0, 0, 0), 0.1)
        assert out.x == pytest.approx(0.1, abs=1e-15)
        assert (out.y, out.theta, out.v1, out.v2) == (0.0, 0.0, 1.0, 0.0)

    def test_pure_turn_rate_exact(self):
        out = rk4_step(ExtendedState(0, 0, 0.0, 0.0, 0.0), ControlInput(0, 0, 1.0), 0.01)
        assert out.theta == pytest.approx(0.01, abs=1e-16)
        assert out.x == 0.0 and out.y == 0.0

    def test_rejects_bad_dt(self):
        with pytest.raises(ValueError):
            rk4_step(S0, ControlInput(0, 0, 0), 0.0)


class TestRunScenario:
    def test_invariant_manifold(self):
        # start exactly on the reference with matching derivatives
        s0 = ExtendedState(0.0, -8.0, math.pi / 2, 0.0, -1.2)
        log = run_scenario("mecanum", default_gain_set(), REF,
                           SwitchSchedule.constant(1), None, s0, 1e-3, 5.0)
        assert np.abs(log.e1).max() < 1e-9
        assert np.abs(log.e2).max() < 1e-9

    def test_row_count_and_grid(self):
        log = run_scenario("mecanum", default_gain_set(), REF,
                           SwitchSchedule.constant(1), None, S0, 1e-3, 0.5)
        assert log.t.shape[0] == 501
        assert np.array_equal(log.t, np.arange(501) * 1e-3)

    def test_determinism_bitwise(self):
        from dualmode.engine import NoiseState
        kwargs = dict(plant="mecanum", controller=default_gain_set(), reference=REF,
                      schedule=SwitchSchedule(((0.0, 1), (0.25, 0))), s0=S0,
                      dt=1e-3, duration=0.5)
        a = run_scenario(noise=NoiseState(rng_seed=42), **kwargs)
        b = run_scenario(noise=NoiseState(rng_seed=42), **kwargs)
        assert a.equals(b)
        c = run_scenario(noise=NoiseState(rng_seed=43), **kwargs)
        assert not c.equals(a)

    def test_fast_and_generic_paths_agree(self):
        kwargs = dict(plant="mecanum", controller=default_gain_set(), reference=REF,
                      schedule=SwitchSchedule(((0.0, 1), (0.25, 0))), noise=None, s0=S0,
                      dt=1e-3, duration=0.5)
        fast = run_scenario(fast=True, **kwargs)
        slow = run_scenario(fast=False, **kwargs)
        assert np.abs(fast.state - slow.state).max() < 1e-9
        assert np.abs(fast.u - slow.u).max() < 1e-9

    def test_singular_start_raises_with_context(self):
        with pytest.raises(SingularInteractionMatrix) as exc:
            run_scenario("mecanum", default_gain_set(), REF, SwitchSchedule.constant(0),
                         None, ExtendedState(0, -8, 0, 0.0, 0.0), 1e-3, 1.0)
        assert exc.value.t == 0.0

    def test_energy_saving_cheaper_than_dexterous_on_circle(self):
        # the quarter-turn heading target forces transversal motion in dexterous mode
        eco = run_scenario("mecanum", default_gain_set(), REF, SwitchSchedule.constant(0),
                           None, S0, 1e-3, 12.0)
        dex = run_scenario("mecanum", default_gain_set(), REF, SwitchSchedule.constant(1),
                           None, S0, 1e-3, 12.0)
        assert eco.energy[-1] < dex.energy[-1]
        assert np.all(np.diff(eco.energy) >= 0) and np.all(np.diff(dex.energy) >= 0)

    def test_log_immutable(self):
        log = run_scenario("mecanum", default_gain_set(), REF, SwitchSchedule.constant(1),
                           None, S0, 1e-3, 0.1)
        with pytest.raises(ValueError):
            log.state[0, 0] = 99.0

    def test_unknown_plant_rejected(self):
        with pytest.raises(ValueError):
            run_scenario("segway", default_gain_set(), REF, SwitchSchedule.constant(1),
                         None, S0, 1e-3, 0.1)

    def test_off_grid_duration_rejected(self):
        with pytest.raises(ValueError):
            run_scenario("mecanum", default_gain_set(), REF, SwitchSchedule.constant(1),
                         None, S0, 1e-3, 0.1005)


class TestNaivePair:
    def test_transversal_jump_at_switch_equals_pre_switch_speed(self):
        off = -math.asin(1.0 / 3.0)
        ref = circle_reference(8.0, 0.15, heading_offset=off)
        sched = SwitchSchedule(((0.0, 1), (10.0, 0)))
        log = run_scenario("mecanum", BaselineGains(), ref, sched, None, S0, 1e-3, 12.0)
        i = round(10.0 / 1e-3)
        jump = abs(log.state[i, 4] - log.state[i - 1, 4])
        assert log.state[i, 4] == 0.0  # transversal speed killed instantly
        assert jump == pytest.approx(abs(log.state[i - 1, 4]), abs=1e-12)
        assert jump == pytest.approx(0.4, abs=0.02)

    def test_unified_continuous_at_same_switch(self):
        off = -math.asin(1.0 / 3.0)
        ref = circle_reference(8.0, 0.15, heading_offset=off)
        sched = SwitchSchedule(((0.0, 1), (10.0, 0)))
        log = run_scenario("mecanum", default_gain_set(), ref, sched, None, S0, 1e-3, 12.0)
        i = round(10.0 / 1e-3)
        step_jump = abs(log.state[i, 4] - log.state[i - 1, 4])
        assert step_jump <= 1e-3 * np.abs(log.u[:, 1]).max()

    def test_naive_singular_when_switching_at_rest(self):
        ref = line_reference()
        sched = SwitchSchedule(((0.0, 0),))
        with pytest.raises(SingularInteractionMatrix):
            run_scenario("mecanum", BaselineGains(), ref, sched, None,
                         ExtendedState(5, 5, 0, 0.0, 0.0), 1e-3, 1.0)


class TestDecayRateEstimate:
    def test_exact_exponential_recovered(self):
        # synthetic log with a known first-order channel
        t = np.arange(0, 1001) * 1e-2
        e3 = -np.exp(-0.65 * t)
        n = t.shape[0]
        log = SimLog(t=t, state=np.zeros((n, 5)), u_cmd=np.zeros((n, 3)), u=np.zeros((n, 3)),
                     sigma=np.zeros(n, dtype=np.int64), e1=np.column_stack([np.exp(-0.5 * t), np.zeros(n)]),
                     e2=np.exp(-0.75 * t), e3=e3, noise=np.zeros((n, 3)),
                     power=np.zeros(n), energy=np.zeros(n), det=np.ones(n))
        assert decay_rate_estimate(log, "e3", (0.0, 10.0)) == pytest.approx(-0.65, abs=1e-9)
        assert decay_rate_estimate(log, "e2", (0.0, 10.0)) == pytest.approx(-0.75, abs=1e-9)
        assert decay_rate_estimate(log, "e1", (0.0, 10.0)) == pytest.approx(-0.5, abs=1e-9)

    def test_window_across_switch_rejected_for_mode_gated_channels(self):
        t = np.arange(0, 101) * 1e-2
        n = t.shape[0]
        sigma = np.zeros(n, dtype=np.int64)
        sigma[50:] = 1
        log = SimLog(t=t, state=np.zeros((n, 5)), u_cmd=np.zeros((n, 3)), u=np.zeros((n, 3)),
                     sigma=sigma, e1=np.ones((n, 2)), e2=np.exp(-t), e3=np.exp(-t),
                     noise=np.zeros((n, 3)), power=np.zeros(n), energy=np.zeros(n),
                     det=np.ones(n))
        with pytest.raises(ValueError):
            decay_rate_estimate(log, "e2", (0.0, 1.0))
        assert decay_rate_estimate(log, "e1", (0.0, 1.0)) == pytest.approx(0.0, abs=1e-12)

    def test_underflow_guard(self):
        t = np.arange(0, 101) * 1e-2
        n = t.shape[0]
        log = SimLog(t=t, state=np.zeros((n, 5)), u_cmd=np.zeros((n, 3)), u=np.zeros((n, 3)),
                     sigma=np.zeros(n, dtype=np.int64), e1=np.full((n, 2), 1e-14),
                     e2=np.ones(n), e3=np.ones(n), noise=np.zeros((n, 3)),
                     power=np.zeros(n), energy=np.zeros(n), det=np.ones(n))
        with pytest.raises(ChannelUnderflow):
            decay_rate_estimate(log, "e1", (0.0, 1.0))


class TestErrorState:
    def test_error_definitions(self):
        from dualmode.engine import error_state
        s = ExtendedState(1.0, -9.0, 0.3, 0.8, -0.25)
        e = error_state(s, REF, 0.0)
        assert e.e1 == pytest.approx([0.0 - 1.0, -8.0 - (-9.0)])
        assert e.e2 == pytest.approx(math.pi / 2 - 0.3)
        assert e.e3 == 0.25  # exactly the negated transversal speed


class TestStepperEquivalence:
    def test_stepwise_equals_batch(self):
        sched = SwitchSchedule(((0.0, 1), (0.2, 0)))
        batch = run_scenario("mecanum", default_gain_set(), REF, sched, None, S0, 1e-3, 0.4)
        stepper = ScenarioStepper(REF, default_gain_set(), S0, 1e-3)
        sig = sched.sigma_per_step(1e-3, 400)
        rows = [stepper.step(int(sig[i])) for i in range(400)]
        rows.append(stepper.snapshot(int(sig[400])))
        manual = SimLog.from_rows(rows)
        assert batch.equals(manual)
