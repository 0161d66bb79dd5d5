import numpy as np
import pytest

from alesolve.errors import ConfigurationError, StateError, TimeStepError, UsageError
from alesolve.fluxes import FluxSpec
from alesolve.fv1d import (
    FvState,
    IntervalMotion,
    compute_dt,
    fv_rhs,
    fv_rk_step,
    initial_state,
    total_entropy_for,
)
from alesolve.physics import entropy_quantities
from alesolve.timeint import classic_rk4, lserk45

TWO_PI = 2.0 * np.pi


def euler_profile(num_cells, length=TWO_PI):
    x = (np.arange(num_cells) + 0.5) / num_cells * length
    phase = TWO_PI * x / length
    rho = 2.0 + 0.5 * np.sin(phase)
    vel = 0.3 + 0.2 * np.cos(phase)
    p = 1.0 + 0.3 * np.sin(phase + 0.4)
    return np.stack(
        [rho, rho * vel, np.zeros_like(x), np.zeros_like(x),
         p / 0.4 + 0.5 * rho * vel**2], axis=1
    )


def shallow_profile(num_cells, length=TWO_PI):
    x = (np.arange(num_cells) + 0.5) / num_cells * length
    phase = TWO_PI * x / length
    h = 2.0 + 0.5 * np.sin(phase)
    vel = 0.3 + 0.2 * np.cos(phase)
    return np.stack([h, h * vel, np.zeros_like(x)], axis=1)


class TestIntervalMotion:
    def test_validation(self):
        with pytest.raises(ConfigurationError):
            IntervalMotion(0.0, 1.0, 0)
        with pytest.raises(ConfigurationError):
            IntervalMotion(1.0, 0.0, 4)
        with pytest.raises(ConfigurationError):
            IntervalMotion(0.0, 1.0, 4, kind="spin")

    def test_velocity_is_time_derivative(self):
        motion = IntervalMotion(0.0, TWO_PI, 16, 0.05, "sinusoidal")
        eps = 1e-6
        for t in (0.05, 0.3, 0.77):
            fd = (motion.node_positions(t + eps) - motion.node_positions(t - eps)) / (
                2 * eps
            )
            np.testing.assert_allclose(motion.node_velocities(t), fd, atol=1e-8)

    def test_jacobians_positive_requirement(self):
        motion = IntervalMotion(0.0, TWO_PI, 8, kind="static")
        u = euler_profile(8)
        state = initial_state(motion, u)
        assert np.all(state.jac > 0)
        # sum of Jacobians is half the domain length
        assert abs(state.jac.sum() - TWO_PI / 2.0) < 1e-13
        bad = state.jac.copy()
        bad[0] = -1.0
        with pytest.raises(StateError):
            FvState(u=u, jac=bad, motion=motion)


class TestFvRhs:
    def test_static_constant_zero(self):
        motion = IntervalMotion(0.0, TWO_PI, 12, kind="static")
        u = np.tile([1.0, 0.3, 0.0, 0.0, 17.0], (12, 1))
        state = initial_state(motion, u)
        spec = FluxSpec("euler", "chandrashekar")
        djdt, djudt = fv_rhs(state, spec, 0.0)
        assert np.max(np.abs(djdt)) == 0.0
        assert np.max(np.abs(djudt)) <= 1e-14

    def test_moving_constant_consistency(self):
        # d(Ju)/dt must equal u dJ/dt componentwise for constant states
        motion = IntervalMotion(0.0, TWO_PI, 12, 0.05, "sinusoidal")
        const = np.array([1.0, 0.3, 0.0, 0.0, 17.0])
        u = np.tile(const, (12, 1))
        state = initial_state(motion, u)
        spec = FluxSpec("euler", "chandrashekar")
        djdt, djudt = fv_rhs(state, spec, 0.37)
        np.testing.assert_allclose(
            djudt, djdt[:, None] * const[None, :], rtol=1e-12, atol=1e-14
        )

    @pytest.mark.parametrize(
        "system,variant,profile",
        [
            ("euler", "chandrashekar", euler_profile),
            ("euler", "ranocha", euler_profile),
            ("shallow", "wgwk", shallow_profile),
            ("shallow", "fmt", shallow_profile),
        ],
    )
    def test_semidiscrete_entropy_conservation(self, system, variant, profile):
        # periodic EC flux: sum_k [w_k^T d(J_k u_k)/dt - phi_k dJ_k/dt] = 0
        motion = IntervalMotion(0.0, TWO_PI, 16, 0.05, "sinusoidal")
        u = profile(16)
        state = initial_state(motion, u)
        spec = FluxSpec(system, variant)
        djdt, djudt = fv_rhs(state, spec, 0.23)
        bundle = entropy_quantities(system, u)
        rate = np.einsum("ki,ki->k", bundle.entropy_vars, djudt) - (
            bundle.potential * djdt
        )
        scale = np.sum(np.abs(bundle.entropy_vars * djudt)) + 1.0
        assert abs(rate.sum()) / scale <= 1e-12

    def test_two_cell_entropy_bookkeeping(self):
        # dam-break-like shallow states on two periodic cells
        motion = IntervalMotion(0.0, 2.0, 2, 0.05, "sinusoidal")
        u = np.array([[2.0, 0.2, 0.0], [1.0, -0.1, 0.0]])
        state = initial_state(motion, u)
        spec = FluxSpec("shallow", "wgwk")
        djdt, djudt = fv_rhs(state, spec, 0.1)
        bundle = entropy_quantities("shallow", u)
        total = float(
            np.einsum("ki,ki->", bundle.entropy_vars, djudt)
            - np.dot(bundle.potential, djdt)
        )
        assert abs(total) <= 1e-12


class TestRkStep:
    def test_constant_state_preserved(self):
        motion = IntervalMotion(0.0, TWO_PI, 32, 0.05, "sinusoidal")
        const = np.array([1.0, 0.3, 0.0, 0.0, 17.0])
        u = np.tile(const, (32, 1))
        spec = FluxSpec("euler", "chandrashekar", dissipation="roe")
        state = initial_state(motion, u)
        t = 0.0
        dt = 1.3 / 1000
        for _ in range(1000):
            state = fv_rk_step(state, spec, t, dt, lserk45())
            t += dt
        assert np.max(np.abs(state.u - const)) <= 1e-13

    def test_static_mesh_jacobian_constant(self):
        motion = IntervalMotion(0.0, TWO_PI, 16, kind="static")
        u = euler_profile(16)
        spec = FluxSpec("euler", "chandrashekar")
        state = initial_state(motion, u)
        j0 = state.jac.copy()
        state = fv_rk_step(state, spec, 0.0, 1e-3, classic_rk4())
        np.testing.assert_array_equal(state.jac, j0)

    def test_jacobian_tracks_geometry_fourth_order(self):
        motion = IntervalMotion(0.0, TWO_PI, 16, 0.05, "sinusoidal")
        u = np.tile([1.0, 0.3, 0.0, 0.0, 17.0], (16, 1))
        spec = FluxSpec("euler", "chandrashekar")
        final = 0.37
        errors = []
        for nsteps in (8, 16, 32):
            state = initial_state(motion, u.copy())
            dt = final / nsteps
            t = 0.0
            for _ in range(nsteps):
                state = fv_rk_step(state, spec, t, dt, classic_rk4())
                t += dt
            exact = np.diff(motion.node_positions(final)) / 2.0
            errors.append(np.max(np.abs(state.jac - exact)))
        rates = [np.log2(errors[i] / errors[i + 1]) for i in range(2)]
        assert all(3.5 <= r <= 4.6 for r in rates)

    def test_translation_keeps_jacobian(self):
        motion = IntervalMotion(0.0, TWO_PI, 8, 0.1, "translation")
        u = euler_profile(8)
        spec = FluxSpec("euler", "chandrashekar")
        state = initial_state(motion, u)
        j0 = state.jac.copy()
        t = 0.0
        for _ in range(10):
            state = fv_rk_step(state, spec, t, 1e-3, classic_rk4())
            t += 1e-3
        np.testing.assert_allclose(state.jac, j0, rtol=1e-13)

    def test_invalid_dt(self):
        motion = IntervalMotion(0.0, TWO_PI, 8, kind="static")
        state = initial_state(motion, euler_profile(8))
        with pytest.raises(UsageError):
            fv_rk_step(state, FluxSpec(), 0.0, 0.0, classic_rk4())

    def test_stage_jacobian_failure_detected(self):
        # huge dt drives a stage Jacobian negative on a shrinking cell
        motion = IntervalMotion(0.0, TWO_PI, 8, 0.05, "sinusoidal")
        state = initial_state(motion, euler_profile(8))
        spec = FluxSpec("euler", "chandrashekar")
        with pytest.raises((TimeStepError, StateError)):
            for _ in range(100):
                state = fv_rk_step(state, spec, 0.1, 5.0, classic_rk4())


class TestEntropyAccounting:
    def test_uniform_entropy_zero(self):
        motion = IntervalMotion(0.0, 2.0, 8, kind="static")
        u = np.tile([1.0, 0.0, 0.0, 0.0, 1.0 / 0.4], (8, 1))
        state = initial_state(motion, u)
        assert abs(total_entropy_for("euler", state)) <= 1e-14

    def test_linearity_in_jacobian(self):
        motion = IntervalMotion(0.0, TWO_PI, 8, kind="static")
        u = euler_profile(8)
        state = initial_state(motion, u)
        s1 = total_entropy_for("euler", state)
        state.jac = state.jac * 2.0
        assert abs(total_entropy_for("euler", state) - 2.0 * s1) <= 1e-12 * abs(s1)

    @pytest.mark.parametrize(
        "system,variant,profile",
        [("euler", "chandrashekar", euler_profile), ("shallow", "wgwk", shallow_profile)],
    )
    def test_entropy_drift_fourth_order(self, system, variant, profile):
        motion = IntervalMotion(0.0, TWO_PI, 32, 0.05, "sinusoidal")
        u = profile(32)
        spec = FluxSpec(system, variant)
        final = 0.25
        drifts = []
        for nsteps in (50, 100, 200):
            state = initial_state(motion, u.copy())
            s0 = total_entropy_for(system, state)
            dt = final / nsteps
            t = 0.0
            for _ in range(nsteps):
                state = fv_rk_step(state, spec, t, dt, lserk45())
                t += dt
            drifts.append(abs(total_entropy_for(system, state) - s0))
        rates = [np.log2(drifts[i] / drifts[i + 1]) for i in range(2)]
        assert all(3.5 <= r <= 4.5 for r in rates)


class TestComputeDt:
    def test_linear_in_cfl_and_size(self):
        motion = IntervalMotion(0.0, TWO_PI, 16, kind="static")
        state = initial_state(motion, euler_profile(16))
        spec = FluxSpec("euler", "chandrashekar")
        dt1 = compute_dt(state, spec, 0.0, 0.4)
        dt2 = compute_dt(state, spec, 0.0, 0.8)
        assert abs(dt2 - 2.0 * dt1) <= 1e-15
        motion2 = IntervalMotion(0.0, TWO_PI, 32, kind="static")
        state2 = initial_state(motion2, euler_profile(32))
        dt3 = compute_dt(state2, spec, 0.0, 0.4)
        assert dt3 < 0.6 * dt1

    def test_cfl_validated(self):
        motion = IntervalMotion(0.0, TWO_PI, 8, kind="static")
        state = initial_state(motion, euler_profile(8))
        with pytest.raises(ConfigurationError):
            compute_dt(state, FluxSpec(), 0.0, 1.5)
