import math

import numpy as np
import pytest

from alesolve.errors import StateError, UsageError
from alesolve.physics import (
    Euler,
    ShallowWater,
    entropy_quantities,
    log_mean,
    max_wave_speed,
    physical_flux,
)


def euler_state(rho, vel, p, gamma=1.4):
    vel = np.asarray(vel, dtype=float)
    return np.array(
        [rho, rho * vel[0], rho * vel[1], rho * vel[2],
         p / (gamma - 1.0) + 0.5 * rho * np.dot(vel, vel)]
    )


def shallow_state(h, vel):
    return np.array([h, h * vel[0], h * vel[1]])


def random_euler_states(n, seed=0):
    rng = np.random.default_rng(seed)
    rho = rng.uniform(0.1, 10.0, n)
    vel = rng.uniform(-5.0, 5.0, (n, 3))
    p = rng.uniform(0.1, 10.0, n)
    u = np.empty((n, 5))
    u[:, 0] = rho
    u[:, 1:4] = rho[:, None] * vel
    u[:, 4] = p / 0.4 + 0.5 * rho * np.sum(vel**2, axis=1)
    return u


def random_shallow_states(n, seed=0):
    rng = np.random.default_rng(seed)
    h = rng.uniform(0.1, 10.0, n)
    vel = rng.uniform(-5.0, 5.0, (n, 2))
    u = np.empty((n, 3))
    u[:, 0] = h
    u[:, 1:3] = h[:, None] * vel
    return u


class TestPhysicalFlux:
    def test_euler_stagnation(self):
        u = euler_state(1.0, (0, 0, 0), 1.0)
        np.testing.assert_allclose(
            physical_flux("euler", u, 1), [0, 1, 0, 0, 0], atol=1e-15
        )

    def test_euler_free_stream_state(self):
        u = np.array([1.0, 0.3, 0.0, 0.0, 17.0])
        p = 0.4 * (17.0 - 0.045)
        assert abs(p - 6.782) < 1e-12
        f = physical_flux("euler", u, 1)
        np.testing.assert_allclose(
            f, [0.3, 0.09 + p, 0.0, 0.0, (17.0 + p) * 0.3], rtol=1e-14
        )

    def test_shallow_lake_at_rest(self):
        u = shallow_state(1.0, (0, 0))
        f = physical_flux(ShallowWater(gravity=9.81), u, 1)
        np.testing.assert_allclose(f, [0, 4.905, 0], atol=1e-14)

    def test_nonpositive_density_rejected(self):
        with pytest.raises(StateError):
            physical_flux("euler", np.array([-1.0, 0, 0, 0, 1.0]), 1)
        with pytest.raises(StateError):
            physical_flux("shallow", np.array([0.0, 0, 0]), 1)

    def test_nonpositive_pressure_rejected(self):
        with pytest.raises(StateError):
            physical_flux("euler", np.array([1.0, 3.0, 0, 0, 1.0]), 1)

    def test_bad_direction(self):
        with pytest.raises(UsageError):
            physical_flux("euler", euler_state(1, (0, 0, 0), 1), 4)
        with pytest.raises(UsageError):
            physical_flux("shallow", shallow_state(1, (0, 0)), 3)


class TestEntropyQuantities:
    def test_euler_reference_state(self):
        b = entropy_quantities("euler", euler_state(1.0, (0, 0, 0), 1.0))
        assert abs(b.entropy) < 1e-15  # sigma = log(1) = 0
        assert abs(b.potential - 1.0) < 1e-15
        np.testing.assert_allclose(b.flux_potentials, 0.0, atol=1e-15)

    def test_shallow_potential(self):
        b = entropy_quantities(ShallowWater(gravity=1.0), shallow_state(2.0, (0, 0)))
        assert abs(b.potential - 2.0) < 1e-14  # g h^2 / 2 with g = 1

    @pytest.mark.parametrize("system", ["euler", "shallow"])
    def test_entropy_vars_match_gradient(self, system):
        # central finite differences of s(u) with step 1e-6
        states = (
            random_euler_states(100) if system == "euler"
            else random_shallow_states(100)
        )
        w = entropy_quantities(system, states).entropy_vars
        eps = 1e-6
        fd = np.empty_like(w)
        for c in range(states.shape[1]):
            up = states.copy()
            um = states.copy()
            up[:, c] += eps
            um[:, c] -= eps
            fd[:, c] = (
                entropy_quantities(system, up).entropy
                - entropy_quantities(system, um).entropy
            ) / (2 * eps)
        scale = np.max(np.abs(w), axis=1)
        assert np.max(np.abs(w - fd) / scale[:, None]) <= 1e-6

    @pytest.mark.parametrize("system", ["euler", "shallow"])
    def test_potential_identities(self, system):
        states = (
            random_euler_states(100, seed=3) if system == "euler"
            else random_shallow_states(100, seed=3)
        )
        b = entropy_quantities(system, states)
        phi = np.einsum("ni,ni->n", b.entropy_vars, states) - b.entropy
        scale = 1.0 + np.abs(phi)
        assert np.max(np.abs(phi - b.potential) / scale) <= 1e-12
        ndirs = 3 if system == "euler" else 2
        for direction in range(1, ndirs + 1):
            f = physical_flux(system, states, direction)
            u_l = states[:, direction] / states[:, 0]
            if system == "euler":
                fs = b.entropy * u_l
            else:
                h = states[:, 0]
                vsq = np.sum((states[:, 1:3] / h[:, None]) ** 2, axis=1)
                fs = 0.5 * h * u_l * vsq + h * h * u_l  # entropy flux, g = 1
            psi = np.einsum("ni,ni->n", b.entropy_vars, f) - fs
            ref = b.flux_potentials[:, direction - 1]
            scale = 1.0 + np.abs(ref) + np.sum(np.abs(b.entropy_vars * f), axis=1)
            assert np.max(np.abs(psi - ref) / scale) <= 1e-12


class TestWaveSpeed:
    def test_euler_at_rest(self):
        u = euler_state(1.0, (0, 0, 0), 1.0)
        speed = max_wave_speed("euler", u, np.zeros(3), 1)
        assert abs(speed - math.sqrt(1.4)) < 1e-14

    def test_comoving_frame(self):
        u = euler_state(1.0, (2.0, 0, 0), 1.0)
        nu = np.array([2.0, 0.0, 0.0])
        c = math.sqrt(1.4)
        assert abs(max_wave_speed("euler", u, nu, 1) - c) < 1e-14

    def test_shallow(self):
        u = shallow_state(1.0, (2.0, 0.0))
        assert abs(max_wave_speed(ShallowWater(1.0), u, np.zeros(2), 1) - 3.0) < 1e-14


class TestLogMean:
    def test_equal_arguments(self):
        assert log_mean(2.0, 2.0) == 2.0

    def test_one_e(self):
        assert abs(log_mean(1.0, math.e) - (math.e - 1.0)) < 1e-14

    def test_near_equal_series(self):
        a, b = 1.0, 1.0 + 1e-12
        assert abs(log_mean(a, b) - 0.5 * (a + b)) <= 1e-13

    def test_symmetry_exact(self):
        rng = np.random.default_rng(11)
        a = rng.uniform(0.1, 10.0, 500)
        b = rng.uniform(0.1, 10.0, 500)
        assert np.all(log_mean(a, b) == log_mean(b, a))

    def test_between_min_and_max(self):
        rng = np.random.default_rng(12)
        a = rng.uniform(0.1, 10.0, 500)
        b = rng.uniform(0.1, 10.0, 500)
        m = log_mean(a, b)
        assert np.all(m >= np.minimum(a, b)) and np.all(m <= np.maximum(a, b))

    def test_continuity_across_switch(self):
        # straddle the series/direct switch at (zeta-1)^2 = 1e-4
        for b in (1.0 + 0.00999, 1.0 + 0.01001):
            direct = (b - 1.0) / math.log(b)
            assert abs(log_mean(1.0, b) - direct) < 1e-13

    def test_positive_required(self):
        with pytest.raises(StateError):
            log_mean(-1.0, 2.0)
