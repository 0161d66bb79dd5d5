import numpy as np
import pytest

from alesolve.errors import ConfigurationError
from alesolve.timeint import (
    RkScheme,
    classic_rk4,
    get_scheme,
    lserk45,
    order_condition_residuals,
)


@pytest.mark.parametrize("scheme", [lserk45(), classic_rk4()], ids=lambda s: s.name)
def test_fourth_order_conditions(scheme):
    residuals = order_condition_residuals(scheme)
    assert max(residuals.values()) <= 1e-13


def test_lserk45_shape():
    scheme = lserk45()
    assert scheme.num_stages == 5
    assert scheme.order == 4
    assert np.all(np.triu(scheme.a) == 0.0)


def test_scalar_convergence_order():
    # y' = -y + sin(3t), exact solution available
    def rhs(t, y):
        return -y + np.sin(3 * t)

    def exact(t):
        # particular + homogeneous for y(0) = 1
        c = 1.0 + 0.3
        return (np.sin(3 * t) - 3 * np.cos(3 * t)) / 10.0 + c * np.exp(-t)

    for scheme in (lserk45(), classic_rk4()):
        errors = []
        for nsteps in (20, 40, 80):
            dt = 1.0 / nsteps
            y, t = 1.0, 0.0
            for _ in range(nsteps):
                k = np.zeros(scheme.num_stages)
                for tau in range(scheme.num_stages):
                    y_stage = y + dt * np.dot(scheme.a[tau, :tau], k[:tau])
                    k[tau] = rhs(t + scheme.c[tau] * dt, y_stage)
                y += dt * np.dot(scheme.b, k)
                t += dt
            errors.append(abs(y - exact(1.0)))
        rates = [np.log2(errors[i] / errors[i + 1]) for i in range(2)]
        assert all(3.7 <= r <= 4.3 for r in rates), (scheme.name, rates)


def test_get_scheme():
    assert get_scheme("rk4").name == "rk4"
    assert get_scheme("lserk45").num_stages == 5
    with pytest.raises(ConfigurationError):
        get_scheme("ab2")


def test_tableau_validation():
    a = np.zeros((2, 2))
    a[0, 1] = 1.0  # not explicit
    with pytest.raises(ConfigurationError):
        RkScheme("bad", a, np.array([0.5, 0.5]), np.array([0.0, 1.0]), 2)
    with pytest.raises(ConfigurationError):
        RkScheme(
            "bad", np.zeros((2, 2)), np.array([0.5, 0.9]), np.array([0.0, 1.0]), 2
        )
