"""Explicit Runge-Kutta schemes in Butcher form.

The default scheme is the five-stage fourth-order low-storage method of
Kennedy, Carpenter and Lewis, transcribed from its 2N-storage coefficients
into Butcher form; a classical RK4 is provided as a cross check.
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from alesolve.errors import ConfigurationError

# 2N-storage coefficients of the five-stage fourth-order scheme
# (Carpenter/Kennedy family; c_i are the stage times).
_LSRK45_A = (
    Fraction(0),
    Fraction(-567301805773, 1357537059087),
    Fraction(-2404267990393, 2016746695238),
    Fraction(-3550918686646, 2091501179385),
    Fraction(-1275806237668, 842570457699),
)
_LSRK45_B = (
    Fraction(1432997174477, 9575080441755),
    Fraction(5161836677717, 13612068292357),
    Fraction(1720146321549, 2090206949498),
    Fraction(3134564353537, 4481467310338),
    Fraction(2277821191437, 14882151754819),
)
_LSRK45_C = (
    Fraction(0),
    Fraction(1432997174477, 9575080441755),
    Fraction(2526269341429, 6820363962896),
    Fraction(2006345519317, 3224310063776),
    Fraction(2802321613138, 2924317926251),
)


@dataclass(frozen=True)
class RkScheme:
    """Explicit Runge-Kutta Butcher tableau (a strictly lower triangular)."""

    name: str
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    order: int

    def __post_init__(self):
        s = self.b.size
        if self.a.shape != (s, s) or self.c.size != s:
            raise ConfigurationError("inconsistent Butcher tableau shapes")
        if np.any(np.triu(self.a) != 0.0):
            raise ConfigurationError("scheme must be explicit (a strictly lower)")
        if abs(self.b.sum() - 1.0) > 1e-13:
            raise ConfigurationError("b coefficients must sum to 1")

    @property
    def num_stages(self) -> int:
        return self.b.size


def _butcher_from_low_storage(a_coeffs, b_coeffs) -> tuple[np.ndarray, np.ndarray]:
    """Convert 2N-storage (A_i, B_i) coefficients to a Butcher tableau.

    The low-storage recursion is dU_i = A_i dU_{i-1} + k_i,
    u_i = u_{i-1} + dt B_i dU_i; expanding u_i in the stage derivatives k_j
    yields the Butcher rows exactly (done in rational arithmetic).
    """
    s = len(b_coeffs)
    beta = [[Fraction(0)] * s for _ in range(s)]
    alpha = [[Fraction(0)] * s for _ in range(s)]
    for i in range(s):
        beta[i][i] = Fraction(1)
        for j in range(i):
            beta[i][j] = a_coeffs[i] * beta[i - 1][j]
        prev = alpha[i - 1] if i else [Fraction(0)] * s
        for j in range(s):
            alpha[i][j] = prev[j] + b_coeffs[i] * beta[i][j]
    a = np.zeros((s, s))
    for i in range(1, s):
        for j in range(i):
            a[i, j] = float(alpha[i - 1][j])
    b = np.array([float(alpha[s - 1][j]) for j in range(s)])
    return a, b


def lserk45() -> RkScheme:
    """Five-stage fourth-order low-storage scheme in Butcher form."""
    a, b = _butcher_from_low_storage(_LSRK45_A, _LSRK45_B)
    c = np.array([float(ci) for ci in _LSRK45_C])
    return RkScheme(name="lserk45", a=a, b=b, c=c, order=4)


def classic_rk4() -> RkScheme:
    a = np.zeros((4, 4))
    a[1, 0] = 0.5
    a[2, 1] = 0.5
    a[3, 2] = 1.0
    b = np.array([1.0, 2.0, 2.0, 1.0]) / 6.0
    c = np.array([0.0, 0.5, 0.5, 1.0])
    return RkScheme(name="rk4", a=a, b=b, c=c, order=4)


_SCHEMES = {"lserk45": lserk45, "rk4": classic_rk4}


def get_scheme(name: str) -> RkScheme:
    try:
        return _SCHEMES[name]()
    except KeyError:
        raise ConfigurationError(
            f"unknown RK scheme {name!r}; available: {sorted(_SCHEMES)}"
        ) from None


def order_condition_residuals(scheme: RkScheme) -> dict[str, float]:
    """Residuals of the order conditions up to order 4."""
    a, b, c = scheme.a, scheme.b, scheme.c
    ac = a @ c
    return {
        "sum_b": abs(b.sum() - 1.0),
        "order2": abs(b @ c - 0.5),
        "order3_cc": abs(b @ (c * c) - 1.0 / 3.0),
        "order3_ac": abs(b @ ac - 1.0 / 6.0),
        "order4_ccc": abs(b @ (c**3) - 0.25),
        "order4_cac": abs((b * c) @ ac - 0.125),
        "order4_acc": abs(b @ (a @ (c * c)) - 1.0 / 12.0),
        "order4_aac": abs(b @ (a @ ac) - 1.0 / 24.0),
        "row_sums": float(np.max(np.abs(a.sum(axis=1) - c))),
    }
