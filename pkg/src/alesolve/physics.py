"""Equation systems: compressible Euler (3D) and shallow water (2D).

State vectors are stored along the last axis, so every operation broadcasts
over arbitrary leading batch dimensions.  Euler states are
(rho, rho*u1, rho*u2, rho*u3, E); shallow water states are (h, h*u1, h*u2).
All functions are pure.
"""

from dataclasses import dataclass

import numpy as np

from alesolve.errors import StateError, UsageError

_LOG_MEAN_SERIES_CUT = 1e-4  # on (zeta - 1)^2, zeta = ratio of the two arguments


@dataclass(frozen=True)
class Euler:
    """Ideal-gas compressible Euler equations."""

    gamma: float = 1.4
    num_components: int = 5
    num_directions: int = 3


@dataclass(frozen=True)
class ShallowWater:
    """Homogeneous shallow water equations (no bottom topography)."""

    gravity: float = 1.0
    num_components: int = 3
    num_directions: int = 2


_SYSTEMS = {"euler": Euler, "shallow": ShallowWater}


def as_system(system):
    """Accept an equation-system instance or the names 'euler'/'shallow'."""
    if isinstance(system, (Euler, ShallowWater)):
        return system
    try:
        return _SYSTEMS[system]()
    except (KeyError, TypeError):
        raise UsageError(f"unknown system {system!r}") from None


@dataclass(frozen=True)
class EntropyBundle:
    """Entropy s, entropy variables w, and the potentials phi and psi_l."""

    entropy: np.ndarray
    entropy_vars: np.ndarray
    potential: np.ndarray
    flux_potentials: np.ndarray  # (..., num_directions)


def _check_direction(system, direction: int) -> int:
    if direction not in range(1, system.num_directions + 1):
        raise UsageError(
            f"direction must be in 1..{system.num_directions}, got {direction}"
        )
    return direction - 1


def euler_primitives(sys: Euler, u: np.ndarray, check: bool = True):
    """Return (rho, velocity (...,3), pressure, beta) from conserved variables."""
    u = np.asarray(u, dtype=float)
    rho = u[..., 0]
    if check and np.any(rho <= 0.0):
        raise StateError("nonpositive density")
    vel = u[..., 1:4] / rho[..., None]
    kinetic = 0.5 * rho * np.sum(vel * vel, axis=-1)
    p = (sys.gamma - 1.0) * (u[..., 4] - kinetic)
    if check and np.any(p <= 0.0):
        raise StateError("nonpositive pressure")
    beta = rho / (2.0 * p)
    return rho, vel, p, beta


def shallow_primitives(sys: ShallowWater, u: np.ndarray, check: bool = True):
    """Return (h, velocity (...,2)) from conserved variables."""
    u = np.asarray(u, dtype=float)
    h = u[..., 0]
    if check and np.any(h <= 0.0):
        raise StateError("nonpositive water height")
    vel = u[..., 1:3] / h[..., None]
    return h, vel


def physical_flux(system, u: np.ndarray, direction: int) -> np.ndarray:
    """Physical flux vector f_l(u) in Cartesian direction l (1-based)."""
    sys = as_system(system)
    axis = _check_direction(sys, direction)
    u = np.asarray(u, dtype=float)
    flux = np.empty_like(u)
    if isinstance(sys, Euler):
        rho, vel, p, _ = euler_primitives(sys, u)
        un = vel[..., axis]
        flux[..., 0] = rho * un
        for j in range(3):
            flux[..., 1 + j] = u[..., 1 + j] * un
        flux[..., 1 + axis] += p
        flux[..., 4] = (u[..., 4] + p) * un
    else:
        h, vel = shallow_primitives(sys, u)
        un = vel[..., axis]
        g = sys.gravity
        flux[..., 0] = u[..., 1 + axis]
        for j in range(2):
            flux[..., 1 + j] = u[..., 1 + j] * un
        flux[..., 1 + axis] += 0.5 * g * h * h
    return flux


def entropy_quantities(system, u: np.ndarray) -> EntropyBundle:
    """Entropy, entropy variables, and potentials for admissible states."""
    sys = as_system(system)
    u = np.asarray(u, dtype=float)
    if isinstance(sys, Euler):
        gamma = sys.gamma
        rho, vel, p, beta = euler_primitives(sys, u)
        vsq = np.sum(vel * vel, axis=-1)
        sigma = np.log(p) - gamma * np.log(rho)
        s = -rho * sigma / (gamma - 1.0)
        w = np.empty_like(u)
        w[..., 0] = (gamma - sigma) / (gamma - 1.0) - beta * vsq
        for j in range(3):
            w[..., 1 + j] = 2.0 * beta * vel[..., j]
        w[..., 4] = -2.0 * beta
        phi = rho
        psi = rho[..., None] * vel
    else:
        g = sys.gravity
        h, vel = shallow_primitives(sys, u)
        vsq = np.sum(vel * vel, axis=-1)
        s = 0.5 * h * vsq + 0.5 * g * h * h
        w = np.empty_like(u)
        w[..., 0] = g * h - 0.5 * vsq
        w[..., 1] = vel[..., 0]
        w[..., 2] = vel[..., 1]
        phi = 0.5 * g * h * h
        psi = (0.5 * g * h * h)[..., None] * vel
    return EntropyBundle(
        entropy=s, entropy_vars=w, potential=phi, flux_potentials=psi
    )


def sound_speed(system, u: np.ndarray) -> np.ndarray:
    """Acoustic / gravity-wave speed: sqrt(gamma p / rho) or sqrt(g h)."""
    sys = as_system(system)
    if isinstance(sys, Euler):
        rho, _, p, _ = euler_primitives(sys, u)
        return np.sqrt(sys.gamma * p / rho)
    h, _ = shallow_primitives(sys, u)
    return np.sqrt(sys.gravity * h)


def max_wave_speed(system, u: np.ndarray, grid_velocity, direction: int) -> np.ndarray:
    """Largest |lambda_i^l(u) - nu_l| over the eigenvalues u_l -+ c, u_l, u_l +- c."""
    sys = as_system(system)
    axis = _check_direction(sys, direction)
    u = np.asarray(u, dtype=float)
    if isinstance(sys, Euler):
        _, vel, _, _ = euler_primitives(sys, u)
    else:
        _, vel = shallow_primitives(sys, u)
    c = sound_speed(sys, u)
    if grid_velocity is None:
        nu_l = 0.0
    else:
        nu_l = np.asarray(grid_velocity, dtype=float)[..., axis]
    return np.abs(vel[..., axis] - nu_l) + c


def log_mean(a, b):
    """Logarithmic mean (b - a) / (ln b - ln a), continuous at a = b.

    Near-equal arguments use the series 1 + u/3 + u^2/5 + u^3/7 in
    u = ((zeta-1)/(zeta+1))^2 to avoid cancellation.  Computed on the
    ordered pair so the result is exactly symmetric in (a, b).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(a <= 0.0) or np.any(b <= 0.0):
        raise StateError("log_mean requires positive arguments")
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    zeta = lo / hi
    f = (zeta - 1.0) / (zeta + 1.0)
    usq = f * f
    series = 1.0 + usq * (1.0 / 3.0 + usq * (1.0 / 5.0 + usq / 7.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = np.log(zeta) / (2.0 * f)
    big = (zeta - 1.0) ** 2 >= _LOG_MEAN_SERIES_CUT
    fac = np.where(big, direct, series)
    out = (lo + hi) / (2.0 * fac)
    if out.ndim == 0:
        return float(out)
    return out
