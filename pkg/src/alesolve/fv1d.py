"""1D moving-mesh finite-volume scheme with simultaneous GCL integration.

Cells [x_k(t), x_{k+1}(t)] map affinely to [-1, 1], so the cell Jacobian is
J_k = dx_k / 2 and the semi-discrete scheme reads

    dJ_k/dt      =  (nu*_{k+1/2} - nu*_{k-1/2}) / 2,
    d(J_k u_k)/dt = -(g*_{k+1/2} - g*_{k-1/2}) / 2,

with nu* the mean of the left/right interface velocity samples and g* a
two-point flux for the velocity-shifted flux f - nu u.  Both samples come
from the same analytic interface trajectory here (conforming 1D mesh), so
nu* is the exact interface velocity.  Boundaries are periodic.

Euler runs use the 3D state with u2 = u3 = 0 and the x1 flux; shallow-water
runs use the 2D state with u2 transported passively.
"""

from dataclasses import dataclass

import numpy as np

from alesolve.errors import ConfigurationError, StateError, TimeStepError, UsageError
from alesolve.fluxes import FluxSpec, es_flux
from alesolve.physics import Euler, entropy_quantities
from alesolve.timeint import RkScheme

_TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class IntervalMotion:
    """Prescribed trajectories of the K+1 cell interface nodes.

    kinds: 'static'; 'sinusoidal' displaces a node by
    amplitude * L * sin(2 pi t) * sin(2 pi x(0) / L); 'translation' moves
    every node by amplitude * sin(2 pi t).
    """

    x_min: float
    x_max: float
    num_cells: int
    amplitude: float = 0.05
    kind: str = "sinusoidal"

    def __post_init__(self):
        if self.num_cells < 1:
            raise ConfigurationError("need at least one cell")
        if not self.x_max > self.x_min:
            raise ConfigurationError("degenerate bounds")
        if self.kind not in ("static", "sinusoidal", "translation"):
            raise ConfigurationError(f"unknown motion kind {self.kind!r}")

    @property
    def initial_nodes(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.num_cells + 1)

    def node_positions(self, t: float) -> np.ndarray:
        x0 = self.initial_nodes
        if self.kind == "static":
            return x0.copy()
        if self.kind == "translation":
            return x0 + self.amplitude * np.sin(_TWO_PI * t)
        ell = self.x_max - self.x_min
        return x0 + self.amplitude * ell * np.sin(_TWO_PI * t) * np.sin(
            _TWO_PI * x0 / ell
        )

    def node_velocities(self, t: float) -> np.ndarray:
        x0 = self.initial_nodes
        if self.kind == "static":
            return np.zeros_like(x0)
        if self.kind == "translation":
            return np.full_like(x0, self.amplitude * _TWO_PI * np.cos(_TWO_PI * t))
        ell = self.x_max - self.x_min
        return (
            self.amplitude * ell * _TWO_PI * np.cos(_TWO_PI * t)
            * np.sin(_TWO_PI * x0 / ell)
        )


@dataclass
class FvState:
    """Cell means, cell Jacobians, and the interface motion at time t."""

    u: np.ndarray  # (K, p)
    jac: np.ndarray  # (K,)
    motion: IntervalMotion
    t: float = 0.0

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        self.jac = np.asarray(self.jac, dtype=float)
        if self.u.shape[0] != self.motion.num_cells or self.jac.shape != (
            self.u.shape[0],
        ):
            raise UsageError("state arrays inconsistent with the cell count")
        if np.any(self.jac <= 0.0):
            raise StateError("cell Jacobians must be positive")


def initial_state(motion: IntervalMotion, u: np.ndarray, t: float = 0.0) -> FvState:
    """State with Jacobians J_k = dx_k(t)/2 from the interface geometry."""
    x = motion.node_positions(t)
    return FvState(u=np.asarray(u, dtype=float), jac=np.diff(x) / 2.0, motion=motion, t=t)


def _interface_velocities(motion: IntervalMotion, t: float) -> np.ndarray:
    """nu* at the K+1 interfaces (left/right samples coincide)."""
    nu_left = motion.node_velocities(t)
    nu_right = nu_left  # conforming motion: both sides sample one trajectory
    return 0.5 * (nu_left + nu_right)


def _interface_fluxes(u: np.ndarray, nu_star: np.ndarray, spec: FluxSpec) -> np.ndarray:
    """g* at the K+1 interfaces of the periodic cell chain."""
    ndirs = spec.system.num_directions
    u_left = np.roll(u, 1, axis=0)  # cell behind interface k is cell k-1
    nu_vec = np.zeros((u.shape[0], ndirs))
    nu_vec[:, 0] = nu_star[:-1]
    g_interior = es_flux(spec, nu_vec, nu_vec, u_left, u, direction=1)
    # interface K is the periodic image of interface 0
    return np.concatenate([g_interior, g_interior[:1]], axis=0)


def fv_rhs(state: FvState, spec: FluxSpec, t: float):
    """Semi-discrete right-hand sides (dJ/dt, d(Ju)/dt) at time t."""
    nu_star = _interface_velocities(state.motion, t)
    g_star = _interface_fluxes(state.u, nu_star, spec)
    djdt = 0.5 * (nu_star[1:] - nu_star[:-1])
    djudt = -0.5 * (g_star[1:] - g_star[:-1])
    return djdt, djudt


def fv_rk_step(state: FvState, spec: FluxSpec, t: float, dt: float,
               scheme: RkScheme) -> FvState:
    """One explicit RK step; the Jacobian is updated first in every stage.

    Stage updates use u^n in the grid-velocity term, which is algebraically
    identical to updating the conserved product J u and dividing by the
    stage Jacobian, and preserves constant states exactly.
    """
    if dt <= 0.0:
        raise UsageError(f"dt must be positive, got {dt}")
    s = scheme.num_stages
    u_n = state.u
    j_n = state.jac

    dj_stages = np.empty((s,) + j_n.shape)
    dju_stages = np.empty((s,) + u_n.shape)
    u_stage = u_n
    for tau in range(s):
        stage_t = t + scheme.c[tau] * dt
        if tau > 0:
            j_tau = j_n + dt * np.einsum("s,s...->...", scheme.a[tau, :tau],
                                         dj_stages[:tau])
            if np.any(j_tau <= 0.0):
                raise TimeStepError(
                    "stage Jacobian became nonpositive; reduce the time step"
                )
            incr = np.einsum(
                "s,s...->...",
                scheme.a[tau, :tau],
                dju_stages[:tau] - dj_stages[:tau, :, None] * u_n[None, :, :],
            )
            u_stage = u_n + dt * incr / j_tau[:, None]
        stage_state = FvState(u=u_stage, jac=j_n, motion=state.motion, t=stage_t)
        dj_stages[tau], dju_stages[tau] = fv_rhs(stage_state, spec, stage_t)

    j_new = j_n + dt * np.einsum("s,s...->...", scheme.b, dj_stages)
    if np.any(j_new <= 0.0):
        raise TimeStepError("Jacobian became nonpositive; reduce the time step")
    incr = np.einsum(
        "s,s...->...",
        scheme.b,
        dju_stages - dj_stages[:, :, None] * u_n[None, :, :],
    )
    u_new = u_n + dt * incr / j_new[:, None]
    return FvState(u=u_new, jac=j_new, motion=state.motion, t=t + dt)


def total_entropy(state: FvState) -> float:
    """sum_k J_k s(u_k)."""
    s = entropy_quantities(_spec_system_of(state), state.u).entropy
    return float(np.dot(state.jac, s))


def _spec_system_of(state: FvState):
    return Euler() if state.u.shape[1] == 5 else "shallow"


def total_entropy_for(system, state: FvState) -> float:
    """sum_k J_k s(u_k) with an explicit equation system."""
    s = entropy_quantities(system, state.u).entropy
    return float(np.dot(state.jac, s))


def compute_dt(state: FvState, spec: FluxSpec, t: float, cfl: float,
               dt_max: float = np.inf) -> float:
    """dt = cfl * min(dx_k) / max wave speed (falls back to dt_max)."""
    from alesolve.physics import max_wave_speed

    if not 0.0 < cfl <= 1.0:
        raise ConfigurationError(f"cfl must be in (0, 1], got {cfl}")
    nu = _interface_velocities(state.motion, t)
    nu_cells = np.zeros((state.u.shape[0], spec.system.num_directions))
    nu_cells[:, 0] = 0.5 * (nu[:-1] + nu[1:])
    lam = float(np.max(max_wave_speed(spec.system, state.u, nu_cells, 1)))
    if lam == 0.0:
        return dt_max
    dx_min = 2.0 * float(np.min(state.jac))
    return min(cfl * dx_min / lam, dt_max)
