"""Two-point entropy-conservative fluxes with moving-mesh extension.

Every flux here satisfies the moving-mesh two-point entropy condition

    jump(w)^T G_l = jump(psi_l) - avg(nu_l) jump(phi),

which reduces to Tadmor's classical shuffle condition for a static mesh.
The moving-mesh flux is assembled as G_l = F_l - avg(nu_l) U# from a static
entropy-conservative flux F_l and a state function U# with
jump(w)^T U# = jump(phi), so the decomposition holds bitwise.

States and grid velocities broadcast over leading axes (state components on
the last axis).  Supported variants: Euler 'chandrashekar' and 'ranocha',
shallow water 'wgwk' and 'fmt'.  Dissipation operators H_l = Rhat |Lambda|
Rhat^T are assembled as Gram matrices M M^T with M = Rhat sqrt(|Lambda|), so
they are symmetric positive semidefinite by construction.
"""

from dataclasses import dataclass, field

import numpy as np

from alesolve.errors import ConfigurationError, UsageError
from alesolve.physics import (
    Euler,
    ShallowWater,
    as_system,
    entropy_quantities,
    euler_primitives,
    log_mean,
    max_wave_speed,
    shallow_primitives,
)

_EULER_VARIANTS = ("chandrashekar", "ranocha")
_SHALLOW_VARIANTS = ("wgwk", "fmt")
_DISSIPATION_MODES = ("none", "roe", "rusanov", "blend")


@dataclass(frozen=True)
class FluxSpec:
    """Selection of equation system, EC flux variant, and dissipation mode."""

    system: object = "euler"
    variant: str = "chandrashekar"
    dissipation: str = "none"
    alpha: float = 0.0  # blend weight on the Rusanov part

    def __post_init__(self):
        object.__setattr__(self, "system", as_system(self.system))
        allowed = (
            _EULER_VARIANTS if isinstance(self.system, Euler) else _SHALLOW_VARIANTS
        )
        if self.variant not in allowed:
            raise ConfigurationError(
                f"variant {self.variant!r} not valid for this system; "
                f"expected one of {allowed}"
            )
        if self.dissipation not in _DISSIPATION_MODES:
            raise ConfigurationError(
                f"dissipation mode {self.dissipation!r} not in {_DISSIPATION_MODES}"
            )
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigurationError(f"alpha must be in [0, 1], got {self.alpha}")


def _avg(a, b):
    return 0.5 * (a + b)


def _check_direction(sys, direction):
    if direction not in range(1, sys.num_directions + 1):
        raise UsageError(
            f"direction must be in 1..{sys.num_directions}, got {direction}"
        )
    return direction - 1


@dataclass
class _EulerPair:
    """Symmetric two-point averages shared by the Euler flux variants."""

    rho_avg: np.ndarray
    rho_log: np.ndarray
    beta_avg: np.ndarray
    beta_log: np.ndarray
    u_avg: np.ndarray  # (..., 3)
    usq_bar: np.ndarray  # 2 sum avg(u_j)^2 - sum avg(u_j^2)
    p_avg: np.ndarray
    pu_avg: np.ndarray  # (..., 3) averages of p u_j
    vel: tuple = field(repr=False, default=None)  # per-side velocities


def _euler_pair(sys, u_m, u_p) -> _EulerPair:
    rho_m, vel_m, p_m, beta_m = euler_primitives(sys, u_m)
    rho_p, vel_p, p_p, beta_p = euler_primitives(sys, u_p)
    u_avg = _avg(vel_m, vel_p)
    usq_bar = 2.0 * np.sum(u_avg * u_avg, axis=-1) - np.sum(
        _avg(vel_m * vel_m, vel_p * vel_p), axis=-1
    )
    return _EulerPair(
        rho_avg=_avg(rho_m, rho_p),
        rho_log=log_mean(rho_m, rho_p),
        beta_avg=_avg(beta_m, beta_p),
        beta_log=log_mean(beta_m, beta_p),
        u_avg=u_avg,
        usq_bar=usq_bar,
        p_avg=_avg(p_m, p_p),
        pu_avg=_avg(p_m[..., None] * vel_m, p_p[..., None] * vel_p),
        vel=(vel_m, vel_p),
    )


def _euler_state_function(sys, pair: _EulerPair) -> np.ndarray:
    gamma = sys.gamma
    out = np.empty(pair.rho_avg.shape + (5,))
    out[..., 0] = pair.rho_log
    for j in range(3):
        out[..., 1 + j] = pair.rho_log * pair.u_avg[..., j]
    out[..., 4] = pair.rho_log / (2.0 * (gamma - 1.0) * pair.beta_log) + (
        0.5 * pair.rho_log * pair.usq_bar
    )
    return out


def _euler_static_flux(sys, pair: _EulerPair, variant: str, axis: int) -> np.ndarray:
    gamma = sys.gamma
    un = pair.u_avg[..., axis]
    mass = pair.rho_log * un
    out = np.empty(pair.rho_avg.shape + (5,))
    out[..., 0] = mass
    for j in range(3):
        out[..., 1 + j] = mass * pair.u_avg[..., j]
    internal = mass / (2.0 * (gamma - 1.0) * pair.beta_log)
    if variant == "chandrashekar":
        p_tilde = pair.rho_avg / (2.0 * pair.beta_avg)
        out[..., 1 + axis] += p_tilde
        out[..., 4] = internal + 0.5 * mass * pair.usq_bar + p_tilde * un
    else:  # ranocha
        out[..., 1 + axis] += pair.p_avg
        out[..., 4] = (
            internal
            + 0.5 * mass * pair.usq_bar
            + 2.0 * pair.p_avg * un
            - pair.pu_avg[..., axis]
        )
    return out


@dataclass
class _ShallowPair:
    h_avg: np.ndarray
    hsq_avg: np.ndarray
    hu_avg: np.ndarray  # (..., 2) averages of the conserved discharge
    u_avg: np.ndarray  # (..., 2)
    vel: tuple = field(repr=False, default=None)
    h: tuple = field(repr=False, default=None)


def _shallow_pair(sys, u_m, u_p) -> _ShallowPair:
    h_m, vel_m = shallow_primitives(sys, u_m)
    h_p, vel_p = shallow_primitives(sys, u_p)
    return _ShallowPair(
        h_avg=_avg(h_m, h_p),
        hsq_avg=_avg(h_m * h_m, h_p * h_p),
        hu_avg=_avg(np.asarray(u_m, dtype=float)[..., 1:3],
                    np.asarray(u_p, dtype=float)[..., 1:3]),
        u_avg=_avg(vel_m, vel_p),
        vel=(vel_m, vel_p),
        h=(h_m, h_p),
    )


def _shallow_state_function(pair: _ShallowPair) -> np.ndarray:
    out = np.empty(pair.h_avg.shape + (3,))
    out[..., 0] = pair.h_avg
    out[..., 1] = pair.h_avg * pair.u_avg[..., 0]
    out[..., 2] = pair.h_avg * pair.u_avg[..., 1]
    return out


def _shallow_static_flux(sys, pair: _ShallowPair, variant: str, axis: int) -> np.ndarray:
    g = sys.gravity
    out = np.empty(pair.h_avg.shape + (3,))
    if variant == "wgwk":
        mass = pair.hu_avg[..., axis]
        p_term = g * pair.h_avg * pair.h_avg - 0.5 * g * pair.hsq_avg
    else:  # fmt
        mass = pair.h_avg * pair.u_avg[..., axis]
        p_term = 0.5 * g * pair.hsq_avg
    out[..., 0] = mass
    for j in range(2):
        out[..., 1 + j] = mass * pair.u_avg[..., j]
    out[..., 1 + axis] += p_term
    return out


def state_function(system, u_m, u_p) -> np.ndarray:
    """State function U# with jump(w)^T U# = jump(phi); symmetric, consistent."""
    sys = as_system(system)
    if isinstance(sys, Euler):
        return _euler_state_function(sys, _euler_pair(sys, u_m, u_p))
    return _shallow_state_function(_shallow_pair(sys, u_m, u_p))


def static_ec_flux(spec: FluxSpec, u_m, u_p, direction: int) -> np.ndarray:
    """Static-mesh entropy-conservative two-point flux F_l for the variant."""
    axis = _check_direction(spec.system, direction)
    if isinstance(spec.system, Euler):
        pair = _euler_pair(spec.system, u_m, u_p)
        return _euler_static_flux(spec.system, pair, spec.variant, axis)
    pair = _shallow_pair(spec.system, u_m, u_p)
    return _shallow_static_flux(spec.system, pair, spec.variant, axis)


def ec_flux(spec: FluxSpec, nu_m, nu_p, u_m, u_p, direction: int) -> np.ndarray:
    """Moving-mesh EC flux G_l = F_l - avg(nu_l) U#.

    Symmetric under exchange of the (velocity, state) pairs and consistent:
    equal arguments yield f_l(u) - avg(nu_l) u.
    """
    axis = _check_direction(spec.system, direction)
    sys = spec.system
    nu_avg = _avg(
        np.asarray(nu_m, dtype=float)[..., axis],
        np.asarray(nu_p, dtype=float)[..., axis],
    )
    if isinstance(sys, Euler):
        pair = _euler_pair(sys, u_m, u_p)
        flux = _euler_static_flux(sys, pair, spec.variant, axis)
        ustar = _euler_state_function(sys, pair)
    else:
        pair = _shallow_pair(sys, u_m, u_p)
        flux = _shallow_static_flux(sys, pair, spec.variant, axis)
        ustar = _shallow_state_function(pair)
    return flux - nu_avg[..., None] * ustar


def _euler_rhat(sys, pair: _EulerPair, axis: int) -> np.ndarray:
    """Scaled right-eigenvector matrix Rhat = R* T* for direction `axis`."""
    gamma = sys.gamma
    cbar = np.sqrt(gamma * pair.rho_avg / (2.0 * pair.rho_log * pair.beta_avg))
    hbar = gamma / (2.0 * (gamma - 1.0) * pair.beta_log) + 0.5 * pair.usq_bar
    u1, u2, u3 = (pair.u_avg[..., j] for j in range(3))
    un = pair.u_avg[..., axis]

    shape = pair.rho_avg.shape
    r = np.zeros(shape + (5, 5))
    one = np.ones(shape)

    # acoustic columns 0 and 4
    for col, sign in ((0, -1.0), (4, 1.0)):
        r[..., 0, col] = one
        r[..., 1, col] = u1
        r[..., 2, col] = u2
        r[..., 3, col] = u3
        r[..., 1 + axis, col] = un + sign * cbar
        r[..., 4, col] = hbar + sign * un * cbar
    # entropy column (index axis+1 among the middle columns)
    ent_col = 1 + axis
    r[..., 0, ent_col] = one
    r[..., 1, ent_col] = u1
    r[..., 2, ent_col] = u2
    r[..., 3, ent_col] = u3
    r[..., 4, ent_col] = 0.5 * pair.usq_bar
    # shear columns for the two transverse velocities
    shear_cols = [c for c in (1, 2, 3) if c != ent_col]
    trans = [j for j in range(3) if j != axis]
    for col, j in zip(shear_cols, trans):
        r[..., 1 + j, col] = one
        r[..., 4, col] = pair.u_avg[..., j]

    scale = np.empty(shape + (5,))
    acoustic = np.sqrt(pair.rho_log / (2.0 * gamma))
    entropy = np.sqrt((gamma - 1.0) / gamma * pair.rho_log)
    shear = np.sqrt(pair.rho_avg / (2.0 * pair.beta_avg))
    scale[..., 0] = acoustic
    scale[..., 4] = acoustic
    scale[..., ent_col] = entropy
    for col in shear_cols:
        scale[..., col] = shear
    return r * scale[..., None, :]


def _shallow_rhat(sys, pair: _ShallowPair, axis: int) -> np.ndarray:
    g = sys.gravity
    cbar = np.sqrt(g * pair.h_avg)
    u1, u2 = pair.u_avg[..., 0], pair.u_avg[..., 1]
    un = pair.u_avg[..., axis]

    shape = pair.h_avg.shape
    r = np.zeros(shape + (3, 3))
    one = np.ones(shape)
    for col, sign in ((0, -1.0), (2, 1.0)):
        r[..., 0, col] = one
        r[..., 1, col] = u1
        r[..., 2, col] = u2
        r[..., 1 + axis, col] = un + sign * cbar
    trans = 1 - axis
    r[..., 1 + trans, 1] = one

    scale = np.empty(shape + (3,))
    scale[..., 0] = 1.0 / np.sqrt(2.0 * g)
    scale[..., 2] = 1.0 / np.sqrt(2.0 * g)
    scale[..., 1] = np.sqrt(pair.h_avg)
    return r * scale[..., None, :]


def dissipation_matrix(spec: FluxSpec, u_m, u_p, nu_m, nu_p, direction: int) -> np.ndarray:
    """Symmetric positive semidefinite H_l = Rhat |Lambda_l| Rhat^T."""
    if spec.dissipation == "none":
        raise UsageError("dissipation_matrix requires a dissipation mode != 'none'")
    axis = _check_direction(spec.system, direction)
    sys = spec.system
    if isinstance(sys, Euler):
        pair = _euler_pair(sys, u_m, u_p)
        rhat = _euler_rhat(sys, pair, axis)
    else:
        pair = _shallow_pair(sys, u_m, u_p)
        rhat = _shallow_rhat(sys, pair, axis)
    lam = _abs_eigenvalues_from_pair(spec, pair, u_m, u_p, nu_m, nu_p, axis)
    m = rhat * np.sqrt(lam)[..., None, :]
    return m @ np.swapaxes(m, -1, -2)


def _pair_of(spec: FluxSpec, u_m, u_p):
    if isinstance(spec.system, Euler):
        return _euler_pair(spec.system, u_m, u_p)
    return _shallow_pair(spec.system, u_m, u_p)


def _static_flux_of(spec: FluxSpec, pair, axis: int) -> np.ndarray:
    if isinstance(spec.system, Euler):
        return _euler_static_flux(spec.system, pair, spec.variant, axis)
    return _shallow_static_flux(spec.system, pair, spec.variant, axis)


def _state_function_of(spec: FluxSpec, pair) -> np.ndarray:
    if isinstance(spec.system, Euler):
        return _euler_state_function(spec.system, pair)
    return _shallow_state_function(pair)


def _rhat_of(spec: FluxSpec, pair, axis: int) -> np.ndarray:
    if isinstance(spec.system, Euler):
        return _euler_rhat(spec.system, pair, axis)
    return _shallow_rhat(spec.system, pair, axis)


def _abs_eigenvalues_from_pair(spec: FluxSpec, pair, u_m, u_p, nu_m, nu_p,
                               axis: int) -> np.ndarray:
    sys = spec.system
    nu_m = np.asarray(nu_m, dtype=float)
    nu_p = np.asarray(nu_p, dtype=float)
    p = sys.num_components
    if isinstance(sys, Euler):
        cbar = np.sqrt(sys.gamma * pair.rho_avg / (2.0 * pair.rho_log * pair.beta_avg))
    else:
        cbar = np.sqrt(sys.gravity * pair.h_avg)
    rel = pair.u_avg[..., axis] - _avg(nu_m[..., axis], nu_p[..., axis])

    roe = np.empty(np.shape(rel) + (p,))
    roe[..., 0] = np.abs(rel - cbar)
    roe[..., p - 1] = np.abs(rel + cbar)
    for j in range(1, p - 1):
        roe[..., j] = np.abs(rel)
    if spec.dissipation == "roe":
        return roe
    rus = np.maximum(
        max_wave_speed(sys, u_m, nu_m, axis + 1),
        max_wave_speed(sys, u_p, nu_p, axis + 1),
    )[..., None] * np.ones(p)
    if spec.dissipation == "rusanov":
        return rus
    return spec.alpha * rus + (1.0 - spec.alpha) * roe


def _es_fluxes(spec: FluxSpec, nu_m, nu_p, u_m, u_p, directions):
    """ES (or EC) fluxes for several directions sharing one pair evaluation."""
    sys = spec.system
    pair = _pair_of(spec, u_m, u_p)
    ustar = _state_function_of(spec, pair)
    nu_m = np.asarray(nu_m, dtype=float)
    nu_p = np.asarray(nu_p, dtype=float)
    if spec.dissipation != "none":
        jump_w = (
            entropy_quantities(sys, u_p).entropy_vars
            - entropy_quantities(sys, u_m).entropy_vars
        )
    out = []
    for direction in directions:
        axis = _check_direction(sys, direction)
        nu_avg = _avg(nu_m[..., axis], nu_p[..., axis])
        g = _static_flux_of(spec, pair, axis) - nu_avg[..., None] * ustar
        if spec.dissipation != "none":
            rhat = _rhat_of(spec, pair, axis)
            lam = _abs_eigenvalues_from_pair(spec, pair, u_m, u_p, nu_m, nu_p, axis)
            z = lam * np.einsum("...ij,...i->...j", rhat, jump_w)
            g = g - 0.5 * np.einsum("...ij,...j->...i", rhat, z)
        out.append(g)
    return out


def es_flux(spec: FluxSpec, nu_m, nu_p, u_m, u_p, direction: int) -> np.ndarray:
    """Entropy-stable flux G_l^ES = G_l^EC - 1/2 H_l jump(w).

    With dissipation mode 'none' this returns the EC flux unchanged.
    """
    return _es_fluxes(spec, nu_m, nu_p, u_m, u_p, (direction,))[0]


def es_flux_normal(spec: FluxSpec, nu_m, nu_p, u_m, u_p, sn: np.ndarray) -> np.ndarray:
    """Metric-contracted surface flux sum_l sn_l G_l^ES.

    `sn` holds the scaled normal components on the last axis.
    """
    fluxes = _es_fluxes(
        spec, nu_m, nu_p, u_m, u_p, range(1, spec.system.num_directions + 1)
    )
    out = 0.0
    for axis, g_l in enumerate(fluxes):
        out = out + sn[..., axis : axis + 1] * g_l
    return out


def random_admissible_states(system, n: int, rng: np.random.Generator):
    """Seeded sample of admissible states and grid velocities for testing.

    Ranges: rho, h, p in [0.1, 10]; velocity components in [-5, 5];
    grid velocity components in [-5, 5].
    """
    sys = as_system(system)
    if isinstance(sys, Euler):
        rho = rng.uniform(0.1, 10.0, n)
        vel = rng.uniform(-5.0, 5.0, (n, 3))
        p = rng.uniform(0.1, 10.0, n)
        u = np.empty((n, 5))
        u[:, 0] = rho
        u[:, 1:4] = rho[:, None] * vel
        u[:, 4] = p / (sys.gamma - 1.0) + 0.5 * rho * np.sum(vel * vel, axis=1)
        nu = rng.uniform(-5.0, 5.0, (n, 3))
    else:
        h = rng.uniform(0.1, 10.0, n)
        vel = rng.uniform(-5.0, 5.0, (n, 2))
        u = np.empty((n, 3))
        u[:, 0] = h
        u[:, 1:3] = h[:, None] * vel
        nu = rng.uniform(-5.0, 5.0, (n, 2))
    return u, nu


def check_tadmor(spec: FluxSpec, samples: int, seed: int = 0) -> float:
    """Max relative residual of the moving-mesh two-point entropy condition
    over `samples` seeded random state/velocity pairs and all directions."""
    if samples < 1:
        raise UsageError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    sys = spec.system
    u_m, nu_m = random_admissible_states(sys, samples, rng)
    u_p, nu_p = random_admissible_states(sys, samples, rng)

    bundle_m = entropy_quantities(sys, u_m)
    bundle_p = entropy_quantities(sys, u_p)
    jump_w = bundle_p.entropy_vars - bundle_m.entropy_vars
    jump_phi = bundle_p.potential - bundle_m.potential

    worst = 0.0
    for direction in range(1, sys.num_directions + 1):
        axis = direction - 1
        g = ec_flux(spec, nu_m, nu_p, u_m, u_p, direction)
        jump_psi = (
            bundle_p.flux_potentials[..., axis] - bundle_m.flux_potentials[..., axis]
        )
        nu_avg = _avg(nu_m[..., axis], nu_p[..., axis])
        residual = np.einsum("...i,...i->...", jump_w, g) - (
            jump_psi - nu_avg * jump_phi
        )
        scale = (
            np.sum(np.abs(jump_w * g), axis=-1)
            + np.abs(jump_psi)
            + np.abs(nu_avg * jump_phi)
            + 1.0
        )
        worst = max(worst, float(np.max(np.abs(residual) / scale)))
    return worst


def check_symmetry(spec: FluxSpec, samples: int, seed: int = 0) -> float:
    """Max absolute asymmetry of the EC flux under argument exchange."""
    rng = np.random.default_rng(seed)
    sys = spec.system
    u_m, nu_m = random_admissible_states(sys, samples, rng)
    u_p, nu_p = random_admissible_states(sys, samples, rng)
    worst = 0.0
    for direction in range(1, sys.num_directions + 1):
        g_ab = ec_flux(spec, nu_m, nu_p, u_m, u_p, direction)
        g_ba = ec_flux(spec, nu_p, nu_m, u_p, u_m, direction)
        worst = max(worst, float(np.max(np.abs(g_ab - g_ba))))
    return worst


def check_spd(spec: FluxSpec, samples: int, seed: int = 0) -> float:
    """Min over samples of (smallest eigenvalue of H_l) / ||H_l||."""
    rng = np.random.default_rng(seed)
    sys = spec.system
    u_m, nu_m = random_admissible_states(sys, samples, rng)
    u_p, nu_p = random_admissible_states(sys, samples, rng)
    worst = np.inf
    for direction in range(1, sys.num_directions + 1):
        h = dissipation_matrix(spec, u_m, u_p, nu_m, nu_p, direction)
        eigs = np.linalg.eigvalsh(h)
        norm = np.maximum(np.abs(eigs).max(axis=-1), 1e-300)
        worst = min(worst, float(np.min(eigs[..., 0] / norm)))
    return worst
