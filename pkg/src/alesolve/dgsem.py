"""Split-form moving-mesh DGSEM for the 3D compressible Euler equations.

The semi-discrete scheme evolves the nodal Jacobian through the discrete
geometric conservation law and the conserved state through the split-form
divergence of two-point entropy-conservative fluxes,

    dJ_ijk/dt      = V_ijk(nu),
    d(J U)_ijk/dt  = G_ijk(nu, U),

with V and G combining a flux-differencing volume part and a surface
correction (numerical flux minus interior trace).  Time integration is an
explicit Runge-Kutta method whose stage update uses U^n in the V-weighted
term; that is algebraically the conservative update of J U and preserves
free streams in every stage.

Faces of the periodic box are conforming and collocated.  A face is owned
by the element on its "minus" side (lower index along the axis); the face
normal points from minus to plus, and the numerical flux is evaluated once
per face with the minus-side metric trace.
"""

from dataclasses import dataclass

import numpy as np

from alesolve import _kernels
from alesolve.errors import ConfigurationError, StateError, TimeStepError, UsageError
from alesolve.fluxes import FluxSpec
from alesolve.mesh import MovingMesh
from alesolve.physics import Euler, euler_primitives
from alesolve.timeint import RkScheme

_VARIANT_CODES = {
    "chandrashekar": _kernels.VARIANT_CHANDRASHEKAR,
    "ranocha": _kernels.VARIANT_RANOCHA,
}


@dataclass
class FieldState:
    """Nodal conserved states and nodal Jacobians at a time instant."""

    u: np.ndarray  # (K, 5, n, n, n)
    jac: np.ndarray  # (K, n, n, n)
    t: float = 0.0

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        self.jac = np.asarray(self.jac, dtype=float)
        if self.u.shape[0] != self.jac.shape[0] or self.u.shape[2:] != self.jac.shape[1:]:
            raise UsageError("state and Jacobian arrays have inconsistent shapes")
        if np.any(self.jac <= 0.0):
            raise StateError("nodal Jacobians must be positive")


def _require_euler(spec: FluxSpec):
    if not isinstance(spec.system, Euler):
        raise UsageError("the 3D DGSEM supports the Euler system only")


def initial_fields(mesh: MovingMesh, state_fn, t: float = 0.0) -> FieldState:
    """FieldState from a pointwise initial condition u(x) at time t.

    `state_fn` maps positions (..., 3) to states (..., 5).  The Jacobian is
    initialized with the geometric det(grad chi).
    """
    x, _, _, _, jac = mesh.geometry_all(t)
    u = state_fn(np.moveaxis(x, 1, -1))
    u = np.moveaxis(np.asarray(u, dtype=float), -1, 1)
    return FieldState(u=u, jac=jac.copy(), t=t)


def _admissible_prim(spec: FluxSpec, u: np.ndarray) -> np.ndarray:
    """(K, 6, n, n, n) nodal (rho, u1, u2, u3, p, beta); raises StateError
    naming the first offending element/node."""
    gamma = spec.system.gamma
    rho = u[:, 0]
    bad = rho <= 0.0
    if np.any(bad):
        e, i, j, k = (int(v[0]) for v in np.nonzero(bad))
        raise StateError(f"nonpositive density in element {e} at node ({i},{j},{k})")
    vel = u[:, 1:4] / rho[:, None]
    p = (gamma - 1.0) * (u[:, 4] - 0.5 * rho * np.sum(vel * vel, axis=1))
    bad = p <= 0.0
    if np.any(bad):
        e, i, j, k = (int(v[0]) for v in np.nonzero(bad))
        raise StateError(f"nonpositive pressure in element {e} at node ({i},{j},{k})")
    return np.concatenate(
        [rho[:, None], vel, p[:, None], (rho / (2.0 * p))[:, None]], axis=1
    )


def _gcl_volume(mesh: MovingMesh, nu: np.ndarray, ja: np.ndarray) -> np.ndarray:
    """Split-form divergence of the contravariant grid velocity (two-point
    form with arithmetic-mean volume averages of nu and the metric terms)."""
    out = np.empty(nu.shape[:1] + nu.shape[2:])
    _kernels.gcl_volume_divergence(nu, ja, mesh.ops.diff_matrix, out)
    return out


_TRACE_MINUS = (np.s_[..., -1, :, :], np.s_[..., :, -1, :], np.s_[..., :, :, -1])
_TRACE_PLUS = (np.s_[..., 0, :, :], np.s_[..., :, 0, :], np.s_[..., :, :, 0])


@dataclass
class FaceData:
    """Per-axis face quantities shared by the solver and the diagnostics.

    All arrays carry one entry per face (owner-element ordering) and two
    face-node axes, components first.  `sn` is the minus-side metric trace
    s_hat * n (pointing from minus to plus); `g_star` is the single-valued
    contravariant numerical flux of the conservation law.
    """

    axis: int
    minus: np.ndarray  # owner element ids
    plus: np.ndarray  # neighbor element ids
    sn: np.ndarray  # (K, 3, nf, nf)
    u_minus: np.ndarray  # (K, 5, nf, nf)
    u_plus: np.ndarray
    nu_minus: np.ndarray  # (K, 3, nf, nf)
    nu_plus: np.ndarray
    g_star: np.ndarray | None  # (K, 5, nf, nf)
    g_trace_minus: np.ndarray | None
    g_trace_plus: np.ndarray | None


_DISS_CODES = {
    "none": _kernels.DISS_NONE,
    "roe": _kernels.DISS_ROE,
    "rusanov": _kernels.DISS_RUSANOV,
    "blend": _kernels.DISS_BLEND,
}


def _neighbors(mesh: MovingMesh) -> np.ndarray:
    cache = getattr(mesh, "_neighbor_cache", None)
    if cache is None:
        cache = np.array(
            [
                [mesh.neighbor(e, a) for e in range(mesh.num_elements)]
                for a in range(3)
            ]
        )
        mesh._neighbor_cache = cache
    return cache


def _face_data(mesh: MovingMesh, ja, nu, u, prim, spec: FluxSpec | None) -> list[FaceData]:
    """Gather traces and (optionally) numerical fluxes for every face."""
    nbrs = _neighbors(mesh)
    faces = []
    for a in range(3):
        minus = np.arange(mesh.num_elements)
        plus = nbrs[a]
        sn = np.ascontiguousarray(ja[:, a][_TRACE_MINUS[a]])
        nu_m = np.ascontiguousarray(nu[_TRACE_MINUS[a]])
        nu_p = np.ascontiguousarray(nu[plus][_TRACE_PLUS[a]])
        u_m = u_p = g_star = gtr_m = gtr_p = None
        if u is not None:
            u_m = u[_TRACE_MINUS[a]]
            u_p = u[plus][_TRACE_PLUS[a]]
            if spec is not None:
                prim_m = np.ascontiguousarray(prim[_TRACE_MINUS[a]])
                prim_p = np.ascontiguousarray(prim[plus][_TRACE_PLUS[a]])
                g_star = np.empty_like(u_m)
                gtr_m = np.empty_like(u_m)
                gtr_p = np.empty_like(u_m)
                _kernels.euler_face_fluxes(
                    prim_m, prim_p, nu_m, nu_p, sn, spec.system.gamma,
                    _VARIANT_CODES[spec.variant], _DISS_CODES[spec.dissipation],
                    spec.alpha, g_star, gtr_m, gtr_p,
                )
        faces.append(
            FaceData(
                axis=a, minus=minus, plus=plus, sn=sn,
                u_minus=u_m, u_plus=u_p, nu_minus=nu_m, nu_plus=nu_p,
                g_star=g_star, g_trace_minus=gtr_m, g_trace_plus=gtr_p,
            )
        )
    return faces


def _rhs_all(mesh: MovingMesh, t: float, u=None, spec: FluxSpec = None,
             source=None):
    """(V, G) for all elements at time t; G is None when u is None."""
    x, nu, _, ja, jac_geo = mesh.geometry_all(t)
    w = mesh.ops.weights

    prim = None
    if u is not None:
        _require_euler(spec)
        prim = _admissible_prim(spec, u)

    static = mesh.motion.kind == "static"
    faces = _face_data(mesh, ja, nu, u, prim, spec if u is not None else None)
    if static:
        # the grid velocity vanishes identically, and so does V
        v_rhs = np.zeros(u.shape[:1] + u.shape[2:] if u is not None
                         else nu.shape[:1] + nu.shape[2:])
    else:
        v_rhs = _gcl_volume(mesh, nu, ja)
        for f in faces:
            a = f.axis
            nust = np.einsum("kcij,kcij->kij", f.sn,
                             0.5 * (f.nu_minus + f.nu_plus))
            nut_m = np.einsum("kcij,kcij->kij", f.sn, f.nu_minus)
            nut_p = np.einsum("kcij,kcij->kij", f.sn, f.nu_plus)
            # f.plus is a permutation of the element ids, so fancy += is safe
            _accumulate_face(v_rhs, a, -1, f.minus, (nust - nut_m) / w[-1])
            _accumulate_face(v_rhs, a, 0, f.plus, -(nust - nut_p) / w[0])

    if u is None:
        return v_rhs, None, x, jac_geo

    g_rhs = np.empty_like(u)
    _kernels.euler_volume_divergence(
        prim, nu, ja, mesh.ops.diff_matrix, spec.system.gamma,
        _VARIANT_CODES[spec.variant], g_rhs,
    )
    g_rhs = -g_rhs
    for f in faces:
        a = f.axis
        # outward normal is +sn for the owner, -sn for the neighbor side
        _accumulate_face(g_rhs, a, -1, f.minus,
                         -(f.g_star - f.g_trace_minus) / w[-1])
        _accumulate_face(g_rhs, a, 0, f.plus,
                         (f.g_star - f.g_trace_plus) / w[0])

    if source is not None:
        s = source(np.moveaxis(x, 1, -1), t)
        g_rhs += jac_geo[:, None] * np.moveaxis(np.asarray(s, dtype=float), -1, 1)
    return v_rhs, g_rhs, x, jac_geo


def _accumulate_face(target: np.ndarray, axis: int, idx: int, ids: np.ndarray,
                     values: np.ndarray) -> None:
    """Add face-node values into one face slab of the element ids `ids`.

    `target` is (K, n, n, n) or (K, p, n, n, n); the node axes are the last
    three.  `ids` must not contain duplicates.
    """
    node_pos = target.ndim - 3 + axis
    index = [ids] + [slice(None)] * (target.ndim - 1)
    index[node_pos] = idx
    target[tuple(index)] += values


def gcl_rhs(mesh: MovingMesh, element: int, t: float) -> np.ndarray:
    """Nodal D-GCL right-hand side V of one element (zeros on static meshes)."""
    v_rhs, _, _, _ = _rhs_all(mesh, t)
    return v_rhs[element]


def conservation_rhs(mesh: MovingMesh, fields: FieldState, spec: FluxSpec,
                     element: int, t: float, source=None) -> np.ndarray:
    """Nodal conservation-law right-hand side G of one element."""
    _, g_rhs, _, _ = _rhs_all(mesh, t, fields.u, spec, source)
    return g_rhs[element]


def rk_step(mesh: MovingMesh, fields: FieldState, spec: FluxSpec,
            scheme: RkScheme, t: float, dt: float, source=None) -> FieldState:
    """One explicit RK step of the coupled (J, U) system.

    The Jacobian is advanced first in every stage; geometry (metric terms,
    normals, grid velocities) is re-evaluated at each stage time.
    """
    if dt <= 0.0:
        raise UsageError(f"dt must be positive, got {dt}")
    s = scheme.num_stages
    u_n, j_n = fields.u, fields.jac

    v_st = np.empty((s,) + j_n.shape)
    g_st = np.empty((s,) + u_n.shape)
    u_stage = u_n
    for tau in range(s):
        stage_t = t + scheme.c[tau] * dt
        if tau > 0:
            j_tau = j_n + dt * np.einsum("s,s...->...", scheme.a[tau, :tau],
                                         v_st[:tau])
            if np.any(j_tau <= 0.0):
                raise TimeStepError(
                    "stage Jacobian became nonpositive; reduce the time step"
                )
            incr = np.einsum(
                "s,s...->...",
                scheme.a[tau, :tau],
                g_st[:tau] - v_st[:tau, :, None] * u_n[None],
            )
            u_stage = u_n + dt * incr / j_tau[:, None]
        v_st[tau], g_st[tau], _, _ = _rhs_all(mesh, stage_t, u_stage, spec, source)

    j_new = j_n + dt * np.einsum("s,s...->...", scheme.b, v_st)
    if np.any(j_new <= 0.0):
        raise TimeStepError("Jacobian became nonpositive; reduce the time step")
    incr = np.einsum("s,s...->...", scheme.b, g_st - v_st[:, :, None] * u_n[None])
    u_new = u_n + dt * incr / j_new[:, None]
    return FieldState(u=u_new, jac=j_new, t=t + dt)


def min_element_size(mesh: MovingMesh, t: float) -> float:
    """Minimum over elements of the 12 corner-to-corner edge lengths."""
    x, _, _, _, _ = mesh.geometry_all(t, check=False)
    corners = x[:, :, [0, -1]][:, :, :, [0, -1]][:, :, :, :, [0, -1]]
    edges = []
    for axis in range(3):
        lo = np.take(corners, 0, axis=2 + axis)
        hi = np.take(corners, 1, axis=2 + axis)
        edges.append(np.sqrt(np.sum((hi - lo) ** 2, axis=1)).reshape(
            mesh.num_elements, -1))
    lengths = np.concatenate(edges, axis=1)  # (K, 12)
    return float(lengths.min())


def compute_dt(mesh: MovingMesh, fields: FieldState, t: float, cfl: float,
               spec: FluxSpec | None = None, dt_max: float = np.inf) -> float:
    """dt = cfl * min element size / ((2N+1) * max advective speed)."""
    if not 0.0 < cfl <= 1.0:
        raise ConfigurationError(f"cfl must be in (0, 1], got {cfl}")
    system = spec.system if spec is not None else Euler()
    _, nu, _, _, _ = mesh.geometry_all(t, check=False)
    rho, vel, p, _ = euler_primitives(
        system, np.moveaxis(fields.u, 1, -1)
    )
    c = np.sqrt(system.gamma * p / rho)
    lam = 0.0
    for axis in range(3):
        lam = max(lam, float(np.max(np.abs(vel[..., axis] - nu[:, axis]) + c)))
    if lam == 0.0:
        return dt_max
    h_min = min_element_size(mesh, t)
    return min(cfl * h_min / ((2 * mesh.ops.degree + 1) * lam), dt_max)


def face_flux_data(mesh: MovingMesh, fields: FieldState, spec: FluxSpec,
                   t: float) -> list[FaceData]:
    """Faces with the exact numerical fluxes the solver would use at (t)."""
    _require_euler(spec)
    _, nu, _, ja, _ = mesh.geometry_all(t)
    prim = _admissible_prim(spec, fields.u)
    return _face_data(mesh, ja, nu, fields.u, prim, spec)


def save_checkpoint(path, mesh: MovingMesh, fields: FieldState,
                    config_hash: str = "") -> None:
    """Optional flat checkpoint: arrays plus an identifying header."""
    np.savez(
        path,
        u=fields.u,
        jac=fields.jac,
        t=np.array(fields.t),
        degree=np.array(mesh.ops.degree),
        counts=np.array(mesh.counts),
        config_hash=np.array(config_hash),
    )


def load_checkpoint(path) -> FieldState:
    data = np.load(path, allow_pickle=False)
    return FieldState(u=data["u"], jac=data["jac"], t=float(data["t"]))
