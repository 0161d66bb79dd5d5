"""Entropy accounting, error norms, convergence rates, and the
manufactured-solution machinery for the 3D Euler solver.

Reductions over elements use fixed-order compensated summation so recorded
values are independent of any parallel execution layout.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from alesolve.dgsem import FieldState, face_flux_data
from alesolve.errors import UsageError
from alesolve.fluxes import FluxSpec, dissipation_matrix
from alesolve.mesh import MovingMesh
from alesolve.physics import Euler, entropy_quantities


def _quadrature_sum(mesh: MovingMesh, values: np.ndarray) -> float:
    """sum_elements <values, J-free> with tensor LGL weights, compensated."""
    w = mesh.ops.weights
    www = w[:, None, None] * w[None, :, None] * w[None, None, :]
    return math.fsum((values * www).ravel())


def discrete_entropy(mesh: MovingMesh, fields: FieldState,
                     system=None) -> float:
    """S_bar = sum over elements of <s(U), J>_N."""
    system = system if system is not None else Euler()
    s = entropy_quantities(system, np.moveaxis(fields.u, 1, -1)).entropy
    return _quadrature_sum(mesh, s * fields.jac)


def conserved_integrals(mesh: MovingMesh, fields: FieldState) -> np.ndarray:
    """J-weighted integrals of the five conserved variables."""
    return np.array(
        [_quadrature_sum(mesh, fields.u[:, c] * fields.jac) for c in range(5)]
    )


@dataclass
class RunRecord:
    """Time series of entropy and conserved integrals plus run metadata."""

    metadata: dict = field(default_factory=dict)
    times: list = field(default_factory=list)
    entropy: list = field(default_factory=list)
    mass: list = field(default_factory=list)
    momentum: list = field(default_factory=list)
    energy: list = field(default_factory=list)

    def append(self, t: float, entropy: float, integrals: np.ndarray) -> None:
        if self.times and t <= self.times[-1]:
            raise UsageError("timestamps must be strictly increasing")
        self.times.append(float(t))
        self.entropy.append(float(entropy))
        self.mass.append(float(integrals[0]))
        self.momentum.append(tuple(float(v) for v in integrals[1:4]))
        self.energy.append(float(integrals[4]))

    def record(self, mesh: MovingMesh, fields: FieldState) -> None:
        self.append(
            fields.t,
            discrete_entropy(mesh, fields),
            conserved_integrals(mesh, fields),
        )


def entropy_error(record: RunRecord, final_time: float) -> float:
    """Delta_S = S_bar(T) - S_bar(0) from a record covering [0, T]."""
    if not record.times:
        raise UsageError("empty record")
    if record.times[-1] < final_time - 1e-12:
        raise UsageError(
            f"record ends at {record.times[-1]}, before T={final_time}"
        )
    idx = int(np.argmin(np.abs(np.asarray(record.times) - final_time)))
    return record.entropy[idx] - record.entropy[0]


def error_norms(mesh: MovingMesh, fields: FieldState, exact_fn, t: float):
    """Per-variable (L2, Linf) errors against an exact solution at time t.

    The L2 norm is the J-weighted LGL quadrature of the squared nodal
    error, square-rooted (the volume integral on the moving domain).
    """
    x, _, _, _, _ = mesh.geometry_all(t, check=False)
    exact = np.moveaxis(
        np.asarray(exact_fn(np.moveaxis(x, 1, -1), t), dtype=float), -1, 1
    )
    diff = fields.u - exact
    l2 = np.array(
        [
            math.sqrt(
                max(_quadrature_sum(mesh, diff[:, c] ** 2 * fields.jac), 0.0)
            )
            for c in range(diff.shape[1])
        ]
    )
    linf = np.max(np.abs(diff), axis=(0, 2, 3, 4))
    return l2, linf


def eoc(entries) -> list:
    """Experimental orders of convergence from (K_per_direction, error) rows.

    The rate between consecutive rows is log(e_c/e_f) / log(h_c/h_f) with
    h proportional to 1/K_per_direction.  Zero errors make the rate
    undefined and yield None.
    """
    entries = list(entries)
    if len(entries) < 2:
        raise UsageError("need at least two (K, error) entries")
    rates = []
    for (k_c, e_c), (k_f, e_f) in zip(entries[:-1], entries[1:]):
        if e_c <= 0.0 or e_f <= 0.0:
            rates.append(None)
            continue
        rates.append(math.log(e_c / e_f) / math.log(k_f / k_c))
    return rates


_MMS_GAMMA = 1.4


def mms_exact(x: np.ndarray, t: float) -> np.ndarray:
    """Smooth manufactured Euler solution; all momenta equal the density."""
    phase = np.pi * (x[..., 0] + x[..., 1] + x[..., 2] - 0.6 * t)
    a = 2.0 + 0.1 * np.sin(phase)
    out = np.empty(x.shape[:-1] + (5,))
    out[..., 0] = a
    out[..., 1] = a
    out[..., 2] = a
    out[..., 3] = a
    out[..., 4] = a * a
    return out


def mms_source(x: np.ndarray, t: float) -> np.ndarray:
    """Forcing that makes `mms_exact` solve the Euler system (gamma = 1.4).

    Closed form of d u/dt + div f for the manufactured state: with
    a = 2 + 0.1 sin(phase) and its spatial derivative da, the pressure is
    p = 0.4 (a^2 - 1.5 a), and the components reduce to multiples of da.
    """
    phase = np.pi * (x[..., 0] + x[..., 1] + x[..., 2] - 0.6 * t)
    a = 2.0 + 0.1 * np.sin(phase)
    da = 0.1 * np.pi * np.cos(phase)
    dp = 0.4 * (2.0 * a - 1.5) * da
    out = np.empty(x.shape[:-1] + (5,))
    out[..., 0] = 2.4 * da
    out[..., 1] = 2.4 * da + dp
    out[..., 2] = out[..., 1]
    out[..., 3] = out[..., 1]
    out[..., 4] = (7.2 * a - 1.8) * da
    return out


def interior_face_entropy_residual(mesh: MovingMesh, fields: FieldState,
                                   spec: FluxSpec, t: float) -> float:
    """Max over interior face nodes of the two-point entropy identity defect.

    For the EC flux the identity jump(Psi_n) - avg(nu_n) jump(Phi)
    - jump(W)^T Gstar_n vanishes; with matrix dissipation it equals the
    quadratic form 1/2 sum_l s n_l jump(W)^T H_l jump(W), which is
    subtracted before taking the maximum.
    """
    worst = 0.0
    for f in face_flux_data(mesh, fields, spec, t):
        u_m = np.moveaxis(f.u_minus, 1, -1)
        u_p = np.moveaxis(f.u_plus, 1, -1)
        b_m = entropy_quantities(spec.system, u_m)
        b_p = entropy_quantities(spec.system, u_p)
        sn = np.moveaxis(f.sn, 1, -1)
        nu_m = np.moveaxis(f.nu_minus, 1, -1)
        nu_p = np.moveaxis(f.nu_plus, 1, -1)

        psi_n_m = np.sum(sn * b_m.flux_potentials, axis=-1)
        psi_n_p = np.sum(sn * b_p.flux_potentials, axis=-1)
        nu_n_m = np.sum(sn * nu_m, axis=-1)
        nu_n_p = np.sum(sn * nu_p, axis=-1)
        jump_w = b_p.entropy_vars - b_m.entropy_vars
        g_star = np.moveaxis(f.g_star, 1, -1)

        residual = (
            (psi_n_p - psi_n_m)
            - 0.5 * (nu_n_m + nu_n_p) * (b_p.potential - b_m.potential)
            - np.einsum("...i,...i->...", jump_w, g_star)
        )
        if spec.dissipation != "none":
            for direction in range(1, 4):
                h = dissipation_matrix(spec, u_m, u_p, nu_m, nu_p, direction)
                quad = np.einsum("...i,...ij,...j->...", jump_w, h, jump_w)
                residual = residual - 0.5 * sn[..., direction - 1] * quad
        worst = max(worst, float(np.max(np.abs(residual))))
    return worst
