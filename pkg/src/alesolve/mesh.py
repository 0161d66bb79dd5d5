"""Prescribed-motion curved hexahedral box meshes.

A structured periodic box is split into Kx*Ky*Kz elements.  Each element map
is the degree-N tensor interpolant of the analytic motion applied to the LGL
tensor grid of the reference element, so neighboring elements share face
node trajectories bitwise and the mesh stays conforming by construction.

Volume-weighted contravariant vectors are computed in conservative curl
form, which makes the discrete metric identities hold and the face-normal
computation watertight.  The time-dependent Jacobian used by the solver is
evolved separately through the discrete geometric conservation law; this
module only provides the geometric Jacobian det(grad chi) for
initialization and cross checks.

Element ids are lexicographic with x fastest:
id = ex + Kx * (ey + Ky * ez).  Face indices 1..6 denote
(-x1, +x1, -x2, +x2, -x3, +x3).
"""

from dataclasses import dataclass

import numpy as np

from alesolve.errors import ConfigurationError, GeometryError, UsageError
from alesolve.operators import OperatorSet

_TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class MeshMotion:
    """Prescribed analytic motion of the initially Cartesian grid points.

    The sinusoidal kind displaces every coordinate of a grid point by

        amplitude * L * sin(2 pi t) * prod_c sin(2 pi x_c(0) / L),

    which is the identity at t = 0 and time-periodic with period 1.
    """

    x_min: float
    x_max: float
    amplitude: float = 0.05
    kind: str = "sinusoidal"

    def __post_init__(self):
        if not self.x_max > self.x_min:
            raise ConfigurationError(
                f"degenerate bounds [{self.x_min}, {self.x_max}]"
            )
        if self.kind not in ("static", "sinusoidal"):
            raise ConfigurationError(f"unknown motion kind {self.kind!r}")

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    def displacement(self, x0: np.ndarray, t: float) -> np.ndarray:
        """Displacement added to every coordinate; x0 has shape (..., 3)."""
        if self.kind == "static":
            return np.zeros(x0.shape[:-1])
        ell = self.length
        prod = (
            np.sin(_TWO_PI * x0[..., 0] / ell)
            * np.sin(_TWO_PI * x0[..., 1] / ell)
            * np.sin(_TWO_PI * x0[..., 2] / ell)
        )
        return self.amplitude * ell * np.sin(_TWO_PI * t) * prod

    def velocity_scalar(self, x0: np.ndarray, t: float) -> np.ndarray:
        """Time derivative of the displacement (same for all 3 components)."""
        if self.kind == "static":
            return np.zeros(x0.shape[:-1])
        ell = self.length
        prod = (
            np.sin(_TWO_PI * x0[..., 0] / ell)
            * np.sin(_TWO_PI * x0[..., 1] / ell)
            * np.sin(_TWO_PI * x0[..., 2] / ell)
        )
        return self.amplitude * ell * _TWO_PI * np.cos(_TWO_PI * t) * prod

    def positions(self, x0: np.ndarray, t: float) -> np.ndarray:
        d = self.displacement(x0, t)
        return x0 + d[..., None]

    def velocities(self, x0: np.ndarray, t: float) -> np.ndarray:
        v = self.velocity_scalar(x0, t)
        return np.broadcast_to(v[..., None], x0.shape).copy()

    def kinematics(self, x0: np.ndarray, t: float):
        """Positions and velocities sharing one evaluation of the profile."""
        if self.kind == "static":
            return x0.copy(), np.zeros_like(x0)
        ell = self.length
        prod = (
            np.sin(_TWO_PI * x0[..., 0] / ell)
            * np.sin(_TWO_PI * x0[..., 1] / ell)
            * np.sin(_TWO_PI * x0[..., 2] / ell)
        )
        disp = self.amplitude * ell * np.sin(_TWO_PI * t) * prod
        vel = self.amplitude * ell * _TWO_PI * np.cos(_TWO_PI * t) * prod
        return x0 + disp[..., None], np.broadcast_to(
            vel[..., None], x0.shape
        ).copy()


@dataclass(frozen=True)
class ElementGeometry:
    """Nodal geometry of one element at one time instant.

    Arrays are indexed [component..., i, j, k] on the LGL tensor grid.
    `contravariant[a, c]` is the c-th Cartesian component of J a^{a+1};
    `jacobian` is the geometric det(grad chi), positive by assumption.
    """

    positions: np.ndarray  # (3, n, n, n)
    velocity: np.ndarray  # (3, n, n, n)
    covariant: np.ndarray  # (3, 3, n, n, n): [r, c] = d chi_c / d xi^{r+1}
    contravariant: np.ndarray  # (3, 3, n, n, n)
    jacobian: np.ndarray  # (n, n, n)


class MovingMesh:
    """Structured periodic box of moving hexahedral elements."""

    def __init__(self, counts, bounds, motion: MeshMotion, ops: OperatorSet):
        kx, ky, kz = (int(c) for c in counts)
        if min(kx, ky, kz) < 1:
            raise ConfigurationError(f"element counts must be >= 1, got {counts}")
        x_min, x_max = (float(b) for b in bounds)
        if not x_max > x_min:
            raise ConfigurationError(f"degenerate bounds [{x_min}, {x_max}]")
        self.counts = (kx, ky, kz)
        self.bounds = (x_min, x_max)
        self.motion = motion
        self.ops = ops
        self.num_elements = kx * ky * kz

        n = ops.num_nodes
        # Reference-grid initial positions; (xi+1)/2 hits 0 and 1 exactly at
        # the endpoints so shared face nodes coincide bitwise.
        frac = (ops.nodes + 1.0) / 2.0
        h = [(x_max - x_min) / k for k in self.counts]
        ex, ey, ez = np.meshgrid(
            np.arange(kx), np.arange(ky), np.arange(kz), indexing="ij"
        )
        ids = self.element_id(ex, ey, ez).ravel()
        order = np.argsort(ids)
        exs = ex.ravel()[order].astype(float)
        eys = ey.ravel()[order].astype(float)
        ezs = ez.ravel()[order].astype(float)

        x0 = np.empty((self.num_elements, 3, n, n, n))
        x0[:, 0] = x_min + h[0] * (exs[:, None, None, None] + frac[None, :, None, None])
        x0[:, 1] = x_min + h[1] * (eys[:, None, None, None] + frac[None, None, :, None])
        x0[:, 2] = x_min + h[2] * (ezs[:, None, None, None] + frac[None, None, None, :])
        x0.setflags(write=False)
        self.initial_positions = x0  # (K, 3, n, n, n)

    def element_id(self, ex, ey, ez):
        kx, ky, _ = self.counts
        return ex + kx * (ey + ky * ez)

    def element_index(self, eid: int):
        kx, ky, _ = self.counts
        return eid % kx, (eid // kx) % ky, eid // (kx * ky)

    def neighbor(self, eid: int, axis: int):
        """Element id of the +axis neighbor under periodic wrap."""
        ex, ey, ez = self.element_index(eid)
        k = self.counts[axis]
        idx = [ex, ey, ez]
        idx[axis] = (idx[axis] + 1) % k
        return self.element_id(*idx)

    def summary(self) -> dict:
        """Provenance header content for output files."""
        return {
            "num_elements": self.num_elements,
            "counts": list(self.counts),
            "degree": self.ops.degree,
            "bounds": list(self.bounds),
            "motion_kind": self.motion.kind,
            "amplitude": self.motion.amplitude,
        }

    # -- geometry ---------------------------------------------------------

    def _apply_d(self, values: np.ndarray, axis: int) -> np.ndarray:
        """Differentiate nodal data along reference direction `axis` (0..2).

        `values` has the three node axes last: (..., n, n, n).
        """
        from alesolve import _kernels

        n = self.ops.num_nodes
        flat = np.ascontiguousarray(values).reshape(-1, n, n, n)
        out = np.empty_like(flat)
        _kernels.apply_d_batch(flat, self.ops.diff_matrix, axis, out)
        return out.reshape(values.shape)

    def geometry_all(self, t: float, check: bool = True):
        """Vectorized geometry of every element at time t.

        Returns (positions, velocity, covariant, contravariant, jacobian)
        with a leading element axis.  Contravariant metric terms follow the
        conservative curl form, so their discrete divergence vanishes.
        Static meshes are computed once and cached.
        """
        if self.motion.kind == "static":
            cached = getattr(self, "_static_geometry", None)
            if cached is None:
                cached = self._geometry_at(0.0, check)
                self._static_geometry = cached
            return cached
        return self._geometry_at(t, check)

    def _geometry_at(self, t: float, check: bool = True):
        x0 = np.moveaxis(self.initial_positions, 1, -1)
        if hasattr(self.motion, "kinematics"):
            x, v = self.motion.kinematics(x0, t)
        else:
            x, v = self.motion.positions(x0, t), self.motion.velocities(x0, t)
        x = np.ascontiguousarray(np.moveaxis(x, -1, 1))
        v = np.ascontiguousarray(np.moveaxis(v, -1, 1))

        cov = np.stack([self._apply_d(x, axis) for axis in range(3)], axis=1)
        # cov[e, r, c] = d chi_c / d xi^{r+1}
        a1, a2, a3 = cov[:, 0], cov[:, 1], cov[:, 2]
        jac = np.einsum("ecijk,ecijk->eijk", a1, np.cross(a2, a3, axis=1))
        if check and np.any(jac <= 0.0):
            raise GeometryError(
                f"nonpositive geometric Jacobian at t={t}: min {jac.min():.3e}"
            )

        # curl arguments V^(c)_r = chi_l * d chi_m / d xi^r, (c, m, l) cyclic
        n = self.ops.num_nodes
        vfields = np.empty((self.num_elements, 3, 3, n, n, n))
        for c, m, l in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
            for r in range(3):
                vfields[:, c, r] = x[:, l] * cov[:, r, m]
        dv = [self._apply_d(vfields, axis) for axis in range(3)]
        contra = np.empty_like(cov)  # [e, alpha, c]
        contra[:, 0] = -(dv[1][:, :, 2] - dv[2][:, :, 1])
        contra[:, 1] = -(dv[2][:, :, 0] - dv[0][:, :, 2])
        contra[:, 2] = -(dv[0][:, :, 1] - dv[1][:, :, 0])
        return x, v, cov, contra, jac


def build_box_mesh(kx: int, ky: int, kz: int, bounds, motion: MeshMotion,
                   ops: OperatorSet) -> MovingMesh:
    """Structured periodic box mesh with the prescribed motion."""
    return MovingMesh((kx, ky, kz), bounds, motion, ops)


def element_geometry(mesh: MovingMesh, element: int, t: float) -> ElementGeometry:
    """Geometry of one element at time t (pure function; thread-safe)."""
    if not 0 <= element < mesh.num_elements:
        raise UsageError(f"element id {element} out of range")
    if t < 0:
        raise UsageError(f"time must be nonnegative, got {t}")
    x, v, cov, contra, jac = mesh.geometry_all(t)
    return ElementGeometry(
        positions=x[element],
        velocity=v[element],
        covariant=cov[element],
        contravariant=contra[element],
        jacobian=jac[element],
    )


_FACE_AXIS = {1: 0, 2: 0, 3: 1, 4: 1, 5: 2, 6: 2}
_FACE_SIGN = {1: -1.0, 2: 1.0, 3: -1.0, 4: 1.0, 5: -1.0, 6: 1.0}


def face_trace(values: np.ndarray, face: int) -> np.ndarray:
    """Restrict nodal data (..., n, n, n) to one of the six faces."""
    axis = _FACE_AXIS[face]
    idx = 0 if _FACE_SIGN[face] < 0 else -1
    return np.take(values, idx, axis=values.ndim - 3 + axis)


def face_geometry(geom: ElementGeometry, face: int):
    """Surface element and outward unit normal at the nodes of one face.

    Returns (s_hat, normal) with shapes (n, n) and (3, n, n), where
    s_hat * normal = sum_l (J a^l) nhat^l for the outward reference
    normal nhat of the face.
    """
    if face not in _FACE_AXIS:
        raise UsageError(f"face index must be in 1..6, got {face}")
    axis = _FACE_AXIS[face]
    sn = _FACE_SIGN[face] * face_trace(geom.contravariant[axis], face)
    s_hat = np.sqrt(np.sum(sn * sn, axis=0))
    if np.any(s_hat == 0.0):
        raise GeometryError(f"vanishing surface element on face {face}")
    return s_hat, sn / s_hat


def metric_identity_residual(mesh: MovingMesh, t: float) -> float:
    """Max discrete metric-identity residual over all elements and nodes."""
    _, _, _, contra, _ = mesh.geometry_all(t)
    res = sum(
        mesh._apply_d(contra[:, alpha], alpha) for alpha in range(3)
    )  # (K, 3, n, n, n)
    return float(np.max(np.abs(res)))


def watertightness_residual(mesh: MovingMesh, t: float) -> float:
    """Max mismatch of s_hat * normal computed from both sides of each
    interior face (componentwise, over all faces and face nodes)."""
    _, _, _, contra, _ = mesh.geometry_all(t)
    worst = 0.0
    for axis, (minus_face, plus_face) in enumerate(((2, 1), (4, 3), (6, 5))):
        nbr = np.array(
            [mesh.neighbor(e, axis) for e in range(mesh.num_elements)]
        )
        sn_minus = np.stack(
            [face_trace(contra[e, axis], minus_face) for e in range(mesh.num_elements)]
        )
        sn_plus = np.stack(
            [-face_trace(contra[nbr[e], axis], plus_face)
             for e in range(mesh.num_elements)]
        )
        # outward normals of the two sides are opposite: compare sn to -sn
        worst = max(worst, float(np.max(np.abs(sn_minus + sn_plus))))
    return worst


# -- 2D transfinite mapping utility ---------------------------------------


class FaceCurve2D:
    """Parametric boundary curve s in [-1, 1] -> R^2 with a time derivative."""

    def __init__(self, position, velocity=None):
        self._position = position
        self._velocity = velocity

    def position(self, s, t):
        return np.asarray(self._position(s, t), dtype=float)

    def velocity(self, s, t):
        if self._velocity is None:
            return np.zeros(2)
        return np.asarray(self._velocity(s, t), dtype=float)


def _interp_curve(ops: OperatorSet, samples: np.ndarray, s: float) -> np.ndarray:
    """Evaluate the degree-N interpolant of curve samples at parameter s."""
    diff = s - ops.nodes
    hit = np.nonzero(diff == 0.0)[0]
    if hit.size:
        return samples[hit[0]]
    ratios = ops.bary_weights / diff
    return (ratios @ samples) / np.sum(ratios)


def transfinite_map_2d(faces, xi1: float, xi2: float, t: float,
                       ops: OperatorSet, corner_tol: float = 1e-12):
    """Isoparametric transfinite map of four boundary curves.

    `faces` is (gamma1, gamma2, gamma3, gamma4): bottom (xi2 = -1), right
    (xi1 = +1), top (xi2 = +1), left (xi1 = -1), each a FaceCurve2D.
    Returns (position, grid velocity) at (xi1, xi2, t).  The four curves
    must meet at the corners within `corner_tol`.
    """
    if len(faces) != 4:
        raise UsageError("expected exactly four boundary curves")
    g1, g2, g3, g4 = faces
    corners = (
        (g1.position(-1.0, t), g4.position(-1.0, t)),
        (g1.position(1.0, t), g2.position(-1.0, t)),
        (g3.position(1.0, t), g2.position(1.0, t)),
        (g3.position(-1.0, t), g4.position(1.0, t)),
    )
    for a, b in corners:
        if np.max(np.abs(a - b)) > corner_tol:
            raise ConfigurationError(
                f"corner mismatch {np.max(np.abs(a - b)):.3e} exceeds {corner_tol}"
            )

    def blend(samples1, samples2, samples3, samples4):
        i1 = _interp_curve(ops, samples1, xi1)
        i3 = _interp_curve(ops, samples3, xi1)
        i2 = _interp_curve(ops, samples2, xi2)
        i4 = _interp_curve(ops, samples4, xi2)
        c1m = samples1[0]
        c1p = samples1[-1]
        c3m = samples3[0]
        c3p = samples3[-1]
        out = 0.5 * ((1.0 - xi1) * i4 + (1.0 + xi1) * i2)
        out += 0.5 * ((1.0 - xi2) * i1 + (1.0 + xi2) * i3)
        out -= 0.25 * (1.0 + xi1) * ((1.0 - xi2) * c1p + (1.0 + xi2) * c3p)
        out -= 0.25 * (1.0 - xi1) * ((1.0 - xi2) * c1m + (1.0 + xi2) * c3m)
        return out

    pos_samples = [
        np.stack([g.position(s, t) for s in ops.nodes]) for g in (g1, g2, g3, g4)
    ]
    vel_samples = [
        np.stack([g.velocity(s, t) for s in ops.nodes]) for g in (g1, g2, g3, g4)
    ]
    return blend(*pos_samples), blend(*vel_samples)
