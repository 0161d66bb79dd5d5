"""Legendre-Gauss-Lobatto collocation operators with the SBP property.

The nodes are the roots of (1 - xi^2) P_N'(xi), found by Newton iteration
from Chebyshev-Gauss-Lobatto initial guesses.  Together with the diagonal
mass matrix M = diag(w) the derivative matrix satisfies the
summation-by-parts relation Q + Q^T = B with Q = M D and
B = diag(-1, 0, ..., 0, 1).
"""

from dataclasses import dataclass, field

import numpy as np

from alesolve.errors import ConfigurationError, UsageError

_MAX_DEGREE = 15
_NEWTON_TOL = 1e-15
_NEWTON_MAXIT = 100


def _legendre_and_derivative(n: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate P_n and P_n' at the points x via the three-term recurrence."""
    p_prev = np.ones_like(x)
    if n == 0:
        return p_prev, np.zeros_like(x)
    p = x.copy()
    for k in range(2, n + 1):
        p_prev, p = p, ((2 * k - 1) * x * p - (k - 1) * p_prev) / k
    # dP_n = n (x P_n - P_{n-1}) / (x^2 - 1) away from the endpoints
    dp = np.empty_like(x)
    interior = np.abs(x) < 1.0
    xi = x[interior]
    dp[interior] = n * (xi * p[interior] - p_prev[interior]) / (xi**2 - 1.0)
    dp[~interior] = np.sign(x[~interior]) ** (n + 1) * n * (n + 1) / 2.0
    return p, dp


def _lgl_nodes_weights(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the (n+1)-point LGL rule on [-1, 1]."""
    if n == 1:
        return np.array([-1.0, 1.0]), np.array([1.0, 1.0])

    # Newton on f = (1-x^2) P_n'; with the Legendre ODE f' = -n(n+1) P_n,
    # so the update is x <- x + (1-x^2) P_n'(x) / (n(n+1) P_n(x)).
    x = -np.cos(np.pi * np.arange(1, n) / n)
    for _ in range(_NEWTON_MAXIT):
        p, dp = _legendre_and_derivative(n, x)
        dx = (1.0 - x**2) * dp / (n * (n + 1) * p)
        x = x + dx
        if np.max(np.abs(dx)) < _NEWTON_TOL:
            break

    nodes = np.concatenate(([-1.0], x, [1.0]))
    p, _ = _legendre_and_derivative(n, nodes)
    weights = 2.0 / (n * (n + 1) * p**2)
    return nodes, weights


def _barycentric_weights(nodes: np.ndarray) -> np.ndarray:
    n = nodes.size
    w = np.ones(n)
    for j in range(n):
        for i in range(n):
            if i != j:
                w[j] *= nodes[j] - nodes[i]
    w = 1.0 / w
    return w / np.max(np.abs(w))


def _derivative_matrix(nodes: np.ndarray, bary: np.ndarray) -> np.ndarray:
    n = nodes.size
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                d[i, j] = (bary[j] / bary[i]) / (nodes[i] - nodes[j])
        d[i, i] = -np.sum(d[i, :])
    return d


@dataclass(frozen=True)
class OperatorSet:
    """Collocation operators for one polynomial degree.

    Immutable after construction; safe for concurrent read access.

    Attributes:
        degree: polynomial degree N (nodes number N+1).
        nodes: LGL nodes, ascending, with nodes[0] = -1 and nodes[-1] = +1.
        weights: positive quadrature weights summing to 2.
        diff_matrix: D with D[i, j] = l_j'(xi_i).
        q_matrix: Q = diag(weights) @ D.
        boundary_matrix: B = diag(-1, 0, ..., 0, 1).
        bary_weights: barycentric interpolation weights (normalized).
    """

    degree: int
    nodes: np.ndarray
    weights: np.ndarray
    diff_matrix: np.ndarray
    q_matrix: np.ndarray
    boundary_matrix: np.ndarray
    bary_weights: np.ndarray = field(repr=False)

    @property
    def num_nodes(self) -> int:
        return self.degree + 1


def build_lgl(degree: int) -> OperatorSet:
    """Construct the LGL OperatorSet for 1 <= degree <= 15."""
    if not isinstance(degree, (int, np.integer)) or isinstance(degree, bool):
        raise ConfigurationError(f"degree must be an integer, got {degree!r}")
    if not 1 <= degree <= _MAX_DEGREE:
        raise ConfigurationError(f"degree must be in [1, {_MAX_DEGREE}], got {degree}")

    nodes, weights = _lgl_nodes_weights(degree)
    bary = _barycentric_weights(nodes)
    d = _derivative_matrix(nodes, bary)
    q = weights[:, None] * d
    b = np.zeros((degree + 1, degree + 1))
    b[0, 0] = -1.0
    b[-1, -1] = 1.0

    ops = OperatorSet(
        degree=degree,
        nodes=nodes,
        weights=weights,
        diff_matrix=d,
        q_matrix=q,
        boundary_matrix=b,
        bary_weights=bary,
    )
    for arr in (ops.nodes, ops.weights, ops.diff_matrix, ops.q_matrix,
                ops.boundary_matrix, ops.bary_weights):
        arr.setflags(write=False)
    return ops


def differentiate(ops: OperatorSet, values: np.ndarray) -> np.ndarray:
    """Apply the nodal derivative matrix, D @ values."""
    values = np.asarray(values, dtype=float)
    if values.shape[0] != ops.num_nodes:
        raise UsageError(
            f"expected {ops.num_nodes} nodal values, got {values.shape[0]}"
        )
    return ops.diff_matrix @ values


def interpolate(ops: OperatorSet, values: np.ndarray, xi: float) -> float:
    """Barycentric Lagrange evaluation of nodal data at xi in [-1, 1].

    Exact at the nodes by the cardinal property of the Lagrange basis.
    """
    if abs(xi) > 1.0:
        raise UsageError(f"xi must satisfy |xi| <= 1, got {xi}")
    values = np.asarray(values, dtype=float)
    if values.shape[0] != ops.num_nodes:
        raise UsageError(
            f"expected {ops.num_nodes} nodal values, got {values.shape[0]}"
        )
    diff = xi - ops.nodes
    hit = np.nonzero(diff == 0.0)[0]
    if hit.size:
        return values[hit[0]]
    ratios = ops.bary_weights / diff
    return (ratios @ values) / np.sum(ratios)


def sbp_residual(ops: OperatorSet) -> float:
    """Max-norm entrywise residual of Q + Q^T - B."""
    return float(np.max(np.abs(ops.q_matrix + ops.q_matrix.T - ops.boundary_matrix)))


def quadrature_residual(ops: OperatorSet) -> float:
    """Worst error of the rule on monomials xi^k up to k = 2N - 1."""
    worst = 0.0
    for k in range(2 * ops.degree):
        exact = 2.0 / (k + 1) if k % 2 == 0 else 0.0
        approx = float(np.dot(ops.weights, ops.nodes**k))
        worst = max(worst, abs(approx - exact))
    return worst


def row_sum_residual(ops: OperatorSet) -> float:
    """Max row-sum magnitude of D (D must annihilate constants)."""
    return float(np.max(np.abs(ops.diff_matrix @ np.ones(ops.num_nodes))))
