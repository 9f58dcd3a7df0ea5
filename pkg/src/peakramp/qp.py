"""Dense/sparse convex quadratic programming by a primal-dual interior point.

Solves  minimize 1/2 x'Qx + q'x  subject to  Ax = b,  Gx <= h  with Q
symmetric PSD (possibly zero, so pure LPs run through the same path).
A Mehrotra-style predictor-corrector with a small static regularization
on the KKT system keeps one code route working for degenerate LPs,
singular Q, and redundant equalities. Deterministic: identical problems
give bit-identical answers.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import lu_factor, lu_solve

# KKT regularization floor; tolerates Q = 0 and redundant equality rows.
KKT_REG = 1e-9
# Above this KKT dimension the Newton systems go through sparse LU.
DENSE_LIMIT = 600
# Residual blow-up factor that triggers an infeasibility declaration.
DIVERGE_FACTOR = 1e8

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 200


class QpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITER_LIMIT = "iter_limit"


def _matrix(m, name, shape=None):
    if m is None:
        m = np.zeros((0, 0) if shape is None else shape)
    if not sp.issparse(m):
        m = np.asarray(m, dtype=float)
        if m.ndim != 2:
            raise ValueError(f"{name} must be 2-D, got shape {m.shape}")
    if shape is not None and m.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {m.shape}")
    return m


@dataclass
class QpProblem:
    """min 1/2 x'Qx + q'x  s.t.  eq_mat x = eq_rhs,  ineq_mat x <= ineq_rhs."""

    quad: object            # (n, n) symmetric PSD, ndarray or scipy sparse
    lin: np.ndarray         # (n,)
    eq_mat: object = None   # (m_e, n)
    eq_rhs: np.ndarray = None
    ineq_mat: object = None  # (m_i, n)
    ineq_rhs: np.ndarray = None

    def __post_init__(self):
        self.lin = np.asarray(self.lin, dtype=float).ravel()
        n = self.lin.shape[0]
        self.quad = _matrix(self.quad, "quad", (n, n))
        self.eq_rhs = (np.zeros(0) if self.eq_rhs is None
                       else np.asarray(self.eq_rhs, dtype=float).ravel())
        self.ineq_rhs = (np.zeros(0) if self.ineq_rhs is None
                         else np.asarray(self.ineq_rhs, dtype=float).ravel())
        self.eq_mat = _matrix(self.eq_mat, "eq_mat", (self.eq_rhs.shape[0], n))
        self.ineq_mat = _matrix(self.ineq_mat, "ineq_mat", (self.ineq_rhs.shape[0], n))
        self._validate_quad()

    def _validate_quad(self):
        Q = self.quad
        asym = abs(Q - Q.T)
        if sp.issparse(asym):
            asym_max = asym.max() if asym.nnz else 0.0
        else:
            asym_max = asym.max() if asym.size else 0.0
        if asym_max > 1e-8:
            raise ValueError("quad must be symmetric")
        # full eigen check only for small dense-able matrices; large instances
        # in this package use zero or diagonal quad
        if self.n_vars and self.n_vars <= 500:
            dense = Q.toarray() if sp.issparse(Q) else Q
            if np.linalg.eigvalsh(dense).min() < -1e-8:
                raise ValueError("quad must be positive semidefinite")

    @property
    def n_vars(self) -> int:
        return self.lin.shape[0]

    @property
    def n_eq(self) -> int:
        return self.eq_rhs.shape[0]

    @property
    def n_ineq(self) -> int:
        return self.ineq_rhs.shape[0]

    def objective(self, x: np.ndarray) -> float:
        return float(0.5 * x @ (self.quad @ x) + self.lin @ x)


@dataclass
class QpSolution:
    primal: np.ndarray
    eq_duals: np.ndarray
    ineq_duals: np.ndarray
    objective: float
    status: QpStatus
    iterations: int = 0


class _KktSolver:
    """Factorizes the regularized symmetric KKT matrix

        [Q + dI   A'      G'   ]
        [A       -dI      0    ]
        [G        0   -S/Z - dI]

    choosing dense or sparse LU by size, and solves for multiple rhs.
    """

    def __init__(self, Q, A, G, use_sparse: bool):
        self.n, self.me, self.mi = Q.shape[0], A.shape[0], G.shape[0]
        self.use_sparse = use_sparse
        if use_sparse:
            self.Q = sp.csr_matrix(Q)
            self.A = sp.csr_matrix(A)
            self.G = sp.csr_matrix(G)
        else:
            self.Q = Q.toarray() if sp.issparse(Q) else Q
            self.A = A.toarray() if sp.issparse(A) else A
            self.G = G.toarray() if sp.issparse(G) else G

    def factor(self, s: np.ndarray, z: np.ndarray):
        n, me, mi = self.n, self.me, self.mi
        w = s / z + KKT_REG
        if self.use_sparse:
            blocks = [
                [self.Q + KKT_REG * sp.eye(n), self.A.T, self.G.T],
                [self.A, -KKT_REG * sp.eye(me) if me else None, None],
                [self.G, None, sp.diags(-w) if mi else None],
            ]
            K = sp.bmat([[b for b in row] for row in blocks], format="csc")
            self._lu = spla.splu(K)
        else:
            dim = n + me + mi
            K = np.zeros((dim, dim))
            K[:n, :n] = self.Q + KKT_REG * np.eye(n)
            K[:n, n:n + me] = self.A.T
            K[:n, n + me:] = self.G.T
            K[n:n + me, :n] = self.A
            K[n:n + me, n:n + me] = -KKT_REG * np.eye(me)
            K[n + me:, :n] = self.G
            K[n + me:, n + me:] = np.diag(-w)
            self._lu = lu_factor(K)

    def solve(self, r1, r2, r3):
        rhs = np.concatenate([r1, r2, r3])
        if self.use_sparse:
            sol = self._lu.solve(rhs)
        else:
            sol = lu_solve(self._lu, rhs)
        n, me = self.n, self.me
        return sol[:n], sol[n:n + me], sol[n + me:]


def _max_step(v: np.ndarray, dv: np.ndarray) -> float:
    """Largest a in (0, 1] with v + a*dv >= 0, for strictly positive v."""
    neg = dv < 0
    if not np.any(neg):
        return 1.0
    return float(min(1.0, np.min(-v[neg] / dv[neg])))


def solve_qp(p: QpProblem, tol: float = DEFAULT_TOL,
             max_iter: int = DEFAULT_MAX_ITER) -> QpSolution:
    """Solve the QP to KKT residuals <= tol, or report a truthful failure."""
    n, me, mi = p.n_vars, p.n_eq, p.n_ineq
    Q, q, A, b, G, h = p.quad, p.lin, p.eq_mat, p.eq_rhs, p.ineq_mat, p.ineq_rhs
    use_sparse = (n + me + mi) > DENSE_LIMIT
    kkt = _KktSolver(Q, A, G, use_sparse)

    if mi == 0:
        return _solve_equality_qp(p, kkt, tol)

    scale = max(1.0,
                float(np.max(np.abs(q))) if n else 1.0,
                float(np.max(np.abs(b))) if me else 1.0,
                float(np.max(np.abs(h))) if mi else 1.0)

    # infeasible start: s and z strictly positive, x/y unconstrained
    x = np.zeros(n)
    y = np.zeros(me)
    slack0 = h - G @ x
    s = np.where(slack0 > 1.0, slack0, 1.0)
    z = np.ones(mi)

    init_pri = max(1.0, float(np.linalg.norm(np.concatenate([A @ x - b, G @ x + s - h]))))

    for it in range(1, max_iter + 1):
        rd = Q @ x + q + A.T @ y + G.T @ z
        rp = A @ x - b
        rg = G @ x + s - h
        mu = float(s @ z) / mi

        if (np.max(np.abs(rd)) <= tol * scale
                and (me == 0 or np.max(np.abs(rp)) <= tol * scale)
                and np.max(np.abs(rg)) <= tol * scale
                and mu <= tol * scale):
            return QpSolution(x, y, z, p.objective(x), QpStatus.OPTIMAL, it - 1)

        pri_norm = float(np.linalg.norm(np.concatenate([rp, rg])))
        dual_norm = float(np.linalg.norm(z)) + (float(np.linalg.norm(y)) if me else 0.0)
        if (pri_norm > DIVERGE_FACTOR * init_pri or dual_norm > DIVERGE_FACTOR
                or not np.isfinite(mu)):
            return QpSolution(x, y, z, p.objective(x), QpStatus.INFEASIBLE, it - 1)
        if float(np.linalg.norm(x)) > DIVERGE_FACTOR * scale:
            return QpSolution(x, y, z, p.objective(x), QpStatus.UNBOUNDED, it - 1)

        kkt.factor(s, z)

        # affine predictor: drive complementarity products toward zero
        dx_a, dy_a, dz_a = kkt.solve(-rd, -rp, -rg + s)
        ds_a = -(s * z + s * dz_a) / z
        ap = _max_step(s, ds_a)
        ad = _max_step(z, dz_a)
        mu_aff = float((s + ap * ds_a) @ (z + ad * dz_a)) / mi
        sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0

        # corrector with Mehrotra second-order term
        rc = s * z + ds_a * dz_a - sigma * mu
        dx, dy, dz = kkt.solve(-rd, -rp, -rg + rc / z)
        ds = -(rc + s * dz) / z

        ap = 0.99 * _max_step(s, ds)
        ad = 0.99 * _max_step(z, dz)
        x += ap * dx
        s += ap * ds
        y += ad * dy
        z += ad * dz

    return QpSolution(x, y, z, p.objective(x), QpStatus.ITER_LIMIT, max_iter)


def _solve_equality_qp(p: QpProblem, kkt: _KktSolver, tol: float) -> QpSolution:
    """No inequalities: a few regularized Newton refinements on the KKT system."""
    n, me = p.n_vars, p.n_eq
    x = np.zeros(n)
    y = np.zeros(me)
    kkt.factor(np.zeros(0), np.ones(0))
    for it in range(1, 40):
        rd = p.quad @ x + p.lin + p.eq_mat.T @ y
        rp = p.eq_mat @ x - p.eq_rhs
        res = max(np.max(np.abs(rd)) if n else 0.0,
                  np.max(np.abs(rp)) if me else 0.0)
        if res <= tol:
            return QpSolution(x, y, np.zeros(0), p.objective(x), QpStatus.OPTIMAL, it - 1)
        dx, dy, _ = kkt.solve(-rd, -rp, np.zeros(0))
        if not np.all(np.isfinite(dx)):
            break
        x += dx
        y += dy
        if float(np.linalg.norm(x)) > DIVERGE_FACTOR:
            return QpSolution(x, y, np.zeros(0), p.objective(x), QpStatus.UNBOUNDED, it)
    status = QpStatus.ITER_LIMIT if np.all(np.isfinite(x)) else QpStatus.INFEASIBLE
    return QpSolution(x, y, np.zeros(0), p.objective(x), status, 40)


def kkt_residuals(p: QpProblem, s: QpSolution):
    """Infinity norms of the four KKT blocks: stationarity, equality
    feasibility, inequality feasibility, complementary slackness."""
    x, y, z = s.primal, s.eq_duals, s.ineq_duals
    stat = p.quad @ x + p.lin
    if p.n_eq:
        stat = stat + p.eq_mat.T @ y
    if p.n_ineq:
        stat = stat + p.ineq_mat.T @ z
    stationarity = float(np.max(np.abs(stat))) if p.n_vars else 0.0
    primal_eq = float(np.max(np.abs(p.eq_mat @ x - p.eq_rhs))) if p.n_eq else 0.0
    if p.n_ineq:
        slack = p.ineq_rhs - p.ineq_mat @ x
        primal_ineq = float(np.max(np.maximum(-slack, 0.0)))
        comp_slack = float(np.max(np.abs(z * slack)))
    else:
        primal_ineq = 0.0
        comp_slack = 0.0
    return stationarity, primal_eq, primal_ineq, comp_slack
