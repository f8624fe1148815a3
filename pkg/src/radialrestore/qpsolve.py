"""Convex quadratic programming by a primal-dual interior-point method.

Problem form::

    minimize    0.5 x'Hx + c'x + offset
    subject to  A_eq x  = b_eq
                A_ub x <= b_ub
                lb <= x <= ub          (entries may be infinite)

The solver is a Mehrotra predictor-corrector method on the slack form
``G x + s = h, s >= 0`` where ``G`` stacks the inequality rows and the finite
bound rows. Newton systems are reduced to the quasi-definite KKT matrix
``[[H + G'WG, A'], [A, 0]]`` and solved by LU with iterative refinement.
When the method stalls, a phase-one problem decides between ``infeasible``
and ``limit``.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

logger = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
LIMIT = "limit"

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 10_000
_DENSE_MAX = 600
_STEP_FRACTION = 0.995
_REG = 1e-11
_POLISH_STEPS = 3


def _csr(mat, n_cols: int) -> sp.csr_matrix:
    if mat is None:
        return sp.csr_matrix((0, n_cols))
    return sp.csr_matrix(mat, dtype=float)


@dataclass
class QuadraticProgram:
    H: sp.csr_matrix
    c: np.ndarray
    A_eq: sp.csr_matrix | None = None
    b_eq: np.ndarray | None = None
    A_ub: sp.csr_matrix | None = None
    b_ub: np.ndarray | None = None
    lb: np.ndarray | None = None
    ub: np.ndarray | None = None
    offset: float = 0.0
    var_names: list[str] | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        self.H = _csr(self.H, n)
        self.A_eq = _csr(self.A_eq, n)
        self.A_ub = _csr(self.A_ub, n)
        self.b_eq = np.zeros(0) if self.b_eq is None else np.asarray(self.b_eq, dtype=float).ravel()
        self.b_ub = np.zeros(0) if self.b_ub is None else np.asarray(self.b_ub, dtype=float).ravel()
        self.lb = np.full(n, -np.inf) if self.lb is None else np.asarray(self.lb, dtype=float).ravel()
        self.ub = np.full(n, np.inf) if self.ub is None else np.asarray(self.ub, dtype=float).ravel()

        if self.H.shape != (n, n):
            raise ValueError(f"H has shape {self.H.shape}, expected {(n, n)}")
        if self.A_eq.shape != (self.b_eq.size, n):
            raise ValueError("A_eq/b_eq dimensions disagree")
        if self.A_ub.shape != (self.b_ub.size, n):
            raise ValueError("A_ub/b_ub dimensions disagree")
        if self.lb.size != n or self.ub.size != n:
            raise ValueError("bounds must have one entry per variable")
        if np.any(self.lb > self.ub):
            raise ValueError("lower bound exceeds upper bound")
        asym = abs(self.H - self.H.T)
        if asym.nnz and asym.max() > 1e-12 * max(1.0, abs(self.H).max()):
            raise ValueError("H must be symmetric")

    @property
    def n_vars(self) -> int:
        return self.c.size

    def objective(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ (self.H @ x) + self.c @ x + self.offset)


@dataclass
class QPSolution:
    status: str
    x: np.ndarray
    objective: float
    y_eq: np.ndarray
    z_ub: np.ndarray
    z_lb: np.ndarray
    z_upper: np.ndarray
    primal_inf: float
    dual_inf: float
    gap: float
    iterations: int
    info: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL


class _Stacked:
    """Inequality rows ``G x <= h`` built from A_ub and the finite bounds."""

    def __init__(self, qp: QuadraticProgram):
        n = qp.n_vars
        self.lo_idx = np.flatnonzero(np.isfinite(qp.lb))
        self.hi_idx = np.flatnonzero(np.isfinite(qp.ub))
        m_ub, n_lo, n_hi = qp.A_ub.shape[0], self.lo_idx.size, self.hi_idx.size
        lo_rows = sp.csr_matrix((-np.ones(n_lo), (np.arange(n_lo), self.lo_idx)), shape=(n_lo, n))
        hi_rows = sp.csr_matrix((np.ones(n_hi), (np.arange(n_hi), self.hi_idx)), shape=(n_hi, n))
        self.G = sp.vstack([qp.A_ub, lo_rows, hi_rows], format="csr")
        self.h = np.concatenate([qp.b_ub, -qp.lb[self.lo_idx], qp.ub[self.hi_idx]])
        self.split = (m_ub, m_ub + n_lo)

    def unstack(self, z, n):
        a, b = self.split
        z_lb = np.zeros(n)
        z_hi = np.zeros(n)
        z_lb[self.lo_idx] = z[a:b]
        z_hi[self.hi_idx] = z[b:]
        return z[:a].copy(), z_lb, z_hi


def _inf_norm(v) -> float:
    return float(np.max(np.abs(v))) if np.size(v) else 0.0


class _KKTSolver:
    """Factorizes the quasi-definite Newton matrix and solves with refinement.

    Bound rows of ``G`` enter as a diagonal term; general inequality rows are
    kept in augmented form::

        [[H + D_b + reg,  A',   G_u'        ],
         [A,              -reg, 0           ],
         [G_u,            0,    -1/w_u - reg]]

    which stays well conditioned when some barrier weights ``w`` blow up near
    the optimum, unlike the fully reduced ``H + G'WG``.
    """

    def __init__(self, H, parts, w, dense):
        A, AT, Gu, GuT, Gb2T, m_gen = parts
        n = H.shape[0]
        m = A.shape[0]
        k = m_gen
        self.n, self.m, self.dense = n, m, dense
        diag_b = Gb2T @ w[k:]
        inv_w = 1.0 / w[:k]
        if dense:
            K = H + np.diag(diag_b)
            self.exact = np.block([
                [K, AT, GuT],
                [A, np.zeros((m, m)), np.zeros((m, k))],
                [Gu, np.zeros((k, m)), -np.diag(inv_w)],
            ])
        else:
            K = H + sp.diags(diag_b)
            self.exact = sp.bmat([
                [K, AT, GuT],
                [A, sp.csr_matrix((m, m)), None],
                [Gu, None, -sp.diags(inv_w)],
            ], format="csc")
        self.size = n + m + k
        # singular directions (zero curvature, dependent rows) need a larger shift
        scale = 1.0 + _inf_norm(np.abs(self.exact.diagonal()))
        for reg in (_REG, 1e-9 * scale, 1e-7 * scale):
            if self._factor(reg):
                return
        raise np.linalg.LinAlgError("KKT matrix is numerically singular")

    def _factor(self, reg: float) -> bool:
        n = self.n
        shift = np.concatenate([np.full(n, reg), np.full(self.size - n, -reg)])
        if self.dense:
            mat = self.exact.copy()
            mat[np.diag_indices(self.size)] += shift
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", sla.LinAlgWarning)
                self.lu = sla.lu_factor(mat, check_finite=False)
            piv = np.abs(np.diag(self.lu[0]))
            return bool(np.all(np.isfinite(piv)) and piv.min() > 0.0)
        try:
            self.lu = spla.splu((self.exact + sp.diags(shift)).tocsc())
        except RuntimeError:
            return False
        return True

    def _raw(self, r):
        if self.dense:
            return sla.lu_solve(self.lu, r, check_finite=False)
        return self.lu.solve(r)

    def solve(self, r):
        r = np.concatenate([r, np.zeros(self.size - r.size)])
        sol = self._raw(r)
        best, best_err = sol, np.inf
        for _ in range(3):
            res = r - self.exact @ sol
            err = _inf_norm(res)
            if not err < best_err:
                break
            best, best_err = sol, err
            if err <= 1e-14 * (1.0 + _inf_norm(r)):
                break
            sol = sol + self._raw(res)
        n, m = self.n, self.m
        return best[:n], best[n: n + m], best[n + m:]


def _max_step(v, dv):
    neg = dv < 0
    if not np.any(neg):
        return 1.0
    return float(min(1.0, np.min(-v[neg] / dv[neg])))


def _residuals(H, c, A, AT, b, G, GT, h, x, y, z):
    """Scaled primal infeasibility, dual infeasibility and complementarity gap."""
    Gx = G @ x
    Hx = H @ x
    viol = np.maximum(Gx - h, 0.0)
    scale_p = 1.0 + max(_inf_norm(b), _inf_norm(h))
    primal = max(_inf_norm(A @ x - b), _inf_norm(viol)) / scale_p
    dual = _inf_norm(Hx + c + AT @ y + GT @ z) / (1.0 + _inf_norm(c))
    slack = np.maximum(h - Gx, 0.0)
    f = 0.5 * float(x @ Hx) + float(c @ x)
    gap = abs(float(z @ slack)) / (1.0 + abs(f))
    return primal, dual, gap


def _ipm(qp: QuadraticProgram, tol: float, max_iter: int):
    n = qp.n_vars
    st = _Stacked(qp)
    G, h = st.G, st.h
    A, b = qp.A_eq, qp.b_eq
    H, c = qp.H, qp.c
    p = G.shape[0]
    m_gen = st.split[0]
    dense = n + A.shape[0] + m_gen <= _DENSE_MAX
    Gu, Gb = G[:m_gen], G[m_gen:]
    Gb2T = Gb.multiply(Gb).T.tocsr()
    if dense:
        G, A, H, Gu = G.toarray(), A.toarray(), H.toarray(), Gu.toarray()
        GT, AT, GuT, Gb2T = G.T.copy(), A.T.copy(), Gu.T.copy(), Gb2T.toarray()
    else:
        GT, AT, GuT = G.T.tocsr(), A.T.tocsr(), Gu.T.tocsr()
    parts = (A, AT, Gu, GuT, Gb2T, m_gen)

    x = np.zeros(n)
    lo_fin, hi_fin = np.isfinite(qp.lb), np.isfinite(qp.ub)
    both = lo_fin & hi_fin
    x[both] = 0.5 * (qp.lb[both] + qp.ub[both])
    only_lo = lo_fin & ~hi_fin
    x[only_lo] = qp.lb[only_lo] + 1.0
    only_hi = hi_fin & ~lo_fin
    x[only_hi] = qp.ub[only_hi] - 1.0
    y = np.zeros(A.shape[0])
    s = np.maximum(h - G @ x, 1.0)
    z = np.ones(p)

    data_scale = 1.0 + max(_inf_norm(b), _inf_norm(h), _inf_norm(c))
    best = None
    best_merit = np.inf
    stall = 0
    it = 0
    status = LIMIT
    polish = 0
    for it in range(1, max_iter + 1):
        rd = H @ x + c + AT @ y + GT @ z
        rp = A @ x - b
        ri = G @ x + s - h
        mu = float(s @ z) / p if p else 0.0

        res = _residuals(H, c, A, AT, b, G, GT, h, x, y, z)
        merit = max(res)
        improved = merit < best_merit * 0.999
        if improved:
            best_merit = merit
            best = (x.copy(), y.copy(), z.copy(), res)
            stall = 0
        else:
            stall += 1
        if status == OPTIMAL:
            # loss-only variables have a tiny Hessian, so a few steps past
            # the stopping point buy accuracy in x far below tol
            polish -= 1
            if polish == 0 or not improved:
                break
        elif merit <= tol and _inf_norm(ri) <= tol * data_scale:
            status = OPTIMAL
            polish = _POLISH_STEPS
        if stall >= 30 or (p and _inf_norm(z) > 1e14 * data_scale):
            break

        w = z / s if p else np.zeros(0)
        try:
            kkt = _KKTSolver(H, parts, w, dense)
        except (RuntimeError, np.linalg.LinAlgError, ValueError):
            logger.debug("KKT factorization failed at iteration %d", it)
            break

        def reduced(r1, r2, r3, r4):
            # eliminate ds = r3 - G dx and dz = (r4 - z*r3)/s + w*G dx
            if p:
                t = (r4 - z * r3) / s
                dx, dy, v = kkt.solve(np.concatenate([r1 - GT @ t, r2]))
                Gdx = G @ dx
                ds = r3 - Gdx
                dz = t + w * Gdx
                # on general rows the solve returns v = w*G dx directly; using
                # it avoids amplifying cancellation in G dx by a huge weight
                dz[:m_gen] = t[:m_gen] + v
                big = w[:m_gen] > 1.0
                ds[:m_gen][big] = r3[:m_gen][big] - v[big] / w[:m_gen][big]
                return dx, dy, ds, dz
            dx, dy, _ = kkt.solve(np.concatenate([r1, r2]))
            return dx, dy, np.zeros(0), np.zeros(0)

        def direction(rc):
            # Newton step for the perturbed KKT conditions, refined on the
            # unreduced system to recover accuracy lost in the elimination
            rhs = (-rd, -rp, -ri, -rc)
            floor = 1e-15 * (1.0 + max(_inf_norm(v) for v in rhs))
            step = reduced(*rhs)
            best, best_err = step, np.inf
            for _ in range(3):
                dx, dy, ds, dz = step
                e = (
                    rhs[0] - (H @ dx + AT @ dy + GT @ dz),
                    rhs[1] - A @ dx,
                    rhs[2] - (G @ dx + ds),
                    rhs[3] - (s * dz + z * ds),
                )
                err = max(_inf_norm(v) for v in e)
                if err >= best_err:
                    break
                best, best_err = step, err
                if err <= floor:
                    break
                step = tuple(a + b for a, b in zip(step, reduced(*e)))
            return best

        if p:
            dx, dy, ds, dz = direction(s * z)
            alpha = min(_max_step(s, ds), _max_step(z, dz))
            mu_aff = float((s + alpha * ds) @ (z + alpha * dz)) / p
            sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0
            dx, dy, ds, dz = direction(s * z + ds * dz - sigma * mu)
            alpha = min(1.0, _STEP_FRACTION * min(_max_step(s, ds), _max_step(z, dz)))
        else:
            dx, dy, ds, dz = direction(np.zeros(0))
            alpha = 1.0

        x = x + alpha * dx
        y = y + alpha * dy
        s = s + alpha * ds
        z = z + alpha * dz
        if p:
            # guard against underflow to exact zero
            np.maximum(s, 1e-300, out=s)
            np.maximum(z, 1e-300, out=z)

    x, y, z, res = best if best is not None else (x, y, z, _residuals(H, c, A, AT, b, G, GT, h, x, y, z))
    return status, x, y, z, res, it, st


def _phase_one_violation(qp: QuadraticProgram, tol: float) -> float:
    """Smallest achievable constraint violation, by a least-squares phase one.

    Minimizes ``||u||^2 + ||v||^2 + t^2`` over ``A_eq x + u - v = b_eq``,
    ``A_ub x - t <= b_ub``, bounds, ``u, v, t >= 0``, with a tiny proximal
    term on ``x`` to keep the Newton systems nonsingular.
    """
    n = qp.n_vars
    m = qp.b_eq.size
    k = qp.b_ub.size
    n_aux = 2 * m + (1 if k else 0)
    N = n + n_aux
    Hd = np.concatenate([np.full(n, 1e-10), np.full(n_aux, 2.0)])
    blocks_eq = [qp.A_eq, sp.identity(m), -sp.identity(m)]
    if k:
        blocks_eq.append(sp.csr_matrix((m, 1)))
    A_eq = sp.hstack(blocks_eq, format="csr") if m else None
    A_ub = None
    if k:
        A_ub = sp.hstack([qp.A_ub, sp.csr_matrix((k, 2 * m)), -np.ones((k, 1))], format="csr")
    lb = np.concatenate([qp.lb, np.zeros(n_aux)])
    ub = np.concatenate([qp.ub, np.full(n_aux, np.inf)])
    aux = QuadraticProgram(
        H=sp.diags(Hd), c=np.zeros(N), A_eq=A_eq, b_eq=qp.b_eq if m else None,
        A_ub=A_ub, b_ub=qp.b_ub if k else None, lb=lb, ub=ub,
    )
    status, x, *_ = _ipm(aux, tol, 500)
    if n_aux == 0:
        return 0.0
    return _inf_norm(x[n:])


def solve_qp(qp: QuadraticProgram, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> QPSolution:
    """Solve ``qp`` to scaled KKT residuals at most ``tol``.

    Returns a solution whose status is ``optimal``, ``infeasible`` or
    ``limit``. On ``limit`` the best iterate seen is attached.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    status, x, y, z, res, it, st = _ipm(qp, tol, max_iter)
    info = {}
    if status != OPTIMAL:
        violation = _phase_one_violation(qp, tol)
        info["phase_one_violation"] = violation
        data_scale = 1.0 + max(_inf_norm(qp.b_eq), _inf_norm(st.h))
        status = INFEASIBLE if violation > 1e-6 * data_scale else LIMIT
    z_ub, z_lb, z_hi = st.unstack(z, qp.n_vars)
    return QPSolution(
        status=status,
        x=x,
        objective=qp.objective(x),
        y_eq=y,
        z_ub=z_ub,
        z_lb=z_lb,
        z_upper=z_hi,
        primal_inf=res[0],
        dual_inf=res[1],
        gap=res[2],
        iterations=it,
        info=info,
    )
