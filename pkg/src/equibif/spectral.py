"""One-dimensional Sturm-Liouville and dense symmetric spectral kernels.

The Sturm-Liouville solver discretizes

    -(p S')' + q S = lambda w S,  S(0) = S(L) = 0

with second-order finite differences on a uniform grid, reduces the
generalized problem to a symmetric tridiagonal one, and extracts eigenvalues
by bisection with Sturm-sequence counts.  An independent Pruefer-phase
shooting count and a lambda = 0 initial-value solve are provided for
cross-validation, plus dense symmetric helpers (lowest eigenpairs, inertia
counts) used by the brute-force oracles.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.integrate import solve_ivp

from .errors import (BlowUp, EquibifError, GridTooCoarse, NotSymmetric,
                     StiffIntegration)

MIN_INTERIOR = 16


@dataclass(frozen=True)
class SturmLiouvilleProblem:
    """Coefficients sampled on a uniform grid over [0, L], Dirichlet ends.

    Arrays p, q, w hold samples at the N+2 grid points including both
    endpoints; all eigen-solves act on the N interior nodes.
    """

    p: np.ndarray
    q: np.ndarray
    w: np.ndarray
    L: float

    def __post_init__(self):
        for name in ("p", "q", "w"):
            arr = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, arr)
        if not (self.p.shape == self.q.shape == self.w.shape):
            raise EquibifError("p, q, w must share one grid")
        if self.n_interior < MIN_INTERIOR:
            raise EquibifError(f"grid needs >= {MIN_INTERIOR} interior nodes")
        if self.L <= 0:
            raise EquibifError("interval length must be positive")
        if np.min(self.p) <= 0 or np.min(self.w) <= 0:
            raise EquibifError("p and w must be positive at every node")

    @property
    def n_interior(self):
        return len(self.p) - 2

    @property
    def h(self):
        return self.L / (self.n_interior + 1)

    @property
    def grid(self):
        return np.linspace(0.0, self.L, self.n_interior + 2)

    @staticmethod
    def from_functions(p, q, w, L, n_interior=512):
        s = np.linspace(0.0, L, n_interior + 2)
        return SturmLiouvilleProblem(p=np.vectorize(p)(s), q=np.vectorize(q)(s),
                                     w=np.vectorize(w)(s), L=L)


@dataclass(frozen=True)
class EigenResult:
    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray  # (n_interior, k), w-orthonormal columns
    h: float
    grid: np.ndarray            # interior nodes


# -- symmetric tridiagonal kernels -------------------------------------------

def tridiag_count_below(d, e, x):
    """Sturm-sequence count of eigenvalues strictly below x."""
    count = 0
    q = 1.0
    # smallest pivot magnitude that keeps e^2 / q from overflowing
    pivmin = 1e-20 * max(1.0, float(np.max(np.square(e))) if len(e) else 1.0)
    for i in range(len(d)):
        e2 = e[i - 1] * e[i - 1] if i > 0 else 0.0
        q = (d[i] - x) - e2 / q
        if abs(q) < pivmin:
            q = -pivmin
        if q < 0.0:
            count += 1
    return count


def _gershgorin(d, e):
    lo = d[0] - abs(e[0]) if len(d) > 1 else d[0]
    hi = d[0] + abs(e[0]) if len(d) > 1 else d[0]
    for i in range(len(d)):
        left = abs(e[i - 1]) if i > 0 else 0.0
        right = abs(e[i]) if i < len(d) - 1 else 0.0
        lo = min(lo, d[i] - left - right)
        hi = max(hi, d[i] + left + right)
    return lo, hi


def tridiag_lowest_eigenvalues(d, e, k, rel_tol=1e-13):
    """Lowest k eigenvalues of a symmetric tridiagonal matrix by bisection."""
    d = np.asarray(d, dtype=float)
    e = np.asarray(e, dtype=float)
    lo, hi = _gershgorin(d, e)
    scale = max(abs(lo), abs(hi), 1e-30)
    vals = []
    for j in range(1, k + 1):
        a, b = lo, hi
        while b - a > rel_tol * scale:
            mid = 0.5 * (a + b)
            if tridiag_count_below(d, e, mid) >= j:
                b = mid
            else:
                a = mid
        vals.append(0.5 * (a + b))
    return np.array(vals)


def tridiag_eigenvector(d, e, lam, seed=0, prior=()):
    """Inverse iteration for one eigenvector; orthogonalizes against priors."""
    n = len(d)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    for u in prior:
        v -= (u @ v) * u
    v /= np.linalg.norm(v)
    ab = np.zeros((3, n))
    shift = lam + 1e-12 * max(1.0, abs(lam))
    ab[0, 1:] = e
    ab[1, :] = d - shift
    ab[2, :-1] = e
    for _ in range(4):
        try:
            v = scipy.linalg.solve_banded((1, 1), ab, v)
        except scipy.linalg.LinAlgError:
            ab[1, :] = d - (shift + 1e-10 * max(1.0, abs(lam)))
            v = scipy.linalg.solve_banded((1, 1), ab, v)
        for u in prior:
            v -= (u @ v) * u
        v /= np.linalg.norm(v)
    return v


# -- Sturm-Liouville ---------------------------------------------------------

def sl_assemble(prob):
    """Symmetric-tridiagonal reduction (d, e) of the interior FD operator."""
    p, q, w, h = prob.p, prob.q, prob.w, prob.h
    n = prob.n_interior
    p_half = 0.5 * (p[:-1] + p[1:])          # p at i + 1/2, length n+1
    diag = (p_half[:-1] + p_half[1:]) / h ** 2 + q[1:-1]
    off = -p_half[1:-1] / h ** 2             # couples interior i, i+1
    wi = w[1:-1]
    d = diag / wi
    e = off / np.sqrt(wi[:-1] * wi[1:])
    return d, e, wi


def sl_eigen(prob, count):
    """Lowest `count` eigenpairs of the Sturm-Liouville problem."""
    if count < 1:
        raise EquibifError("count must be >= 1")
    n = prob.n_interior
    if count > n // 8:
        raise GridTooCoarse(
            f"mode {count} oscillates too fast for {n} interior nodes")
    d, e, wi = sl_assemble(prob)
    vals = tridiag_lowest_eigenvalues(d, e, count)
    vecs = np.empty((n, count))
    scale = max(1.0, np.max(np.abs(vals)))
    done = []
    for j, lam in enumerate(vals):
        cluster = [vecs[:, i] for i in range(j)
                   if abs(vals[i] - lam) < 1e-6 * scale]
        u = tridiag_eigenvector(d, e, lam, seed=j, prior=cluster)
        vecs[:, j] = u
        done.append(u)
    # map back to the generalized problem and w-normalize
    funcs = vecs / np.sqrt(wi)[:, None]
    for j in range(count):
        norm = np.sqrt(prob.h * np.sum(wi * funcs[:, j] ** 2))
        funcs[:, j] /= norm
        imax = np.argmax(np.abs(funcs[:, j]))
        if funcs[imax, j] < 0:
            funcs[:, j] = -funcs[:, j]
    return EigenResult(eigenvalues=vals, eigenfunctions=funcs, h=prob.h,
                       grid=prob.grid[1:-1])


def interior_sign_changes(values, rel_tol=1e-7):
    """Sign changes of a sampled function, ignoring near-zero samples."""
    v = np.asarray(values)
    big = v[np.abs(v) > rel_tol * np.max(np.abs(v))]
    return int(np.sum(np.sign(big[:-1]) != np.sign(big[1:])))


def eigencount_below(prob, lambda0):
    """Eigenvalues below lambda0, counted by Pruefer-phase shooting.

    Integrates theta' = cos(theta)^2 / p + (lambda0 w - q) sin(theta)^2 from
    theta(0) = 0 and counts multiples of pi at s = L; independent of the
    finite-difference route in sl_eigen.
    """
    s_grid = prob.grid

    def rhs(s, y):
        p = np.interp(s, s_grid, prob.p)
        q = np.interp(s, s_grid, prob.q)
        w = np.interp(s, s_grid, prob.w)
        c, snt = np.cos(y[0]), np.sin(y[0])
        return [c * c / p + (lambda0 * w - q) * snt * snt]

    sol = solve_ivp(rhs, (0.0, prob.L), [0.0], rtol=1e-9, atol=1e-11,
                    max_step=prob.L / 8)
    if not sol.success:
        raise StiffIntegration(f"Pruefer integration failed: {sol.message}")
    theta_L = sol.y[0, -1]
    return max(0, int(np.floor(theta_L / np.pi - 1e-9)))


def conjugate_value(prob, blowup_guard=1e12):
    """S(L) of the lambda = 0 IVP with S(0) = 0, S'(0) = 1.

    A zero of this value along a family parameter marks a conjugate instant.
    """
    s_grid = prob.grid

    def rhs(s, y):
        p = np.interp(s, s_grid, prob.p)
        q = np.interp(s, s_grid, prob.q)
        return [y[1] / p, q * y[0]]

    def escape(s, y):
        return abs(y[0]) - blowup_guard
    escape.terminal = True

    sol = solve_ivp(rhs, (0.0, prob.L), [0.0, float(prob.p[0])],
                    rtol=1e-11, atol=1e-13, max_step=prob.L / 16,
                    events=escape)
    if sol.t_events[0].size:
        err = BlowUp("IVP solution escaped the overflow guard",
                     location=float(sol.t_events[0][0]))
        err.escape_sign = float(np.sign(sol.y_events[0][0][0]))
        raise err
    if not sol.success:
        raise StiffIntegration(f"IVP integration failed: {sol.message}")
    return float(sol.y[0, -1])


# -- dense symmetric helpers --------------------------------------------------

def _require_symmetric(A, tol=1e-10):
    A = np.asarray(A, dtype=float)
    scale = max(1.0, np.linalg.norm(A))
    if np.linalg.norm(A - A.T) > tol * scale:
        raise NotSymmetric("matrix is not symmetric to tolerance")
    return 0.5 * (A + A.T)


def dense_symmetric_eigen(A, count):
    """Lowest `count` eigenpairs of a dense symmetric matrix.

    Backed by LAPACK's tridiagonalization + bisection/inverse-iteration
    driver; residuals are checked before returning.
    """
    A = _require_symmetric(A)
    count = min(count, A.shape[0])
    vals, vecs = scipy.linalg.eigh(A, subset_by_index=[0, count - 1],
                                   driver="evx")
    norm_A = max(1.0, np.linalg.norm(A, 2) if A.shape[0] <= 512
                 else np.linalg.norm(A, "fro"))
    for j in range(count):
        res = np.linalg.norm(A @ vecs[:, j] - vals[j] * vecs[:, j])
        if res > 1e-8 * norm_A:
            raise EquibifError(f"eigenpair residual {res:.2e} too large")
    return vals, vecs


def negative_inertia(A, shift=0.0):
    """Number of eigenvalues of A strictly below `shift`, via LDL^T inertia."""
    A = _require_symmetric(A)
    B = A - shift * np.eye(A.shape[0]) if shift else A
    _, d, _ = scipy.linalg.ldl(B)
    count = 0
    i = 0
    n = d.shape[0]
    while i < n:
        if i + 1 < n and (d[i, i + 1] != 0.0 or d[i + 1, i] != 0.0):
            block = d[i: i + 2, i: i + 2]
            count += int(np.sum(np.linalg.eigvalsh(block) < 0))
            i += 2
        else:
            if d[i, i] < 0:
                count += 1
            i += 1
    return count


def sturm_minor_negative_count(A):
    """Negative-eigenvalue count from signs of leading principal minors.

    Valid for nondegenerate matrices with nonvanishing leading minors; used
    as an independent oracle against eigensolver counts.
    """
    A = _require_symmetric(A)
    n = A.shape[0]
    signs = [1.0]
    for k in range(1, n + 1):
        sign, logdet = np.linalg.slogdet(A[:k, :k])
        if sign == 0 or logdet < -80:
            raise EquibifError("leading principal minor is numerically singular")
        signs.append(sign)
    return int(np.sum(np.asarray(signs[:-1]) != np.asarray(signs[1:])))
