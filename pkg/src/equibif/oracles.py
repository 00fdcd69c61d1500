"""Brute-force numerical oracles.

Everything here recomputes geometric or spectral quantities from first
principles (finite differences of explicit embeddings, dense grid operators,
coordinate-metric curvature), so that closed forms elsewhere in the package
can be certified against an independent route.
"""

import numpy as np
import scipy.sparse

from .errors import EquibifError
from .spectral import (negative_inertia, tridiag_count_below,
                       tridiag_lowest_eigenvalues)


# -- explicit product-sphere embedding ---------------------------------------

def _sphere_chart(base, frame):
    """Exponential chart u -> cos|u| base + sin|u| (frame @ u)/|u|."""
    def chart(u):
        u = np.asarray(u, dtype=float)
        rho = np.linalg.norm(u)
        if rho < 1e-14:
            return base.copy()
        return np.cos(rho) * base + np.sin(rho) * (frame @ u) / rho
    return chart


def _orthonormal_frame(base):
    """Tangent frame of the unit sphere at base (columns)."""
    n = len(base)
    M = np.eye(n) - np.outer(base, base)
    u, s, _ = np.linalg.svd(M)
    return u[:, : n - 1]


def embedded_torus_curvature(n, m, r, base_x=None, base_y=None, step=1e-4):
    """Mean curvature and |A|^2 of the product-sphere embedding by FD.

    The embedding scales a point of the unit n-sphere by r and a point of
    the unit m-sphere by sqrt(1 - r^2); first and second derivatives are
    sampled with central differences in an exponential chart and the normal
    is taken orthogonal to the tangent space and the radial direction, with
    the sign fixed against (sqrt(1-r^2) x, -r y).
    """
    if base_x is None:
        base_x = np.eye(n + 1)[0]
    if base_y is None:
        base_y = np.eye(m + 1)[0]
    s = np.sqrt(1.0 - r * r)
    chart_x = _sphere_chart(base_x, _orthonormal_frame(base_x))
    chart_y = _sphere_chart(base_y, _orthonormal_frame(base_y))
    dim = n + m

    def F(u):
        return np.concatenate([r * chart_x(u[:n]), s * chart_y(u[n:])])

    z = np.zeros(dim)
    F0 = F(z)
    tangents = np.empty((n + m + 2, dim))
    for a in range(dim):
        da = np.zeros(dim)
        da[a] = step
        tangents[:, a] = (F(da) - F(-da)) / (2 * step)

    second = np.empty((dim, dim, n + m + 2))
    for a in range(dim):
        for b in range(a, dim):
            da, db = np.zeros(dim), np.zeros(dim)
            da[a] = step
            db[b] = step
            if a == b:
                val = (F(da) - 2 * F0 + F(-da)) / step ** 2
            else:
                val = (F(da + db) - F(da - db) - F(-da + db) + F(-da - db)) \
                    / (4 * step ** 2)
            second[a, b] = val
            second[b, a] = val

    # normal: orthogonal to tangents and to the position (radial) direction
    rows = np.vstack([tangents.T, F0[None, :]])
    _, _, vt = np.linalg.svd(rows)
    N = vt[-1]
    orient = np.concatenate([s * base_x, -r * base_y])
    if np.dot(N, orient) < 0:
        N = -N

    g = tangents.T @ tangents
    h = np.einsum("abi,i->ab", second, N)
    shape_op = np.linalg.solve(g, h)
    H = np.trace(shape_op) / dim
    normA2 = np.trace(shape_op @ shape_op)
    return float(H), float(normA2)


# -- flat-torus grid operators -------------------------------------------------

def _periodic_stencil_matrix(n, offsets, coeffs):
    rows, cols, vals = [], [], []
    for off, c in zip(offsets, coeffs):
        idx = np.arange(n)
        rows.append(idx)
        cols.append((idx + off) % n)
        vals.append(np.full(n, c))
    return scipy.sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n)).tocsr()


def periodic_second_derivative(n, h, order=4):
    if order == 2:
        return _periodic_stencil_matrix(n, [-1, 0, 1],
                                        np.array([1, -2, 1]) / h ** 2)
    return _periodic_stencil_matrix(
        n, [-2, -1, 0, 1, 2],
        np.array([-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12]) / h ** 2)


def periodic_first_derivative(n, h, order=4):
    if order == 2:
        return _periodic_stencil_matrix(n, [-1, 1], np.array([-0.5, 0.5]) / h)
    return _periodic_stencil_matrix(
        n, [-2, -1, 1, 2], np.array([1 / 12, -2 / 3, 2 / 3, -1 / 12]) / h)


def flat_torus_jacobi_operator(gram, constant, n_grid=64, order=4):
    """Sparse FD matrix of -Laplace_gram - constant on the periodic grid.

    gram is the (constant) 2x2 metric of the flat torus in angle coordinates
    on [0, 2*pi)^2; the Laplacian uses the inverse metric, including the
    mixed-derivative term when the metric is not diagonal.
    """
    gram = np.asarray(gram, dtype=float)
    ginv = np.linalg.inv(gram)
    h = 2 * np.pi / n_grid
    D2 = periodic_second_derivative(n_grid, h, order)
    D1 = periodic_first_derivative(n_grid, h, order)
    eye = scipy.sparse.identity(n_grid, format="csr")
    lap = (ginv[0, 0] * scipy.sparse.kron(D2, eye)
           + ginv[1, 1] * scipy.sparse.kron(eye, D2)
           + 2 * ginv[0, 1] * scipy.sparse.kron(D1, D1))
    size = n_grid * n_grid
    return (-lap - constant * scipy.sparse.identity(size)).tocsr()


def grid_negative_count(op, zero_band=1e-3):
    """Eigenvalues below -zero_band of a sparse symmetric operator (dense LDL)."""
    dense = op.toarray() if scipy.sparse.issparse(op) else np.asarray(op)
    return negative_inertia(dense, shift=-zero_band)


def grid_band_count(op, zero_band=1e-3):
    """Number of eigenvalues inside (-zero_band, zero_band)."""
    dense = op.toarray() if scipy.sparse.issparse(op) else np.asarray(op)
    below_hi = negative_inertia(dense, shift=zero_band)
    below_lo = negative_inertia(dense, shift=-zero_band)
    return below_hi - below_lo


def grid_lowest_eigenvalues(op, k=10, floor=None):
    """Lowest k eigenvalues of a sparse symmetric grid operator."""
    if floor is None:
        # Gershgorin lower bound
        dense_diag = op.diagonal()
        row_abs = np.abs(op).sum(axis=1).A1 - np.abs(dense_diag)
        floor = float(np.min(dense_diag - row_abs)) - 1.0
    vals = scipy.sparse.linalg.eigsh(op, k=k, sigma=floor, which="LM",
                                     return_eigenvectors=False)
    return np.sort(vals)


# -- sphere spectra by recursive polar discretization --------------------------

def circle_fd_spectrum(n_points=256, order=4):
    """(eigenvalue, multiplicity) list of -d^2/dtheta^2 on the circle."""
    h = 2 * np.pi / n_points
    D2 = periodic_second_derivative(n_points, h, order)
    vals = np.sort(np.linalg.eigvalsh(-D2.toarray()))
    out = []
    for v in vals:
        if out and abs(v - out[-1][0]) < 1e-6 * max(1.0, abs(v)):
            out[-1][1] += 1
        else:
            out.append([float(v), 1])
    return [(v, m) for v, m in out]


def sphere_fd_spectrum(n, eig_cap, n_cells=600, base_points=256):
    """FD spectrum (with multiplicities) of -Laplace on the unit n-sphere.

    Recursive polar-coordinate discretization: the azimuthal factor spectrum
    feeds the polar cell-centered Sturm-Liouville problems with p = w =
    sin(phi)^(n-1) and potential kappa/sin(phi)^2.  Only eigenvalues up to
    eig_cap are returned.  The spherical-harmonic eigenvalue formula is never
    used, so this is an independent route for counting oracles.
    """
    if n == 1:
        return [(v, m) for v, m in circle_fd_spectrum(base_points)
                if v <= eig_cap]
    lower = sphere_fd_spectrum(n - 1, eig_cap * 1.5, n_cells, base_points)
    h = np.pi / n_cells
    phi = (np.arange(n_cells) + 0.5) * h
    p_half_all = np.sin(np.arange(n_cells + 1) * h) ** (n - 1)
    w = np.sin(phi) ** (n - 1)
    out = []
    for kappa, mult in lower:
        diag = (p_half_all[:-1] + p_half_all[1:]) / h ** 2 \
            + kappa * np.sin(phi) ** (n - 3)
        off = -p_half_all[1:-1] / h ** 2
        d = diag / w
        e = off / np.sqrt(w[:-1] * w[1:])
        count = tridiag_count_below(d, e, eig_cap)
        if count == 0:
            continue
        vals = tridiag_lowest_eigenvalues(d, e, count)
        out.extend((float(v), mult) for v in vals if v <= eig_cap)
    return sorted(out)


def product_sphere_negative_count(n, m, r, constant, zero_band=5e-3,
                                  n_cells=600):
    """Negative count of mu/r^2 + nu/(1-r^2) - constant over FD factor spectra.

    Raises if any combined eigenvalue falls inside the ambiguity band, which
    keeps the count honest near degeneracy instants.
    """
    cap_mu = (constant + 1.0) * r * r
    cap_nu = (constant + 1.0) * (1 - r * r)
    spec_n = sphere_fd_spectrum(n, cap_mu, n_cells)
    spec_m = sphere_fd_spectrum(m, cap_nu, n_cells)
    spec_n.append((cap_mu + 1.0, 0))  # sentinels: values above cap are positive
    spec_m.append((cap_nu + 1.0, 0))
    count = 0
    ambiguous = 0
    for mu, mult_mu in spec_n:
        if mult_mu == 0:
            continue
        for nu, mult_nu in spec_m:
            if mult_nu == 0:
                continue
            lam = mu / r ** 2 + nu / (1 - r ** 2) - constant
            if lam < -zero_band:
                count += mult_mu * mult_nu
            elif lam < zero_band:
                ambiguous += mult_mu * mult_nu
    return count, ambiguous


# -- coordinate-metric curvature oracle ----------------------------------------

def christoffel_fd(metric_fn, point, step=1e-5):
    """Christoffel symbols of a coordinate metric by central differences."""
    point = np.asarray(point, dtype=float)
    dim = len(point)
    g0 = metric_fn(point)
    dg = np.empty((dim, dim, dim))
    for c in range(dim):
        dp = np.zeros(dim)
        dp[c] = step
        dg[c] = (metric_fn(point + dp) - metric_fn(point - dp)) / (2 * step)
    ginv = np.linalg.inv(g0)
    gamma = np.empty((dim, dim, dim))
    for c in range(dim):
        for a in range(dim):
            for b in range(dim):
                acc = 0.0
                for d_ in range(dim):
                    acc += ginv[c, d_] * (dg[a][d_, b] + dg[b][d_, a]
                                          - dg[d_][a, b])
                gamma[c, a, b] = 0.5 * acc
    return gamma


def ricci_fd(metric_fn, point, step=1e-4):
    """Ricci tensor of a coordinate metric by nested central differences."""
    point = np.asarray(point, dtype=float)
    dim = len(point)
    gamma0 = christoffel_fd(metric_fn, point)
    dgamma = np.empty((dim, dim, dim, dim))
    for c in range(dim):
        dp = np.zeros(dim)
        dp[c] = step
        dgamma[c] = (christoffel_fd(metric_fn, point + dp)
                     - christoffel_fd(metric_fn, point - dp)) / (2 * step)
    ric = np.empty((dim, dim))
    for a in range(dim):
        for b in range(dim):
            val = 0.0
            for c in range(dim):
                val += dgamma[c][c, a, b] - dgamma[a][c, c, b]
                for d_ in range(dim):
                    val += gamma0[c, c, d_] * gamma0[d_, a, b] \
                        - gamma0[c, a, d_] * gamma0[d_, c, b]
            ric[a, b] = val
    return ric


def berger_hopf_metric(tau):
    """Berger metric in Hopf coordinates (eta, xi1, xi2).

    Convention: g_tau = g_round + (tau^2 - 1) sigma x sigma with sigma the
    round-metric dual of the unit Hopf field; the round metric is
    d eta^2 + cos^2(eta) d xi1^2 + sin^2(eta) d xi2^2.
    """
    t2m1 = tau * tau - 1.0

    def metric(point):
        eta = point[0]
        c2, s2 = np.cos(eta) ** 2, np.sin(eta) ** 2
        g = np.diag([1.0, c2, s2]).astype(float)
        sigma = np.array([0.0, c2, s2])
        return g + t2m1 * np.outer(sigma, sigma)
    return metric


def berger_torus_oracle(r, tau, step=1e-5):
    """Induced metric, second fundamental form, and normal Ricci by FD.

    Works in Hopf coordinates where the Clifford torus sits at constant
    eta = arccos(r) with unit coordinate normal d/d eta; the second
    fundamental form against that normal is -0.5 * d(gram)/d eta.  Returns
    (gram, h, ric_normal) with the orientation of the +eta coordinate normal.
    """
    metric = berger_hopf_metric(tau)
    eta = np.arccos(r)
    point = np.array([eta, 0.7, 1.3])  # generic angles; metric ignores them

    def gram_at(ee):
        return metric(np.array([ee, point[1], point[2]]))[1:, 1:]

    gram = gram_at(eta)
    h = -(gram_at(eta + step) - gram_at(eta - step)) / (2 * step) * 0.5
    ric = ricci_fd(metric, point)
    # d/d eta is unit and orthogonal to the torus directions
    ric_normal = float(ric[0, 0])
    return gram, h, ric_normal
