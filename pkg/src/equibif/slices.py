"""Slice charts through group orbits and the degree-based intersection test.

A slice chart parameterizes an affine slice through a point x: its tangent is
an isotropy-invariant complement of the orbit tangent, so the chart image is
automatically invariant under the isotropy.  The intersection check certifies
that a continuous family keeps meeting the slice nearby, by computing the
topological degree of the induced sphere map in the slice codimension
(supported for codimension up to three).
"""

from dataclasses import dataclass

import numpy as np

from .errors import (DegenerateLinearization, EquibifError,
                     OrbitBasisNotInvariant, RadiusNotIsolating)
from .groups import (GroupAction, invariant_complement, orthonormal_basis,
                     subspace_invariance_defect)


@dataclass(frozen=True)
class SliceChart:
    """Affine parametrization v -> exp_x(B v) of a slice through center."""

    center: np.ndarray
    tangent_basis: np.ndarray       # (d, s) orthonormal columns
    isotropy: GroupAction
    exp_map: object = None          # optional callable (x, v) -> point

    @property
    def ambient_dim(self):
        return len(self.center)

    @property
    def slice_dim(self):
        return self.tangent_basis.shape[1]

    @property
    def codim(self):
        return self.ambient_dim - self.slice_dim

    def normal_basis(self):
        """Orthonormal basis of the complement of the chart tangent."""
        B = self.tangent_basis
        if B.shape[1] == 0:
            return np.eye(self.ambient_dim)
        u, s, vt = np.linalg.svd(B.T)
        # rows of vt beyond the rank span the orthogonal complement
        return vt[B.shape[1]:].T

    def map(self, v):
        v = np.asarray(v, dtype=float)
        step = self.tangent_basis @ v
        if self.exp_map is not None:
            return np.asarray(self.exp_map(self.center, step), dtype=float)
        return self.center + step

    def coordinates_of(self, y):
        """Chart coordinates of the slice point nearest to y (affine chart)."""
        return self.tangent_basis.T @ (np.asarray(y, dtype=float) - self.center)


def build_slice_chart(x, orbit_tangent_basis, action, exp_map=None):
    """Slice through x: invariant complement of the orbit tangent.

    The default chart map is the straight-line translation v -> x + Bv; an
    affine exponential map may be supplied instead.
    """
    x = np.asarray(x, dtype=float)
    isotropy = action.isotropy_of(x)
    orbit = orthonormal_basis(orbit_tangent_basis, action.dim)
    defect = subspace_invariance_defect(orbit, isotropy)
    if defect > 1e-8:
        raise OrbitBasisNotInvariant(
            f"isotropy moves the orbit tangent space ({defect:.2e})")
    tangent = invariant_complement(orbit, isotropy)
    # complement of an invariant space under an orthogonal action is the
    # orthogonal complement, so the basis is orthonormal already
    return SliceChart(center=x, tangent_basis=tangent, isotropy=isotropy,
                      exp_map=exp_map)


# -- degree computation -------------------------------------------------------

def _winding_number(g, radius, samples=720):
    thetas = np.linspace(0.0, 2 * np.pi, samples, endpoint=False)
    pts = np.array([g(radius * np.array([np.cos(t), np.sin(t)]))
                    for t in thetas])
    angles = np.arctan2(pts[:, 1], pts[:, 0])
    diffs = np.diff(np.concatenate([angles, angles[:1]]))
    diffs = (diffs + np.pi) % (2 * np.pi) - np.pi
    total = np.sum(diffs)
    return int(np.round(total / (2 * np.pi)))


def _icosphere(subdivisions=2):
    phi = (1 + np.sqrt(5)) / 2
    verts = [(-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
             (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
             (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1)]
    verts = [np.array(v, dtype=float) / np.linalg.norm(v) for v in verts]
    faces = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
             (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
             (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
             (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    for _ in range(subdivisions):
        cache = {}
        new_faces = []

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        for (i, j, k) in faces:
            a, b, c = midpoint(i, j), midpoint(j, k), midpoint(k, i)
            new_faces += [(i, a, c), (j, b, a), (k, c, b), (a, b, c)]
        faces = new_faces
    return np.array(verts), faces


def _solid_angle_degree(g, radius, subdivisions=2):
    verts, faces = _icosphere(subdivisions)
    imgs = np.array([g(radius * v) for v in verts])
    norms = np.linalg.norm(imgs, axis=1)
    if np.any(norms == 0):
        raise RadiusNotIsolating("image vanishes on the sphere sample")
    units = imgs / norms[:, None]
    total = 0.0
    for (i, j, k) in faces:
        a, b, c = units[i], units[j], units[k]
        num = np.dot(a, np.cross(b, c))
        den = 1 + np.dot(a, b) + np.dot(b, c) + np.dot(c, a)
        total += 2 * np.arctan2(num, den)
    return int(np.round(total / (4 * np.pi)))


def intersection_degree_check(chi, chart, a0, m0, radius=1e-2,
                              isolation_samples=7, cond_limit=1e8):
    """True iff the slice keeps meeting chi(a, .) for parameters a near a0.

    chi(a, m) maps a parameter and a point m in R^s into the ambient space;
    the induced map into the slice-normal directions must have an isolated,
    nondegenerate zero at m0.  The certificate is a nonzero topological
    degree of the normalized boundary map, computed per codimension:
    sign change (1), winding number (2), or summed solid angles (3).
    """
    m0 = np.asarray(m0, dtype=float)
    d = chart.codim
    if d == 0:
        return True
    if d > 3:
        raise EquibifError("degree computation supports codimension <= 3")
    N = chart.normal_basis()

    def f(a, m):
        return N.T @ (np.asarray(chi(a, m), dtype=float) - chart.center)

    base = f(a0, m0)
    if np.linalg.norm(base) > 1e-8:
        raise EquibifError("chi(a0, m0) does not lie on the slice")

    s = len(m0)
    if s < d:
        raise EquibifError("the sampler domain dimension must be >= the codimension")
    step = 1e-6 * max(1.0, np.linalg.norm(m0))
    J = np.empty((d, s))
    for i in range(s):
        dm = np.zeros(s)
        dm[i] = step
        J[:, i] = (f(a0, m0 + dm) - f(a0, m0 - dm)) / (2 * step)
    u, sv, vt = np.linalg.svd(J)
    if sv[-1] <= 0 or sv[0] / sv[-1] > cond_limit:
        raise DegenerateLinearization(
            "no subspace makes the partial differential an isomorphism")
    V = vt[:d].T  # restrict to the d best-conditioned directions

    def g(w):
        return f(a0, m0 + V @ w)

    # isolation scan strictly inside the ball
    axes = [np.linspace(-radius, radius, isolation_samples)] * d
    zero_floor = max(1e-12, 0.05 * sv[-1] * radius)
    for w in np.stack(np.meshgrid(*axes), axis=-1).reshape(-1, d):
        rho = np.linalg.norm(w)
        if rho < 0.3 * radius or rho > radius:
            continue
        if np.linalg.norm(g(w)) < zero_floor * (rho / radius):
            raise RadiusNotIsolating("another zero detected inside the ball")

    if d == 1:
        lo, hi = g(np.array([-radius]))[0], g(np.array([radius]))[0]
        degree = int(np.sign(hi) - np.sign(lo)) // 2
    elif d == 2:
        degree = _winding_number(g, radius)
    else:
        degree = _solid_angle_degree(g, radius)
    return degree != 0
