"""Clifford tori in round spheres: analytic Jacobi spectrum and detection.

The family maps the product of a unit n-sphere and a unit m-sphere into the
unit (n+m+1)-sphere by scaling the factors with r and sqrt(1 - r^2).  All
curvature data is closed-form (certified against the finite-difference
embedding oracle), the Jacobi spectrum separates over product harmonics, and
degeneracy instants solve a one-line quadratic relation in r^2.
"""

from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

from .criteria import GATE_DERIVATIVE, GATE_ENDPOINT, decide_fired
from .errors import CutoffTooSmall, EquibifError
from .fingerprints import Fingerprint
from .oracles import embedded_torus_curvature, sphere_fd_spectrum
from .report import BifurcationReport, InstantRecord, SweepSample

KILLING_MODE = (1, 1)          # identically degenerate bidegree
ZERO_BAND = 1e-9               # |eigenvalue| below this counts as degenerate
DERIVATIVE_GATE = 1e-6


@dataclass(frozen=True)
class CliffordParams:
    n: int
    m: int
    r: float

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise EquibifError("factor dimensions must be positive integers")
        if not 0.0 < self.r < 1.0:
            raise EquibifError("r must lie strictly between 0 and 1")


@dataclass(frozen=True)
class CliffordGeometry:
    principal_curvatures: tuple   # ((kappa, multiplicity), (kappa, multiplicity))
    mean_curvature: float
    norm_A_squared: float
    ricci_term: float             # (n + m) * normalized ambient Ricci = n + m

    def __post_init__(self):
        (k1, n), (k2, m) = self.principal_curvatures
        if abs(self.norm_A_squared - (n * k1 ** 2 + m * k2 ** 2)) > 1e-9:
            raise EquibifError("|A|^2 must be the weighted sum of squared curvatures")
        if abs(self.mean_curvature - (n * k1 + m * k2) / (n + m)) > 1e-9:
            raise EquibifError("H must be the weighted mean of the curvatures")


def clifford_geometry(params):
    """Closed-form curvature data of the scaled product embedding.

    Normal orientation: positive against (sqrt(1-r^2) x, -r y), matching the
    finite-difference oracle in oracles.embedded_torus_curvature.
    """
    n, m, r = params.n, params.m, params.r
    s = np.sqrt(1.0 - r * r)
    k1 = -s / r
    k2 = r / s
    H = (n * k1 + m * k2) / (n + m)
    normA2 = n * k1 ** 2 + m * k2 ** 2
    return CliffordGeometry(principal_curvatures=((k1, n), (k2, m)),
                            mean_curvature=H, norm_A_squared=normA2,
                            ricci_term=float(n + m))


def mean_curvature_derivative(n, m, r):
    """d/dr of the mean curvature along the family (never zero in (0,1))."""
    return (n - (n - m) * r * r) / ((n + m) * r * r * (1 - r * r) ** 1.5)


def sphere_eigenvalue(n, j):
    """j-th distinct eigenvalue of -Laplace on the unit n-sphere."""
    return j * (j + n - 1)


def harmonic_dim(n, j):
    """Dimension of the degree-j harmonic space on the unit n-sphere."""
    if j < 0:
        return 0
    if j == 0:
        return 1
    if j == 1:
        return n + 1
    return comb(n + j, j) - comb(n + j - 2, j - 2)


def jacobi_eigenvalue(params, j, k):
    """Eigenvalue of the index form on bidegree-(j, k) product harmonics.

    Negative values contribute to the Morse index; the (1, 1) family is
    identically zero (ambient rotations mixing the two factors).
    """
    n, m, r = params.n, params.m, params.r
    geo = clifford_geometry(params)
    return (sphere_eigenvalue(n, j) / r ** 2
            + sphere_eigenvalue(m, k) / (1 - r ** 2)
            - geo.norm_A_squared - geo.ricci_term)


@lru_cache(maxsize=32)
def _cached_sphere_spectrum(n, cap_key, n_cells):
    return tuple(sphere_fd_spectrum(n, float(cap_key), n_cells))


def verify_instant_degenerate(n, m, r, j, k, n_cells=400, tol=2e-2):
    """FD certificate: the (j, k) mode eigenvalue vanishes at r.

    Uses finite-difference factor spectra and the finite-difference embedding
    curvature, never the closed forms under test.
    """
    H_fd, A2_fd = embedded_torus_curvature(n, m, r)
    cap_mu = sphere_eigenvalue(n, j) + 2 * n + 2
    cap_nu = sphere_eigenvalue(m, k) + 2 * m + 2
    spec_n = _cached_sphere_spectrum(n, cap_mu, n_cells)
    spec_m = _cached_sphere_spectrum(m, cap_nu, n_cells)
    mu = _distinct_value(spec_n, j)
    nu = _distinct_value(spec_m, k)
    lam_fd = mu / r ** 2 + nu / (1 - r ** 2) - A2_fd - (n + m)
    if abs(lam_fd) > tol * (1.0 + abs(A2_fd)):
        raise EquibifError(
            f"FD oracle does not confirm degeneracy at r={r}: lam={lam_fd:.3e}")
    return lam_fd


def _distinct_value(spectrum, index):
    seen = []
    for v, _ in spectrum:
        if not seen or abs(v - seen[-1]) > 1e-4 * max(1.0, abs(v)):
            seen.append(v)
        if len(seen) > index:
            return seen[index]
    raise EquibifError("FD spectrum cap too small for the requested mode")


def degeneracy_instants(n, m, count, verify=False):
    """Two sorted instant lists: (0,k)-modes toward 0, (j,0)-modes toward 1.

    Mixed bidegrees (j, k >= 1) never vanish inside (0, 1): the root formula
    r^2 = (mu_j - n) / (mu_j - nu_k + m - n) lands outside the interval for
    every such mode, so only the two pure families appear.
    """
    if count < 1:
        raise EquibifError("count must be >= 1")
    toward_zero = []
    for k in range(2, count + 2):
        nu = sphere_eigenvalue(m, k)
        r2 = n / (nu + n - m)
        if 0.0 < r2 < 1.0:
            toward_zero.append(np.sqrt(r2))
    toward_one = []
    for j in range(2, count + 2):
        mu = sphere_eigenvalue(n, j)
        r2 = (mu - n) / (mu - n + m)
        if 0.0 < r2 < 1.0:
            toward_one.append(np.sqrt(r2))
    toward_zero = sorted(toward_zero, reverse=True)[:count]
    toward_one = sorted(toward_one)[:count]
    if verify:
        for k, r in zip(range(2, 2 + len(toward_zero)),
                        sorted(toward_zero, reverse=True)):
            verify_instant_degenerate(n, m, r, 0, k)
        for j, r in zip(range(2, 2 + len(toward_one)), toward_one):
            verify_instant_degenerate(n, m, r, j, 0)
    return sorted(toward_zero), toward_one


def _mode_range(params, mode_cutoff):
    for j in range(mode_cutoff + 1):
        for k in range(mode_cutoff + 1):
            yield j, k


def _check_cutoff(params, mode_cutoff):
    edge = min(jacobi_eigenvalue(params, mode_cutoff, 0),
               jacobi_eigenvalue(params, 0, mode_cutoff))
    if edge <= 0:
        raise CutoffTooSmall(
            f"mode_cutoff={mode_cutoff} still has nonpositive edge modes")


def morse_index(params, mode_cutoff=24):
    """Negative-mode dimension count plus the per-mode table.

    The table lists every mode with eigenvalue <= 0 inside the cutoff as
    (j, k, eigenvalue, dimension); eigenvalues beyond the cutoff are checked
    positive (monotone in both indices).
    """
    _check_cutoff(params, mode_cutoff)
    n, m = params.n, params.m
    index = 0
    table = []
    for j, k in _mode_range(params, mode_cutoff):
        lam = jacobi_eigenvalue(params, j, k)
        if lam <= ZERO_BAND:
            dim = harmonic_dim(n, j) * harmonic_dim(m, k)
            table.append((j, k, lam, dim))
            if lam < -ZERO_BAND:
                index += dim
    return index, table


def clifford_fingerprint(params, mode_cutoff=24):
    """Bidegree labels with dimension multiplicities on the negative modes."""
    _, table = morse_index(params, mode_cutoff)
    counts = {}
    for j, k, lam, dim in table:
        if lam < -ZERO_BAND:
            counts[(j, k)] = counts.get((j, k), 0) + dim
    return Fingerprint.from_counts(
        counts, ("clifford-bidegree", params.n, params.m))


def _endpoint_degenerate(params, mode_cutoff):
    for j, k in _mode_range(params, mode_cutoff):
        if (j, k) == KILLING_MODE:
            continue
        if abs(jacobi_eigenvalue(params, j, k)) <= 1e-8:
            return True
    return False


def clifford_detect(n, m, r_interval, mode_cutoff=24, sweep_samples=33,
                    side_offset=1e-4, report_mode_rows=5):
    """Scan an r-interval and report every degeneracy instant with a verdict.

    Gates mirror the abstract criterion: endpoint equivariant nondegeneracy
    (kernel = the identically-degenerate mixing modes only), constant
    isotropy (holds by construction in this family, still recorded), and a
    nonvanishing parameter derivative of the mean curvature at the instant.
    """
    r_lo, r_hi = map(float, r_interval)
    if not 0.0 < r_lo < r_hi < 1.0:
        raise EquibifError("interval must sit strictly inside (0, 1)")
    count = max(8, int(np.ceil(1.0 / r_lo)) + mode_cutoff)
    toward_zero, toward_one = degeneracy_instants(n, m, count)
    instants = sorted(r for r in toward_zero + toward_one if r_lo < r < r_hi)

    gates_global = []
    if _endpoint_degenerate(CliffordParams(n, m, r_lo), mode_cutoff) \
            or _endpoint_degenerate(CliffordParams(n, m, r_hi), mode_cutoff):
        gates_global.append(GATE_ENDPOINT)

    records = []
    for r_star in instants:
        delta = min(side_offset, (r_star - r_lo) / 4, (r_hi - r_star) / 4)
        below = CliffordParams(n, m, r_star - delta)
        above = CliffordParams(n, m, r_star + delta)
        idx_b, _ = morse_index(below, mode_cutoff)
        idx_a, _ = morse_index(above, mode_cutoff)
        fp_b = clifford_fingerprint(below, mode_cutoff)
        fp_a = clifford_fingerprint(above, mode_cutoff)
        gates = list(gates_global)
        if abs(mean_curvature_derivative(n, m, r_star)) <= DERIVATIVE_GATE:
            gates.append(GATE_DERIVATIVE)
        fired = decide_fired(idx_b, idx_a, fp_b, fp_a, gates)
        records.append(InstantRecord(
            parameter=r_star, fired=fired, gate_failures=tuple(gates),
            index_before=idx_b, index_after=idx_a,
            fingerprint_before=fp_b.entries, fingerprint_after=fp_a.entries))

    sweep = []
    for r in np.linspace(r_lo, r_hi, sweep_samples):
        params = CliffordParams(n, m, float(r))
        idx, table = morse_index(params, mode_cutoff)
        per_j = [0] * report_mode_rows
        for j, k, lam, dim in table:
            if lam < -ZERO_BAND and j < report_mode_rows:
                per_j[j] += dim
        sweep.append(SweepSample(
            parameter=float(r),
            mean_curvature=clifford_geometry(params).mean_curvature,
            mean_curvature_derivative=mean_curvature_derivative(n, m, float(r)),
            morse_index=idx, mode_negative_counts=tuple(per_j)))

    return BifurcationReport(
        family="clifford",
        config={"n": n, "m": m, "r_interval": [r_lo, r_hi],
                "mode_cutoff": mode_cutoff, "sweep_samples": sweep_samples},
        sweep=sweep, instants=records)
