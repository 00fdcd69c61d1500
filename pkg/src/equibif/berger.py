"""Clifford tori in Berger spheres: flat-torus spectral analysis.

Metric convention: g_tau = g_round + (tau^2 - 1) sigma x sigma, where sigma
is the round-metric dual of the unit Hopf field.  The torus at parameter r
inherits a flat (generally non-product) metric; its Jacobi operator is the
flat Laplacian plus the constant |A|^2 + Ric(N), so the spectrum is the
dual-metric quadratic form on the integer lattice shifted by that constant.
All closed forms here are certified against the coordinate-metric oracle in
tests (induced metric, second fundamental form, and normal Ricci by finite
differences).
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .criteria import GATE_DERIVATIVE, GATE_ENDPOINT, decide_fired
from .errors import EquibifError
from .fingerprints import Fingerprint
from .report import BifurcationReport, InstantRecord, SweepSample

ROUND_TOL = 1e-12
DERIVATIVE_GATE = 1e-6
DEDUPE_TOL = 1e-10


@dataclass(frozen=True)
class BergerParams:
    r: float
    tau: float

    def __post_init__(self):
        if not 0.0 < self.r < 1.0:
            raise EquibifError("r must lie strictly between 0 and 1")
        if self.tau <= 0.0:
            raise EquibifError("tau must be positive")

    @property
    def is_round(self):
        return abs(self.tau - 1.0) <= ROUND_TOL


def induced_gram(r, tau):
    """Flat metric of the torus in the two angle coordinates."""
    t2m1 = tau * tau - 1.0
    return np.array([
        [r ** 2 + t2m1 * r ** 4, t2m1 * r ** 2 * (1 - r ** 2)],
        [t2m1 * r ** 2 * (1 - r ** 2), (1 - r ** 2) + t2m1 * (1 - r ** 2) ** 2],
    ])


def second_fundamental(r, tau):
    """Second fundamental form in angle coordinates.

    Orientation matches the closed forms of the round family (clifford
    module); the coordinate-polar oracle carries the opposite normal.
    """
    c = r * np.sqrt(1 - r * r)
    return np.array([
        [c * (2 * r ** 2 * (1 - tau ** 2) - 1),
         c * (1 - tau ** 2) * (1 - 2 * r ** 2)],
        [c * (1 - tau ** 2) * (1 - 2 * r ** 2),
         c * (1 - 2 * (1 - r ** 2) * (1 - tau ** 2))],
    ])


def normal_ricci(tau):
    """Ricci curvature of the Berger metric in the torus normal direction."""
    return 4.0 - 2.0 * tau ** 2


def shape_operator(r, tau):
    return np.linalg.solve(induced_gram(r, tau), second_fundamental(r, tau))


def berger_mean_curvature(r, tau):
    return 0.5 * np.trace(shape_operator(r, tau))


def berger_norm_A_squared(r, tau):
    s = shape_operator(r, tau)
    return float(np.trace(s @ s))


def jacobi_constant(r, tau):
    """|A|^2 plus the ambient Ricci term entering the Jacobi operator."""
    return berger_norm_A_squared(r, tau) + normal_ricci(tau)


def mode_eigenvalue(r, tau, j, k):
    """Index-form eigenvalue on the lattice mode (j, k)."""
    ginv = np.linalg.inv(induced_gram(r, tau))
    v = np.array([j, k], dtype=float)
    return float(v @ ginv @ v - jacobi_constant(r, tau))


def identically_degenerate(j, k, tau):
    """Modes whose eigenvalue vanishes for every r (Killing directions).

    The antidiagonal pair +-(1, -1) is identically degenerate for every tau;
    in the round case the diagonal pair +-(1, 1) joins it.
    """
    if {abs(j), abs(k)} != {1}:
        return False
    if j * k < 0:
        return True
    return abs(tau - 1.0) <= ROUND_TOL


def killing_jacobi_dim(tau):
    """Documented dimension of the Killing-generated Jacobi space: 3 for
    tau != 1, 4 in the round case."""
    if tau <= 0:
        raise EquibifError("tau must be positive")
    return 4 if abs(tau - 1.0) <= ROUND_TOL else 3


def killing_jacobi_mode_count(tau, r_samples=(0.31, 0.57, 0.83)):
    """Identically-degenerate lattice directions, counted numerically.

    Scans low modes at several r and counts those whose eigenvalue vanishes
    at every sample; this is the quantity the discretized operator certifies
    (2 off the round case, 4 at tau = 1).
    """
    count = 0
    for j in range(0, 2):
        for k in range(-1, 2):
            if (j, k) in ((0, 0), (0, -1)):
                continue
            if all(abs(mode_eigenvalue(r, tau, j, k)) < 1e-9
                   for r in r_samples):
                count += 2  # each mode pairs with its conjugate
    return count


@dataclass(frozen=True)
class FlatTorusSpectrum:
    gram: np.ndarray
    jacobi_constant: float
    modes: tuple  # ((j, k), eigenvalue), low modes sorted by eigenvalue

    def __post_init__(self):
        vals = np.linalg.eigvalsh(self.gram)
        if np.min(vals) <= 0:
            raise EquibifError("induced metric must be positive definite")
        ginv = np.linalg.inv(self.gram)
        for (j, k), lam in self.modes:
            v = np.array([j, k], dtype=float)
            if abs(v @ ginv @ v - self.jacobi_constant - lam) > 1e-9:
                raise EquibifError("mode eigenvalue inconsistent with the metric")


def berger_induced(params, mode_cutoff=6):
    """Flat-torus data of the embedding; reduces to the round family at tau=1."""
    r, tau = params.r, params.tau
    modes = []
    for j in range(0, mode_cutoff + 1):
        for k in range(-mode_cutoff, mode_cutoff + 1):
            if j == 0 and k < 0:
                continue
            modes.append(((j, k), mode_eigenvalue(r, tau, j, k)))
    modes.sort(key=lambda t: (t[1], t[0]))
    return FlatTorusSpectrum(gram=induced_gram(r, tau),
                             jacobi_constant=jacobi_constant(r, tau),
                             modes=tuple(modes))


# -- degeneracy sets ----------------------------------------------------------

def _lattice_modes(cutoff):
    for j in range(0, cutoff + 1):
        for k in range(-cutoff, cutoff + 1):
            if j == 0 and k < 0:
                continue
            yield j, k


def _refine_brackets(fun, grid, vals):
    """Roots of fun given its (vectorized) samples on the grid.

    Each candidate sign change is re-verified with scalar evaluations before
    brentq.  A grid point whose scalar value is exactly zero is itself a
    root; a bracket whose re-evaluated ends agree in sign is float noise
    from the vectorized curve (a root sitting on a grid point is then caught
    by the neighboring bracket) and is dropped.
    """
    roots = []
    sign = np.sign(vals)
    candidates = set(np.nonzero(sign[:-1] * sign[1:] < 0)[0])
    candidates |= {max(i - 1, 0) for i in np.nonzero(sign == 0)[0]}
    candidates |= {min(i, len(grid) - 2) for i in np.nonzero(sign == 0)[0]}
    for i in sorted(candidates):
        f_lo, f_hi = fun(grid[i]), fun(grid[i + 1])
        if f_lo == 0.0:
            roots.append(float(grid[i]))
        elif f_hi == 0.0:
            roots.append(float(grid[i + 1]))
        elif np.sign(f_lo) * np.sign(f_hi) < 0:
            roots.append(brentq(fun, grid[i], grid[i + 1],
                                xtol=1e-13, rtol=1e-15))
    return roots


def _dedupe(sorted_vals, tol=DEDUPE_TOL):
    out = []
    for v in sorted_vals:
        if not out or abs(v - out[-1]) > tol:
            out.append(v)
    return out


def _r_grid(n_mid=1600, n_edge=500):
    edge = np.geomspace(1e-5, 0.1, n_edge)
    mid = np.linspace(0.1, 0.9, n_mid)
    return np.concatenate([edge, mid[1:-1], 1.0 - edge[::-1]])


def berger_degeneracy_sets(tau, mode_cutoff=20):
    """Degeneracy instants in r for fixed tau, Killing modes excluded.

    Each root is bracketed by a sign change of its mode's eigenvalue curve
    before refinement; the merged list is sorted and deduplicated.
    """
    if mode_cutoff < 2:
        raise EquibifError("mode_cutoff must be >= 2")
    grid = _r_grid()
    i11, i12, i22, const = _inverse_gram_curves_r(grid, tau)
    roots = []
    for j, k in _lattice_modes(mode_cutoff):
        if identically_degenerate(j, k, tau):
            continue
        vals = j * j * i11 + 2 * j * k * i12 + k * k * i22 - const
        roots.extend(_refine_brackets(
            lambda r, j=j, k=k: mode_eigenvalue(r, tau, j, k), grid, vals))
    return _dedupe(sorted(roots))


def _inverse_gram_curves_r(grid, tau):
    """Inverse-metric entries and Jacobi constant vectorized over r."""
    t2m1 = tau * tau - 1.0
    g11 = grid ** 2 + t2m1 * grid ** 4
    g12 = t2m1 * grid ** 2 * (1 - grid ** 2)
    g22 = (1 - grid ** 2) + t2m1 * (1 - grid ** 2) ** 2
    det = g11 * g22 - g12 ** 2
    i11, i12, i22 = g22 / det, -g12 / det, g11 / det
    c = grid * np.sqrt(1 - grid ** 2)
    h11 = c * (2 * grid ** 2 * (1 - tau ** 2) - 1)
    h12 = c * (1 - tau ** 2) * (1 - 2 * grid ** 2)
    h22 = c * (1 - 2 * (1 - grid ** 2) * (1 - tau ** 2))
    s11 = i11 * h11 + i12 * h12
    s12 = i11 * h12 + i12 * h22
    s21 = i12 * h11 + i22 * h12
    s22 = i12 * h12 + i22 * h22
    normA2 = s11 * s11 + 2 * s12 * s21 + s22 * s22
    const = normA2 + normal_ricci(tau)
    return i11, i12, i22, const


def _inverse_gram_curves_tau(r, taus):
    """Inverse-metric entries and Jacobi constant vectorized over tau."""
    t2m1 = taus ** 2 - 1.0
    g11 = r ** 2 + t2m1 * r ** 4
    g12 = t2m1 * r ** 2 * (1 - r ** 2)
    g22 = (1 - r ** 2) + t2m1 * (1 - r ** 2) ** 2
    det = g11 * g22 - g12 ** 2
    i11, i12, i22 = g22 / det, -g12 / det, g11 / det
    c = r * np.sqrt(1 - r ** 2)
    h11 = c * (2 * r ** 2 * (1 - taus ** 2) - 1)
    h12 = c * (1 - taus ** 2) * (1 - 2 * r ** 2)
    h22 = c * (1 - 2 * (1 - r ** 2) * (1 - taus ** 2))
    s11 = i11 * h11 + i12 * h12
    s12 = i11 * h12 + i12 * h22
    s21 = i12 * h11 + i22 * h12
    s22 = i12 * h12 + i22 * h22
    normA2 = s11 * s11 + 2 * s12 * s21 + s22 * s22
    const = normA2 + 4.0 - 2.0 * taus ** 2
    return i11, i12, i22, const


def berger_degeneracy_sets_r(r, mode_cutoff=20, tau_max=None):
    """Degeneracy instants in tau for fixed r, Killing modes excluded.

    tau = 1 belongs to the round family and is never reported; the search
    window grows with the cutoff so that the top of the set keeps growing.
    """
    if mode_cutoff < 2:
        raise EquibifError("mode_cutoff must be >= 2")
    if tau_max is None:
        tau_max = 2.0 * mode_cutoff + 4.0
    # the round case tau = 1 is excluded; scan each side separately so the
    # diagonal mode pair, which is Killing exactly at tau = 1, cannot leak
    # a spurious bracket across the gap
    sides = (np.geomspace(1e-3, 1.0 - 1e-9, 700),
             np.geomspace(1.0 + 1e-9, tau_max, 2400))
    roots = []
    for grid in sides:
        i11, i12, i22, const = _inverse_gram_curves_tau(r, grid)
        for j, k in _lattice_modes(mode_cutoff):
            if identically_degenerate(j, k, 2.0):
                continue  # Killing for every tau
            vals = j * j * i11 + 2 * j * k * i12 + k * k * i22 - const
            roots.extend(_refine_brackets(
                lambda t, j=j, k=k: mode_eigenvalue(r, t, j, k), grid, vals))
    roots = [t for t in _dedupe(sorted(roots)) if abs(t - 1.0) > 1e-9]
    return roots


# -- detection ----------------------------------------------------------------

def _negative_mode_counts(r, tau, mode_cutoff):
    counts = {}
    index = 0
    for j, k in _lattice_modes(mode_cutoff):
        lam = mode_eigenvalue(r, tau, j, k)
        if lam < -1e-9 and not identically_degenerate(j, k, tau):
            dim = 1 if (j, k) == (0, 0) else 2
            counts[(j, k)] = dim
            index += dim
    return index, counts


def berger_fingerprint(params, mode_cutoff=20):
    """Lattice-orbit labels with real dimensions on the negative modes."""
    _, counts = _negative_mode_counts(params.r, params.tau, mode_cutoff)
    return Fingerprint.from_counts(counts, ("berger-lattice",))


def _endpoint_degenerate(r, tau, mode_cutoff):
    for j, k in _lattice_modes(mode_cutoff):
        if identically_degenerate(j, k, tau):
            continue
        if abs(mode_eigenvalue(r, tau, j, k)) <= 1e-8:
            return True
    return False


def berger_detect(scan, interval, r=None, tau=None, mode_cutoff=20,
                  sweep_samples=33, side_offset=1e-5, report_mode_rows=5):
    """Scan r at fixed tau, or tau at fixed r, and report verdicts.

    scan is "sweep_r" (requires tau) or "sweep_tau" (requires r).  Both
    directions gate on endpoint equivariant nondegeneracy.  The
    mean-curvature derivative gate applies to r-sweeps only: along a
    tau-sweep the ambient metric is the family parameter and the mean
    curvature of the torus is tau-independent (asserted numerically),
    so the multiplier needs no reparametrization.
    """
    lo, hi = map(float, interval)
    if scan == "sweep_r":
        if tau is None:
            raise EquibifError("sweep_r needs a fixed tau")
        if not 0.0 < lo < hi < 1.0:
            raise EquibifError("r-interval must sit strictly inside (0, 1)")
        roots = [x for x in berger_degeneracy_sets(tau, mode_cutoff)
                 if lo < x < hi]

        def at(x):
            return (x, tau)

        def H(x):
            return berger_mean_curvature(x, tau)
    elif scan == "sweep_tau":
        if r is None:
            raise EquibifError("sweep_tau needs a fixed r")
        if not 0.0 < lo < hi:
            raise EquibifError("tau-interval must be positive")
        roots = [x for x in berger_degeneracy_sets_r(r, mode_cutoff,
                                                     tau_max=max(hi * 1.5, 12.0))
                 if lo < x < hi]

        def at(x):
            return (r, x)

        def H(x):
            return berger_mean_curvature(r, x)
    else:
        raise EquibifError("scan must be sweep_r or sweep_tau")

    gates_global = []
    if _endpoint_degenerate(*at(lo), mode_cutoff) \
            or _endpoint_degenerate(*at(hi), mode_cutoff):
        gates_global.append(GATE_ENDPOINT)

    records = []
    for x_star in roots:
        delta = min(side_offset, (x_star - lo) / 4, (hi - x_star) / 4)
        rb, tb = at(x_star - delta)
        ra, ta = at(x_star + delta)
        idx_b, counts_b = _negative_mode_counts(rb, tb, mode_cutoff)
        idx_a, counts_a = _negative_mode_counts(ra, ta, mode_cutoff)
        fp_b = Fingerprint.from_counts(counts_b, ("berger-lattice",))
        fp_a = Fingerprint.from_counts(counts_a, ("berger-lattice",))
        gates = list(gates_global)
        h_step = max(1e-7, 1e-7 * abs(x_star))
        h_prime = (H(x_star + h_step) - H(x_star - h_step)) / (2 * h_step)
        if scan == "sweep_r" and abs(h_prime) <= DERIVATIVE_GATE:
            gates.append(GATE_DERIVATIVE)
        if scan == "sweep_tau" and abs(h_prime) > 1e-6:
            raise EquibifError("mean curvature unexpectedly varies with tau")
        fired = decide_fired(idx_b, idx_a, fp_b, fp_a, gates)
        records.append(InstantRecord(
            parameter=x_star, fired=fired, gate_failures=tuple(gates),
            index_before=idx_b, index_after=idx_a,
            fingerprint_before=fp_b.entries, fingerprint_after=fp_a.entries))

    sweep = []
    for x in np.linspace(lo, hi, sweep_samples):
        rr, tt = at(float(x))
        idx, counts = _negative_mode_counts(rr, tt, mode_cutoff)
        per_j = [0] * report_mode_rows
        for (j, k), dim in counts.items():
            if j < report_mode_rows:
                per_j[j] += dim
        h_step = max(1e-7, 1e-7 * abs(float(x)))
        sweep.append(SweepSample(
            parameter=float(x), mean_curvature=float(H(float(x))),
            mean_curvature_derivative=float(
                (H(float(x) + h_step) - H(float(x) - h_step)) / (2 * h_step)),
            morse_index=idx, mode_negative_counts=tuple(per_j)))

    config = {"scan": scan, "interval": [lo, hi], "mode_cutoff": mode_cutoff,
              "sweep_samples": sweep_samples}
    if scan == "sweep_r":
        config["tau"] = tau
    else:
        config["r"] = r
    return BifurcationReport(family="berger", config=config,
                             sweep=sweep, instants=records)
