"""Rotationally symmetric CMC surfaces in R^3 with fixed boundary circles.

A profile is the generating curve (x(s), z(s)) of a surface of revolution,
integrated in arc length from the lower boundary circle with prescribed
initial inclination; the constant mean curvature is recovered by shooting so
that the curve ends on the upper circle.  The Jacobi operator separates into
circular-harmonic modes, each a Sturm-Liouville problem on [0, L]; detection
tracks conjugate instants of the modes across a sweep of the inclination.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .criteria import GATE_DERIVATIVE, GATE_ENDPOINT
from .errors import (AxisCollision, BlowUp, CutoffTooSmall, EquibifError,
                     NoSolution, ProfileNotCertified)
from .fingerprints import Fingerprint
from .report import BifurcationReport, InstantRecord, SweepSample
from .spectral import (SturmLiouvilleProblem, conjugate_value, sl_assemble,
                       tridiag_count_below, tridiag_lowest_eigenvalues)

AXIS_FLOOR = 1e-8
UNIT_SPEED_TOL = 1e-8
BOUNDARY_TOL = 1e-8
MEAN_CURVATURE_TOL = 1e-6
DERIVATIVE_GATE = 1e-6
DERIVATIVE_STEP = 1e-4
FINGERPRINT_SIGNATURE = ("rotsym-circle",)


@dataclass(frozen=True)
class BoundaryConfig:
    rho_low: float
    rho_high: float
    height: float

    def __post_init__(self):
        if min(self.rho_low, self.rho_high, self.height) <= 0:
            raise EquibifError("radii and separation must be positive")


@dataclass(frozen=True)
class DelaunayProfile:
    boundary: BoundaryConfig
    r: float              # sweep coordinate: initial inclination phi(0)
    mean_curvature: float
    length: float
    s: np.ndarray         # uniform arc-length grid, endpoints included
    x: np.ndarray
    z: np.ndarray
    phi: np.ndarray
    norm_A2: np.ndarray

    @property
    def n_interior(self):
        return len(self.s) - 2


def _fd_derivative(y, h):
    """Fourth-order finite-difference derivative on a uniform grid."""
    y = np.asarray(y, dtype=float)
    d = np.empty_like(y)
    d[2:-2] = (y[:-4] - 8 * y[1:-3] + 8 * y[3:-1] - y[4:]) / (12 * h)
    for i in (0, 1):
        d[i] = (-25 * y[i] + 48 * y[i + 1] - 36 * y[i + 2]
                + 16 * y[i + 3] - 3 * y[i + 4]) / (12 * h)
    for i in (-1, -2):
        d[i] = (25 * y[i] - 48 * y[i - 1] + 36 * y[i - 2]
                - 16 * y[i - 3] + 3 * y[i - 4]) / (12 * h)
    return d


def _integrate(boundary, r, H, s_max):
    """Integrate the generating-curve system until z first reaches height."""

    def rhs(s, y):
        x, z, phi = y
        return [np.cos(phi), np.sin(phi), 2 * H - np.sin(phi) / x]

    def hit_top(s, y):
        return y[1] - boundary.height
    hit_top.terminal = True

    def hit_axis(s, y):
        return y[0] - AXIS_FLOOR
    hit_axis.terminal = True
    hit_axis.direction = -1

    sol = solve_ivp(rhs, (0.0, s_max), [boundary.rho_low, 0.0, r],
                    events=(hit_top, hit_axis), dense_output=True,
                    rtol=1e-12, atol=1e-12, method="DOP853")
    return sol


def _shooting_residual(boundary, r, H, s_max):
    sol = _integrate(boundary, r, H, s_max)
    if sol.t_events[1].size or not sol.t_events[0].size:
        return np.nan, None
    L = float(sol.t_events[0][0])
    x_end = float(sol.sol(L)[0])
    return x_end - boundary.rho_high, sol


_PROFILE_CACHE = {}
_H_HISTORY = {}


def reset_profile_cache():
    """Drop cached profiles and bracket hints (fresh-run reproducibility)."""
    _PROFILE_CACHE.clear()
    _H_HISTORY.clear()


def _scan_bracket(boundary, r, hs, s_max):
    residuals = np.array([_shooting_residual(boundary, r, H, s_max)[0]
                          for H in hs])
    for i in range(len(hs) - 1):
        if np.isnan(residuals[i]) or np.isnan(residuals[i + 1]):
            continue
        if residuals[i] == 0.0:
            return (hs[i], hs[i])
        if residuals[i] * residuals[i + 1] < 0:
            return (hs[i], hs[i + 1])
    return None


def _refine_h_bracket(boundary, r, bracket, s_max, tol=1e-13):
    """Bisection for the shooting H, tolerant of NaN pockets in the bracket.

    The residual is undefined where the trajectory hits the axis before
    reaching the top plane; when the midpoint lands there, the bracket is
    re-established from interior samples instead of failing.
    """
    def f(H):
        return _shooting_residual(boundary, r, H, s_max)[0]

    a, b = bracket
    try:
        return brentq(f, a, b, xtol=tol, rtol=1e-15)
    except ValueError:
        pass
    fa, fb = f(a), f(b)
    for _ in range(200):
        if b - a <= tol * max(1.0, abs(a)):
            return 0.5 * (a + b)
        mid = 0.5 * (a + b)
        fm = f(mid)
        if np.isnan(fm):
            repaired = _scan_bracket(boundary, r, np.linspace(a, b, 17), s_max)
            if repaired is None or repaired == (a, b):
                raise NoSolution(
                    f"shooting residual undefined inside the bracket at r={r}")
            a, b = repaired
            fa, fb = f(a), f(b)
            continue
        if fm == 0.0:
            return mid
        if np.sign(fa) * np.sign(fm) < 0:
            b, fb = mid, fm
        else:
            a, fa = mid, fm
    return 0.5 * (a + b)


def shoot_profile(boundary, r, n_nodes=512, h_window=(-4.0, 4.0),
                  h_scan=33, s_max=None):
    """Profile with the mean curvature solved so the curve ends on the
    upper circle.

    The inclination r fixes the initial direction; the residual
    x(at z = height) - rho_high is bracketed on the H window and refined by
    brentq.  Solved profiles are cached per (boundary, r); nearby cached
    solutions seed the bracket search.  NoSolution when no bracket exists in
    the window, AxisCollision when the trajectory runs into the axis.
    """
    key = (boundary, round(float(r), 13), n_nodes, h_window)
    if key in _PROFILE_CACHE:
        return _PROFILE_CACHE[key]
    if s_max is None:
        s_max = 4.0 * (boundary.height + boundary.rho_low + boundary.rho_high)
    history = _H_HISTORY.setdefault(boundary, [])
    bracket = None
    if history:
        h_hint = min(history, key=lambda t: abs(t[0] - r))[1]
        for width in (0.02, 0.2):
            hs = np.linspace(h_hint - width, h_hint + width, 9)
            bracket = _scan_bracket(boundary, r, hs, s_max)
            if bracket is not None:
                break
    if bracket is None:
        bracket = _scan_bracket(
            boundary, r, np.linspace(h_window[0], h_window[1], h_scan), s_max)
    if bracket is None:
        raise NoSolution(
            f"no shooting bracket for r={r} in H window {h_window}")
    if bracket[0] == bracket[1]:
        H = float(bracket[0])
    else:
        H = _refine_h_bracket(boundary, r, bracket, s_max)
    residual, sol = _shooting_residual(boundary, r, H, s_max)
    if sol is None:
        raise AxisCollision("refined trajectory left the admissible region")
    L = float(sol.t_events[0][0])
    profile = None
    error = None
    for n_try in (n_nodes, 2 * n_nodes, 4 * n_nodes):
        s = np.linspace(0.0, L, n_try + 2)
        x, z, phi = sol.sol(s)
        x = np.asarray(x)
        if np.min(x) <= AXIS_FLOOR:
            raise AxisCollision("profile touches the rotation axis")
        phi_dot = 2 * H - np.sin(phi) / x
        norm_A2 = phi_dot ** 2 + (np.sin(phi) / x) ** 2
        candidate = DelaunayProfile(boundary=boundary, r=float(r),
                                    mean_curvature=float(H), length=L, s=s,
                                    x=x, z=np.asarray(z), phi=np.asarray(phi),
                                    norm_A2=norm_A2)
        try:
            certify_profile(candidate)
            profile = candidate
            break
        except ProfileNotCertified as exc:
            error = exc  # sharper necks need finer sampling for the certificate
    if profile is None:
        raise error
    history.append((float(r), float(H)))
    if len(_PROFILE_CACHE) > 4096:
        _PROFILE_CACHE.clear()
    _PROFILE_CACHE[key] = profile
    return profile


def certify_profile(profile):
    """Checks the stored samples against the profile invariants.

    Unit speed and the boundary interpolation are checked directly; the
    pointwise mean curvature is recomputed from the samples with
    finite-difference derivatives of the inclination, independent of the
    shooting target value.
    """
    b = profile.boundary
    dx = np.cos(profile.phi)
    dz = np.sin(profile.phi)
    unit_defect = np.max(np.abs(dx ** 2 + dz ** 2 - 1.0))
    if unit_defect > UNIT_SPEED_TOL:
        raise ProfileNotCertified(f"unit speed defect {unit_defect:.2e}")
    if abs(profile.x[0] - b.rho_low) > BOUNDARY_TOL \
            or abs(profile.x[-1] - b.rho_high) > BOUNDARY_TOL \
            or abs((profile.z[-1] - profile.z[0]) - b.height) > BOUNDARY_TOL:
        raise ProfileNotCertified("boundary circles missed")
    h = profile.s[1] - profile.s[0]
    # consistency of the resampled curve with its inclination
    x_dot_fd = _fd_derivative(profile.x, h)
    if np.max(np.abs(x_dot_fd - dx)) > 1e-5:
        raise ProfileNotCertified("resampled curve inconsistent with phi")
    phi_dot_fd = _fd_derivative(profile.phi, h)
    h_pointwise = 0.5 * (phi_dot_fd + dz / profile.x)
    defect = np.max(np.abs(h_pointwise - profile.mean_curvature))
    if defect > MEAN_CURVATURE_TOL:
        raise ProfileNotCertified(f"mean curvature drifts by {defect:.2e}")
    return True


def mode_problem(profile, n):
    """Sturm-Liouville problem of the n-th circular-harmonic mode."""
    if n < 0:
        raise EquibifError("mode index must be nonnegative")
    x = profile.x
    if np.min(x) <= AXIS_FLOOR:
        raise ProfileNotCertified("profile radius too close to the axis")
    q = n * n / x - x * profile.norm_A2
    return SturmLiouvilleProblem(p=x.copy(), q=q, w=x.copy(),
                                 L=profile.length)


def mode_negative_count(profile, n):
    """Negative-eigenvalue count of the n-th mode (Sturm count at zero)."""
    d, e, _ = sl_assemble(mode_problem(profile, n))
    return tridiag_count_below(d, e, 0.0)


@dataclass(frozen=True)
class ModeRow:
    n: int
    negative_count: int
    conjugate_value: float
    degenerate: bool


def _safe_conjugate_value(prob):
    """Boundary value of the lambda = 0 solve; a blowup is far from
    conjugate and keeps its escape sign (saturated)."""
    try:
        return conjugate_value(prob)
    except BlowUp as err:
        return getattr(err, "escape_sign", 1.0) * 1e12


def _mode_table(profile, n_max, degeneracy_tol=1e-8):
    rows = []
    for n in range(n_max + 1):
        prob = mode_problem(profile, n)
        d, e, _ = sl_assemble(prob)
        count = tridiag_count_below(d, e, 0.0)
        conj = _safe_conjugate_value(prob)
        lowest = tridiag_lowest_eigenvalues(d, e, 1)[0]
        rows.append(ModeRow(n=n, negative_count=count, conjugate_value=conj,
                            degenerate=abs(lowest) <= degeneracy_tol
                            or abs(conj) <= degeneracy_tol))
    return rows


def rotsym_morse_index(profile, n_max=8):
    """Morse index (mode-0 counts once, higher modes twice) plus the table.

    The truncation is certified by a positive lowest eigenvalue at n_max;
    the mode potentials grow with n, so the counts are nonincreasing beyond
    the certified tail.
    """
    rows = _mode_table(profile, n_max)
    d, e, _ = sl_assemble(mode_problem(profile, n_max))
    if rows[-1].negative_count > 0 or tridiag_lowest_eigenvalues(d, e, 1)[0] <= 0:
        raise CutoffTooSmall(f"mode {n_max} still has nonpositive spectrum")
    index = rows[0].negative_count \
        + 2 * sum(r.negative_count for r in rows[1:])
    return index, rows


def rotsym_fingerprint(profile, n_max=8):
    """Rotation-group fingerprint of the negative eigenspace.

    Weight n carries two eigenfunctions (cos and sin branches) per negative
    mode solution, weight 0 one; multiplicities count real dimensions so the
    total matches the Morse index.
    """
    index, rows = rotsym_morse_index(profile, n_max)
    counts = {}
    if rows[0].negative_count:
        counts[0] = rows[0].negative_count
    for row in rows[1:]:
        if row.negative_count:
            counts[row.n] = 2 * row.negative_count
    fp = Fingerprint.from_counts(counts, FINGERPRINT_SIGNATURE)
    if fp.total_dim != index:
        raise EquibifError("fingerprint dimensions disagree with the index")
    return fp


def conjugate_scan(boundary, r_grid, n, refine_tol=1e-6, cross_validate=True,
                   **shoot_kwargs):
    """Conjugate instants of mode n across a sweep of the inclination.

    Sign changes of the mode's lambda = 0 boundary value are refined by
    bisection to refine_tol; each instant is cross-validated by the
    eigenvalue-count route (the count below zero changes by one across the
    instant) when cross_validate is set.
    """
    values = {}

    def conj(r):
        if r not in values:
            values[r] = _safe_conjugate_value(mode_problem(
                shoot_profile(boundary, r, **shoot_kwargs), n))
        return values[r]

    instants = []
    grid = np.asarray(r_grid, dtype=float)
    for lo, hi in zip(grid[:-1], grid[1:]):
        if np.sign(conj(lo)) * np.sign(conj(hi)) < 0:
            a, fa = lo, conj(lo)
            b = hi
            while b - a > refine_tol:
                mid = 0.5 * (a + b)
                fm = conj(mid)
                if np.sign(fa) * np.sign(fm) < 0:
                    b = mid
                else:
                    a, fa = mid, fm
            instants.append(0.5 * (a + b))
    if cross_validate:
        for r_star in instants:
            width = max(10 * refine_tol, 1e-5)
            lo_count = mode_negative_count(
                shoot_profile(boundary, r_star - width, **shoot_kwargs), n)
            hi_count = mode_negative_count(
                shoot_profile(boundary, r_star + width, **shoot_kwargs), n)
            if abs(hi_count - lo_count) != 1:
                raise EquibifError(
                    f"eigenvalue count does not cross at r={r_star:.8f}")
    return instants


def _mean_curvature_derivative(boundary, r, step=DERIVATIVE_STEP,
                               **shoot_kwargs):
    h_lo = shoot_profile(boundary, r - step, **shoot_kwargs).mean_curvature
    h_hi = shoot_profile(boundary, r + step, **shoot_kwargs).mean_curvature
    return (h_hi - h_lo) / (2 * step)


def rotsym_detect(boundary, sweep_interval, n_max=5, sweep_samples=17,
                  refine_tol=1e-6, isolation_factor=10.0, **shoot_kwargs):
    """Locate the first conjugate instant of every mode n > 0 in the sweep.

    Per instant: checks isolation (no other mode degenerates inside the
    widened bracket), a nonvanishing sweep-derivative of the mean curvature,
    and endpoint equivariant nondegeneracy; fires on the representation jump
    (the fingerprint gains weight n) without requiring a Morse-index change;
    flags symmetry breaking when the rotationally symmetric mode stays
    nondegenerate across the instant.
    """
    r_lo, r_hi = map(float, sweep_interval)
    grid = np.linspace(r_lo, r_hi, sweep_samples)
    profiles = {float(r): shoot_profile(boundary, float(r), **shoot_kwargs)
                for r in grid}

    tables = {r: _mode_table(profiles[r], n_max) for r in profiles}
    endpoint_bad = any(row.degenerate for r in (float(r_lo), float(r_hi))
                       for row in tables[r])

    records = []
    for n in range(1, n_max + 1):
        instants = conjugate_scan(boundary, grid, n, refine_tol=refine_tol,
                                  cross_validate=True, **shoot_kwargs)
        if not instants:
            continue
        r_star = instants[0]  # first instant of this mode in the sweep
        window = isolation_factor * refine_tol

        def conj_at(r, mode):
            return _safe_conjugate_value(mode_problem(
                shoot_profile(boundary, r, **shoot_kwargs), mode))

        isolated = True
        for other in range(0, n_max + 1):
            if other == n:
                continue
            lo_v = conj_at(r_star - window, other)
            hi_v = conj_at(r_star + window, other)
            if np.sign(lo_v) * np.sign(hi_v) <= 0:
                isolated = False
        gates = []
        if endpoint_bad:
            gates.append(GATE_ENDPOINT)
        h_prime = _mean_curvature_derivative(boundary, r_star, **shoot_kwargs)
        if abs(h_prime) <= DERIVATIVE_GATE:
            gates.append(GATE_DERIVATIVE)

        side = max(5 * window, 5e-5)
        prof_b = shoot_profile(boundary, r_star - side, **shoot_kwargs)
        prof_a = shoot_profile(boundary, r_star + side, **shoot_kwargs)
        idx_b, _ = rotsym_morse_index(prof_b, n_max)
        idx_a, _ = rotsym_morse_index(prof_a, n_max)
        fp_b = rotsym_fingerprint(prof_b, n_max)
        fp_a = rotsym_fingerprint(prof_a, n_max)

        mode0_lo = conj_at(r_star - window, 0)
        mode0_hi = conj_at(r_star + window, 0)
        mode0_nondegenerate = np.sign(mode0_lo) * np.sign(mode0_hi) > 0

        if gates or not isolated:
            if not isolated and GATE_ENDPOINT not in gates:
                gates.append(GATE_ENDPOINT)
            fired = "none"
            symmetry = None
        else:
            # the representation criterion fires on the fingerprint jump
            # alone; a simultaneous index jump is not required
            fired = "representation_jump" if fp_b.entries != fp_a.entries \
                else "none"
            symmetry = bool(mode0_nondegenerate) if fired != "none" else None
        records.append(InstantRecord(
            parameter=r_star, fired=fired, gate_failures=tuple(gates),
            index_before=idx_b, index_after=idx_a,
            fingerprint_before=fp_b.entries, fingerprint_after=fp_a.entries,
            symmetry_breaking=symmetry, mode=n))

    sweep = []
    for r in grid:
        prof = profiles[float(r)]
        rows = tables[float(r)]
        index = rows[0].negative_count + 2 * sum(q.negative_count
                                                 for q in rows[1:])
        sweep.append(SweepSample(
            parameter=float(r), mean_curvature=prof.mean_curvature,
            mean_curvature_derivative=_mean_curvature_derivative(
                boundary, float(r), **shoot_kwargs),
            morse_index=index,
            mode_negative_counts=tuple(q.negative_count for q in rows)))

    return BifurcationReport(
        family="rotsym",
        config={"rho_low": boundary.rho_low, "rho_high": boundary.rho_high,
                "height": boundary.height,
                "sweep_interval": [r_lo, r_hi], "n_max": n_max,
                "sweep_samples": sweep_samples},
        sweep=sweep, instants=records)
