"""Bifurcation criteria on finite-dimensional endpoint data.

Given symmetric Hessians and isotropy actions at the two ends of a parameter
interval, the evaluator checks the precondition gates in order (constant
isotropy, niceness, equivariant nondegeneracy) and then fires either on a
jump of the negative-eigenvalue count or on inequivalent negative isotropy
representations.  Localization refines an interval to the instants where the
endpoint signature changes, and the continuation search hunts for nontrivial
critical branches near a fired instant.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import EquibifError, NoChangeDetected, NotSymmetric
from .fingerprints import Fingerprint, fingerprint, fingerprints_equivalent
from .groups import GroupAction, describe_niceness, nice_group

KERNEL_RTOL = 1e-7   # |mu| below this times the spectral radius counts as zero
TIE_RTOL = 1e-9      # eigenvalues this close to the cut threshold are included

GATE_ISOTROPY = "isotropy_not_constant"
GATE_NICE = "isotropy_not_nice_unknown"
GATE_ENDPOINT = "endpoint_degenerate"
GATE_DERIVATIVE = "parameter_derivative_zero"

FIRED_NONE = "none"
FIRED_MORSE = "morse_jump"
FIRED_REPRESENTATION = "representation_jump"


@dataclass(frozen=True)
class NegativeEigendata:
    """Eigenpairs at or below the cut threshold epsilon."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # orthonormal columns, one per eigenvalue
    epsilon: float

    @property
    def dim(self):
        return len(self.eigenvalues)


def _symmetrize(A, tol=1e-10):
    A = np.asarray(A, dtype=float)
    scale = max(1.0, np.linalg.norm(A))
    if np.linalg.norm(A - A.T) > tol * scale:
        raise NotSymmetric("matrix is not symmetric to tolerance")
    return 0.5 * (A + A.T)


def negative_eigenspace(A, epsilon=0.0):
    """All eigenpairs with eigenvalue <= epsilon (threshold inclusive)."""
    A = _symmetrize(A)
    vals, vecs = np.linalg.eigh(A)
    scale = max(1.0, np.max(np.abs(vals)))
    keep = vals <= epsilon + TIE_RTOL * scale
    return NegativeEigendata(eigenvalues=vals[keep],
                             eigenvectors=vecs[:, keep],
                             epsilon=float(epsilon))


def spectral_split(A):
    """(strictly negative pairs, kernel pairs) with the zero band scaled
    to the spectral radius."""
    A = _symmetrize(A)
    vals, vecs = np.linalg.eigh(A)
    rho = max(np.max(np.abs(vals)), 1e-300)
    zero_band = KERNEL_RTOL * rho
    neg = vals < -zero_band
    ker = np.abs(vals) <= zero_band
    return (vals[neg], vecs[:, neg]), (vals[ker], vecs[:, ker])


@dataclass(frozen=True)
class EndpointData:
    """What the criteria need to know about one end of the family."""

    hessian: np.ndarray
    isotropy: GroupAction
    orbit_tangent_dim: int
    nice_descriptor: object = None  # derived from the isotropy when omitted


@dataclass(frozen=True)
class CriterionVerdict:
    fired: str
    gate_failures: tuple
    index_a: int
    index_b: int
    fingerprint_a: Fingerprint
    fingerprint_b: Fingerprint

    def __post_init__(self):
        if self.fired != FIRED_NONE and self.gate_failures:
            raise EquibifError("a verdict cannot fire with failed gates")
        if self.fired == FIRED_MORSE and self.index_a == self.index_b:
            raise EquibifError("morse_jump requires an index change")


def decide_fired(index_a, index_b, fp_a, fp_b, gate_failures):
    """Shared firing logic: gates first, then index jump, then fingerprints."""
    if gate_failures:
        return FIRED_NONE
    if index_a != index_b:
        return FIRED_MORSE
    if fp_a is not None and fp_b is not None:
        same = (fp_a.action_signature == fp_b.action_signature
                and fingerprints_equivalent(fp_a, fp_b))
        if not same:
            return FIRED_REPRESENTATION
    return FIRED_NONE


def evaluate_criterion(endpoint_a, endpoint_b, epsilon=0.0,
                       extra_gate_failures=()):
    """Gate checks followed by the two jump criteria.

    Never raises on a failed hypothesis: failures are reported in
    gate_failures and the verdict does not fire.
    """
    gates = list(extra_gate_failures)

    same_iso = (endpoint_a.isotropy.descriptor()
                == endpoint_b.isotropy.descriptor())
    if not same_iso:
        gates.append(GATE_ISOTROPY)

    desc = endpoint_a.nice_descriptor or describe_niceness(endpoint_a.isotropy)
    if nice_group(desc) == "unknown":
        gates.append(GATE_NICE)

    (neg_a, vecs_a), (ker_a, _) = spectral_split(endpoint_a.hessian)
    (neg_b, vecs_b), (ker_b, _) = spectral_split(endpoint_b.hessian)
    if len(ker_a) != endpoint_a.orbit_tangent_dim \
            or len(ker_b) != endpoint_b.orbit_tangent_dim:
        gates.append(GATE_ENDPOINT)

    fp_a = fingerprint(endpoint_a.isotropy, vecs_a)
    fp_b = fingerprint(endpoint_b.isotropy, vecs_b)

    fired = decide_fired(len(neg_a), len(neg_b),
                         fp_a if same_iso else None,
                         fp_b if same_iso else None,
                         gates)
    return CriterionVerdict(fired=fired, gate_failures=tuple(dict.fromkeys(gates)),
                            index_a=len(neg_a), index_b=len(neg_b),
                            fingerprint_a=fp_a, fingerprint_b=fp_b)


# -- localization ------------------------------------------------------------

def endpoint_signature(data):
    """Index plus negative-representation fingerprint entries at one endpoint."""
    (neg, vecs), _ = spectral_split(data.hessian)
    fp = fingerprint(data.isotropy, vecs)
    return (len(neg), fp.entries)


def localize_instant(family_evaluator, interval, tol=1e-6, max_evals=2000):
    """Bracket every instant where the endpoint signature changes.

    family_evaluator maps a parameter value to EndpointData; the returned
    instants are bracket midpoints with bracket width <= tol.
    """
    a, b = float(interval[0]), float(interval[1])
    if not (np.isfinite(a) and np.isfinite(b) and a < b):
        raise EquibifError("interval must be finite and increasing")
    sig = {}

    def signature(lam):
        if lam not in sig:
            if len(sig) > max_evals:
                raise EquibifError("localization exceeded its evaluation budget")
            sig[lam] = endpoint_signature(family_evaluator(lam))
        return sig[lam]

    if signature(a) == signature(b):
        raise NoChangeDetected("endpoint signatures already agree")

    instants = []
    stack = [(a, b)]
    while stack:
        lo, hi = stack.pop()
        if signature(lo) == signature(hi):
            continue
        if hi - lo <= tol:
            instants.append(0.5 * (lo + hi))
            continue
        mid = 0.5 * (lo + hi)
        stack.append((lo, mid))
        stack.append((mid, hi))
    return sorted(instants)


# -- continuation ------------------------------------------------------------

@dataclass
class BranchSearchResult:
    points: list = field(default_factory=list)   # (lambda, chart coords, |grad|)
    newton_failures: int = 0

    def radii(self):
        return sorted({round(float(np.linalg.norm(x)), 12)
                       for _, x, _ in self.points})


def _fd_jacobian(fun, x, lam, step=1e-6):
    n = len(x)
    J = np.empty((n, n))
    for i in range(n):
        dx = np.zeros(n)
        dx[i] = step * max(1.0, abs(x[i]))
        J[:, i] = (np.asarray(fun(x + dx, lam)) -
                   np.asarray(fun(x - dx, lam))) / (2 * dx[i])
    return J


def continuation_branch_search(gradient, lambda_star, seed_grid,
                               lambda_offsets=(0.0,), action=None,
                               trivial_branch=None, separation=1e-4,
                               grad_tol=1e-12, max_iter=40):
    """Newton search for critical points off the trivial branch.

    gradient(v, lam) is sampled in slice-chart coordinates.  Zeros closer
    than `separation` to the trivial branch (after quotienting the residual
    isotropy) are discarded, as are duplicates of one group orbit.  An empty
    result is a valid outcome.  Per-seed Newton divergence is counted, not
    raised.
    """
    result = BranchSearchResult()
    trivial = trivial_branch or (lambda lam: np.zeros(len(seed_grid[0])))
    group = action.sample() if action is not None else [(None, 1.0)]

    def orbit_distance(x, y):
        if action is None:
            return np.linalg.norm(x - y)
        return min(np.linalg.norm((g @ x) - y) for g, _ in group)

    for off in lambda_offsets:
        lam = lambda_star + off
        x0_triv = np.asarray(trivial(lam), dtype=float)
        for seed in seed_grid:
            x = np.asarray(seed, dtype=float).copy()
            ok = False
            for _ in range(max_iter):
                g = np.asarray(gradient(x, lam), dtype=float)
                if not np.all(np.isfinite(g)):
                    break
                if np.linalg.norm(g) <= grad_tol:
                    ok = True
                    break
                J = _fd_jacobian(gradient, x, lam)
                try:
                    dx = np.linalg.solve(J, -g)
                except np.linalg.LinAlgError:
                    break
                if not np.all(np.isfinite(dx)) or np.linalg.norm(dx) > 1e6:
                    break
                x = x + dx
            if not ok:
                result.newton_failures += 1
                continue
            if orbit_distance(x, x0_triv) < separation:
                continue
            if any(abs(lam - l2) < 1e-15 and orbit_distance(x, x2) < separation
                   for l2, x2, _ in result.points):
                continue
            result.points.append((lam, x, float(np.linalg.norm(gradient(x, lam)))))
    return result
