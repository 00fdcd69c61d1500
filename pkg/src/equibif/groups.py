"""Compact symmetry groups presented by orthogonal matrices.

Three kinds of actions on R^d are supported:

* ``finite``  -- a list of orthogonal generators, enumerated to the full group;
* ``circle``  -- integer weights (w_1, .., w_k) acting block-diagonally by
  2x2 rotations R(w_j * theta), optionally with one trailing fixed axis
  (d = 2k or 2k + 1);
* ``product`` -- two actions on complementary coordinate blocks.

Group averages (Haar integrals) are exact: finite groups average over the
enumeration, circle groups use trapezoidal quadrature on [0, 2*pi), which is
exact for trigonometric polynomials of degree below the node count, and the
node count is derived from the largest weight present.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import EquibifError, ImageNotInvariant, NotIdempotent

ORTHO_TOL = 1e-12
MAX_GROUP_ORDER = 4096


def rotation_block(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def find_element_index(elements, m, tol=1e-8):
    """Index of m in a list of matrices, matched to tolerance; -1 if absent."""
    for i, g in enumerate(elements):
        if np.max(np.abs(g - m)) <= tol:
            return i
    return -1


def enumerate_closure(generators, max_order=MAX_GROUP_ORDER):
    """BFS closure of a generator list; raises if the group is too large."""
    d = generators[0].shape[0]
    eye = np.eye(d)
    elements = [eye]
    frontier = [eye]
    while frontier:
        nxt = []
        for g in frontier:
            for h in generators:
                gh = h @ g
                if find_element_index(elements, gh) < 0:
                    elements.append(gh)
                    nxt.append(gh)
                    if len(elements) > max_order:
                        raise EquibifError(
                            f"group enumeration exceeded {max_order} elements"
                        )
        frontier = nxt
    return elements


@dataclass(frozen=True)
class GroupAction:
    """A compact group acting linearly and orthogonally on R^dim."""

    kind: str  # "finite" | "circle" | "product"
    dim: int
    generators: tuple = ()          # finite: generator matrices
    weights: tuple = ()             # circle: integer weights
    factors: tuple = ()             # product: (GroupAction, GroupAction)
    _elements: tuple = field(default=None, repr=False, compare=False)

    # -- constructors ------------------------------------------------------

    @staticmethod
    def trivial(dim):
        return GroupAction.finite([np.eye(dim)])

    @staticmethod
    def finite(generators):
        gens = tuple(np.asarray(g, dtype=float) for g in generators)
        d = gens[0].shape[0]
        for g in gens:
            if g.shape != (d, d):
                raise EquibifError("generators must share one square shape")
            if np.linalg.norm(g.T @ g - np.eye(d)) > ORTHO_TOL * max(1.0, d):
                raise EquibifError("generator is not orthogonal to 1e-12")
        elements = tuple(enumerate_closure(list(gens)))
        return GroupAction(kind="finite", dim=d, generators=gens,
                           _elements=elements)

    @staticmethod
    def circle(weights, dim=None):
        ws = tuple(int(w) for w in weights)
        if any(w != int(w) for w in weights):
            raise EquibifError("circle weights must be integers")
        min_dim = 2 * len(ws)
        if dim is None:
            dim = min_dim
        if dim not in (min_dim, min_dim + 1):
            raise EquibifError("circle action dim must be 2k or 2k+1")
        return GroupAction(kind="circle", dim=dim, weights=ws)

    @staticmethod
    def product(left, right):
        return GroupAction(kind="product", dim=left.dim + right.dim,
                           factors=(left, right))

    # -- elements and sampling ---------------------------------------------

    @property
    def order(self):
        """Number of elements; None for groups with a continuous part."""
        if self.kind == "finite":
            return len(self._elements)
        if self.kind == "product":
            lo, ro = self.factors[0].order, self.factors[1].order
            if lo is None or ro is None:
                return None
            return lo * ro
        return None

    @property
    def is_trivial(self):
        return self.kind == "finite" and len(self._elements) == 1

    def circle_node_count(self):
        maxw = max((abs(w) for w in self.weights), default=0)
        return 4 * maxw + 8

    def circle_matrix(self, theta):
        blocks = [rotation_block(w * theta) for w in self.weights]
        g = np.zeros((self.dim, self.dim))
        for j, b in enumerate(blocks):
            g[2 * j: 2 * j + 2, 2 * j: 2 * j + 2] = b
        if self.dim == 2 * len(self.weights) + 1:
            g[-1, -1] = 1.0
        return g

    def sample(self):
        """Matrices and Haar weights; the weighted sum is the Haar average.

        Exact for finite groups; for circle factors the nodes integrate all
        trigonometric polynomials that occur in projector averages and
        character inner products exactly.
        """
        if self.kind == "finite":
            n = len(self._elements)
            return [(g, 1.0 / n) for g in self._elements]
        if self.kind == "circle":
            n = self.circle_node_count()
            thetas = 2 * np.pi * np.arange(n) / n
            return [(self.circle_matrix(t), 1.0 / n) for t in thetas]
        out = []
        for gl, wl in self.factors[0].sample():
            for gr, wr in self.factors[1].sample():
                out.append((self.block_embed(gl, gr), wl * wr))
        return out

    def block_embed(self, gl, gr):
        dl = self.factors[0].dim
        g = np.zeros((self.dim, self.dim))
        g[:dl, :dl] = gl
        g[dl:, dl:] = gr
        return g

    def generator_matrices(self):
        """A small generating set, used for invariance spot-checks."""
        if self.kind == "finite":
            return list(self.generators)
        if self.kind == "circle":
            # an irrational-angle sample plus a quarter turn catch
            return [self.circle_matrix(t) for t in (0.5, np.pi / 2, 2.4)]
        gens = []
        dl = self.factors[0].dim
        eye_l, eye_r = np.eye(dl), np.eye(self.dim - dl)
        for gl in self.factors[0].generator_matrices():
            gens.append(self.block_embed(gl, eye_r))
        for gr in self.factors[1].generator_matrices():
            gens.append(self.block_embed(eye_l, gr))
        return gens

    def infinitesimal_generators(self):
        """Basis of the Lie algebra action (empty for finite groups)."""
        if self.kind == "finite":
            return []
        if self.kind == "circle":
            J = np.zeros((self.dim, self.dim))
            for j, w in enumerate(self.weights):
                J[2 * j, 2 * j + 1] = -w
                J[2 * j + 1, 2 * j] = w
            return [J]
        out = []
        dl = self.factors[0].dim
        for Jl in self.factors[0].infinitesimal_generators():
            J = np.zeros((self.dim, self.dim))
            J[:dl, :dl] = Jl
            out.append(J)
        for Jr in self.factors[1].infinitesimal_generators():
            J = np.zeros((self.dim, self.dim))
            J[dl:, dl:] = Jr
            out.append(J)
        return out

    def haar_average(self, func):
        """Haar integral of a matrix- or scalar-valued function of g."""
        acc = None
        for g, w in self.sample():
            val = w * np.asarray(func(g))
            acc = val if acc is None else acc + val
        return acc

    def orbit_tangent(self, x):
        """Basis (columns) of the tangent space to the orbit through x."""
        x = np.asarray(x, dtype=float)
        vecs = [J @ x for J in self.infinitesimal_generators()]
        if not vecs:
            return np.zeros((self.dim, 0))
        M = np.column_stack(vecs)
        q, r = np.linalg.qr(M)
        keep = np.abs(np.diag(r)) > 1e-10 * max(1.0, np.linalg.norm(x))
        return q[:, : int(np.count_nonzero(keep))]

    def isotropy_of(self, x, tol=1e-10):
        """Isotropy subgroup of the point x, as a new GroupAction."""
        x = np.asarray(x, dtype=float)
        scale = max(1.0, np.linalg.norm(x))
        if self.kind == "finite":
            stab = [g for g in self._elements
                    if np.linalg.norm(g @ x - x) <= tol * scale]
            return GroupAction(kind="finite", dim=self.dim,
                               generators=tuple(stab), _elements=tuple(stab))
        if self.kind == "circle":
            active = [abs(w) for j, w in enumerate(self.weights)
                      if np.linalg.norm(x[2 * j: 2 * j + 2]) > tol * scale
                      and w != 0]
            if not active:
                return self  # whole circle fixes x
            order = int(np.gcd.reduce(active))
            if order <= 1:
                return GroupAction.trivial(self.dim)
            gen = self.circle_matrix(2 * np.pi / order)
            return GroupAction.finite([gen])
        dl = self.factors[0].dim
        iso_l = self.factors[0].isotropy_of(x[:dl], tol=tol)
        iso_r = self.factors[1].isotropy_of(x[dl:], tol=tol)
        return GroupAction.product(iso_l, iso_r)

    def descriptor(self):
        """Canonical tuple used to compare isotropy groups across a family."""
        if self.kind == "finite":
            orders = tuple(sorted(_element_order(g, len(self._elements))
                                  for g in self._elements))
            return ("finite", self.dim, len(self._elements), orders)
        if self.kind == "circle":
            return ("circle", self.dim, self.weights)
        return ("product",) + tuple(f.descriptor() for f in self.factors)


def _element_order(g, max_order):
    d = g.shape[0]
    acc = np.array(g)
    for k in range(1, max_order + 1):
        if np.linalg.norm(acc - np.eye(d)) < 1e-8:
            return k
        acc = acc @ g
    return max_order


# -- nice groups -----------------------------------------------------------

@dataclass(frozen=True)
class NiceDescriptor:
    """Connected-component data used by the sufficient niceness conditions."""

    component_count: int
    discrete_part: str = "other"  # trivial | product_of_Z2 | product_of_Z3 | Z4 | other

    def __post_init__(self):
        if self.component_count < 1:
            raise EquibifError("component_count must be >= 1")


def nice_group(desc):
    """Return "nice" when a sufficient condition applies, else "unknown".

    The conditions are only sufficient, so the answer is never "not nice".
    """
    if desc.component_count == 1:
        return "nice"
    if desc.component_count < 5:
        return "nice"
    if desc.discrete_part in ("product_of_Z2", "product_of_Z3", "Z4"):
        return "nice"
    return "unknown"


def describe_niceness(action):
    """Derive a NiceDescriptor from a concrete GroupAction."""
    if action.kind == "circle":
        return NiceDescriptor(component_count=1, discrete_part="trivial")
    if action.kind == "finite":
        n = len(action._elements)
        if n == 1:
            return NiceDescriptor(component_count=1, discrete_part="trivial")
        orders = [_element_order(g, n) for g in action._elements]
        abelian = _is_abelian(action._elements)
        if abelian and all(o in (1, 2) for o in orders):
            part = "product_of_Z2"
        elif abelian and all(o in (1, 3) for o in orders):
            part = "product_of_Z3"
        elif n == 4 and sorted(orders) == [1, 2, 4, 4]:
            part = "Z4"
        else:
            part = "other"
        return NiceDescriptor(component_count=n, discrete_part=part)
    left = describe_niceness(action.factors[0])
    right = describe_niceness(action.factors[1])
    count = left.component_count * right.component_count
    if left.component_count == 1:
        part = right.discrete_part
    elif right.component_count == 1:
        part = left.discrete_part
    elif (left.discrete_part == right.discrete_part
          and left.discrete_part in ("product_of_Z2", "product_of_Z3")):
        part = left.discrete_part
    else:
        part = "other"
    return NiceDescriptor(component_count=count, discrete_part=part)


def _is_abelian(elements):
    for i, g in enumerate(elements):
        for h in elements[i + 1:]:
            if np.linalg.norm(g @ h - h @ g) > 1e-9:
                return False
    return True


# -- invariant averaging ----------------------------------------------------

def orthonormal_basis(vectors, dim):
    """Orthonormalize a (possibly empty) list/array of column vectors."""
    if vectors is None:
        return np.zeros((dim, 0))
    B = np.asarray(vectors, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    if B.size == 0:
        return np.zeros((dim, 0))
    q, r = np.linalg.qr(B)
    keep = np.abs(np.diag(r)) > 1e-12 * max(1.0, np.linalg.norm(B))
    return q[:, : int(np.count_nonzero(keep))]


def subspace_invariance_defect(basis, action):
    """max over generators of || (I - BB^T) g B ||, zero iff invariant."""
    B = orthonormal_basis(basis, action.dim)
    if B.shape[1] == 0:
        return 0.0
    proj_out = np.eye(action.dim) - B @ B.T
    return max(np.linalg.norm(proj_out @ (g @ B))
               for g in action.generator_matrices())


def haar_project(P, action, tol=1e-10):
    """Average g P g^-1 over the group.

    The input must be an (oblique) projector whose image is an invariant
    subspace; the output is a projector with the same image that commutes
    with every group element, and its kernel is the invariant complement.
    """
    P = np.asarray(P, dtype=float)
    scale = max(1.0, np.linalg.norm(P))
    if np.linalg.norm(P @ P - P) > tol * scale:
        raise NotIdempotent("||P^2 - P|| exceeds tolerance")
    # columns of P span the image; orthonormalize them directly
    image = orthonormal_basis(P, action.dim)
    defect = subspace_invariance_defect(image, action)
    if defect > 1e-8 * scale:
        raise ImageNotInvariant(f"image moves under the action ({defect:.2e})")
    # group elements are orthogonal, so g^-1 = g^T
    return action.haar_average(lambda g: g @ P @ g.T)


def invariant_complement(subspace_basis, action):
    """Invariant complement of an invariant subspace (orthonormal columns)."""
    B = orthonormal_basis(subspace_basis, action.dim)
    if B.shape[1] == 0:
        return np.eye(action.dim)
    if B.shape[1] == action.dim:
        return np.zeros((action.dim, 0))
    P = B @ B.T
    Pt = haar_project(P, action)
    # kernel of the averaged projector
    u, s, vt = np.linalg.svd(Pt)
    rank = int(np.sum(s > 1e-10))
    if rank != B.shape[1]:
        raise EquibifError("averaged projector changed rank")
    return vt[rank:].T
