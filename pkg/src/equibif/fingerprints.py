"""Representation fingerprints: computable equivalence classes of group actions
restricted to invariant subspaces.

A fingerprint is a sorted multiset of (irrep_label, multiplicity) pairs where
the multiplicity counts REAL DIMENSIONS of the isotypic component, so that
total_dim always equals the dimension of the fingerprinted subspace.  Two
invariant subspaces carry equivalent representations of the same group exactly
when their fingerprints are identical.

Labels: integer weight n >= 0 for circle actions (n = 0 is the fixed part),
a canonical character string for finite groups, and a label pair for product
actions (folded over complex conjugation).
"""

from dataclasses import dataclass

import numpy as np

from .errors import ActionMismatch, NonIntegerMultiplicity, SubspaceNotInvariant
from .groups import find_element_index, orthonormal_basis, subspace_invariance_defect

INT_TOL = 1e-6


def _label_key(label):
    if isinstance(label, (int, np.integer)):
        return (0, (int(label),))
    if isinstance(label, tuple):
        return (1, tuple(int(x) if isinstance(x, (int, np.integer)) else str(x)
                         for x in label))
    return (2, (str(label),))


def _sorted_entries(entries):
    return tuple(sorted(((lab, int(m)) for lab, m in entries if m != 0),
                        key=lambda e: _label_key(e[0])))


@dataclass(frozen=True)
class Fingerprint:
    entries: tuple
    total_dim: int
    action_signature: tuple

    @staticmethod
    def from_counts(counts, action_signature):
        """Build from a {label: real_dimension} mapping."""
        entries = _sorted_entries(counts.items())
        total = int(sum(m for _, m in entries))
        return Fingerprint(entries=entries, total_dim=total,
                           action_signature=tuple(action_signature))

    def as_dict(self):
        return {repr(lab): m for lab, m in self.entries}

    def added(self, other):
        counts = dict(self.entries)
        for lab, m in other.entries:
            counts[lab] = counts.get(lab, 0) + m
        return Fingerprint.from_counts(counts, self.action_signature)


def fingerprints_equivalent(f1, f2):
    """Identical entry lists decide equivalence; mixing actions is an error."""
    if f1.action_signature != f2.action_signature:
        raise ActionMismatch("fingerprints come from different actions")
    return f1.entries == f2.entries


def _as_int(x, what):
    if abs(x - round(x)) > INT_TOL:
        raise NonIntegerMultiplicity(f"{what} = {x!r} is not close to an integer")
    return int(round(x))


# -- character tables for finite groups -------------------------------------

def conjugacy_classes(elements):
    """Partition a closed element list into conjugacy classes (index lists)."""
    n = len(elements)
    unassigned = set(range(n))
    classes = []
    while unassigned:
        i = min(unassigned)
        orbit = {find_element_index(elements, h @ elements[i] @ h.T)
                 for h in elements}
        classes.append(sorted(orbit))
        unassigned -= orbit
    return classes


def _class_sort_key(elements, cls, order_fn):
    rep = elements[cls[0]]
    eig = np.linalg.eigvals(rep)
    angles = tuple(np.round(np.sort(np.angle(eig)), 6))
    return (len(cls), order_fn(rep), angles, cls[0])


def character_table(action, seed=7):
    """Complex irreducible characters of an enumerated finite group.

    Uses the class-algebra (Burnside) method: the class-sum structure
    matrices commute, and their simultaneous eigenvectors yield the
    character columns.  Returns (characters, dims, class_indices) where
    characters has shape (n_irreps, n_classes).
    """
    elements = list(action._elements)
    n = len(elements)

    def index_of(m):
        return find_element_index(elements, m)

    def order_fn(g):
        acc = np.array(g)
        for k in range(1, n + 1):
            if np.linalg.norm(acc - np.eye(g.shape[0])) < 1e-8:
                return k
            acc = acc @ g
        return n

    classes = conjugacy_classes(elements)
    classes.sort(key=lambda c: _class_sort_key(elements, c, order_fn))
    # identity class first
    classes.sort(key=lambda c: 0 if c[0] == index_of(np.eye(action.dim)) else 1)
    k = len(classes)
    class_of = np.empty(n, dtype=int)
    for ci, cls in enumerate(classes):
        for i in cls:
            class_of[i] = ci

    # structure constants a_{r,s,t} = #{(x,y) in C_r x C_s : xy = rep_t}
    M = np.zeros((k, k, k))
    for r in range(k):
        for s in range(k):
            for x in classes[r]:
                gx = elements[x]
                for y in classes[s]:
                    z = index_of(gx @ elements[y])
                    for t in range(k):
                        if z == classes[t][0]:
                            M[r, s, t] += 1

    rng = np.random.default_rng(seed)
    for _ in range(8):
        coeff = rng.normal(size=k) + 1j * rng.normal(size=k)
        combo = np.tensordot(coeff, M, axes=(0, 0))
        _, vecs = np.linalg.eig(combo.T)
        omegas = np.empty((k, k), dtype=complex)
        ok = True
        for j in range(k):
            v = vecs[:, j]
            pivot = np.argmax(np.abs(v))
            for r in range(k):
                w = M[r].T @ v
                omega = w[pivot] / v[pivot]
                if np.linalg.norm(w - omega * v) > 1e-7 * max(1, np.linalg.norm(w)):
                    ok = False
                    break
                omegas[j, r] = omega
            if not ok:
                break
        if ok:
            break
    else:
        raise NonIntegerMultiplicity("character table eigenproblem failed")

    sizes = np.array([len(c) for c in classes], dtype=float)
    chars = np.empty((k, k), dtype=complex)
    dims = np.empty(k)
    for j in range(k):
        denom = np.sum(np.abs(omegas[j]) ** 2 / sizes)
        d = np.sqrt(n / denom)
        dims[j] = d
        chars[j] = d * omegas[j] / sizes
    # verify first-orthogonality to guard against degenerate eigenvectors
    gram = (chars * sizes) @ chars.conj().T / n
    if np.linalg.norm(gram - np.eye(k)) > 1e-7:
        raise NonIntegerMultiplicity("character table failed orthogonality check")
    idx = sorted(range(k), key=lambda j: (round(dims[j], 6),
                                          tuple(np.round(chars[j].real, 6)),
                                          tuple(np.round(chars[j].imag, 6))))
    chars = chars[idx]
    dims = dims[idx]
    return chars, dims, class_of


def _finite_label(char_row, dim):
    parts = []
    for c in char_row:
        re = round(float(c.real), 4)
        im = round(float(c.imag), 4)
        re = 0.0 if re == 0 else re
        im = 0.0 if im == 0 else im
        parts.append(f"{re:+g}{im:+g}j" if im else f"{re:+g}")
    return f"d{int(round(dim))}[" + ",".join(parts) + "]"


def _finite_counts(action, basis):
    elements = list(action._elements)
    chars, dims, class_of = character_table(action)
    n = len(elements)
    k = chars.shape[1]
    sizes = np.bincount(class_of, minlength=k).astype(float)
    # traces are constant on classes; averaging them is a cheap consistency mix
    chi_V = np.zeros(k, dtype=complex)
    for i, g in enumerate(elements):
        chi_V[class_of[i]] += np.trace(basis.T @ g @ basis) / sizes[class_of[i]]
    counts = {}
    used = np.zeros(chars.shape[0], dtype=bool)
    for j in range(chars.shape[0]):
        if used[j]:
            continue
        m_j = np.sum(sizes * np.conj(chars[j]) * chi_V) / n
        m_int = _as_int(m_j.real, "finite multiplicity")
        if abs(m_j.imag) > INT_TOL:
            raise NonIntegerMultiplicity("complex multiplicity has imaginary part")
        # fold with the conjugate irrep
        conj_row = np.conj(chars[j])
        partner = None
        for l in range(chars.shape[0]):
            if not used[l] and np.allclose(chars[l], conj_row, atol=1e-6):
                partner = l
                break
        used[j] = True
        real_dim = m_int * int(round(dims[j]))
        label_j = _finite_label(chars[j], dims[j])
        if partner is not None and partner != j:
            used[partner] = True
            m_p = np.sum(sizes * np.conj(chars[partner]) * chi_V) / n
            real_dim += _as_int(m_p.real, "finite multiplicity") * int(round(dims[partner]))
            label_j = min(label_j, _finite_label(chars[partner], dims[partner]))
        if real_dim:
            counts[label_j] = counts.get(label_j, 0) + real_dim
    return counts


def _circle_counts(action, basis):
    n_nodes = action.circle_node_count()
    thetas = 2 * np.pi * np.arange(n_nodes) / n_nodes
    chi = np.array([np.trace(basis.T @ action.circle_matrix(t) @ basis)
                    for t in thetas])
    candidates = sorted({0} | {abs(w) for w in action.weights})
    counts = {}
    for nw in candidates:
        m = np.mean(chi * np.exp(-1j * nw * thetas))
        copies = _as_int(m.real, f"circle weight {nw} multiplicity")
        if abs(m.imag) > INT_TOL:
            raise NonIntegerMultiplicity("circle multiplicity has imaginary part")
        real_dim = copies if nw == 0 else 2 * copies
        if real_dim:
            counts[nw] = real_dim
    return counts


def _complex_irreps(action):
    """(label, values_on_samples, dim, conj_label) for each complex irrep."""
    samples = action.sample()
    if action.kind == "circle":
        n_nodes = len(samples)
        thetas = 2 * np.pi * np.arange(n_nodes) / n_nodes
        out = []
        for w in sorted({0} | {abs(w) for w in action.weights}):
            for signed in ({0} if w == 0 else {w, -w}):
                vals = np.exp(1j * signed * thetas)
                out.append((signed, vals, 1, -signed))
        return out
    if action.kind == "finite":
        elements = list(action._elements)
        chars, dims, class_of = character_table(action)
        out = []
        labels = [_finite_label(chars[j], dims[j]) for j in range(chars.shape[0])]
        for j in range(chars.shape[0]):
            vals = chars[j][class_of]
            conj_row = np.conj(chars[j])
            conj_label = labels[j]
            for l in range(chars.shape[0]):
                if np.allclose(chars[l], conj_row, atol=1e-6):
                    conj_label = labels[l]
                    break
            out.append((labels[j], vals, int(round(dims[j])), conj_label))
        return out
    raise ActionMismatch("complex irreps are built per factor")


def _product_counts(action, basis):
    left, right = action.factors
    irr_l = _complex_irreps(left)
    irr_r = _complex_irreps(right)
    samples_l = left.sample()
    samples_r = right.sample()
    wl = np.array([w for _, w in samples_l])
    wr = np.array([w for _, w in samples_r])
    # trace table of the subspace representation over the sample grid
    tr = np.empty((len(samples_l), len(samples_r)))
    for i, (gl, _) in enumerate(samples_l):
        for j, (gr, _) in enumerate(samples_r):
            g = action.block_embed(gl, gr)
            tr[i, j] = np.trace(basis.T @ g @ basis)
    counts = {}
    seen = set()
    for lab_l, val_l, dim_l, conj_l in irr_l:
        for lab_r, val_r, dim_r, conj_r in irr_r:
            pair = (lab_l, lab_r)
            if pair in seen:
                continue
            conj_pair = (conj_l, conj_r)
            m = np.einsum("i,j,ij->", wl * np.conj(val_l), wr * np.conj(val_r), tr)
            copies = _as_int(m.real, f"product multiplicity {pair}")
            if abs(m.imag) > INT_TOL:
                raise NonIntegerMultiplicity("product multiplicity has imaginary part")
            seen.add(pair)
            label = pair
            real_dim = copies * dim_l * dim_r
            if conj_pair != pair:
                seen.add(conj_pair)
                label = max(pair, conj_pair, key=_label_key)
                real_dim *= 2
            if real_dim:
                counts[label] = counts.get(label, 0) + real_dim
    return counts


def fingerprint(action, subspace_basis, tol=1e-8):
    """Fingerprint of the action restricted to an invariant subspace."""
    basis = orthonormal_basis(subspace_basis, action.dim)
    if basis.shape[1] == 0:
        return Fingerprint(entries=(), total_dim=0,
                           action_signature=action.descriptor())
    defect = subspace_invariance_defect(basis, action)
    if defect > tol:
        raise SubspaceNotInvariant(f"subspace moves under the action ({defect:.2e})")
    if action.kind == "circle":
        counts = _circle_counts(action, basis)
    elif action.kind == "finite":
        counts = _finite_counts(action, basis)
    else:
        counts = _product_counts(action, basis)
    fp = Fingerprint.from_counts(counts, action.descriptor())
    if fp.total_dim != basis.shape[1]:
        raise NonIntegerMultiplicity(
            f"fingerprint dimensions {fp.total_dim} != subspace dim {basis.shape[1]}")
    return fp
