"""equibif: numerical detection of equivariant bifurcation instants.

The package locates parameter values at which one-parameter families of
group-invariant critical points can bifurcate, by tracking jumps of the
Morse index and of the negative isotropy representation across a family,
with concrete pipelines for Clifford tori in round and Berger spheres and
rotationally symmetric constant-mean-curvature surfaces.
"""

__version__ = "0.1.0"
SCHEMA_VERSION = 1
