"""
Choosing the weight operator P
==============================

Whether the closed loop can settle anywhere other than a drift eigenstate
depends on P. Here we compare the ways of building one.
"""

# %%
import numpy as np

from qlyap import ControlledSystem
from qlyap.core import hermitian_eigendecompose
from qlyap.design import (
    build_commuting_p,
    build_spectral_p,
    check_offdiagonal_condition,
    generate_random_p,
)
from qlyap.invariant import classify_case

h0 = np.diag([1.0, 1.2, 1.3, 2.0, 2.15])
h1 = np.zeros((5, 5))
h1[:3, 3:] = 1.0
h1 += h1.T
system = ControlledSystem(h0, [h1])

# %%
# A P that shares the drift eigenbasis commutes with H0. Every element off
# its diagonal vanishes in that basis, so the off-diagonal test fails.
p_comm = build_commuting_p(system, [5, 4, 3, 2, 1])
print(classify_case(p_comm, system))
print(check_offdiagonal_condition(p_comm, system))

# %%
# The matrix used by the bundled experiment: every off-diagonal element is
# nonzero, smallest magnitude 0.3.
p = np.array(
    [
        [5.2, 0.8, 2.8, -0.8, 0.3],
        [0.8, 5.2, -0.8, 2.8, -0.3],
        [2.8, -0.8, 5.2, 0.8, -0.3],
        [-0.8, 2.8, 0.8, 5.2, 0.3],
        [0.3, -0.3, -0.3, 0.3, 1.7],
    ]
)
print(classify_case(p, system))
print(check_offdiagonal_condition(p, system))
print("eigenvalues:", hermitian_eigendecompose(p).eigenvalues)

# %%
# Spectral synthesis from a list of vectors. The vectors are orthonormalized
# in the order given, so a non-orthogonal list yields a different matrix
# than one might expect; the returned basis shows what was used.
vectors = [
    [1, 1, -1, -1, 0],
    [1, -1, 1, -1, 0],
    [1, 1, 1, 1, 0],
    [-1, 1, 1, -1, -1],
    [-1, 1, 1, -1, -4],
]
p_spec, q = build_spectral_p(vectors, [3, 1, 1, 1, 0.05])
np.set_printoptions(precision=3, suppress=True)
print("synthesized P:\n", p_spec.real)
print("largest entry difference from the matrix above:", np.abs(p_spec - p).max())

# %%
# A random P with all off-diagonal magnitudes at least 0.1 and smallest
# eigenvalue at least 0.1. Same seed, same matrix.
p_rand = generate_random_p(system, seed=42)
print(check_offdiagonal_condition(p_rand, system, tol=0.1))
print("smallest eigenvalue:", hermitian_eigendecompose(p_rand).eigenvalues[0])
print("deterministic:", np.array_equal(p_rand, generate_random_p(system, seed=42)))
