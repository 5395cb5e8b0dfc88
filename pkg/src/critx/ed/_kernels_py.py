"""Pure numpy matrix-vector kernels; fallback for the compiled ``_kernels``.

Both kernels use the gather form ``out[a] = diag[a] v[a] + sum_b H[a, b] v[b]``
so each output row is computed independently.
"""
import numpy as np


def tfim_matvec(v, out, states, lookup, diag, flip_masks, hop):
    np.multiply(diag, v, out=out)
    for mask in flip_masks:
        out += hop * v[lookup[states ^ mask]]
    return out


def spin1_matvec(v, out, states, digits, lookup, diag, bond_i, bond_j, pow3, hop):
    np.multiply(diag, v, out=out)
    for i, j in zip(bond_i, bond_j):
        di = digits[:, i]
        dj = digits[:, j]
        # S+_i S-_j
        rows = np.flatnonzero((di < 2) & (dj > 0))
        out[rows] += hop * v[lookup[states[rows] + pow3[i] - pow3[j]]]
        # S-_i S+_j
        rows = np.flatnonzero((di > 0) & (dj < 2))
        out[rows] += hop * v[lookup[states[rows] - pow3[i] + pow3[j]]]
    return out
