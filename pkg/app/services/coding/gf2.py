"""Linear algebra over GF(2) on 0/1 numpy matrices."""
from typing import List, Optional, Tuple

import galois
import numpy as np

GF2 = galois.GF(2)


def row_reduce(A: np.ndarray) -> Tuple[np.ndarray, List[int]]:
    """
    Reduced row echelon form of a 0/1 matrix.

    Returns:
        (reduced copy as uint8, pivot columns in row order)
    """
    A = np.asarray(A, dtype=np.uint8) & 1
    if A.size == 0:
        return A.copy(), []
    reduced = GF2(A).row_reduce().view(np.ndarray).astype(np.uint8)
    pivots = [int(np.flatnonzero(row)[0]) for row in reduced if row.any()]
    return reduced, pivots


def rank(A: np.ndarray) -> int:
    A = np.asarray(A, dtype=np.uint8) & 1
    if A.size == 0:
        return 0
    return int(np.linalg.matrix_rank(GF2(A)))


def solve_affine(A: np.ndarray, b: np.ndarray) -> Tuple[Optional[np.ndarray], int]:
    """
    Solve A x = b over GF(2).

    Args:
        A: (m, u) coefficient matrix
        b: length-m right-hand side

    Returns:
        (one solution with free variables set to zero, or None when inconsistent;
         dimension of the solution space)
    """
    A = np.asarray(A, dtype=np.uint8)
    m, u = A.shape
    augmented = np.concatenate([A, np.asarray(b, dtype=np.uint8).reshape(m, 1)], axis=1)
    reduced, pivots = row_reduce(augmented)
    if u in pivots:
        return None, 0
    x = np.zeros(u, dtype=np.uint8)
    for r, col in enumerate(pivots):
        x[col] = reduced[r, u]
    return x, u - len(pivots)
