"""Banded symmetric positive definite factorisation for assembled sparse matrices."""

import numpy as np
import scipy.linalg
import scipy.sparse as sp


def bandwidth(A):
    A = sp.coo_matrix(A)
    if A.nnz == 0:
        return 0
    return int(np.max(np.abs(A.row - A.col)))


def to_upper_banded(A, u=None):
    """Upper LAPACK band storage ``ab[u + i - j, j] = A[i, j]`` for ``i <= j``."""
    A = sp.csr_matrix(A)
    A = 0.5 * (A + A.T)
    if u is None:
        u = bandwidth(A)
    up = sp.triu(A).tocoo()
    if up.nnz and np.max(up.col - up.row) > u:
        raise ValueError(f"matrix bandwidth exceeds {u}")
    ab = np.zeros((u + 1, A.shape[0]))
    ab[u + up.row - up.col, up.col] = up.data
    return ab


class BandedCholesky:
    """Factor once, solve many. Raises ``LinAlgError`` when ``A`` is not SPD."""

    def __init__(self, A, u=None):
        ab = to_upper_banded(A, u)
        self.factor = scipy.linalg.cholesky_banded(ab, lower=False)

    def solve(self, b):
        return scipy.linalg.cho_solve_banded((self.factor, False), np.asarray(b, dtype=float))
