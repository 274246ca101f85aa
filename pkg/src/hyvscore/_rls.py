"""Compiled inner loop for the recursive least-squares sweep."""
import numba as nb
import numpy as np


@nb.njit(cache=True)
def rls_sweep_kernel(X, y, A, theta, start, eta, k_sq, z):
    """Advance (A, theta) in place over rows ``start..n-1`` of X.

    Writes the one-step predictive mean, variance inflation and
    standardised innovation of each row into eta, k_sq, z (indexed from 0
    at row ``start``).
    """
    n, p = X.shape
    Ax = np.empty(p)
    for i in range(start, n):
        q = 0.0
        m = 0.0
        for a in range(p):
            s = 0.0
            for b in range(p):
                s += A[a, b] * X[i, b]
            Ax[a] = s
            q += X[i, a] * s
            m += X[i, a] * theta[a]
        ksq = 1.0 + q
        e = y[i] - m
        for a in range(p):
            for b in range(p):
                A[a, b] -= Ax[a] * Ax[b] / ksq
        # A_i x_i = A_{i-1} x_i / k_i^2
        for a in range(p):
            theta[a] += Ax[a] * e / ksq
        j = i - start
        eta[j] = m
        k_sq[j] = ksq
        z[j] = e / np.sqrt(ksq)
