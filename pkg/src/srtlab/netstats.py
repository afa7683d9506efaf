"""Network statistics of a net exposure matrix."""

from __future__ import annotations

import numpy as np

from . import cascade


def adjacency(A) -> np.ndarray:
    """Symmetric 0/1 adjacency: i ~ j iff a nonzero net position exists."""
    A = np.asarray(A, dtype=np.float64)
    B = ((A != 0) | (A.T != 0)).astype(np.float64)
    np.fill_diagonal(B, 0.0)
    return B


def degrees(A) -> tuple[np.ndarray, np.ndarray]:
    """(in, out) degree per bank: counterparties it net-owes / is net-owed by."""
    A = np.asarray(A, dtype=np.float64)
    return (A < 0).sum(axis=1), (A > 0).sum(axis=1)


def degree_distributions(A) -> tuple[np.ndarray, np.ndarray]:
    """Histograms of in- and out-degrees; index k holds the count of degree k."""
    ind, outd = degrees(A)
    n = np.asarray(A).shape[0]
    return np.bincount(ind, minlength=n), np.bincount(outd, minlength=n)


def systemic_impact_distribution(A, E, bins) -> np.ndarray:
    counts, _ = np.histogram(cascade.systemic_impacts(A, E), bins=bins)
    return counts


def local_clustering(A) -> np.ndarray:
    B = adjacency(A)
    deg = B.sum(axis=1)
    closed = np.diag(B @ B @ B)
    possible = deg * (deg - 1)
    return np.divide(closed, possible, out=np.zeros_like(closed), where=possible > 0)


def average_clustering(A) -> float:
    B = np.asarray(A)
    if B.shape[0] == 0:
        return 0.0
    return float(local_clustering(A).mean())


class ConvergenceError(RuntimeError):
    pass


def spectral_radius(A, tol: float = 1e-8, max_iter: int = 10_000) -> float:
    """Largest adjacency eigenvalue by power iteration from the all-ones vector.

    Iterates on ``adjacency + I``: that shift keeps the Perron root strictly
    dominant even for bipartite graphs, whose spectrum is symmetric. Stops
    once the eigen-residual drops below ``tol``.
    """
    B = adjacency(A)
    n = B.shape[0]
    if n == 0 or not B.any():
        return 0.0
    M = B + np.eye(n)
    x = np.ones(n) / np.sqrt(n)
    for k in range(1, max_iter + 1):
        y = M @ x
        lam = float(x @ y)
        if np.linalg.norm(y - lam * x) < tol:
            return lam - 1.0
        x = y / np.linalg.norm(y)
    raise ConvergenceError(f"power iteration did not converge in {max_iter} iterations")
