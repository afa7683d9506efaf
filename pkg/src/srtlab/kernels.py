"""Hot numeric kernels: all-seeds cascade failure matrix and batched ESL.

Every kernel exists twice: a loop version compiled with numba and a
vectorized numpy version. ``failure_matrix`` and ``esl_batch`` dispatch on
``srtlab._jit.USE_NUMBA``; the suffixed variants are importable directly so
tests and the benchmark can compare both paths.
"""

import numpy as np

from ._jit import USE_NUMBA, njit

#: Relative tolerance of the failure test ``E <= tol * max(E)``.
FAILURE_RTOL = 1e-9


def equity_tolerance(equities):
    equities = np.asarray(equities, dtype=np.float64)
    if equities.size == 0:
        return 0.0
    return FAILURE_RTOL * max(float(equities.max()), 0.0)


# ---------------------------------------------------------------------------
# numba path
# ---------------------------------------------------------------------------


@njit(cache=True)
def _failure_matrix_nb(A, E, tol):
    # each failing bank pushes its losses once, to creditors only
    n = A.shape[0]
    At = np.ascontiguousarray(A.T)
    out = np.zeros((n, n), dtype=np.bool_)
    eq = np.empty(n)
    hit = np.zeros(n, dtype=np.bool_)
    frontier = np.empty(n, dtype=np.int64)
    touched = np.empty(n, dtype=np.int64)
    for k in range(n):
        for i in range(n):
            eq[i] = E[i]
        eq[k] = 0.0
        out[k, k] = True
        frontier[0] = k
        nf = 1
        while nf > 0:
            nt = 0
            for f in range(nf):
                row = At[frontier[f]]
                for i in range(n):
                    a = row[i]
                    if a > 0.0 and not out[k, i]:
                        e = eq[i] - a
                        eq[i] = e if e > 0.0 else 0.0
                        if not hit[i]:
                            hit[i] = True
                            touched[nt] = i
                            nt += 1
            nf = 0
            for t in range(nt):
                i = touched[t]
                hit[i] = False
                if eq[i] <= tol:
                    out[k, i] = True
                    frontier[nf] = i
                    nf += 1
    return out


@njit(cache=True)
def _esl_from_failures_nb(F, E, rho):
    n = F.shape[0]
    total = 0.0
    for k in range(n):
        if rho[k] == 0.0:
            continue
        si = 0.0
        for j in range(n):
            if j != k and F[k, j]:
                si += E[j]
        total += rho[k] * si
    return total


@njit(cache=True)
def _esl_batch_nb(A, E, rho, lend, borr, amount, tol):
    m = lend.shape[0]
    out = np.empty(m)
    work = np.empty_like(A)
    for c in range(m):
        work[:, :] = A
        for p in range(lend.shape[1]):
            li = lend[c, p]
            bi = borr[c, p]
            work[li, bi] += amount
            work[bi, li] -= amount
        F = _failure_matrix_nb(work, E, tol)
        out[c] = _esl_from_failures_nb(F, E, rho)
    return out


# ---------------------------------------------------------------------------
# numpy path
# ---------------------------------------------------------------------------


def _failure_matrix_np(A, E, tol):
    n = A.shape[0]
    apos_t = np.where(A > 0.0, A, 0.0).T
    eq = np.tile(E, (n, 1))
    np.fill_diagonal(eq, 0.0)
    failing = np.eye(n, dtype=bool)
    failed = failing.copy()
    while failing.any():
        loss = failing.astype(np.float64) @ apos_t
        hit = loss > 0.0
        eq = np.maximum(eq - loss, 0.0)
        failing = hit & (eq <= tol) & ~failed
        failed |= failing
    return failed


def _esl_from_failures_np(F, E, rho):
    si = F.astype(np.float64) @ E - E
    return float(rho @ si)


def _esl_batch_np(A, E, rho, lend, borr, amount, tol):
    out = np.empty(lend.shape[0])
    for c in range(lend.shape[0]):
        work = A.copy()
        np.add.at(work, (lend[c], borr[c]), amount)
        np.add.at(work, (borr[c], lend[c]), -amount)
        out[c] = _esl_from_failures_np(_failure_matrix_np(work, E, tol), E, rho)
    return out


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def _prep(A, E):
    A = np.ascontiguousarray(A, dtype=np.float64)
    E = np.ascontiguousarray(E, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or E.shape != (A.shape[0],):
        raise ValueError(f"shape mismatch: A {A.shape}, E {E.shape}")
    return A, E


def failure_matrix_numba(A, E, tol=None):
    A, E = _prep(A, E)
    return _failure_matrix_nb(A, E, equity_tolerance(E) if tol is None else float(tol))


def failure_matrix_numpy(A, E, tol=None):
    A, E = _prep(A, E)
    return _failure_matrix_np(A, E, equity_tolerance(E) if tol is None else float(tol))


def failure_matrix(A, E, tol=None):
    """Boolean ``F[k, j]``: bank ``j`` is bankrupt once the cascade seeded
    by ``k`` alone reaches its fixed point. The diagonal is always True."""
    if USE_NUMBA:
        return failure_matrix_numba(A, E, tol)
    return failure_matrix_numpy(A, E, tol)


def _prep_batch(A, E, rho, lend, borr):
    A, E = _prep(A, E)
    rho = np.ascontiguousarray(rho, dtype=np.float64)
    lend = np.ascontiguousarray(lend, dtype=np.int64)
    borr = np.ascontiguousarray(borr, dtype=np.int64)
    if lend.ndim == 1:
        lend, borr = lend[None, :], borr[None, :]
    if lend.shape != borr.shape:
        raise ValueError("lender/borrower index arrays differ in shape")
    return A, E, rho, lend, borr


def esl_batch_numba(A, E, rho, lend, borr, amount=1.0, tol=None):
    A, E, rho, lend, borr = _prep_batch(A, E, rho, lend, borr)
    tol = equity_tolerance(E) if tol is None else float(tol)
    return _esl_batch_nb(A, E, rho, lend, borr, float(amount), tol)


def esl_batch_numpy(A, E, rho, lend, borr, amount=1.0, tol=None):
    A, E, rho, lend, borr = _prep_batch(A, E, rho, lend, borr)
    tol = equity_tolerance(E) if tol is None else float(tol)
    return _esl_batch_np(A, E, rho, lend, borr, float(amount), tol)


def esl_batch(A, E, rho, lend, borr, amount=1.0, tol=None):
    """ESL of ``A`` plus each candidate edge set.

    ``lend[c, p] -> borr[c, p]`` is the p-th loan of candidate ``c``; each
    loan adds ``amount`` to ``A[l, b]`` and subtracts it from ``A[b, l]``.
    """
    if USE_NUMBA:
        return esl_batch_numba(A, E, rho, lend, borr, amount, tol)
    return esl_batch_numpy(A, E, rho, lend, borr, amount, tol)
