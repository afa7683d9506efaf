"""Insolvency cascades on a net exposure matrix, systemic impact and ESL.

Convention: ``A[i, j] > 0`` means bank ``i`` is a net creditor of ``j`` and
loses ``A[i, j]`` of equity when ``j`` fails. A failing bank passes its
losses on exactly once, then goes inactive.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

import numpy as np

from . import kernels


class Status(str, enum.Enum):
    HEALTHY = "H"
    FAILING = "F"
    INACTIVE = "I"


def check_antisymmetric(A, atol: float = 1e-9) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"exposure matrix must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("exposure matrix has non-finite entries")
    scale = max(1.0, float(np.abs(A).max(initial=0.0)))
    bad = np.argwhere(np.abs(A + A.T) > atol * scale)
    if bad.size:
        i, j = (int(v) for v in bad[0])
        raise ValueError(f"exposure matrix not antisymmetric at ({i}, {j}): "
                         f"{A[i, j]!r} vs {A[j, i]!r}")
    return A


def _check_equities(E, n):
    E = np.asarray(E, dtype=np.float64)
    if E.shape != (n,):
        raise ValueError(f"expected {n} equities, got shape {E.shape}")
    if np.any(E < 0):
        raise ValueError("equities must be nonnegative")
    return E


@dataclass
class CascadeState:
    steps: int                 # last step at which some bank was failing
    equities: np.ndarray       # E at the fixed point
    status: list               # Status per bank at the final step
    bankrupt: np.ndarray       # theta at the fixed point
    fail_step: np.ndarray      # step at which each bank failed, -1 if never
    seeds: tuple
    initial_equities: np.ndarray
    trace: list = field(default_factory=list)

    @property
    def seed_loss(self) -> float:
        return float(self.initial_equities[list(self.seeds)].sum())

    @property
    def systemic_loss(self) -> float:
        """Initial equity of banks bankrupted downstream of the seeds."""
        down = self.bankrupt.copy()
        down[list(self.seeds)] = False
        return float(self.initial_equities[down].sum())

    def failed(self) -> set:
        return set(np.flatnonzero(self.bankrupt).tolist())

    def trace_jsonl(self) -> str:
        return "".join(json.dumps(rec, sort_keys=True) + "\n" for rec in self.trace)


def run_cascade(A, E, seeds, *, trace: bool = False) -> CascadeState:
    """Iterate the healthy/failing/inactive recursion from ``seeds``.

    Seeds start with zero equity and are failing at step 1. At each later
    step every creditor of a failing bank loses its positive net exposure
    (clamped at zero equity); a bank that took a loss this step and is left
    with no equity fails. Stops when nobody is failing.
    """
    A = check_antisymmetric(A)
    n = A.shape[0]
    E0 = _check_equities(E, n)
    seeds = tuple(sorted({int(s) for s in seeds}))
    if not seeds:
        raise ValueError("at least one seed bank is required")
    if seeds[0] < 0 or seeds[-1] >= n:
        raise ValueError(f"seed out of range for {n} banks")

    tol = kernels.equity_tolerance(E0)
    apos = np.where(A > 0.0, A, 0.0)
    eq = E0.copy()
    seed_idx = list(seeds)
    eq[seed_idx] = 0.0
    status = [Status.HEALTHY] * n
    theta = np.zeros(n, dtype=bool)
    fail_step = np.full(n, -1, dtype=np.int64)
    records = []

    def snap(delta):
        if trace:
            records.append({"delta": delta, "status": [s.value for s in status],
                            "equity": eq.tolist(), "bankrupt": theta.astype(int).tolist()})

    snap(0)
    failing = np.zeros(n, dtype=bool)
    failing[seed_idx] = True
    status = [Status.FAILING if f else s for f, s in zip(failing, status)]
    theta |= failing
    fail_step[failing] = 1
    delta = last = 1
    snap(1)
    while failing.any():
        delta += 1
        loss = apos[:, failing].sum(axis=1)
        hit = loss > 0.0
        eq = np.maximum(eq - loss, 0.0)
        new = hit & (eq <= tol) & ~theta
        status = [Status.FAILING if nw else Status.INACTIVE if f else s
                  for f, nw, s in zip(failing, new, status)]
        theta |= new
        fail_step[new] = delta
        failing = new
        if new.any():
            last = delta
            snap(delta)
    return CascadeState(last, eq, status, theta, fail_step, seeds, E0, records)


def systemic_impact(A, E, i) -> float:
    """Equity of the banks (other than ``i``) bankrupted by ``i``'s failure."""
    return run_cascade(A, E, [i]).systemic_loss


def systemic_impacts(A, E) -> np.ndarray:
    A = check_antisymmetric(A)
    E = _check_equities(E, A.shape[0])
    F = kernels.failure_matrix(A, E)
    return F.astype(np.float64) @ E - E


def expected_systemic_loss(A, E, rho1) -> float:
    """Sum over banks of (first-failure probability) x (systemic impact)."""
    rho1 = np.asarray(rho1, dtype=np.float64)
    return float(rho1 @ systemic_impacts(A, E))


def add_loans(A, pairs, amount: float = 1.0) -> np.ndarray:
    """Net exposure after new ``(lender, borrower)`` loans of size ``amount``."""
    out = np.array(A, dtype=np.float64, copy=True)
    for i, j in pairs:
        out[i, j] += amount
        out[j, i] -= amount
    return out


def delta_esl(i, j, A_prev, E, rho1, amount: float = 1.0) -> float:
    """ESL change caused by one new loan ``i -> j`` on top of ``A_prev``."""
    if i == j:
        raise ValueError("a bank cannot lend to itself")
    return (expected_systemic_loss(add_loans(A_prev, [(i, j)], amount), E, rho1)
            - expected_systemic_loss(A_prev, E, rho1))


def delta_esl_matching(matching, A_prev, E, rho1, amount: float = 1.0) -> float:
    pairs = matching.pairs_sorted() if hasattr(matching, "pairs_sorted") else sorted(matching)
    return (expected_systemic_loss(add_loans(A_prev, pairs, amount), E, rho1)
            - expected_systemic_loss(A_prev, E, rho1))


def delta_esl_table(lenders, borrowers, A_prev, E, rho1, amount: float = 1.0) -> np.ndarray:
    """``out[a, b]`` = ESL change of a single loan lenders[a] -> borrowers[b]."""
    A_prev = check_antisymmetric(A_prev)
    E = _check_equities(E, A_prev.shape[0])
    lenders, borrowers = list(lenders), list(borrowers)
    if not lenders or not borrowers:
        return np.zeros((len(lenders), len(borrowers)))
    lend = np.repeat(lenders, len(borrowers)).reshape(-1, 1)
    borr = np.tile(borrowers, len(lenders)).reshape(-1, 1)
    base = kernels.esl_batch(A_prev, E, rho1, np.zeros((1, 0), np.int64),
                             np.zeros((1, 0), np.int64), amount)[0]
    vals = kernels.esl_batch(A_prev, E, rho1, lend, borr, amount)
    return vals.reshape(len(lenders), len(borrowers)) - base
