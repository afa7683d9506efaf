"""Balance sheets, the interbank loan book and the net exposure matrix.

Banks are indexed densely ``0..n-1``. Loans are unit-sized in the base
model, but ``amount`` is carried per loan so larger loan sizes work too.
Interest payments never touch balance sheets; rates only drive preferences.
"""

from __future__ import annotations

import csv
import dataclasses
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


@dataclass
class BankState:
    """Table-1 balance sheet of one bank.

    ``equity`` is computed from the full sheet so that the identities
    ``A_IB + X == L_HH`` and ``A_HH == L_IB`` (hence ``E == Y - Z``) can be
    asserted rather than assumed.
    """

    id: int
    risky_asset: float
    external_liability: float
    hazard_rate: float = 0.0
    deposit_rate: float = 0.0
    reservation_rate: float = 0.0
    ib_assets: float = 0.0
    ib_liabilities: float = 0.0
    hh_assets: float = 0.0
    hh_liabilities: float = 0.0
    bonds: float = 0.0
    bankrupt: bool = False

    @property
    def equity(self) -> float:
        return (self.risky_asset + self.ib_assets + self.hh_assets + self.bonds
                - self.external_liability - self.ib_liabilities - self.hh_liabilities)

    def identities_hold(self, atol: float = 1e-9) -> bool:
        return (abs(self.ib_assets + self.bonds - self.hh_liabilities) <= atol
                and abs(self.hh_assets - self.ib_liabilities) <= atol
                and abs(self.equity - (self.risky_asset - self.external_liability)) <= atol)


@dataclass(frozen=True)
class Loan:
    lender: int
    borrower: int
    amount: float = 1.0
    origination: int = 0
    maturity: int = 1

    def __post_init__(self):
        if self.lender == self.borrower:
            raise ValueError(f"self-loan for bank {self.lender}")
        if self.maturity < 1:
            raise ValueError("maturity must be a positive number of periods")

    def is_live(self, t: int) -> bool:
        return self.origination <= t < self.origination + self.maturity


@dataclass(frozen=True)
class BondPosition:
    """Household deposit parked in the risk-free asset by an unmatched lender."""

    bank: int
    amount: float = 1.0
    origination: int = 0
    maturity: int = 1

    def is_live(self, t: int) -> bool:
        return self.origination <= t < self.origination + self.maturity


@dataclass(frozen=True)
class LoanBook:
    """Live interbank loans (a directed multigraph) as of ``period``."""

    n: int
    loans: tuple[Loan, ...] = ()
    bonds: tuple[BondPosition, ...] = ()
    period: int = -1

    def __len__(self):
        return len(self.loans)

    def live(self, t: int) -> LoanBook:
        """Copy keeping only positions alive at ``t`` (no new originations)."""
        return dataclasses.replace(
            self,
            loans=tuple(ln for ln in self.loans if ln.is_live(t)),
            bonds=tuple(b for b in self.bonds if b.is_live(t)),
            period=t,
        )


def build_net_exposure(book: LoanBook) -> np.ndarray:
    """``A[i, j]`` = live lending i->j minus live lending j->i."""
    A = np.zeros((book.n, book.n))
    for ln in book.loans:
        A[ln.lender, ln.borrower] += ln.amount
        A[ln.borrower, ln.lender] -= ln.amount
    return A


def advance_period(book: LoanBook, matching, *, maturity: int = 1,
                   amount: float = 1.0, period: int | None = None,
                   banks: Sequence[BankState] | None = None) -> LoanBook:
    """Roll the book forward to ``period`` (default ``book.period + 1``).

    Positions with ``origination + maturity <= period`` are dropped, then
    every matched pair of ``matching`` becomes a new loan originated at
    ``period``; unmatched lenders park their deposit in bonds. When ``banks``
    is given their balance sheets are settled in place and a matching that
    involves a bankrupt bank is rejected.
    """
    t = book.period + 1 if period is None else int(period)
    if t <= book.period:
        raise ValueError(f"cannot advance from period {book.period} to {t}")
    if banks is not None:
        involved = set(matching.lenders) | set(matching.borrowers)
        dead = sorted(b.id for b in banks if b.bankrupt and b.id in involved)
        if dead:
            raise ValueError(f"matching references bankrupt banks {dead}")

    kept = book.live(t)
    matured_loans = [ln for ln in book.loans if not ln.is_live(t)]
    matured_bonds = [b for b in book.bonds if not b.is_live(t)]
    new_loans = tuple(Loan(i, j, amount, t, maturity) for i, j in matching.pairs_sorted())
    new_bonds = tuple(BondPosition(i, amount, t, maturity) for i in matching.unmatched_lenders())

    if banks is not None:
        _settle(banks, matured_loans, matured_bonds, sign=-1.0)
        _settle(banks, new_loans, new_bonds, sign=+1.0)

    return LoanBook(book.n, kept.loans + new_loans, kept.bonds + new_bonds, t)


def _settle(banks, loans: Iterable[Loan], bonds: Iterable[BondPosition], sign: float):
    # deposit -> (interbank loan | bond); interbank borrowing -> household loan
    for ln in loans:
        a = sign * ln.amount
        lender, borrower = banks[ln.lender], banks[ln.borrower]
        lender.ib_assets += a
        lender.hh_liabilities += a
        borrower.ib_liabilities += a
        borrower.hh_assets += a
    for b in bonds:
        a = sign * b.amount
        banks[b.bank].bonds += a
        banks[b.bank].hh_liabilities += a


def recompute_balance_sheets(banks: Sequence[BankState], book: LoanBook) -> list[BankState]:
    """Balance sheets rebuilt from scratch out of the live book."""
    out = [dataclasses.replace(b, ib_assets=0.0, ib_liabilities=0.0, hh_assets=0.0,
                               hh_liabilities=0.0, bonds=0.0) for b in banks]
    _settle(out, book.loans, book.bonds, sign=+1.0)
    return out


def apply_exogenous_shock(banks: Sequence[BankState], failed: int) -> list[BankState]:
    """The risky asset of ``failed`` jumps to zero; returns updated copies."""
    out = [dataclasses.replace(b) for b in banks]
    bank = out[failed]
    if bank.bankrupt:
        raise ValueError(f"bank {failed} is already bankrupt")
    bank.risky_asset = 0.0
    bank.bankrupt = True
    return out


def equities(banks: Sequence[BankState]) -> np.ndarray:
    return np.array([b.equity for b in banks], dtype=np.float64)


# ---------------------------------------------------------------------------
# CSV export
# ---------------------------------------------------------------------------

LOAN_COLUMNS = ("lender", "borrower", "amount", "origination", "maturity")


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_loan_book_csv(book: LoanBook, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LOAN_COLUMNS)
        for ln in book.loans:
            w.writerow([ln.lender, ln.borrower, _fmt(ln.amount), ln.origination, ln.maturity])


def read_loan_book_csv(path, n: int, period: int | None = None) -> LoanBook:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    loans = tuple(Loan(int(r["lender"]), int(r["borrower"]), float(r["amount"]),
                       int(r["origination"]), int(r["maturity"])) for r in rows)
    if period is None:
        period = max((ln.origination for ln in loans), default=-1)
    return LoanBook(n, loans, (), period)


def write_matrix_csv(M, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in np.atleast_2d(M):
            w.writerow([_fmt(v) for v in row])


def read_matrix_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    try:
        M = np.array([[float(c) for c in r] for r in rows], dtype=np.float64)
    except ValueError as exc:
        raise ValueError(f"{path}: non-numeric entry ({exc})") from None
    if M.ndim != 2:
        raise ValueError(f"{path}: ragged rows")
    return M
