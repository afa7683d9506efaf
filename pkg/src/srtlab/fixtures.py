"""Hand-built reference networks and markets with known answers.

Bank numbers in comments are 1-based (as drawn); array indices are 0-based,
so "bank k" lives at index k - 1.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from . import cascade, contracts
from .contracts import BeliefMode
from .domain import Loan, LoanBook, build_net_exposure
from .matching import LiquidityMarket, Matching, build_market, enumerate_equilibria, is_stable
from .tax import apply_tax, build_srt, tobin_equilibria, unique_equilibrium_under_tax

# ---------------------------------------------------------------------------
# eleven-bank loan book
# ---------------------------------------------------------------------------

ELEVEN_BANK_MATRIX = np.array([
    [0, -2, -1, 0, 0, 0, 0, 0, 0, 0, 0],
    [2, 0, 0, -1, 0, 0, 0, -1, 0, 0, 0],
    [1, 0, 0, 0, -1, 0, 1, 0, 0, 0, 0],
    [0, 1, 0, 0, 0, 1, 0, 0, 0, 0, 0],
    [0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, -1, 0, 0, 0, 0, -1, 0, 0],
    [0, 0, -1, 0, 0, 0, 0, -1, 0, 1, 1],
    [0, 1, 0, 0, 0, 0, 1, 0, 0, 0, -1],
    [0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, -1, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, -1, 1, 0, 0, 0],
], dtype=np.int64)

# (lender, borrower), 1-based
_OLDER_LOANS = [(2, 1), (2, 1), (3, 1), (4, 2), (8, 2), (5, 3), (9, 6),
                (7, 10), (7, 11), (8, 7), (11, 8)]
_NEW_LOANS = [(4, 6), (3, 7)]
_EXPIRED_LOANS = [(1, 5)]


def eleven_bank_book(t: int = 1) -> LoanBook:
    """Loan book at period ``t``: two fresh loans, eleven from ``t - 1`` with
    two-period maturity, and one one-period loan from ``t - 1`` that has
    already expired."""
    loans = [Loan(i - 1, j - 1, 1.0, t - 1, 2) for i, j in _OLDER_LOANS]
    loans += [Loan(i - 1, j - 1, 1.0, t - 1, 1) for i, j in _EXPIRED_LOANS]
    loans += [Loan(i - 1, j - 1, 1.0, t, 1) for i, j in _NEW_LOANS]
    return LoanBook(11, tuple(loans), (), t - 1).live(t)


# ---------------------------------------------------------------------------
# nine-bank systemic-loss example
# ---------------------------------------------------------------------------

EQUITY = 50.0
EDGE = 60.0

# prior loans, 1-based (lender, borrower): bank 3 owes 7 and 8, 7 owes 9,
# and 4 <- 5 <- 6 forms a lending chain so that 6 is riskier than 5, 5 than 4
NINE_BANK_PRIOR = [(5, 4), (6, 5), (7, 3), (8, 3), (9, 7)]
LENDERS = (0, 1, 2)          # banks 1, 2, 3
BORROWERS = (3, 4, 5)        # banks 4, 5, 6

CONFIGURATIONS = {
    "a": [(3, 5), (2, 4)],
    "b": [(3, 4), (2, 5)],
    "c": [(1, 4), (2, 5)],
}

#: ESL of each configuration in units of (first-failure probability x equity)
ESL_UNITS = {"a": 16, "b": 13, "c": 10}

#: banks (1-based) bankrupted by each single-bank seed, per configuration
FAILURE_SETS = {
    "a": {1: {1}, 2: {2}, 3: {3, 7, 8, 9}, 4: {2, 3, 4, 5, 6, 7, 8, 9}, 5: {3, 5, 6, 7, 8, 9},
          6: {6}, 7: {7, 9}, 8: {8}, 9: {9}},
    "b": {1: {1}, 2: {2}, 3: {3, 7, 8, 9}, 4: {2, 3, 4, 5, 6, 7, 8, 9}, 5: {2, 5, 6},
          6: {6}, 7: {7, 9}, 8: {8}, 9: {9}},
    "c": {1: {1}, 2: {2}, 3: {3, 7, 8, 9}, 4: {1, 2, 4, 5, 6}, 5: {2, 5, 6},
          6: {6}, 7: {7, 9}, 8: {8}, 9: {9}},
}

BASE_RATES = np.array([0.03, 0.02, 0.01, 0, 0, 0, 0, 0, 0], dtype=np.float64)
RESERVATION = np.array([0, 0, 0, 0.09, 0.09, 0.07, 0, 0, 0], dtype=np.float64)
RHO_BAR = 0.02
HORIZON = 1


def _edges(pairs, size=EDGE, n=9):
    A = np.zeros((n, n))
    return cascade.add_loans(A, [(i - 1, j - 1) for i, j in pairs], size)


def nine_bank_prior() -> np.ndarray:
    return _edges(NINE_BANK_PRIOR)


def nine_bank_equities() -> np.ndarray:
    return np.full(9, EQUITY)


def configuration(name: str) -> Matching:
    return Matching([(i - 1, j - 1) for i, j in CONFIGURATIONS[name]], LENDERS, BORROWERS)


def configuration_exposure(name: str) -> np.ndarray:
    return _edges(NINE_BANK_PRIOR + CONFIGURATIONS[name])


def nine_bank_market() -> LiquidityMarket:
    """Lenders 1-3 (3 cheapest), borrowers 4-6 under full contagion beliefs."""
    rho_bar = np.full(9, RHO_BAR)
    q = contracts.endogenous_default_probs(nine_bank_prior(), nine_bank_equities(), rho_bar)
    rho = contracts.total_default_prob(rho_bar, q, BeliefMode.FULL)
    return build_market(LENDERS, BORROWERS, BASE_RATES, rho, RESERVATION, HORIZON)


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------


class FixtureResult(NamedTuple):
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def check_eleven_bank_matrix() -> FixtureResult:
    A = build_net_exposure(eleven_bank_book())
    ok = A.shape == ELEVEN_BANK_MATRIX.shape and np.array_equal(A, ELEVEN_BANK_MATRIX)
    bad = np.argwhere(A != ELEVEN_BANK_MATRIX) if A.shape == ELEVEN_BANK_MATRIX.shape else []
    return FixtureResult("net_exposure_11", bool(ok),
                         "exact match" if ok else f"differs at {[tuple(x) for x in bad]}")


def check_esl_ratios() -> FixtureResult:
    E = nine_bank_equities()
    rho1 = np.full(9, 0.01)
    wiring, got = [], {}
    for name in "abc":
        A = configuration_exposure(name)
        for seed, expect in FAILURE_SETS[name].items():
            found = {k + 1 for k in cascade.run_cascade(A, E, [seed - 1]).failed()}
            if found != expect:
                wiring.append(f"({name}) seed {seed}: {sorted(found)} != {sorted(expect)}")
        got[name] = cascade.expected_systemic_loss(A, E, rho1) / (0.01 * EQUITY)
    if wiring:
        return FixtureResult("esl_ratio_16_13_10", False, "; ".join(wiring))
    ok = all(abs(got[k] - ESL_UNITS[k]) < 1e-9 for k in "abc")
    detail = ":".join(f"{got[k]:g}" for k in "abc")
    return FixtureResult("esl_ratio_16_13_10", ok, detail)


def check_equilibria() -> FixtureResult:
    market = nine_bank_market()
    eq = set(enumerate_equilibria(market))
    want = {configuration("a"), configuration("b")}
    c_stable = is_stable(configuration("c"), market)
    ok = eq == want and not c_stable
    detail = f"{len(eq)} equilibria; low-ESL configuration stable untaxed: {bool(c_stable)}"
    return FixtureResult("equilibrium_pair", ok, detail)


def check_tobin_shrinks_volume() -> FixtureResult:
    eq = set(tobin_equilibria(nine_bank_market(), 0.03))
    shrunk = Matching([(2, 3)], LENDERS, BORROWERS)
    ok = eq == {configuration("a"), shrunk}
    return FixtureResult("uniform_tax_volume", ok, f"{sorted(m.volume for m in eq)}")


def check_srt_uniqueness() -> FixtureResult:
    market = nine_bank_market()
    target = configuration("c")
    taxed = apply_tax(market, build_srt(market, target, epsilon=1e-4))
    try:
        mu = unique_equilibrium_under_tax(taxed, verify=True)
    except (ValueError, RuntimeError) as exc:
        return FixtureResult("srt_unique", False, str(exc))
    return FixtureResult("srt_unique", mu == target, repr(mu))


CHECKS = (check_eleven_bank_matrix, check_esl_ratios, check_equilibria,
          check_tobin_shrinks_volume, check_srt_uniqueness)


def run_all() -> list[FixtureResult]:
    out = []
    for check in CHECKS:
        try:
            out.append(check())
        except Exception as exc:  # a crash is a failed fixture, not a crashed report
            out.append(FixtureResult(check.__name__.removeprefix("check_"), False,
                                     f"{type(exc).__name__}: {exc}"))
    return out
