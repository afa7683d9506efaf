"""Transaction taxes: the uniform Tobin-like levy and the systemic risk tax.

A tax matrix adds ``tau[a, b] >= 0`` to the rate lender a quotes borrower b.
The uniform levy only moves reservation cuts; the systemic risk tax reorders
every borrower's list so a chosen feasible matching becomes the single
stable outcome.
"""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass

import numpy as np

from . import cascade, kernels
from .domain import _fmt
from .matching import (LiquidityMarket, Matching, enumerate_equilibria, feasible_rows,
                       stable_matchings)

logger = logging.getLogger(__name__)

DEFAULT_EPSILON = 1e-6


@dataclass(frozen=True, eq=False)
class TaxMatrix:
    lenders: tuple[int, ...]
    borrowers: tuple[int, ...]
    tau: np.ndarray
    kind: str = "none"           # none | tobin | srt
    kappa: float | None = None
    delta_esl: np.ndarray | None = None

    def __post_init__(self):
        tau = np.asarray(self.tau, dtype=np.float64).reshape(len(self.lenders), len(self.borrowers))
        if np.any(tau < 0) or not np.all(np.isfinite(tau)):
            raise ValueError("tax entries must be finite and nonnegative")
        object.__setattr__(self, "tau", tau)

    def __getitem__(self, pair) -> float:
        i, j = pair
        return float(self.tau[self.lenders.index(i), self.borrowers.index(j)])

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("lender", "borrower", "tau", "delta_esl"))
            for a, i in enumerate(self.lenders):
                for b, j in enumerate(self.borrowers):
                    d = 0.0 if self.delta_esl is None else self.delta_esl[a, b]
                    w.writerow((i, j, _fmt(self.tau[a, b]), _fmt(d)))


def no_tax(market: LiquidityMarket) -> TaxMatrix:
    return TaxMatrix(market.lenders, market.borrowers, np.zeros(market.shape))


def tobin(market: LiquidityMarket, kappa: float) -> TaxMatrix:
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    return TaxMatrix(market.lenders, market.borrowers, np.full(market.shape, float(kappa)),
                     "tobin", float(kappa))


def apply_tax(market: LiquidityMarket, tax: TaxMatrix) -> LiquidityMarket:
    if tax.lenders != market.lenders or tax.borrowers != market.borrowers:
        raise ValueError("tax matrix indexed on a different market")
    return market.with_rates(market.rates + tax.tau)


def tobin_equilibria(market: LiquidityMarket, kappa: float) -> list[Matching]:
    return enumerate_equilibria(apply_tax(market, tobin(market, kappa)))


def is_feasible(matching: Matching, market: LiquidityMarket) -> bool:
    """Every matched pair clears the borrower's reservation rate."""
    market.check_matching(matching)
    return all(market.acceptable[market.lender_pos(i), market.borrower_pos(j)]
               for i, j in matching.pairs)


def build_srt(market: LiquidityMarket, target: Matching, *, epsilon: float = DEFAULT_EPSILON,
              zeta: float = 0.0, delta_esl=None) -> TaxMatrix:
    """Tax matrix under which ``target`` is each borrower's top choice.

    Target pairs pay nothing. Any other lender k of a matched borrower j is
    charged enough to sit ``epsilon`` above the target rate, plus
    ``zeta * max(0, delta_esl[k, j])``. Borrowers left unmatched by the
    target see every lender pushed ``epsilon`` past their reservation rate.
    """
    if not is_feasible(target, market):
        raise ValueError(f"target {target} has a pair above its reservation rate")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    nl, nb = market.shape
    d = np.zeros((nl, nb)) if delta_esl is None else np.asarray(delta_esl, dtype=np.float64)
    rates = market.rates
    tau = np.zeros((nl, nb))
    for b, j in enumerate(market.borrowers):
        p = target(j)
        if p == j:
            tau[:, b] = np.maximum(0.0, market.reservation[b] - rates[:, b] + epsilon)
            continue
        t = market.lender_pos(p)
        raw = rates[t, b] - rates[:, b] + epsilon + zeta * np.maximum(0.0, d[:, b])
        tau[:, b] = np.maximum(0.0, raw)
        tau[t, b] = 0.0
    return TaxMatrix(market.lenders, market.borrowers, tau, "srt", None,
                     None if delta_esl is None else d)


def unique_equilibrium_under_tax(taxed: LiquidityMarket, *, verify: bool = False) -> Matching:
    """Match every borrower with its top choice on the taxed market.

    Raises when two borrowers share the same top lender, which is the case
    for any tax that does not reorder preferences (e.g. the uniform levy
    with more than one active borrower). With ``verify`` the exhaustive
    stability scan must find this matching and nothing else.
    """
    pairs, owner = [], {}
    for b, j in enumerate(taxed.borrowers):
        top = taxed.top_choice(j)
        if top == j:
            continue
        if top in owner:
            raise ValueError(f"borrowers {owner[top]} and {j} share top lender {top}; "
                             "the tax does not pin a unique equilibrium")
        owner[top] = j
        pairs.append((top, j))
    mu = Matching(pairs, taxed.lenders, taxed.borrowers)
    if verify:
        found = stable_matchings(taxed)
        if found != [mu]:
            raise RuntimeError(f"expected {mu} as the only stable matching, found {found}")
    return mu


def auto_zeta(market: LiquidityMarket, equities) -> float:
    """Scale so that a delta ESL of one full equity outweighs ten times the
    market's rate spread."""
    top = float(np.max(equities, initial=0.0))
    if top <= 0 or market.rates.size == 0:
        return 0.0
    spread = float(market.rates.max() - market.rates.min())
    return 10.0 * max(spread, DEFAULT_EPSILON) / top


@dataclass(frozen=True, eq=False)
class SRTResult:
    tax: TaxMatrix
    matching: Matching
    esl: float
    candidates: int
    wall_time: float


def optimize_srt(market: LiquidityMarket, A_prev, E, rho1, volume: int, *,
                 amount: float = 1.0, epsilon: float = DEFAULT_EPSILON,
                 zeta: float | None = None) -> SRTResult:
    """Lowest-ESL feasible matching of exactly ``volume`` loans, and its tax.

    Candidates are all injective borrower -> acceptable-lender maps with
    ``volume`` pairs; each is scored by the ESL of ``A_prev`` plus its new
    loans. Ties go to the lexicographically smallest pair list.
    """
    start = time.perf_counter()
    A_prev = cascade.check_antisymmetric(A_prev)
    E = np.asarray(E, dtype=np.float64)
    rho1 = np.asarray(rho1, dtype=np.float64)
    rows = feasible_rows(market, volume)
    if rows.shape[0] == 0:
        raise ValueError(f"no feasible matching of volume {volume}")
    L = np.asarray(market.lenders, dtype=np.int64)
    B = np.asarray(market.borrowers, dtype=np.int64)
    if volume:
        cols = np.argsort(rows < 0, axis=1, kind="stable")[:, :volume]
        lpos = np.take_along_axis(rows, cols, axis=1)
        lend, borr = L[lpos], B[cols]
    else:
        lend = borr = np.zeros((rows.shape[0], 0), dtype=np.int64)
    esl = kernels.esl_batch(A_prev, E, rho1, lend, borr, amount)

    best = float(esl.min())
    slack = 1e-12 * max(1.0, abs(best))
    tied = np.flatnonzero(esl <= best + slack)
    k = min(tied, key=lambda c: market.matching_from_row(rows[c]).key())
    mu = market.matching_from_row(rows[k])
    chosen = float(esl[k])

    if zeta is None:
        zeta = auto_zeta(market, E)
    d = cascade.delta_esl_table(market.lenders, market.borrowers, A_prev, E, rho1, amount)
    tax = build_srt(market, mu, epsilon=epsilon, zeta=zeta, delta_esl=d)
    wall = time.perf_counter() - start
    logger.debug("optimize_srt: %d candidates, best ESL %.6g, %.3fs", rows.shape[0], chosen, wall)
    return SRTResult(tax, mu, chosen, int(rows.shape[0]), wall)
