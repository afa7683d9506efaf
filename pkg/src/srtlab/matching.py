"""Two-sided liquidity market: preferences, stability and equilibrium search.

Borrowers rank lenders by quoted rate (ties broken by bank id) and put
themselves right after the last lender whose rate is strictly below their
reservation rate. Lenders are either indifferent between borrowers (the
base model, fair risk premia) or all rank borrowers by default risk (the
strict-preference model).
"""

from __future__ import annotations

import functools
import json
import logging
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from . import contracts

logger = logging.getLogger(__name__)

#: Largest side size accepted by exhaustive enumeration.
ENUMERATION_LIMIT = 8


class Matching:
    """Partial one-to-one assignment between a lender set and a borrower set.

    Behaves like the involution ``mu``: ``m(x)`` is x's partner, or ``x``
    itself when x is unmatched.
    """

    __slots__ = ("pairs", "lenders", "borrowers", "_partner")

    def __init__(self, pairs: Iterable[tuple[int, int]], lenders: Iterable[int],
                 borrowers: Iterable[int]):
        self.pairs = frozenset((int(i), int(j)) for i, j in pairs)
        self.lenders = frozenset(int(x) for x in lenders)
        self.borrowers = frozenset(int(x) for x in borrowers)
        if self.lenders & self.borrowers:
            raise ValueError(f"banks {sorted(self.lenders & self.borrowers)} on both sides")
        partner = {}
        for i, j in self.pairs:
            if i not in self.lenders or j not in self.borrowers:
                raise ValueError(f"pair ({i}, {j}) is not lender -> borrower")
            if i in partner or j in partner:
                raise ValueError(f"bank matched twice in pair ({i}, {j})")
            partner[i], partner[j] = j, i
        self._partner = partner

    @classmethod
    def empty(cls, lenders, borrowers) -> Matching:
        return cls((), lenders, borrowers)

    def __call__(self, bank: int) -> int:
        return self._partner.get(bank, bank)

    def __eq__(self, other):
        if not isinstance(other, Matching):
            return NotImplemented
        return (self.pairs, self.lenders, self.borrowers) == (
            other.pairs, other.lenders, other.borrowers)

    def __hash__(self):
        return hash((self.pairs, self.lenders, self.borrowers))

    def __repr__(self):
        body = ", ".join(f"{i}->{j}" for i, j in self.pairs_sorted())
        return f"Matching({{{body}}})"

    @property
    def volume(self) -> int:
        return len(self.pairs)

    def key(self) -> tuple:
        """Lexicographic encoding used for deterministic tie-breaks."""
        return tuple(self.pairs_sorted())

    def pairs_sorted(self) -> list[tuple[int, int]]:
        return sorted(self.pairs)

    def unmatched_lenders(self) -> list[int]:
        return sorted(x for x in self.lenders if x not in self._partner)

    def unmatched_borrowers(self) -> list[int]:
        return sorted(x for x in self.borrowers if x not in self._partner)


# ---------------------------------------------------------------------------
# market
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LiquidityMarket:
    """One period's market: who lends, who borrows, and at what rates.

    ``rates[a, b]`` is the rate lender ``lenders[a]`` would charge borrower
    ``borrowers[b]`` (tax included). ``lender_rank`` is None for indifferent
    lenders, otherwise ``lender_rank[a, b]`` is lender a's rank of borrower
    b (0 = best).
    """

    lenders: tuple[int, ...]
    borrowers: tuple[int, ...]
    rates: np.ndarray
    reservation: np.ndarray
    base_rates: np.ndarray | None = None
    lender_rank: np.ndarray | None = None
    period: int = 0
    borrower_rank: np.ndarray = field(init=False, repr=False)
    self_rank: np.ndarray = field(init=False, repr=False)
    acceptable: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        lenders = tuple(int(x) for x in self.lenders)
        borrowers = tuple(int(x) for x in self.borrowers)
        if set(lenders) & set(borrowers):
            raise ValueError("a bank cannot lend and borrow in the same period")
        nl, nb = len(lenders), len(borrowers)
        rates = np.asarray(self.rates, dtype=np.float64).reshape(nl, nb)
        reservation = np.asarray(self.reservation, dtype=np.float64).reshape(nb)
        object.__setattr__(self, "lenders", lenders)
        object.__setattr__(self, "borrowers", borrowers)
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "reservation", reservation)
        if self.base_rates is not None:
            object.__setattr__(self, "base_rates",
                               np.asarray(self.base_rates, dtype=np.float64).reshape(nl))
        if self.lender_rank is not None:
            lr = np.asarray(self.lender_rank, dtype=np.int64).reshape(nl, nb)
            for a in range(nl):
                if sorted(lr[a].tolist()) != list(range(nb)):
                    raise ValueError(f"lender {lenders[a]} ranking is not a strict order")
            # self (unmatched) is every lender's last choice
            lr = np.hstack([lr, np.full((nl, 1), nb, dtype=np.int64)])
            object.__setattr__(self, "lender_rank", lr)

        acceptable = rates < reservation[None, :]
        # column nl stands for "self"
        brank = np.empty((nb, nl + 1), dtype=np.int64)
        srank = np.empty(nb, dtype=np.int64)
        ids = np.asarray(lenders, dtype=np.int64)
        for b in range(nb):
            col = rates[:, b]
            order = np.lexsort((ids, col))
            if nl > 1 and acceptable[order[0], b] and np.count_nonzero(col == col[order[0]]) > 1:
                logger.warning("borrower %d: tied best quotes broken by bank index",
                               borrowers[b])
            m = int(acceptable[:, b].sum())
            for pos, a in enumerate(order):
                brank[b, a] = pos if pos < m else pos + 1
            brank[b, nl] = m
            srank[b] = m
        object.__setattr__(self, "borrower_rank", brank)
        object.__setattr__(self, "self_rank", srank)
        object.__setattr__(self, "acceptable", acceptable)

    # -- basic accessors ---------------------------------------------------

    @property
    def strict(self) -> bool:
        return self.lender_rank is not None

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.lenders), len(self.borrowers)

    def lender_pos(self, bank: int) -> int:
        return self.lenders.index(bank)

    def borrower_pos(self, bank: int) -> int:
        return self.borrowers.index(bank)

    def rate(self, lender: int, borrower: int) -> float:
        return float(self.rates[self.lender_pos(lender), self.borrower_pos(borrower)])

    def borrower_prefs(self, borrower: int) -> list[int]:
        """Preference list best-first; the borrower itself marks the cut."""
        b = self.borrower_pos(borrower)
        nl = len(self.lenders)
        slots = [(self.borrower_rank[b, a], self.lenders[a]) for a in range(nl)]
        slots.append((self.self_rank[b], borrower))
        return [x for _, x in sorted(slots)]

    def lender_prefs(self, lender: int) -> list[int] | None:
        """Strict list best-first, or None for an indifferent lender."""
        if not self.strict:
            return None
        a = self.lender_pos(lender)
        nb = len(self.borrowers)
        return [self.borrowers[b] for b in np.argsort(self.lender_rank[a, :nb], kind="stable")]

    def top_choice(self, borrower: int) -> int:
        return self.borrower_prefs(borrower)[0]

    def with_rates(self, rates) -> LiquidityMarket:
        lr = None if self.lender_rank is None else self.lender_rank[:, :-1]
        return LiquidityMarket(self.lenders, self.borrowers, rates, self.reservation,
                               self.base_rates, lr, self.period)

    def subset(self, lenders, borrowers) -> LiquidityMarket:
        la = [self.lender_pos(x) for x in lenders]
        bb = [self.borrower_pos(x) for x in borrowers]
        lr = None if self.lender_rank is None else _rerank(self.lender_rank[np.ix_(la, bb)])
        base = None if self.base_rates is None else self.base_rates[la]
        return LiquidityMarket(tuple(lenders), tuple(borrowers), self.rates[np.ix_(la, bb)],
                               self.reservation[bb], base, lr, self.period)

    # -- row encoding ------------------------------------------------------

    def matching_from_row(self, row) -> Matching:
        pairs = [(self.lenders[a], self.borrowers[b]) for b, a in enumerate(row) if a >= 0]
        return Matching(pairs, self.lenders, self.borrowers)

    def row_of(self, matching: Matching) -> np.ndarray:
        self.check_matching(matching)
        row = np.full(len(self.borrowers), -1, dtype=np.int64)
        for i, j in matching.pairs:
            row[self.borrower_pos(j)] = self.lender_pos(i)
        return row

    def check_matching(self, matching: Matching) -> None:
        if matching.lenders != frozenset(self.lenders) or \
                matching.borrowers != frozenset(self.borrowers):
            raise ValueError("matching is defined on different lender/borrower sets")

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "period": self.period,
            "lenders": list(self.lenders),
            "borrowers": list(self.borrowers),
            "rates": self.rates.tolist(),
            "reservation": self.reservation.tolist(),
            "base_rates": None if self.base_rates is None else self.base_rates.tolist(),
            "lender_rank": None if self.lender_rank is None else self.lender_rank[:, :-1].tolist(),
            "borrower_prefs": {str(b): self.borrower_prefs(b) for b in self.borrowers},
            "lender_prefs": {str(i): self.lender_prefs(i) or "indifferent" for i in self.lenders},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> LiquidityMarket:
        nl, nb = len(d["lenders"]), len(d["borrowers"])
        return cls(tuple(d["lenders"]), tuple(d["borrowers"]),
                   np.array(d["rates"], dtype=np.float64).reshape(nl, nb),
                   np.array(d["reservation"], dtype=np.float64),
                   None if d.get("base_rates") is None else np.array(d["base_rates"]),
                   None if d.get("lender_rank") is None else np.array(d["lender_rank"]),
                   int(d.get("period", 0)))

    @classmethod
    def from_json(cls, text: str) -> LiquidityMarket:
        return cls.from_dict(json.loads(text))


def _rerank(ranks: np.ndarray) -> np.ndarray:
    return np.argsort(np.argsort(ranks, axis=1, kind="stable"), axis=1, kind="stable")


class ShockDraw(NamedTuple):
    lenders: tuple[int, ...]
    borrowers: tuple[int, ...]
    shocks: np.ndarray


def draw_shocks(n: int, y: float, rng, solvent=None) -> ShockDraw:
    """Each solvent bank is a lender w.p. y/2, a borrower w.p. y/2."""
    if not 0.0 <= y <= 1.0:
        raise ValueError("shock probability y must lie in [0, 1]")
    u = rng.random(n)
    eps = np.where(u < y / 2, 1, np.where(u < y, -1, 0)).astype(np.int64)
    if solvent is not None:
        eps[~np.asarray(solvent, dtype=bool)] = 0
    return ShockDraw(tuple(np.flatnonzero(eps > 0).tolist()),
                     tuple(np.flatnonzero(eps < 0).tolist()), eps)


def build_market(lenders, borrowers, base_rates, rho, reservation, S, *,
                 strict: bool = False, tax=None, period: int = 0) -> LiquidityMarket:
    """Quote every lender/borrower pair and derive both sides' preferences.

    ``base_rates``, ``rho`` and ``reservation`` are indexed by bank id. In
    strict mode lenders quote their bare rate and rank borrowers by ``rho``.
    """
    q = contracts.quote(lenders, borrowers, base_rates, rho, S, strict=strict, tax=tax)
    reservation = np.asarray(reservation, dtype=np.float64)
    lender_rank = None
    if strict:
        rho = np.asarray(rho, dtype=np.float64)
        b_ids = np.asarray(q.borrowers, dtype=np.int64)
        order = np.lexsort((b_ids, rho[b_ids])) if len(b_ids) else b_ids
        rank = np.empty(len(b_ids), dtype=np.int64)
        rank[order] = np.arange(len(b_ids))
        lender_rank = np.tile(rank, (len(q.lenders), 1))
    return LiquidityMarket(q.lenders, q.borrowers, q.rates,
                           reservation[list(q.borrowers)] if q.borrowers else np.zeros(0),
                           q.base_rates, lender_rank, period)


# ---------------------------------------------------------------------------
# stability
# ---------------------------------------------------------------------------


class Stability(NamedTuple):
    stable: bool
    condition: str | None = None
    witness: tuple | None = None

    def __bool__(self):
        return self.stable


def is_stable(matching: Matching, market: LiquidityMarket) -> Stability:
    """Check pairwise (I), coalitional (II) and unilateral (III) deviations.

    Returns the first violated condition with a witness: a blocking
    ``(lender, borrower)`` pair for I, the borrower cycle for II, and
    ``(borrower, preferred)`` for III where ``preferred`` is the borrower
    itself or an unmatched lender.
    """
    market.check_matching(matching)
    L, B = market.lenders, market.borrowers
    nl = len(L)
    brank = market.borrower_rank

    def cur_rank(b):
        j = B[b]
        p = matching(j)
        return market.self_rank[b] if p == j else brank[b, market.lender_pos(p)]

    # (I) only bites when lenders hold strict preferences
    if market.strict:
        for a, i in enumerate(L):
            p = matching(i)
            lcur = market.lender_rank[a, len(B) if p == i else market.borrower_pos(p)]
            for b, j in enumerate(B):
                if matching(j) == i:
                    continue
                if brank[b, a] < cur_rank(b) and market.lender_rank[a, b] < lcur:
                    return Stability(False, "I", (i, j))

    # (II) swap coalitions among borrowers held by indifferent lenders
    if not market.strict:
        cycle = _envy_cycle(matching, market)
        if cycle:
            return Stability(False, "II", tuple(cycle))

    # (III) unilateral deviations
    for b, j in enumerate(B):
        p = matching(j)
        cr = cur_rank(b)
        if p != j and market.self_rank[b] < cr:
            return Stability(False, "III", (j, j))
        for a, k in enumerate(L):
            if matching(k) == k and brank[b, a] < cr:
                return Stability(False, "III", (j, k))
    return Stability(True)


def _envy_cycle(matching: Matching, market: LiquidityMarket) -> list[int] | None:
    matched = [j for j in market.borrowers if matching(j) != j]
    pos = {j: market.borrower_pos(j) for j in matched}
    held = {j: market.lender_pos(matching(j)) for j in matched}
    brank = market.borrower_rank
    envy = {j: [k for k in matched if k != j and brank[pos[j], held[k]] < brank[pos[j], held[j]]]
            for j in matched}
    # iterative DFS with colors
    color = dict.fromkeys(matched, 0)
    for root in matched:
        if color[root]:
            continue
        stack = [(root, iter(envy[root]))]
        path = [root]
        color[root] = 1
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[node] = 2
                stack.pop()
                path.pop()
            elif color[nxt] == 1:
                return path[path.index(nxt):]
            elif color[nxt] == 0:
                color[nxt] = 1
                path.append(nxt)
                stack.append((nxt, iter(envy[nxt])))
    return None


# ---------------------------------------------------------------------------
# exhaustive enumeration
# ---------------------------------------------------------------------------


def _guard(nl: int, nb: int) -> None:
    if max(nl, nb) > ENUMERATION_LIMIT:
        raise ValueError(f"market {nl}x{nb} exceeds the exhaustive enumeration "
                         f"limit of {ENUMERATION_LIMIT} per side")


@functools.lru_cache(maxsize=64)
def all_matchings(nl: int, nb: int) -> np.ndarray:
    """Every matching of an ``nl x nb`` market as rows of lender positions
    per borrower (-1 = unmatched). Row 0 is the empty matching."""
    _guard(nl, nb)
    rows = np.zeros((1, 0), dtype=np.int8)
    for _ in range(nb):
        parts = [np.hstack([rows, np.full((len(rows), 1), -1, dtype=np.int8)])]
        for a in range(nl):
            keep = rows[~(rows == a).any(axis=1)]
            parts.append(np.hstack([keep, np.full((len(keep), 1), a, dtype=np.int8)]))
        rows = np.vstack(parts)
    rows.setflags(write=False)
    return rows


def stable_mask(market: LiquidityMarket, rows: np.ndarray | None = None) -> np.ndarray:
    """Vectorized ``is_stable`` over many matchings (rows as in
    :func:`all_matchings`)."""
    nl, nb = market.shape
    if rows is None:
        rows = all_matchings(nl, nb)
    rows = np.asarray(rows, dtype=np.int64)
    m = rows.shape[0]
    if nb == 0:
        return np.ones(m, dtype=bool)
    bidx = np.arange(nb)
    held = np.where(rows < 0, nl, rows)                   # (m, nb), nl = self
    brank = market.borrower_rank
    cur = brank[bidx[None, :], held]                      # (m, nb)
    matched = rows >= 0
    taken = np.zeros((m, nl + 1), dtype=bool)
    taken[np.arange(m)[:, None], held] = True
    taken = taken[:, :nl]
    prefers = brank[None, :, :nl] < cur[:, :, None]        # (m, nb, nl)

    bad = (matched & (cur > market.self_rank[None, :])).any(axis=1)
    bad |= (prefers & ~taken[:, None, :]).any(axis=(1, 2))

    if market.strict and nl:
        owner = np.full((m, nl + 1), nb, dtype=np.int64)
        owner[np.arange(m)[:, None], held] = bidx[None, :]
        owner = owner[:, :nl]                              # borrower pos or nb
        lr = market.lender_rank
        lcur = lr[np.arange(nl)[None, :], owner]           # (m, nl)
        lprefers = lr[None, :, :nb] < lcur[:, :, None]     # (m, nl, nb)
        bad |= (prefers & lprefers.transpose(0, 2, 1)).any(axis=(1, 2))
    elif nb > 1:
        other = brank[bidx[None, :, None], held[:, None, :]]   # j's rank of k's lender
        envy = (other < cur[:, :, None]) & matched[:, :, None] & matched[:, None, :]
        envy[:, bidx, bidx] = False
        reach = envy.astype(np.int64)
        steps = 1
        while steps < nb:
            reach = ((reach + reach @ reach) > 0).astype(np.int64)
            steps *= 2
        bad |= reach[:, bidx, bidx].any(axis=1)
    return ~bad


def stable_matchings(market: LiquidityMarket) -> list[Matching]:
    """All stable matchings by exhaustive scan."""
    rows = all_matchings(*market.shape)
    return [market.matching_from_row(r) for r in rows[stable_mask(market, rows)]]


def enumerate_equilibria(market: LiquidityMarket) -> list[Matching]:
    """The full equilibrium set of an indifferent-lender market."""
    if market.strict:
        raise ValueError("enumerate_equilibria expects indifferent lenders")
    return stable_matchings(market)


def feasible_rows(market: LiquidityMarket, volume: int | None = None) -> np.ndarray:
    """Rows of every matching whose pairs all clear reservation untaxed."""
    nl, nb = market.shape
    acc = market.acceptable
    out = []

    def rec(b, used, row, k):
        if volume is not None and k + (nb - b) < volume:
            return
        if b == nb:
            if volume is None or k == volume:
                out.append(list(row))
            return
        row.append(-1)
        rec(b + 1, used, row, k)
        row.pop()
        if volume is not None and k >= volume:
            return
        for a in range(nl):
            if acc[a, b] and not used[a]:
                used[a] = True
                row.append(a)
                rec(b + 1, used, row, k + 1)
                row.pop()
                used[a] = False

    rec(0, [False] * nl, [], 0)
    return np.array(out, dtype=np.int64).reshape(len(out), nb)


def feasible_matchings(market: LiquidityMarket, volume: int | None = None) -> list[Matching]:
    return [market.matching_from_row(r) for r in feasible_rows(market, volume)]


# ---------------------------------------------------------------------------
# constructive matchings
# ---------------------------------------------------------------------------


def select_equilibrium(market: LiquidityMarket, rng, *, verify: bool = True) -> Matching:
    """Random serial dictatorship: borrowers in random order each take their
    best still-available acceptable lender."""
    nl, nb = market.shape
    order = rng.permutation(nb) if nb else np.zeros(0, dtype=np.int64)
    free = np.ones(nl, dtype=bool)
    pairs = []
    for b in order:
        ranks = market.borrower_rank[b, :nl]
        best, best_rank = -1, market.self_rank[b]
        for a in range(nl):
            if free[a] and ranks[a] < best_rank:
                best, best_rank = a, ranks[a]
        if best >= 0:
            free[best] = False
            pairs.append((market.lenders[best], market.borrowers[b]))
    mu = Matching(pairs, market.lenders, market.borrowers)
    if verify:
        check = is_stable(mu, market)
        if not check:
            raise RuntimeError(f"serial dictatorship left condition {check.condition} "
                               f"violated ({check.witness}); preferences are not homogeneous")
    return mu


def strict_stable_matching(market: LiquidityMarket) -> Matching:
    """Unique stable matching when lenders rank borrowers by risk.

    Lenders move in increasing order of their rate; each takes, among the
    still-unmatched borrowers that find it acceptable, the one it ranks
    best.
    """
    if not market.strict:
        raise ValueError("strict_stable_matching needs strict lender preferences")
    nl, nb = market.shape
    if market.base_rates is None:
        raise ValueError("market carries no base lender rates")
    ids = np.asarray(market.lenders)
    order = np.lexsort((ids, market.base_rates))
    for b in range(nb):
        acc = [a for a in order if market.acceptable[a, b]]
        if [int(market.borrower_rank[b, a]) for a in acc] != list(range(len(acc))):
            raise ValueError("borrower preferences do not follow lender base rates; "
                             "use tax.unique_equilibrium_under_tax for taxed markets")
    free = np.ones(nb, dtype=bool)
    pairs = []
    for a in order:
        cands = [b for b in range(nb) if free[b] and market.acceptable[a, b]]
        if not cands:
            continue
        b = min(cands, key=lambda c: market.lender_rank[a, c])
        free[b] = False
        pairs.append((market.lenders[a], market.borrowers[b]))
    return Matching(pairs, market.lenders, market.borrowers)


class MultiRoundResult(NamedTuple):
    edges: list            # (lender, borrower, amount, round)
    rounds: int
    supply: dict           # residual supply per lender
    demand: dict           # residual demand per borrower
    active: list           # (lenders, borrowers) entering each round


def draw_sized_shocks(n: int, y: float, rng, scale: float = 1.0, solvent=None) -> np.ndarray:
    """Signed liquidity shocks with exponentially distributed magnitudes."""
    eps = draw_shocks(n, y, rng, solvent).shocks
    return eps * rng.exponential(scale, size=n)


def multi_round_matching(shocks, rate_matrix, reservation, rng, *,
                         max_rounds: int | None = None, atol: float = 1e-12) -> MultiRoundResult:
    """Repeat single-round matching on residual supplies and demands.

    ``rate_matrix[i, j]`` is lender i's quote to borrower j and
    ``reservation[j]`` borrower j's reservation rate, both bank-indexed.
    Each matched pair moves ``min(supply, demand)``; agents are myopic
    across rounds.
    """
    shocks = np.asarray(shocks, dtype=np.float64)
    rate_matrix = np.asarray(rate_matrix, dtype=np.float64)
    reservation = np.asarray(reservation, dtype=np.float64)
    supply = {int(i): float(shocks[i]) for i in np.flatnonzero(shocks > atol)}
    demand = {int(j): float(-shocks[j]) for j in np.flatnonzero(shocks < -atol)}
    edges, active = [], []
    k = 0
    while supply and demand and (max_rounds is None or k < max_rounds):
        L, B = tuple(sorted(supply)), tuple(sorted(demand))
        active.append((L, B))
        market = LiquidityMarket(L, B, rate_matrix[np.ix_(L, B)], reservation[list(B)])
        mu = select_equilibrium(market, rng)
        if mu.volume == 0:
            break
        k += 1
        for i, j in mu.pairs_sorted():
            x = min(supply[i], demand[j])
            edges.append((i, j, x, k))
            supply[i] -= x
            demand[j] -= x
            if supply[i] <= atol:
                del supply[i]
            if demand[j] <= atol:
                del demand[j]
    return MultiRoundResult(edges, k, supply, demand, active)
