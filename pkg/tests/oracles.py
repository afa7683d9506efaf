"""Independent brute-force reference implementations used by the tests.

Nothing here calls into srtlab's numerical code; each oracle is written
from the model definitions in the simplest way possible.
"""

import itertools

import numpy as np

from srtlab.matching import LiquidityMarket, Matching, build_market


def fixed_point_failures(A, E, seeds, rtol=1e-9):
    """Bankrupt set of the cascade as the least fixed point of
    "a bank fails once its losses from failed debtors exhaust its equity"."""
    A = np.asarray(A, dtype=float)
    E = np.asarray(E, dtype=float)
    tol = rtol * max(E.max(initial=0.0), 0.0)
    failed = set(seeds)
    changed = True
    while changed:
        changed = False
        for i in range(len(E)):
            if i in failed:
                continue
            loss = sum(A[i, j] for j in failed if A[i, j] > 0)
            if loss > 0 and E[i] - loss <= tol:
                failed.add(i)
                changed = True
    return failed


def esl(A, E, rho):
    total = 0.0
    for k in range(len(E)):
        down = fixed_point_failures(A, E, {k}) - {k}
        total += rho[k] * sum(E[j] for j in down)
    return total


def random_exposure(rng, n, max_weight=3, density=0.5):
    W = rng.integers(0, max_weight + 1, size=(n, n)) * (rng.random((n, n)) < density)
    U = np.triu(W, 1)
    sign = np.where(rng.random((n, n)) < 0.5, 1, -1)
    U = U * np.triu(sign, 1)
    return (U - U.T).astype(float)


def random_market(rng, max_side=4, *, strict=False, min_side=1, n_banks=None):
    """Random lender/borrower market; bank ids are a random subset of range."""
    nl = int(rng.integers(min_side, max_side + 1))
    nb = int(rng.integers(min_side, max_side + 1))
    n = n_banks or nl + nb
    ids = rng.permutation(n)[: nl + nb]
    lenders, borrowers = tuple(sorted(ids[:nl].tolist())), tuple(sorted(ids[nl:].tolist()))
    base = rng.uniform(0.0, 0.08, n)
    rho = rng.uniform(0.0, 0.05, n)
    reservation = rng.uniform(0.01, 0.1, n)
    S = int(rng.integers(1, 31))
    return build_market(lenders, borrowers, base, rho, reservation, S, strict=strict)


def random_rate_market(rng, max_side=4, *, strict=False):
    """Market with arbitrary (possibly heterogeneous) rates and rankings."""
    nl = int(rng.integers(1, max_side + 1))
    nb = int(rng.integers(1, max_side + 1))
    rates = rng.uniform(0, 0.1, (nl, nb))
    reservation = rng.uniform(0.02, 0.1, nb)
    rank = np.array([rng.permutation(nb) for _ in range(nl)]) if strict else None
    base = rng.uniform(0, 0.08, nl)
    return LiquidityMarket(tuple(range(nl)), tuple(range(nl, nl + nb)), rates, reservation,
                           base, rank)


def all_matchings(lenders, borrowers):
    """Every matching, by choosing a partner (or nobody) for each borrower."""
    lenders, borrowers = list(lenders), list(borrowers)
    out = []
    for choice in itertools.product([None] + lenders, repeat=len(borrowers)):
        used = [c for c in choice if c is not None]
        if len(used) != len(set(used)):
            continue
        pairs = [(c, j) for c, j in zip(choice, borrowers) if c is not None]
        out.append(Matching(pairs, lenders, borrowers))
    return out


def rate(market: LiquidityMarket, i, j):
    return market.rates[market.lenders.index(i), market.borrowers.index(j)]


def borrower_prefers(market, j, x, y):
    """Does borrower j strictly prefer x to y (each a lender or j itself)?
    Acceptable lenders by (rate, id), then staying out, then the rest."""
    res = market.reservation[market.borrowers.index(j)]

    def key(z):
        if z == j:
            return (1, 0.0, 0)
        r = rate(market, z, j)
        return (0 if r < res else 2, r, z)

    return key(x) < key(y)


def equilibrium_characterization(market, mu):
    """Indifferent-lender equilibrium test written out pair by pair: each
    match clears reservation, beats every unmatched lender, and no unmatched
    borrower can reach an unmatched lender it finds acceptable."""
    free_lenders = [i for i in market.lenders if mu(i) == i]
    for j in market.borrowers:
        p = mu(j)
        res = market.reservation[market.borrowers.index(j)]
        if p != j:
            if not rate(market, p, j) < res:
                return False
            for k in free_lenders:
                if borrower_prefers(market, j, k, p):
                    return False
        else:
            if any(rate(market, k, j) < res for k in free_lenders):
                return False
    return True


def stable_by_definition(market, mu):
    """Brute-force stability: no blocking pair (strict lenders), no
    improving permutation among matched borrowers (indifferent lenders),
    no unilateral deviation."""
    B, L = market.borrowers, market.lenders
    if market.strict:
        def lender_prefers(i, x, y):
            order = market.lender_prefs(i) + [i]
            return order.index(x) < order.index(y)
        for i in L:
            for j in B:
                if mu(j) != i and borrower_prefers(market, j, i, mu(j)) \
                        and lender_prefers(i, j, mu(i)):
                    return False
    else:
        matched = [j for j in B if mu(j) != j]
        for size in range(2, len(matched) + 1):
            for group in itertools.combinations(matched, size):
                held = [mu(j) for j in group]
                for perm in itertools.permutations(held):
                    if all(borrower_prefers(market, j, new, old)
                           for j, new, old in zip(group, perm, held)):
                        return False
    for j in B:
        if mu(j) != j and borrower_prefers(market, j, j, mu(j)):
            return False
        for k in L:
            if mu(k) == k and borrower_prefers(market, j, k, mu(j)):
                return False
    return True


def random_graph(rng, n, p=None):
    p = rng.uniform(0.1, 0.9) if p is None else p
    U = np.triu(rng.random((n, n)) < p, 1)
    return (U | U.T).astype(float)


def clustering_by_triples(B):
    n = B.shape[0]
    total = 0.0
    for i in range(n):
        nbrs = [j for j in range(n) if B[i, j]]
        d = len(nbrs)
        if d < 2:
            continue
        links = sum(1 for a, b in itertools.combinations(nbrs, 2) if B[a, b])
        total += links / (d * (d - 1) / 2)
    return total / n if n else 0.0


def spectral_radius_dense(B):
    if B.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvalsh(B))))
