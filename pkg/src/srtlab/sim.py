"""Multi-period simulation of interbank network formation under a tax policy.

All randomness derives from the config seed through independent substreams
``default_rng([seed, stream, t])``, so the three policies see the same
banks, the same shocks and the same borrower orderings each period.
No exogenous default is ever triggered: ESL is a per-period diagnostic.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import cascade, contracts, netstats
from .config import ScenarioConfig
from .contracts import BeliefMode
from .domain import BankState, LoanBook, _fmt, advance_period, build_net_exposure, equities
from .matching import build_market, draw_shocks, select_equilibrium
from .tax import apply_tax, optimize_srt, tobin, unique_equilibrium_under_tax

INITIAL_STREAM, SHOCK_STREAM, SELECTION_STREAM = 0, 1, 2

RUN_COLUMNS = ("t", "policy", "esl", "cum_volume", "avg_clustering", "spectral_radius")
DIST_COLUMNS = ("metric", "bin", "count")


def substream(seed: int, stream: int, t: int = 0) -> np.random.Generator:
    return np.random.default_rng([int(seed), stream, int(t)])


@dataclass(frozen=True)
class TimeSeriesRecord:
    t: int
    policy: str
    esl: float
    cum_volume: int
    avg_clustering: float
    spectral_radius: float
    volume: int = 0

    def row(self) -> list[str]:
        return [str(self.t), self.policy, _fmt(self.esl), str(self.cum_volume),
                _fmt(self.avg_clustering), _fmt(self.spectral_radius)]


@dataclass
class RunResult:
    policy: str
    records: list[TimeSeriesRecord]
    in_degree: np.ndarray
    out_degree: np.ndarray
    si_counts: np.ndarray
    si_edges: np.ndarray
    esl_conditional_factor: float | None   # 1 / P(some bank fails within a period)
    banks: list[BankState] = field(repr=False, default_factory=list)

    @property
    def esl(self) -> np.ndarray:
        return np.array([r.esl for r in self.records])

    @property
    def cum_volume(self) -> np.ndarray:
        return np.array([r.cum_volume for r in self.records], dtype=np.int64)

    @property
    def mean_si(self) -> float:
        mids = 0.5 * (self.si_edges[:-1] + self.si_edges[1:])
        total = self.si_counts.sum()
        return float(mids @ self.si_counts / total) if total else 0.0


def initial_banks(cfg: ScenarioConfig) -> list[BankState]:
    rng = substream(cfg.seed, INITIAL_STREAM)
    Y = cfg.risky_asset.sample(rng, cfg.n)
    r = cfg.base_rate.sample(rng, cfg.n)
    g = cfg.hazard_rate.sample(rng, cfg.n)
    return [BankState(i, float(Y[i]), cfg.external_liability, float(g[i]), float(r[i]),
                      cfg.reservation_rate) for i in range(cfg.n)]


def _default_probs(cfg, A_prev, E, rho_S):
    if cfg.belief is BeliefMode.NAIVE:
        return rho_S
    q = contracts.endogenous_default_probs(A_prev, E, rho_S) \
        if cfg.belief is BeliefMode.FULL else 0.0
    rho = contracts.total_default_prob(rho_S, q, cfg.belief, cfg.common_prior_q)
    # keep premia finite if contagion beliefs approach certainty
    return np.minimum(rho, 1.0 - 1e-12)


def run_scenario(cfg: ScenarioConfig, policy: str | None = None) -> RunResult:
    """Simulate ``cfg.steps`` periods under one policy."""
    policy = policy or cfg.policies[0]
    if policy not in ("notax", "tobin", "srt"):
        raise ValueError(f"unknown policy {policy!r}")
    banks = initial_banks(cfg)
    n = cfg.n
    E = np.maximum(equities(banks), 0.0)
    gammas = np.array([b.hazard_rate for b in banks])
    rho_S = contracts.exogenous_default_probs(gammas, cfg.maturity)
    rho_1 = contracts.exogenous_default_probs(gammas, 1)
    r_base = np.array([b.deposit_rate for b in banks])
    reservation = np.array([b.reservation_rate for b in banks])
    g_agg = float(gammas.sum())
    factor = 1.0 / -math.expm1(-g_agg) if g_agg > 0 else None

    book = LoanBook(n)
    si_edges = np.linspace(0.0, max(float(E.sum()), 1e-12), cfg.stats_bins + 1)
    in_hist = np.zeros(n, dtype=np.int64)
    out_hist = np.zeros(n, dtype=np.int64)
    si_counts = np.zeros(cfg.stats_bins, dtype=np.int64)
    records = []
    cum = 0

    for t in range(cfg.steps):
        solvent = np.array([not b.bankrupt for b in banks])
        draw = draw_shocks(n, cfg.shock_prob, substream(cfg.seed, SHOCK_STREAM, t), solvent)
        A_prev = build_net_exposure(book.live(t))
        rho = _default_probs(cfg, A_prev, E, rho_S)
        market = build_market(draw.lenders, draw.borrowers, r_base, rho, reservation,
                              cfg.maturity, period=t)
        select_rng = substream(cfg.seed, SELECTION_STREAM, t)
        if policy == "notax":
            mu = select_equilibrium(market, select_rng)
        elif policy == "tobin":
            mu = select_equilibrium(apply_tax(market, tobin(market, cfg.kappa)), select_rng)
        else:
            nu = select_equilibrium(market, select_rng).volume
            res = optimize_srt(market, A_prev, E, rho_1, nu, amount=cfg.loan_size,
                               epsilon=cfg.epsilon, zeta=cfg.zeta)
            mu = unique_equilibrium_under_tax(apply_tax(market, res.tax))
            if mu != res.matching:
                raise RuntimeError(f"period {t}: tax failed to pin {res.matching}, got {mu}")

        book = advance_period(book, mu, maturity=cfg.maturity, amount=cfg.loan_size,
                              period=t, banks=banks)
        A = build_net_exposure(book)
        cum += mu.volume
        records.append(TimeSeriesRecord(
            t, policy, cascade.expected_systemic_loss(A, E, rho_1), cum,
            netstats.average_clustering(A), netstats.spectral_radius(A), mu.volume))

        ind, outd = netstats.degree_distributions(A)
        in_hist += ind
        out_hist += outd
        si_counts += netstats.systemic_impact_distribution(A, E, si_edges)

    return RunResult(policy, records, in_hist, out_hist, si_counts, si_edges, factor, banks)


def write_run_csv(result: RunResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RUN_COLUMNS)
        for rec in result.records:
            w.writerow(rec.row())


def write_distributions_csv(result: RunResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DIST_COLUMNS)
        for k, c in enumerate(result.in_degree):
            w.writerow(("in_degree", k, int(c)))
        for k, c in enumerate(result.out_degree):
            w.writerow(("out_degree", k, int(c)))
        for lo, c in zip(result.si_edges[:-1], result.si_counts):
            w.writerow(("systemic_impact", _fmt(lo), int(c)))


def write_outputs(result: RunResult, out_dir) -> list[str]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    run_path = out_dir / f"{result.policy}.csv"
    dist_path = out_dir / f"{result.policy}_distributions.csv"
    write_run_csv(result, run_path)
    write_distributions_csv(result, dist_path)
    return [run_path.name, dist_path.name]
