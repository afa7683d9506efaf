"""Default probabilities, fair risk premia and payoffs of a unit loan."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import kernels


class BeliefMode(str, enum.Enum):
    FULL = "full"
    COMMON_PRIOR = "common_prior"
    NAIVE = "naive"


def exogenous_default_prob(gamma_j, gamma_agg, S):
    """Probability that bank j is the first exogenous failure within ``S``
    periods, given its hazard ``gamma_j`` and the system total ``gamma_agg``."""
    if gamma_agg <= 0:
        raise ValueError("aggregate hazard rate must be positive")
    if S < 1:
        raise ValueError("horizon must be at least one period")
    gamma_j = np.asarray(gamma_j, dtype=np.float64)
    if np.any(gamma_j < 0) or np.any(gamma_j > gamma_agg * (1 + 1e-12)):
        raise ValueError("need 0 <= gamma_j <= gamma_agg")
    out = -math.expm1(-gamma_agg * S) * gamma_j / gamma_agg
    return float(out) if out.ndim == 0 else out


def exogenous_default_probs(gammas, S) -> np.ndarray:
    """Vector form over all banks; zero everywhere when no bank can fail."""
    gammas = np.asarray(gammas, dtype=np.float64)
    total = float(gammas.sum())
    if total == 0.0:
        return np.zeros_like(gammas)
    return exogenous_default_prob(gammas, total, S)


def risk_premium(r_i, rho, S):
    """Fair premium making a lender indifferent to a riskless loan."""
    rho = np.asarray(rho, dtype=np.float64)
    if np.any(rho < 0) or np.any(rho >= 1):
        raise ValueError("default probability must lie in [0, 1)")
    if S < 1:
        raise ValueError("maturity must be at least one period")
    out = (1.0 + np.asarray(r_i, dtype=np.float64)) * np.expm1(-np.log1p(-rho) / S)
    return float(out) if np.ndim(out) == 0 else out


def lender_payoff(r_i, h, rho, S):
    return (1.0 - rho) * ((1.0 + r_i + h) / (1.0 + r_i)) ** S - 1.0


def borrower_payoff(r_j, r_i, h, tau, S):
    return 1.0 - ((1.0 + r_i + h + tau) / (1.0 + r_j)) ** S


def endogenous_default_probs(A_prev, E_prev, rho_bar_S) -> np.ndarray:
    """Contagion default probability of every bank on the prior network:
    ``q[j] = sum_{k != j} 1{j fails when k is seeded} * rho_bar_S[k]``."""
    F = kernels.failure_matrix(A_prev, np.maximum(np.asarray(E_prev, float), 0.0))
    F = F & ~np.eye(F.shape[0], dtype=bool)
    return np.asarray(rho_bar_S, dtype=np.float64) @ F


def endogenous_default_prob(j, A_prev, E_prev, rho_bar_S) -> float:
    return float(endogenous_default_probs(A_prev, E_prev, rho_bar_S)[j])


def total_default_prob(rho_bar, q, mode=BeliefMode.FULL, q_prior: float = 0.0):
    mode = BeliefMode(mode)
    rho_bar = np.asarray(rho_bar, dtype=np.float64)
    if mode is BeliefMode.NAIVE:
        out = rho_bar
    elif mode is BeliefMode.COMMON_PRIOR:
        out = rho_bar + (1.0 - rho_bar) * q_prior
    else:
        out = rho_bar + (1.0 - rho_bar) * np.asarray(q, dtype=np.float64)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class QuoteSet:
    """Quoted rates ``r_ij = r_i + h_ij (+ tau_ij)`` for lenders x borrowers."""

    lenders: tuple[int, ...]
    borrowers: tuple[int, ...]
    base_rates: np.ndarray   # r_i, one per lender
    premia: np.ndarray       # h_ij
    tax: np.ndarray          # tau_ij

    @property
    def rates(self) -> np.ndarray:
        return self.base_rates[:, None] + self.premia + self.tax


def quote(lenders, borrowers, base_rates, rho, S, *, strict: bool = False, tax=None) -> QuoteSet:
    """Build quotes from bank-indexed ``base_rates`` and ``rho`` vectors.

    With ``strict`` the lender charges no premium and ranks borrowers by
    risk instead.
    """
    lenders, borrowers = tuple(lenders), tuple(borrowers)
    base_rates = np.asarray(base_rates, dtype=np.float64)
    rho = np.asarray(rho, dtype=np.float64)
    r = base_rates[list(lenders)] if lenders else np.zeros(0)
    if strict or not borrowers or not lenders:
        h = np.zeros((len(lenders), len(borrowers)))
    else:
        h = risk_premium(r[:, None], rho[list(borrowers)][None, :], S)
    if tax is None:
        tax = np.zeros_like(h)
    tax = np.asarray(tax, dtype=np.float64)
    if np.any(tax < 0):
        raise ValueError("tax mark-ups must be nonnegative")
    return QuoteSet(lenders, borrowers, r, h, tax)
