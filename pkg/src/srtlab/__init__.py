"""Interbank network formation, insolvency cascades and systemic-risk taxation."""

__version__ = "0.1.0"

from .cascade import (expected_systemic_loss, run_cascade, systemic_impact,  # noqa: E402
                      systemic_impacts)
from .domain import BankState, Loan, LoanBook, advance_period, build_net_exposure  # noqa: E402
from .matching import LiquidityMarket, Matching, is_stable  # noqa: E402

__all__ = [
    "BankState", "LiquidityMarket", "Loan", "LoanBook", "Matching", "advance_period",
    "build_net_exposure", "expected_systemic_loss", "is_stable", "run_cascade",
    "systemic_impact", "systemic_impacts",
]
