import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from srtlab import cascade, fixtures
from srtlab.matching import (LiquidityMarket, Matching, enumerate_equilibria, feasible_matchings,
                             stable_matchings)
from srtlab.tax import (TaxMatrix, apply_tax, auto_zeta, build_srt, is_feasible, no_tax, optimize_srt,
                        tobin, tobin_equilibria, unique_equilibrium_under_tax)

import oracles

seeds = st.integers(0, 2**32 - 1)


def test_tax_matrix_validation_and_lookup():
    t = TaxMatrix((0, 1), (2,), [[0.0], [0.5]])
    assert t[1, 2] == 0.5
    with pytest.raises(ValueError):
        TaxMatrix((0,), (1,), [[-0.1]])
    with pytest.raises(ValueError):
        TaxMatrix((0,), (1,), [[np.inf]])


def test_zero_uniform_tax_changes_nothing():
    m = fixtures.nine_bank_market()
    assert set(tobin_equilibria(m, 0.0)) == set(enumerate_equilibria(m))
    np.testing.assert_array_equal(apply_tax(m, no_tax(m)).rates, m.rates)
    with pytest.raises(ValueError):
        tobin(m, -0.01)


def test_uniform_tax_shrinks_second_equilibrium():
    m = fixtures.nine_bank_market()
    eq = set(tobin_equilibria(m, 0.03))
    # 1-based: only 3 -> 4 survives from (b); (a) is unchanged
    assert eq == {fixtures.configuration("a"), Matching([(2, 3)], m.lenders, m.borrowers)}


@given(seeds, st.sampled_from([0.01, 0.03, 0.05]))
def test_uniform_tax_preserves_order_and_bounds_volume(seed, kappa):
    m = oracles.random_market(np.random.default_rng(seed), 4)
    taxed = apply_tax(m, tobin(m, kappa))
    for j in m.borrowers:
        before = [x for x in m.borrower_prefs(j) if x != j]
        after = [x for x in taxed.borrower_prefs(j) if x != j]
        assert before == after
    eq, eqk = enumerate_equilibria(m), enumerate_equilibria(taxed)
    assert max(mu.volume for mu in eqk) <= max(mu.volume for mu in eq)
    feasible = set(feasible_matchings(m))
    assert set(eq) <= feasible and set(eqk) <= feasible


def test_srt_pins_low_esl_configuration():
    m = fixtures.nine_bank_market()
    target = fixtures.configuration("c")
    E = fixtures.nine_bank_equities()
    d = cascade.delta_esl_table(m.lenders, m.borrowers, fixtures.nine_bank_prior(),
                                E, np.full(9, 0.01), fixtures.EDGE)
    tax = build_srt(m, target, zeta=auto_zeta(m, E), delta_esl=d)
    # 1-based: 1 -> 4 and 2 -> 5 untaxed, other pairs into 4 and 5 taxed
    assert tax[0, 3] == 0 and tax[1, 4] == 0
    for i, j in [(0, 4), (1, 3), (2, 3), (2, 4)]:
        assert tax[i, j] > 0
    taxed = apply_tax(m, tax)
    # borrower 6 was priced out already; it stays out
    assert all(taxed.rate(i, 5) >= taxed.reservation[2] for i in m.lenders)
    assert unique_equilibrium_under_tax(taxed, verify=True) == target


def test_srt_on_top_choices_is_free():
    m = fixtures.nine_bank_market()
    # 3 -> 4 is 4's top choice; everyone else unmatched
    target = Matching([(2, 3)], m.lenders, m.borrowers)
    tax = build_srt(m, target)
    assert tax[2, 3] == 0
    assert unique_equilibrium_under_tax(apply_tax(m, tax), verify=True) == target


def test_srt_rejects_infeasible_target():
    m = fixtures.nine_bank_market()
    bad = Matching([(2, 5)], m.lenders, m.borrowers)   # above 6's reservation rate
    assert not is_feasible(bad, m)
    with pytest.raises(ValueError):
        build_srt(m, bad)
    with pytest.raises(ValueError):
        build_srt(m, fixtures.configuration("c"), epsilon=0)


def test_all_self_target_gives_empty_matching():
    m = fixtures.nine_bank_market()
    empty = Matching.empty(m.lenders, m.borrowers)
    taxed = apply_tax(m, build_srt(m, empty))
    assert unique_equilibrium_under_tax(taxed, verify=True) == empty


def test_uniform_tax_cannot_pin_uniqueness():
    m = fixtures.nine_bank_market()
    with pytest.raises(ValueError, match="share top lender"):
        unique_equilibrium_under_tax(apply_tax(m, tobin(m, 0.01)))


def test_verification_catches_non_unique_outcome():
    # two lenders tie-free, borrower-specific tops but a second stable matching exists
    m = LiquidityMarket((0, 1), (2, 3), [[0.01, 0.2], [0.02, 0.01]], [0.05, 0.05])
    assert unique_equilibrium_under_tax(m, verify=True).pairs == {(0, 2), (1, 3)}


@given(seeds)
def test_srt_realizes_every_feasible_matching(seed):
    m = oracles.random_market(np.random.default_rng(seed), 3)
    for target in feasible_matchings(m):
        tax = build_srt(m, target)
        assert all(tax[i, j] == 0 for i, j in target.pairs)
        taxed = apply_tax(m, tax)
        for j in m.borrowers:
            p = target(j)
            if p != j:
                assert all(taxed.rate(p, j) < taxed.rate(k, j) for k in m.lenders if k != p)
        assert stable_matchings(taxed) == [target]


@given(seeds)
def test_srt_realizes_every_feasible_matching_with_strict_lenders(seed):
    m = oracles.random_market(np.random.default_rng(seed), 3, strict=True)
    for target in feasible_matchings(m):
        taxed = apply_tax(m, build_srt(m, target))
        assert unique_equilibrium_under_tax(taxed, verify=True) == target


def test_optimizer_finds_low_esl_configuration():
    m = fixtures.nine_bank_market()
    E = fixtures.nine_bank_equities()
    rho1 = np.full(9, 0.01)
    res = optimize_srt(m, fixtures.nine_bank_prior(), E, rho1, 2, amount=fixtures.EDGE)
    assert res.matching == fixtures.configuration("c")
    assert res.esl == pytest.approx(0.01 * 10 * 50)
    for name in "ab":
        assert res.esl <= cascade.expected_systemic_loss(
            fixtures.configuration_exposure(name), E, rho1)
    assert res.candidates == len(feasible_matchings(m, 2))
    assert res.wall_time >= 0
    taxed = apply_tax(m, res.tax)
    assert unique_equilibrium_under_tax(taxed, verify=True) == res.matching


def test_optimizer_zero_volume_and_empty_constraint_set():
    m = fixtures.nine_bank_market()
    E = fixtures.nine_bank_equities()
    A = fixtures.nine_bank_prior()
    rho1 = np.full(9, 0.01)
    res = optimize_srt(m, A, E, rho1, 0)
    assert res.matching.volume == 0
    assert res.esl == pytest.approx(cascade.expected_systemic_loss(A, E, rho1))
    with pytest.raises(ValueError):
        optimize_srt(m, A, E, rho1, 3)   # borrower 6 accepts nobody


@settings(max_examples=40)
@given(seeds)
def test_optimizer_beats_untaxed_and_uniform_tax_equilibria(seed):
    rng = np.random.default_rng(seed)
    m = oracles.random_market(rng, 3, n_banks=8)
    A = oracles.random_exposure(rng, 8)
    E = rng.uniform(0.5, 3, 8)
    rho1 = rng.uniform(0, 0.01, 8)
    rivals = set(enumerate_equilibria(m))
    for kappa in (0.01, 0.03):
        rivals |= set(tobin_equilibria(m, kappa))
    for nu in {mu.volume for mu in rivals}:
        res = optimize_srt(m, A, E, rho1, nu)
        for mu in rivals:
            if mu.volume == nu:
                rival = oracles.esl(cascade.add_loans(A, mu.pairs), E, rho1)
                assert res.esl <= rival + 1e-12


def test_optimizer_is_deterministic_on_ties():
    # no prior network and zero risk: every candidate has ESL 0
    m = LiquidityMarket((0, 1), (2, 3), [[0.01, 0.01], [0.02, 0.02]], [0.05, 0.05])
    runs = {optimize_srt(m, np.zeros((4, 4)), np.ones(4), np.zeros(4), 2).matching
            for _ in range(3)}
    assert runs == {Matching([(0, 2), (1, 3)], (0, 1), (2, 3))}


def test_tax_schedule_csv(tmp_path):
    m = fixtures.nine_bank_market()
    res = optimize_srt(m, fixtures.nine_bank_prior(), fixtures.nine_bank_equities(),
                       np.full(9, 0.01), 2, amount=fixtures.EDGE)
    path = tmp_path / "tax.csv"
    res.tax.write_csv(path)
    rows = list(csv.DictReader(path.open()))
    assert len(rows) == 9 and set(rows[0]) == {"lender", "borrower", "tau", "delta_esl"}
    assert b"\r" not in path.read_bytes()
    # the untaxed configuration (a) pairs add systemic risk, so they carry ESL mark-ups
    assert any(float(r["delta_esl"]) > 0 for r in rows)
