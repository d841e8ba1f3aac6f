import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from sl2expand.cayley import BudgetExceeded, QuotientGroup, random_symmetric_genset
from sl2expand.polyring import PolyFp
from sl2expand.presets import FREE_PAIR_F3_DEPTH, preset_genset
from sl2expand.quotient import ResidueRing
from sl2expand.sl2core import GenSet, has_zero_entry, parse_matrix, reduce_mod, trace_equals
from sl2expand.walker import (
    batch_letters,
    certify_pair,
    escape_probability,
    exact_measure,
    exact_measure_series,
    exact_path_counts_series,
    free_pair_search,
    kesten_ratio,
    kesten_return_profile,
    kesten_roots,
    product_escape,
    quotient_walk_mass,
    sample_walk,
    shortest_relation,
    tree_spectral_radius,
    wilson_interval,
)

P = PolyFp.parse
FREE3 = preset_genset("free3")
F9 = QuotientGroup(ResidueRing(P("1,0,1@3")))


# exact measures

def test_exact_measure_small_lengths():
    mu0 = exact_measure(F9, FREE3, 0)
    assert mu0.weights[0] == 1.0 and mu0.total == 1.0
    mu1 = exact_measure(F9, FREE3, 1)
    idx = [F9.index_of(g) for g in FREE3.images(F9.ring)]
    assert sorted(np.nonzero(mu1.weights)[0].tolist()) == sorted(set(idx))
    assert mu1.mass(np.isin(np.arange(F9.order), idx)) == pytest.approx(1.0)


def test_exact_measure_preserves_mass_and_counts_agree():
    series = exact_measure_series(F9, FREE3, 12)
    counts = exact_path_counts_series(F9, FREE3, 12)
    for l, (mu, c) in enumerate(zip(series, counts)):
        assert mu.sum() == pytest.approx(1.0)
        assert c.sum() == len(FREE3) ** l
        assert np.allclose(mu, c / len(FREE3) ** l)


def test_path_counts_switch_to_big_integers():
    G = QuotientGroup(ResidueRing(P("0,1@3")))
    counts = exact_path_counts_series(G, FREE3, 40)
    assert sum(int(x) for x in counts[40]) == 4**40


def test_exact_measure_converges_to_uniform():
    mu = exact_measure(F9, FREE3, 80)
    assert np.abs(mu.weights - 1 / F9.order).max() < 1e-4


# sampling

def test_sample_walk_deterministic():
    a, b = sample_walk(FREE3, 30, seed=5), sample_walk(FREE3, 30, seed=5)
    assert a.word == b.word and a.endpoint == b.endpoint
    assert a.max_entry_degree <= 30 * FREE3.degree_bound
    assert sample_walk(FREE3, 30, seed=6).word != a.word


def test_letters_uniform():
    w = batch_letters(len(FREE3), 50, seed=1, batch=0, size=2000).ravel()
    freq = Counter(w.tolist())
    for s in range(len(FREE3)):
        assert abs(freq[s] / len(w) - 0.25) < 0.01
    assert np.array_equal(w, batch_letters(len(FREE3), 50, seed=1, batch=0, size=2000).ravel())


def test_sample_walk_rejects_negative():
    with pytest.raises(ValueError):
        sample_walk(FREE3, -1, 0)


def test_sampled_quotient_mass_close_to_exact():
    ls = [2, 4, 6, 8]
    mass = quotient_walk_mass(FREE3, [P("1,0,1@3")], "trace", ls, trials=40000, seed=0)
    mask = F9.predicate_mask("trace")
    series = exact_measure_series(F9, FREE3, 8)
    for l in ls:
        assert abs(mass[l] / 40000 - series[l][mask].sum()) < 0.015


def test_wilson_interval():
    lo, hi = wilson_interval(0, 100)
    assert lo == 0.0 and 0 < hi < 0.05
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi
    assert wilson_interval(0, 0) == (0.0, 1.0)


# escape probabilities

def test_escape_all_is_one():
    rows = escape_probability(FREE3, "all", [1, 5], P("1,0,1@3"), trials=500, seed=0)
    assert all(r.direct == 1.0 and r.bound == 1.0 for r in rows)


def test_escape_direct_matches_single_walk_replay():
    rows = escape_probability(FREE3, "zero-entry", [3], None, trials=300, seed=2, batch=128)
    assert 0 <= rows[0].direct <= 1
    assert rows[0].consistent


@pytest.mark.parametrize("pred", ["zero-entry", "trace", "torsion"])
def test_escape_bound_dominates_direct(pred):
    rows = escape_probability(FREE3, pred, [2, 6, 10], P("1,0,1@3"), trials=4000, seed=3)
    for r in rows:
        assert r.bound_exact
        assert r.consistent
        assert r.direct <= r.bound + 3 * (r.direct_hi - r.direct_lo)


def test_escape_sampled_bound_monotone_per_sample():
    # exact_budget=0 forces sampling, which records per-sample containment
    rows = escape_probability(FREE3, "trace", [4, 8], P("1,1,0,1@3"), trials=3000, seed=4, exact_budget=0)
    assert all(r.consistent and not r.bound_exact for r in rows)


def test_escape_budgets():
    with pytest.raises(BudgetExceeded):
        escape_probability(FREE3, "trace", [2000], None, trials=10, seed=0)
    with pytest.raises(BudgetExceeded):
        escape_probability(FREE3, "trace", [2], None, trials=10**8, seed=0)
    with pytest.raises(ValueError):
        escape_probability(FREE3, "bogus", [2], None, trials=10, seed=0)


def test_upstairs_predicates_match_exact_on_replay():
    # a single-walk replay under the same stream agrees with direct Mat2 tests
    for seed in range(20):
        w = sample_walk(FREE3, 7, seed)
        g = w.endpoint
        img = reduce_mod(g, ResidueRing(P("1,0,1@3")))
        if has_zero_entry(g):
            assert has_zero_entry(img)
        if trace_equals(g, 2):
            assert trace_equals(img, 2)


# product escape

def test_product_escape_zero_rejected():
    with pytest.raises(ValueError):
        product_escape(FREE3, "zero", 1, 5, 100)


def test_product_escape_arity_checks():
    with pytest.raises(ValueError):
        product_escape(FREE3, "trace-diff", 1, 5, 100)
    with pytest.raises(ValueError):
        product_escape(FREE3, "zero-entry", 2, 5, 100)


def test_product_escape_identically_zero_warns():
    with pytest.warns(RuntimeWarning):
        res = product_escape(FREE3, "ad-resultant", 1, 6, 200)
    assert res.estimate == 1.0 and res.warning


def test_product_escape_decays():
    short = product_escape(FREE3, "trace-diff", 2, 2, 4000, seed=0)
    long = product_escape(FREE3, "trace-diff", 2, 12, 4000, seed=0)
    assert long.estimate < short.estimate


# free pairs

def test_equal_pair_is_refuted():
    x = parse_matrix("[[0;1];[2;0,1]]@3")
    assert shortest_relation(x, x, 6) == 2
    cert = certify_pair(x, x, 6)
    assert cert.status == "refuted" and not cert.certified


def test_unipotent_pair_refuted_quickly():
    x, y = preset_genset("unipotent3")[0], preset_genset("unipotent3")[2]
    rel = shortest_relation(x, y, 10)
    assert rel is not None and rel <= 3


def test_free3_certified():
    S = FREE3
    cert = certify_pair(S[0], S[2], 12)
    assert cert.certified and cert.certified_depth == 12 and cert.entry_bound == 1


@pytest.mark.slow
def test_free3_certified_to_recorded_depth():
    assert shortest_relation(FREE3[0], FREE3[2], FREE_PAIR_F3_DEPTH) is None


def test_free_pair_search_on_unipotent_ball():
    res = free_pair_search(preset_genset("unipotent3"), 2, 14)
    assert res.certified and res.certified_depth == 14
    assert shortest_relation(res.x, res.y, 14) is None
    assert len(res.x_word) <= 2 and len(res.y_word) <= 2


def test_free_pair_search_arguments():
    with pytest.raises(ValueError):
        free_pair_search(FREE3, 0, 5)


def test_relation_found_in_finite_group():
    # two generators of SL2(3) over F_3 constants: finite group, relation exists
    x = parse_matrix("[[1;1];[0;1]]@3")
    y = parse_matrix("[[1;0];[1;1]]@3")
    assert shortest_relation(x, y, 6) == 3


# Kesten

def test_kesten_first_terms():
    prof = kesten_return_profile(2, 3)
    assert prof[0] == Fraction(1, 4)
    # length-4 returns on the 4-regular tree: out-out-back-back (4*3) plus out-back twice (4*4)
    assert prof[1] == Fraction(28, 256)


def test_kesten_strictly_decreasing_and_converging():
    prof = kesten_return_profile(2, 200)
    assert all(a > b for a, b in zip(prof, prof[1:]))
    roots = kesten_roots(prof)
    ratios = kesten_ratio(prof)
    target = tree_spectral_radius(4)
    assert target == pytest.approx(math.sqrt(3) / 2)
    assert roots[-1] < target and abs(ratios[-1] - target) < 0.01
    assert all(a <= b + 1e-15 for a, b in zip(roots[5:], roots[6:]))


def test_kesten_budget():
    with pytest.raises(BudgetExceeded):
        kesten_return_profile(2, 10, budget=5)
    with pytest.raises(ValueError):
        kesten_return_profile(1, 3)


def test_genset_identity_rejected():
    with pytest.raises(ValueError):
        GenSet([parse_matrix("[[1;0];[0;1]]@3")])


def test_random_genset_generating():
    G = QuotientGroup(ResidueRing(P("0,1@7")))
    S = random_symmetric_genset(G, 2, seed=9)
    assert len(S) == 4 and S.is_upstairs
