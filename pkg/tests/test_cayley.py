import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sl2expand.cayley import (
    BudgetExceeded,
    GenSetLike,
    QuotientGroup,
    bipartite_table,
    bruteforce_sl2_count,
    build_subgroup,
    closed_form_counts,
    count_oracles,
    dickson_check,
    escape_profile,
    generated_component,
    generation_check,
    girth,
    is_bipartite,
    metabelian_law_holds,
    mixing_check,
    predicate_density,
    random_symmetric_genset,
    sl2_order,
    spectral_rho,
)
from sl2expand.polyring import PolyFp, smallest_irreducible
from sl2expand.presets import preset_genset
from sl2expand.quotient import ResidueRing
from sl2expand.sl2core import GenSet, mul, parse_matrix

P = PolyFp.parse


def group(f):
    return QuotientGroup(ResidueRing(P(f) if isinstance(f, str) else f))


@pytest.fixture(scope="module")
def sl2_3():
    return group("0,1@3")


@pytest.fixture(scope="module")
def sl2_5():
    return group("0,1@5")


# orders and indexing

@pytest.mark.parametrize("f", ["0,1@3", "0,1@5", "1,0,1@3", "0,1@7"])
def test_order_matches_bruteforce(f):
    G = group(f)
    assert G.order == sl2_order(G.qs[0]) == bruteforce_sl2_count(G.ring)


def test_product_order_crt():
    G = group(P("0,1@3") * P("1,0,1@3"))
    assert G.qs == [3, 9]
    assert G.order == 24 * 720 == 17280
    assert G.name == "SL2(3)xSL2(9)"


def test_product_order_bruteforce_small():
    G = group(P("0,1@3") * P("1,1@3"))
    assert G.order == 24 * 24 == bruteforce_sl2_count(G.ring)


@pytest.mark.parametrize("f", ["0,1@5", "1,0,1@3", P("0,1@3") * P("1,1@3")])
def test_rank_unrank_bijection(f):
    G = group(f)
    idx = np.arange(G.order)
    assert np.array_equal(G.rank(G.unrank(idx)), idx)
    codes = G.unrank(np.int64(0))
    assert codes.tolist() == [[1, 0, 0, 1]] * len(G.fields)


def test_element_index_round_trip(sl2_5):
    for i in range(0, sl2_5.order, 7):
        g = sl2_5.element(i)
        assert g.is_sl2() and sl2_5.index_of(g) == i


def test_non_squarefree_rejected():
    with pytest.raises(ValueError):
        group("0,0,1@3")


def test_tables_follow_convention(sl2_5):
    S = random_symmetric_genset(sl2_5, 2, seed=0)
    right, left = sl2_5.right_table(S), sl2_5.left_table(S)
    for i in (0, 17, 99):
        g = sl2_5.element(i)
        for s, h in enumerate(S.images(sl2_5.ring)):
            assert right[i, s] == sl2_5.index_of(mul(g, h))
            assert left[i, s] == sl2_5.index_of(mul(h, g))


# girth

def brute_girth(G, S, L):
    right = G.right_table(S)
    inv = S.inverse_letter
    k = len(S)
    for n in range(1, L + 1):
        for w in itertools.product(range(k), repeat=n):
            if any(w[i + 1] == inv[w[i]] for i in range(n - 1)):
                continue
            g = 0
            for s in w:
                g = right[g, s]
            if g == 0:
                return n
    return None


@pytest.mark.parametrize("seed", range(6))
def test_girth_matches_brute_force_sl2_3(sl2_3, seed):
    S = random_symmetric_genset(sl2_3, 2, seed=seed, require_generating=False)
    rep = girth(sl2_3, S, max_length=8)
    if rep.degenerate:
        pytest.skip(rep.reason)
    assert rep.value == brute_girth(sl2_3, S, 8)


def test_girth_table_and_implicit_agree(sl2_5):
    S = random_symmetric_genset(sl2_5, 2, seed=3)
    a = girth(sl2_5, S, max_length=20)
    b = girth(sl2_5, S, max_length=20, table_budget=0)
    assert a.value == b.value and a.exact and b.method == "implicit-bfs"


def test_girth_of_involution_letter():
    G = group("1,0,1@3")
    w = parse_matrix("[[0;1];[2;0]]@3")  # order 4, squares to -1
    S = GenSet([w])
    rep = girth(G, S, max_length=10)
    assert rep.value == 4


def test_girth_degenerate_when_generator_trivial(sl2_3):
    S = GenSet([parse_matrix("[[1;0,1];[0;1]]@3")])  # t maps to 0 mod t
    rep = girth(sl2_3, S)
    assert rep.degenerate and rep.value is None


def test_free3_girth_grows_with_degree():
    S = preset_genset("free3")
    values = [girth(QuotientGroup(ResidueRing(smallest_irreducible(3, n))), S, max_length=30).value
              for n in (2, 3, 4)]
    assert values == sorted(values)


# spectra

def test_dense_and_iterative_agree(sl2_5):
    S = random_symmetric_genset(sl2_5, 2, seed=1)
    d = spectral_rho(sl2_5, S, method="dense")
    it = spectral_rho(sl2_5, S, method="iterative", tol=1e-8)
    assert abs(d.rho - it.rho) < 1e-6
    assert abs(d.lambda2 - it.lambda2) < 1e-6
    assert d.residual < 1e-8 and 0 < d.rho < 1


def test_complete_graph_spectrum(sl2_3):
    S = GenSet(sl2_3.element(i) for i in range(1, sl2_3.order))
    assert len(S) == 23
    rep = spectral_rho(sl2_3, S, method="dense")
    assert rep.lambda2 == pytest.approx(-1 / 23)
    assert rep.lambda_min == pytest.approx(-1 / 23)
    assert rep.rho == pytest.approx(1 / 23)


def test_spectrum_of_proper_subgroup_is_flagged(sl2_5):
    S = GenSet([parse_matrix("[[1;1];[0;1]]@5")])
    rep = spectral_rho(sl2_5, S, method="dense")
    assert not rep.generated and rep.component_order == 5


def test_dense_budget(sl2_5):
    S = random_symmetric_genset(sl2_5, 2, seed=1)
    with pytest.raises(BudgetExceeded):
        spectral_rho(sl2_5, S, method="dense", dense_budget=10)


# bipartiteness

def test_bipartite_toys():
    assert bipartite_table(np.array([[1], [0]]))
    assert not bipartite_table(np.array([[1, 2], [2, 0], [0, 1]]))
    assert bipartite_table(np.array([[1, 3], [2, 0], [3, 1], [0, 2]]))


def test_bipartite_matches_lambda_min(sl2_5):
    for seed in range(4):
        S = random_symmetric_genset(sl2_5, 2, seed=seed)
        rep = spectral_rho(sl2_5, S, method="dense")
        assert is_bipartite(sl2_5, S) == (abs(rep.lambda_min + 1) < 1e-9)


# mixing

def test_mixing_within_rho_power(sl2_3):
    S = random_symmetric_genset(sl2_3, 2, seed=2)
    rep = mixing_check(sl2_3, S, l_max=12)
    assert rep.violation <= 1e-9
    assert rep.transitive_hg_inv
    assert rep.deviations[0] == pytest.approx(1 - 1 / 24)


# subgroups

@pytest.mark.parametrize("f", ["0,1@5", "1,0,1@3", "0,1@7"])
def test_subgroup_orders(f):
    G = group(f)
    q = G.qs[0]
    assert build_subgroup(G, "borel").order == q * (q - 1)
    assert build_subgroup(G, "torus").order == q - 1
    assert build_subgroup(G, "nonsplit").order == q + 1
    C = build_subgroup(G, "center")
    assert C.order == 2 and C.index_in_G == G.order // 2


def test_subfield_subgroup():
    G = group(smallest_irreducible(3, 2))
    H = build_subgroup(G, "subfield", m=1)
    assert H.order == 24 and H.index_in_G == 30


def test_borel_is_metabelian_and_group_is_not():
    G = group("0,1@5")
    B = build_subgroup(G, "borel")
    assert metabelian_law_holds(G, B, samples=4000)
    full = build_subgroup(G, "custom", generators=random_symmetric_genset(G, 2, seed=0))
    assert full.order == G.order
    assert not metabelian_law_holds(G, full, samples=4000)


def test_unknown_subgroup():
    with pytest.raises(ValueError):
        build_subgroup(group("0,1@3"), "parabolic")


# census

@pytest.mark.parametrize("f", ["0,1@3", "0,1@5", "0,1@7", "1,0,1@3", "0,1@11", "1,2,0,1@3"])
def test_census_closed_forms_agree(f):
    c = count_oracles(group(f))
    assert c.closed_form_agrees
    assert all(c.basics.values())
    assert sum(c.trace_counts) == c.order


def test_census_examples():
    c = count_oracles(group("0,1@3"))
    assert (c.order, c.squares, c.reducible) == (24, 10, 18)
    cf = closed_form_counts(group("0,1@7").field)
    assert cf["order"] == 336
    assert cf["zero_entry"] == 4 * 7 * 6 - 12


def test_densities():
    F = group("0,1@5").field
    assert predicate_density(F, "all") == 1.0
    assert predicate_density(F, "trace") == pytest.approx(25 / 120)
    with pytest.raises(ValueError):
        predicate_density(F, "nope")


def test_census_budget():
    with pytest.raises(BudgetExceeded):
        count_oracles(group("0,1@5"), budget=100)


# escape profiles

def test_escape_profile_whole_group(sl2_3):
    S = random_symmetric_genset(sl2_3, 2, seed=0)
    H = build_subgroup(sl2_3, "custom", generators=S)
    prof = escape_profile(sl2_3, S, H, 5)
    assert prof.direct == [1.0] * 5 and prof.exact_agreement and prof.index == 1


@pytest.mark.parametrize("kind", ["borel", "torus", "center"])
def test_escape_profile_fold_identity_and_monotone(sl2_5, kind):
    S = random_symmetric_genset(sl2_5, 2, seed=1)
    H = build_subgroup(sl2_5, kind)
    prof = escape_profile(sl2_5, S, H, 6)
    assert prof.exact_agreement
    assert prof.nonincreasing
    assert prof.direct[-1] >= 1 / prof.index - 1e-12
    fr = [Fraction(c, len(S) ** (2 * l)) for l, c in zip(prof.l_values, prof.direct_counts)]
    assert all(a >= b for a, b in zip(fr, fr[1:]))


# generation

@pytest.mark.parametrize("seed", range(5))
def test_generation_closure_agrees_with_component(sl2_5, seed):
    S = random_symmetric_genset(sl2_5, 2, seed=seed, require_generating=False)
    chk = generation_check(sl2_5, S)
    assert chk.method == "closure"
    assert chk.generates == (len(generated_component(sl2_5, S)) == sl2_5.order)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["0,1@13", "1,2,0,1@3", "2,0,1@5", "0,1@17"]), st.integers(0, 10**6))
def test_dickson_has_no_false_positives(f, seed):
    G = group(f)
    S = random_symmetric_genset(G, 2, seed=seed, require_generating=False)
    dick = generation_check(G, S, closure_budget=0)
    if dick.generates:
        assert len(generated_component(G, S)) == G.order


def test_dickson_rejects_borel_pair():
    G = group("0,1@7")
    F = G.field
    x = G.gen_codes([parse_matrix("[[1;1];[0;1]]@7")])[0, 0]
    y = G.gen_codes([parse_matrix("[[3;0];[0;5]]@7")])[0, 0]
    chk = dickson_check(F, x, y)
    assert not chk.generates and any("eigenvector" in r for r in chk.reasons)


def test_free3_modulus_of_degree_three_is_borel():
    G = group("1,2,0,1@3")
    S = preset_genset("free3")
    assert len(generated_component(G, S)) == 702
    assert not generation_check(G, S).generates
    assert not generation_check(G, S, closure_budget=0).generates


def test_goursat_product_generated():
    G = group(P("0,1@5") * P("1,1@5"))
    S = random_symmetric_genset(G, 2, seed=0)
    assert len(generated_component(G, S)) == G.order
    # the diagonal copy of SL2(5) in SL2(5)^2 is proper
    upper, lower = np.array([1, 1, 0, 1]), np.array([1, 0, 1, 1])
    D = GenSetLike([G.element(int(G.rank(np.stack([c, c])))) for c in (upper, lower)])
    assert len(generated_component(G, D)) == 120
