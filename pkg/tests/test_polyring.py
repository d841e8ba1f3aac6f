import itertools
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sl2expand.polyring import (
    ZERO_DEGREE,
    PolyFp,
    admissible_sequence,
    factor,
    gcd,
    irreducibles,
    is_admissible,
    is_admissible_poly,
    is_irreducible,
    monic_polys,
    poly_divmod,
    poly_sqrt,
    primes_above,
    random_irreducible,
    smallest_irreducible,
    trial_division_irreducible,
    xgcd,
)

P = lambda s: PolyFp.parse(s)  # noqa: E731


def polys(p=3, max_deg=8):
    return st.lists(st.integers(0, p - 1), max_size=max_deg + 1).map(lambda cs: PolyFp(cs, p))


def nonzero_polys(p=3, max_deg=8):
    return polys(p, max_deg).filter(lambda f: not f.is_zero())


# representation

def test_parse_and_text_round_trip():
    f = P("1,0,1@3")
    assert f.coeffs == (1, 0, 1)
    assert f.degree == 2
    assert f.to_text() == "1,0,1@3"
    assert PolyFp.parse("1,0,1", 3) == f


def test_parse_rejects_large_coefficients():
    with pytest.raises(ValueError):
        PolyFp.parse("3,1@3")
    with pytest.raises(ValueError):
        PolyFp.parse("1,2")


def test_zero_degree_sentinel():
    z = PolyFp.zero(3)
    assert z.degree == ZERO_DEGREE
    assert z.degree < 0 and z.degree != -0
    assert z.coeffs == ()


def test_trailing_zeros_stripped():
    assert PolyFp([1, 2, 0, 0], 3).coeffs == (1, 2)
    assert PolyFp([3, 6], 3).is_zero()


# division and gcd

def test_divmod_monomial():
    q, r = poly_divmod(P("1,0,1@3"), P("0,1@3"))
    assert q == P("0,1@3") and r == PolyFp.one(3)


def test_divmod_by_self():
    f = P("2,1,0,2@5")
    assert poly_divmod(f, f) == (PolyFp.one(5), PolyFp.zero(5))


def test_divmod_cubic_by_quadratic():
    a, b = P("1,2,0,1@3"), P("1,0,1@3")
    q, r = poly_divmod(a, b)
    assert q * b + r == a
    assert r.degree < b.degree


def test_divmod_by_zero():
    with pytest.raises(ZeroDivisionError):
        poly_divmod(P("1,1@3"), PolyFp.zero(3))


@settings(max_examples=200, deadline=None)
@given(polys(5, 10), nonzero_polys(5, 6))
def test_divmod_property(a, b):
    q, r = poly_divmod(a, b)
    assert q * b + r == a
    assert r.degree < b.degree


def test_gcd_with_zero_is_monic():
    f = P("2,0,2@3")
    assert gcd(f, PolyFp.zero(3)) == f.monic()


def test_gcd_both_zero():
    with pytest.raises(ValueError):
        gcd(PolyFp.zero(3), PolyFp.zero(3))


def test_gcd_quadratics_against_divisor_search():
    a, b = P("1,0,1@3"), P("2,0,1@3")
    g = gcd(a, b)
    common = [d for k in range(3) for d in monic_polys(3, k) if (a % d).is_zero() and (b % d).is_zero()]
    assert g == max(common, key=lambda d: d.degree)
    assert g.is_one()


@settings(max_examples=100, deadline=None)
@given(nonzero_polys(3, 5), nonzero_polys(3, 5), nonzero_polys(3, 5))
def test_gcd_of_multiples(f, g, h):
    if not gcd(g, h).is_one():
        return
    assert gcd(f * g, f * h) == f.monic()


@settings(max_examples=100, deadline=None)
@given(nonzero_polys(7, 6), nonzero_polys(7, 6))
def test_xgcd_bezout(a, b):
    g, s, t = xgcd(a, b)
    assert s * a + t * b == g
    assert (a % g).is_zero() and (b % g).is_zero()


# ring axioms

@settings(max_examples=1000, deadline=None)
@given(polys(3, 16), polys(3, 16), polys(3, 16))
def test_ring_axioms(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert a * (b + c) == a * b + a * c
    assert a * b == b * a
    assert a - a == PolyFp.zero(3)


# irreducibility

def test_irreducible_examples():
    assert is_irreducible(P("1,0,1@3"))
    assert not is_irreducible(P("2,0,1@3"))
    for p in (3, 5, 7):
        assert is_irreducible(PolyFp.t(p))


def test_irreducible_rejects_constants():
    with pytest.raises(ValueError):
        is_irreducible(PolyFp.one(3))


@pytest.mark.parametrize("p", [3, 5])
def test_rabin_matches_trial_division_deg_le_4(p):
    for n in range(1, 5):
        for f in monic_polys(p, n):
            assert is_irreducible(f) == trial_division_irreducible(f), f


def test_rabin_matches_trial_division_deg_5_6_p3():
    for n in (5, 6):
        for f in monic_polys(3, n):
            assert is_irreducible(f) == trial_division_irreducible(f), f


def test_irreducible_counts_match_necklace_formula():
    def count(p, n):
        def mu(d):
            sign = 1
            for q in range(2, d + 1):
                if d % q == 0:
                    d //= q
                    if d % q == 0:
                        return 0
                    sign = -sign
            return sign

        return sum(mu(d) * p ** (n // d) for d in range(1, n + 1) if n % d == 0) // n

    for p, n in [(3, 2), (3, 3), (3, 4), (5, 3), (7, 2)]:
        assert sum(1 for _ in irreducibles(p, n)) == count(p, n)


# factorization

def test_factor_monomial_square():
    fac = factor(P("0,0,1@3"))
    assert [(g.to_text(), m) for g, m in fac.factors] == [("0,1@3", 2)]


def test_factor_product_sorted():
    f = P("0,1@3") * P("1,0,1@3")
    fac = factor(f)
    assert [(g.to_text(), m) for g, m in fac.factors] == [("0,1@3", 1), ("1,0,1@3", 1)]
    assert fac.is_squarefree()


def test_factor_p_th_power():
    # t^3 + 1 = (t + 1)^3 over F_3
    fac = factor(P("1,0,0,1@3"))
    assert [(g.to_text(), m) for g, m in fac.factors] == [("1,1@3", 3)]


@settings(max_examples=200, deadline=None)
@given(nonzero_polys(3, 8))
def test_factor_reexpands(f):
    fac = factor(f)
    assert fac.expand(3) == f
    for g, m in fac.factors:
        assert g.is_monic() and is_irreducible(g) and m >= 1
    keys = [(g.degree, g.coeffs) for g, _ in fac.factors]
    assert keys == sorted(keys)
    assert fac.is_squarefree() == all(m == 1 for _, m in fac.factors)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 4), st.integers(0, 40), st.integers(1, 3)), min_size=1, max_size=4))
def test_factor_inverts_known_products(spec):
    p = 5
    known = {}
    for n, k, m in spec:
        irr = list(itertools.islice(irreducibles(p, n), 41))
        g = irr[k % len(irr)]
        known[g] = known.get(g, 0) + m
    f = PolyFp.one(p)
    for g, m in known.items():
        f = f * g**m
    fac = factor(f)
    assert dict(fac.factors) == known


def test_poly_sqrt():
    g = P("1,2,0,1@5")
    assert poly_sqrt(g * g) in (g, -g)
    assert poly_sqrt(P("0,1@5")) is None


# admissibility

def test_admissible_examples():
    assert is_admissible(31, 5)
    assert not is_admissible(6, 5)
    assert is_admissible(7 * 11, 7)


def test_admissible_rejects_small_n():
    for n in (0, 1, -3):
        with pytest.raises(ValueError):
            is_admissible(n, 5)


def test_admissible_sequence_examples():
    assert admissible_sequence(5, 3) == [31, 61, 91]
    assert admissible_sequence(3, 2) == [7, 13]


@pytest.mark.parametrize("M", [3, 5, 7])
def test_admissible_sequence_all_admissible(M):
    seq = admissible_sequence(M, 100)
    N = math.prod(q for q in range(2, M + 1) if all(q % d for d in range(2, q)))
    assert seq == [N * i + 1 for i in range(1, 101)]
    assert all(is_admissible(n, M) for n in seq)


def test_admissible_sequence_overflow():
    with pytest.raises(OverflowError):
        admissible_sequence(60, 10**6)


def test_admissible_poly():
    # (t^2+1)(t^3 + 2t + 1) over F_3 has factor degrees 2 and 3
    f = P("1,0,1@3") * P("1,2,0,1@3")
    assert is_admissible_poly(f, 2)
    assert not is_admissible_poly(f, 3)
    assert is_admissible_poly(P("1,2,0,1@3"), 3)


def test_primes_above():
    assert primes_above(5, 4) == [7, 11, 13, 17]


# random irreducibles

def test_random_irreducible_quadratic_is_one_of_three():
    quads = {f for f in monic_polys(3, 2) if trial_division_irreducible(f)}
    assert len(quads) == 3
    for seed in range(20):
        assert random_irreducible(3, 2, seed) in quads


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([3, 5, 7]), st.integers(1, 12), st.integers(0, 2**31))
def test_random_irreducible_properties(p, n, seed):
    f = random_irreducible(p, n, seed)
    assert f.degree == n and f.is_monic() and is_irreducible(f)
    assert random_irreducible(p, n, seed) == f


def test_smallest_irreducible_is_first_in_order():
    assert smallest_irreducible(3, 2) == P("1,0,1@3")
    assert smallest_irreducible(3, 3) == P("1,2,0,1@3")
