import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sl2expand.polyring import PolyFp, irreducibles, smallest_irreducible
from sl2expand.quotient import (
    NotInvertibleError,
    ResidueRing,
    crt_combine,
    crt_split,
    finite_field,
    frobenius,
    inverse,
    is_square_unit,
    prime_field,
    reduce,
)

P = PolyFp.parse

# every field with q <= 121 and odd p
FIELDS = [smallest_irreducible(p, n) for p, n in [(3, 1), (3, 2), (3, 3), (3, 4), (5, 1), (5, 2), (5, 3), (7, 1),
                                                    (7, 2), (11, 1), (11, 2), (13, 1)]
          if p**n <= 121] + [smallest_irreducible(p, 1) for p in (17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67,
                                                                    71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113)]


def test_ring_metadata():
    R = ResidueRing.parse("p=3;f=1,0,1")
    assert R.is_field and R.cardinality == 9 and R.descriptor == "p=3;f=1,0,1"
    S = ResidueRing(P("0,1@3") * P("1,0,1@3"))
    assert not S.is_field and S.is_squarefree() and S.cardinality == 27
    assert not ResidueRing(P("0,0,1@3")).is_squarefree()
    assert ResidueRing(P("1,0,1@3")) == R


def test_reduce_examples():
    R = ResidueRing(P("1,0,1@3"))
    assert reduce(P("1,0,1@3"), R).is_zero()
    assert reduce(P("0,0,1@3"), R) == R(2)


def test_reduce_modulus_mismatch():
    with pytest.raises(ValueError):
        reduce(P("1,1@5"), ResidueRing(P("1,0,1@3")))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 2), max_size=9), st.lists(st.integers(0, 2), max_size=9))
def test_reduce_is_homomorphism(a, b):
    R = ResidueRing(P("1,2,0,1@3"))
    A, B = PolyFp(a, 3), PolyFp(b, 3)
    assert reduce(A * B, R) == reduce(A, R) * reduce(B, R)
    assert reduce(A + B, R) == reduce(A, R) + reduce(B, R)


def test_inverse_examples():
    R = ResidueRing(P("1,0,1@3"))
    assert inverse(R.one()) == R.one()
    t = R(P("0,1@3"))
    assert inverse(t) == R(P("0,2@3"))
    assert t * inverse(t) == R.one()


def test_inverse_of_zero_divisor():
    R = ResidueRing(P("0,0,1@3"))
    with pytest.raises(NotInvertibleError) as e:
        inverse(R(P("0,1@3")))
    assert e.value.gcd == P("0,1@3")


def test_inverse_all_units_small_ring():
    R = ResidueRing(P("0,1@3") * P("1,0,1@3"))
    units = 0
    for x in R.elements():
        try:
            y = inverse(x)
        except NotInvertibleError:
            continue
        units += 1
        assert x * y == R.one()
    assert units == 2 * 8


def test_square_examples():
    assert is_square_unit(ResidueRing(P("0,1@7")).one())
    F7 = ResidueRing(P("0,1@7"))
    assert is_square_unit(F7(2))
    assert not is_square_unit(F7(3))
    assert is_square_unit(F7.zero())


def test_square_needs_field():
    with pytest.raises(ValueError):
        is_square_unit(ResidueRing(P("0,0,1@3")).one())


@pytest.mark.parametrize("f", FIELDS, ids=lambda f: f.to_text())
def test_euler_matches_squaring_table(f):
    F = finite_field(f)
    codes = F.all_codes()
    table = np.zeros(F.q, dtype=bool)
    table[F.mul(codes, codes)] = True
    assert np.array_equal(F.is_square(codes), table)
    assert int(table[1:].sum()) == (F.q - 1) // 2
    if F.q <= 27:
        R = F.ring
        assert [is_square_unit(R.from_code(c)) for c in range(F.q)] == table.tolist()


@pytest.mark.parametrize("f", FIELDS[:8], ids=lambda f: f.to_text())
def test_field_tables_match_residue_arithmetic(f):
    F = finite_field(f)
    R = F.ring
    for a, b in itertools.product(range(F.q), repeat=2):
        x, y = R.from_code(a), R.from_code(b)
        assert F.mul(a, b) == (x * y).code
        assert F.add(a, b) == (x + y).code
    for a in range(1, F.q):
        assert F.mul(a, F.inv(a)) == 1


def test_sqrt_round_trip():
    F = finite_field(smallest_irreducible(5, 3))
    sq = F.mul(F.all_codes(), F.all_codes())
    r = F.sqrt(sq)
    assert np.array_equal(F.mul(r, r), sq)


# CRT

def _crt_ring():
    return ResidueRing(P("0,1@3") * P("1,0,1@3"))


def test_crt_zero_and_one():
    R = _crt_ring()
    assert all(c.is_zero() for c in crt_split(R.zero()))
    comps = crt_split(R.one())
    assert crt_combine([c.ring.zero() for c in comps], R).is_zero()
    assert crt_combine([c.ring.one() for c in comps], R) == R.one()


def test_crt_round_trip_and_bijection():
    R = _crt_ring()
    seen = set()
    for x in R.elements():
        comps = crt_split(x)
        assert crt_combine(comps, R) == x
        for c, m in zip(comps, [P("0,1@3"), P("1,0,1@3")]):
            assert c == reduce(x.rep, ResidueRing(m))
        seen.add(tuple(c.code for c in comps))
    assert len(seen) == 27


def test_crt_ring_isomorphism_exhaustive():
    R = _crt_ring()
    els = list(R.elements())
    for x, y in itertools.product(els, repeat=2):
        sx, sy = crt_split(x), crt_split(y)
        assert [a * b for a, b in zip(sx, sy)] == crt_split(x * y)
        assert [a + b for a, b in zip(sx, sy)] == crt_split(x + y)


@settings(max_examples=300, deadline=None)
@given(st.lists(st.integers(0, 4), max_size=7), st.lists(st.integers(0, 4), max_size=7))
def test_crt_isomorphism_random_larger(a, b):
    f = P("1,1@5") * P("2,0,1@5") * P("1,0,1,1@5")
    R = ResidueRing(f)
    x, y = reduce(PolyFp(a, 5), R), reduce(PolyFp(b, 5), R)
    assert [u * v for u, v in zip(crt_split(x), crt_split(y))] == crt_split(x * y)
    assert crt_combine(crt_split(x), R) == x


def test_crt_rejects_incompatible():
    R1 = ResidueRing(P("0,1@3"))
    with pytest.raises(ValueError):
        crt_combine([R1.one(), R1.one()])


def test_crt_split_rejects_non_squarefree():
    R = ResidueRing(P("0,0,1@3"))
    with pytest.raises(ValueError):
        crt_split(R.one())


# Frobenius and subfields

def test_frobenius_fixes_prime_field():
    R = ResidueRing(smallest_irreducible(3, 3))
    for c in range(3):
        assert frobenius(R(c)) == R(c)


def test_frobenius_order_on_f9():
    R = ResidueRing(P("1,0,1@3"))
    els = list(R.elements())
    assert any(frobenius(x) != x for x in els)
    assert all(frobenius(frobenius(x)) == x for x in els)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 80), st.integers(0, 80))
def test_frobenius_additive(a, b):
    R = ResidueRing(smallest_irreducible(3, 4))
    x, y = R.from_code(a), R.from_code(b)
    assert frobenius(x + y) == frobenius(x) + frobenius(y)


@pytest.mark.parametrize("p,n,m", [(3, 2, 1), (3, 4, 2), (5, 2, 1), (3, 6, 3), (3, 6, 2)])
def test_subfield_embedding_is_homomorphism(p, n, m):
    F = finite_field(smallest_irreducible(p, n))
    h, table = F.subfield_embedding(m)
    E = finite_field(h)
    a = E.all_codes()
    for b in range(min(E.q, 30)):
        assert np.array_equal(table[E.mul(a, b)], F.mul(table[a], table[b]))
        assert np.array_equal(table[E.add(a, b)], F.add(table[a], table[b]))
    assert sorted(table.tolist()) == sorted(F.subfield_codes(m).tolist())


def test_prime_field():
    F = prime_field(7)
    assert F.q == 7 and F.mul(3, 5) == 1
