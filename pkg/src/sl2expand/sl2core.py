"""2x2 matrices over F_p[t] and its residue rings, plus the target-set predicates.

Two representations live here.  ``Mat2`` holds exact ring elements (``PolyFp``
or ``ResidueElem``) and is used for upstairs words and small checks.  The
``codes_*`` functions work on numpy arrays of shape ``(..., 4)`` holding
``(a, b, c, d)`` as field codes of one ``FiniteField``; the enumerated groups
and the Monte-Carlo walkers use those.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .polyring import PolyFp, poly_sqrt
from .quotient import FiniteField, ResidueElem, ResidueRing, is_square_unit, reduce


def _ring_tag(x):
    if isinstance(x, PolyFp):
        return ("poly", x.p)
    if isinstance(x, ResidueElem):
        return x.ring
    raise TypeError(f"unsupported matrix entry {x!r}")


@dataclass(frozen=True, eq=False)
class Mat2:
    a: object
    b: object
    c: object
    d: object
    ring: object = field(default=None, compare=False)

    def __post_init__(self):
        tags = {_ring_tag(x) for x in (self.a, self.b, self.c, self.d)}
        if len(tags) != 1:
            raise ValueError(f"entries live in different rings: {tags}")
        object.__setattr__(self, "ring", tags.pop())

    @classmethod
    def sl2(cls, a, b, c, d) -> "Mat2":
        g = cls(a, b, c, d)
        if not g.is_sl2():
            raise ValueError(f"determinant of {g} is {det(g)}, not 1")
        return g

    @classmethod
    def from_ints(cls, rows: Sequence[Sequence], p: int) -> "Mat2":
        def conv(x):
            if isinstance(x, PolyFp):
                return x
            if isinstance(x, (list, tuple)):
                return PolyFp(x, p)
            return PolyFp((int(x),), p)

        (a, b), (c, d) = rows
        return cls(conv(a), conv(b), conv(c), conv(d))

    @classmethod
    def identity(cls, like) -> "Mat2":
        one, zero = _one_zero(like)
        return cls(one, zero, zero, one)

    @property
    def p(self) -> int:
        return self.ring[1] if isinstance(self.ring, tuple) else self.ring.p

    @property
    def entries(self) -> tuple:
        return (self.a, self.b, self.c, self.d)

    def is_sl2(self) -> bool:
        return _is_one(det(self))

    def key(self) -> tuple:
        return tuple(_entry_key(x) for x in self.entries)

    def max_entry_degree(self) -> int:
        degs = [x.degree for x in self.entries if not _is_zero(x)]
        return int(max(degs)) if degs else 0

    def __eq__(self, other):
        return isinstance(other, Mat2) and self.ring == other.ring and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __matmul__(self, other):
        return mul(self, other)

    def to_text(self) -> str:
        def t(x):
            rep = x.rep if isinstance(x, ResidueElem) else x
            return ",".join(str(c) for c in rep.coeffs) or "0"

        return f"[[{t(self.a)};{t(self.b)}];[{t(self.c)};{t(self.d)}]]@{self.p}"

    def __repr__(self):
        return f"Mat2({self.to_text()})"


def _entry_key(x):
    return x.rep.coeffs if isinstance(x, ResidueElem) else x.coeffs


def _is_zero(x) -> bool:
    return x.is_zero()


def _is_one(x) -> bool:
    rep = x.rep if isinstance(x, ResidueElem) else x
    return rep.is_one()


def _one_zero(like):
    if isinstance(like, Mat2):
        like = like.a
    if isinstance(like, ResidueRing):
        return like.one(), like.zero()
    if isinstance(like, ResidueElem):
        return like.ring.one(), like.ring.zero()
    if isinstance(like, PolyFp):
        return PolyFp.one(like.p), PolyFp.zero(like.p)
    if isinstance(like, int):
        return PolyFp.one(like), PolyFp.zero(like)
    raise TypeError(f"cannot build identity for {like!r}")


def identity(like) -> Mat2:
    return Mat2.identity(like)


def mul(g: Mat2, h: Mat2) -> Mat2:
    if g.ring != h.ring:
        raise ValueError(f"ring mismatch: {g.ring} vs {h.ring}")
    return Mat2(g.a * h.a + g.b * h.c, g.a * h.b + g.b * h.d, g.c * h.a + g.d * h.c, g.c * h.b + g.d * h.d)


def det(g: Mat2):
    return g.a * g.d - g.b * g.c


def trace(g: Mat2):
    return g.a + g.d


def inv(g: Mat2) -> Mat2:
    if not g.is_sl2():
        raise ValueError("inv is only defined for determinant-1 matrices")
    return Mat2(g.d, -g.b, -g.c, g.a)


def power(g: Mat2, e: int) -> Mat2:
    if e < 0:
        return power(inv(g), -e)
    out = identity(g)
    base = g
    while e:
        if e & 1:
            out = mul(out, base)
        base = mul(base, base)
        e >>= 1
    return out


def word_product(letters: Iterable[Mat2], like) -> Mat2:
    out = identity(like)
    for s in letters:
        out = mul(out, s)
    return out


def reduce_mod(g: Mat2, f: PolyFp | ResidueRing) -> Mat2:
    R = f if isinstance(f, ResidueRing) else ResidueRing(f)
    if not isinstance(g.ring, tuple):
        raise ValueError("reduce_mod expects a matrix over F_p[t]")
    return Mat2(*(reduce(x, R) for x in g.entries))


def lift(g: Mat2) -> Mat2:
    """Residue matrix -> matrix of its reduced representatives over F_p[t]."""
    if isinstance(g.ring, tuple):
        return g
    return Mat2(*(x.rep for x in g.entries))


def elementary(x, upper: bool) -> Mat2:
    one, zero = _one_zero(x)
    return Mat2(one, x, zero, one) if upper else Mat2(one, zero, x, one)


def elementary_factors(g: Mat2) -> list[Mat2]:
    """Write g in SL2 of a field as a product of elementary matrices.

    With c != 0: g = [[1, (a-1)/c], [0, 1]] [[1, 0], [c, 1]] [[1, (d-1)/c], [0, 1]].
    With c = 0 the lower factor [[1, 0], [1, 1]] is split off first.
    """
    if isinstance(g.ring, tuple) or not g.ring.is_field:
        raise ValueError("elementary factorization needs a field")
    if not g.is_sl2():
        raise ValueError("not in SL2")
    one, _ = _one_zero(g)
    if g.c.is_zero():
        low = elementary(one, upper=False)
        return [elementary(-one, upper=False)] + elementary_factors(mul(low, g))
    ci = one / g.c
    return [elementary((g.a - one) * ci, True), elementary(g.c, False), elementary((g.d - one) * ci, True)]


def lift_sl2(g: Mat2) -> Mat2:
    """A preimage in SL2(F_p[t]) of g in SL2(F_p[t]/(f)), f irreducible."""
    out = None
    for e in elementary_factors(g):
        up = lift(e)
        out = up if out is None else mul(out, up)
    return out


# predicates (exact entries)

def has_zero_entry(g: Mat2) -> bool:
    return any(_is_zero(x) for x in g.entries)


def zero_entry_poly(g: Mat2):
    """F1(g) = abcd; vanishes exactly when g has a zero entry."""
    return g.a * g.b * g.c * g.d


def trace_equals(g: Mat2, alpha) -> bool:
    diff = trace(g) - alpha
    return _is_zero(diff)


def is_torsion_trace(g: Mat2) -> bool:
    """Trace lies in the prime field F_p (a necessary condition for finite order upstairs)."""
    tr = trace(g)
    rep = tr.rep if isinstance(tr, ResidueElem) else tr
    return rep.degree <= 0


def char_poly_reducible(g: Mat2) -> bool:
    """X^2 - tr(g) X + 1 splits over the field: tr^2 - 4 is a square or zero."""
    if isinstance(g.ring, tuple):
        tr = trace(g)
        disc = tr * tr - 4
        return poly_sqrt(disc) is not None
    if not g.ring.is_field:
        raise ValueError("char_poly_reducible needs a field")
    tr = trace(g)
    return is_square_unit(tr * tr - 4)


def is_square_upstairs(g: Mat2) -> bool:
    """g = h^2 in SL2(F_p[t]).

    If g = h^2 then g + I = tr(h) h, so either g = -I or tr(h)^2 = tr(g) + 2 and
    tr(h) divides every entry of g + I.
    """
    p = g.p
    minus_one = PolyFp((p - 1,), p)
    if g.a == minus_one and g.d == minus_one and g.b.is_zero() and g.c.is_zero():
        return True
    s = poly_sqrt(trace(g) + 2)
    if s is None or s.is_zero():
        return False
    return all((x % s).is_zero() for x in (g.a + 1, g.b, g.c, g.d + 1))


def ad_matrix(g: Mat2) -> list[list]:
    """Matrix of X -> g^-1 X g on sl2 in the basis (E, H, F), row convention.

    Row i holds the coordinates of g^-1 B_i g, so Ad(gh) = Ad(g) Ad(h).
    Coordinates of [[x, y], [z, -x]] are (y, x, z).
    """
    a, b, c, d = g.entries
    return [
        [d * d, c * d, -(c * c)],
        [2 * b * d, a * d + b * c, -(2 * a * c)],
        [-(b * b), -(a * b), a * a],
    ]


def det3(m) -> object:
    return (
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    )


def ad_fixed_point_poly(g: Mat2):
    """F(g) = chi_{Ad(g)}(1) = det(I - Ad(g)).

    On SL2 this is identically zero: g - g^-1 is traceless and commutes with g,
    so it is a fixed vector whenever it is nonzero, and g = g^-1 means g = +-I.
    """
    m = ad_matrix(g)
    one, zero = _one_zero(g)
    im = [[(one if i == j else zero) - m[i][j] for j in range(3)] for i in range(3)]
    return det3(im)


def ad_fixed_vector(g: Mat2) -> Mat2:
    """A traceless matrix fixed by conjugation with g (zero only for g = +-I)."""
    return Mat2(g.a - g.d, 2 * g.b, 2 * g.c, g.d - g.a)


def is_square_in(g: Mat2, G) -> bool:
    """Brute-force squareness inside an enumerated quotient group."""
    return G.is_square_element(g)


# matrix literal format

def parse_matrix(text: str, p: int | None = None) -> Mat2:
    """Parse ``"[[a;b];[c;d]]"`` with entries in the ``"c0,c1,...@p"`` format.

    A trailing ``@p`` after the closing bracket applies to every entry.
    """
    s = text.strip().replace(" ", "")
    if "]]@" in s:
        s, _, ptext = s.rpartition("@")
        p = int(ptext)
    if not (s.startswith("[[") and s.endswith("]]")):
        raise ValueError(f"matrix literal {text!r} must look like [[a;b];[c;d]]")
    rows = s[2:-2].split("];[")
    if len(rows) != 2:
        raise ValueError(f"matrix literal {text!r} must have two rows")
    cells = [r.split(";") for r in rows]
    if any(len(r) != 2 for r in cells):
        raise ValueError(f"matrix literal {text!r} must have two entries per row")
    entries = [PolyFp.parse(x, p) if ("@" in x or p is not None) else None for r in cells for x in r]
    if any(e is None for e in entries):
        raise ValueError(f"matrix literal {text!r} carries no prime; append @p")
    return Mat2(*entries)


class GenSet:
    """Symmetric generating set over F_p[t], identity excluded, duplicates dropped.

    Letters are stored as ``[g1, g1^-1, g2, g2^-1, ...]`` (an involution is one letter).
    """

    def __init__(self, gens: Iterable[Mat2]):
        elems: list[Mat2] = []
        seen = set()
        for g in gens:
            if not g.is_sl2():
                raise ValueError(f"{g} is not in SL2")
            if g == identity(g):
                raise ValueError("the identity cannot be a generator")
            for h in (g, inv(g)):
                if h not in seen:
                    seen.add(h)
                    elems.append(h)
        if not elems:
            raise ValueError("empty generating set")
        rings = {g.ring for g in elems}
        if len(rings) != 1:
            raise ValueError("generators over different rings")
        self.elems = tuple(elems)
        self.ring = rings.pop()
        self.p = elems[0].p
        pos = {g: i for i, g in enumerate(elems)}
        self.inverse_letter = np.array([pos[inv(g)] for g in elems], dtype=np.int64)
        self.degree_bound = max(g.max_entry_degree() for g in elems)

    def __len__(self):
        return len(self.elems)

    def __iter__(self):
        return iter(self.elems)

    def __getitem__(self, i):
        return self.elems[i]

    def to_text(self) -> list[str]:
        return [g.to_text() for g in self.elems]

    @property
    def is_upstairs(self) -> bool:
        return isinstance(self.ring, tuple)

    def images(self, R: ResidueRing) -> list[Mat2]:
        return [reduce_mod(g, R) for g in self.elems]

    def coeff_array(self, length: int | None = None) -> np.ndarray:
        """(|S|, 4, D+1) int array of entry coefficients, lowest degree first."""
        if not self.is_upstairs:
            raise ValueError("coefficient arrays are only defined for generators over F_p[t]")
        L = (self.degree_bound + 1) if length is None else length
        out = np.zeros((len(self), 4, L), dtype=np.int64)
        for i, g in enumerate(self.elems):
            for j, x in enumerate(g.entries):
                out[i, j, : len(x.coeffs)] = x.coeffs
        return out


# vectorized code-level SL2(q) arithmetic

def codes_mul(F: FiniteField, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    A = np.asarray(A)
    B = np.asarray(B)
    a, b, c, d = A[..., 0], A[..., 1], A[..., 2], A[..., 3]
    e, f, g, h = B[..., 0], B[..., 1], B[..., 2], B[..., 3]
    out = np.empty(np.broadcast(a, e).shape + (4,), dtype=np.int32)
    out[..., 0] = F.add(F.mul(a, e), F.mul(b, g))
    out[..., 1] = F.add(F.mul(a, f), F.mul(b, h))
    out[..., 2] = F.add(F.mul(c, e), F.mul(d, g))
    out[..., 3] = F.add(F.mul(c, f), F.mul(d, h))
    return out


def codes_inv(F: FiniteField, A: np.ndarray) -> np.ndarray:
    A = np.asarray(A)
    out = np.empty_like(A, dtype=np.int32)
    out[..., 0] = A[..., 3]
    out[..., 1] = F.neg(A[..., 1])
    out[..., 2] = F.neg(A[..., 2])
    out[..., 3] = A[..., 0]
    return out


def codes_det(F: FiniteField, A: np.ndarray) -> np.ndarray:
    return F.sub(F.mul(A[..., 0], A[..., 3]), F.mul(A[..., 1], A[..., 2]))


def codes_trace(F: FiniteField, A: np.ndarray) -> np.ndarray:
    return F.add(A[..., 0], A[..., 3])


def codes_from_mat(F: FiniteField, g: Mat2) -> np.ndarray:
    if isinstance(g.ring, tuple):
        g = reduce_mod(g, F.ring)
    return np.array([F.code(x) for x in g.entries], dtype=np.int32)


def codes_to_mat(F: FiniteField, A) -> Mat2:
    return Mat2(*(F.elem(int(x)) for x in A))


def codes_zero_entry(F: FiniteField, A: np.ndarray) -> np.ndarray:
    return (np.asarray(A) == 0).any(axis=-1)


def codes_trace_equals(F: FiniteField, A: np.ndarray, alpha: int) -> np.ndarray:
    return codes_trace(F, A) == F.const(alpha)


def codes_torsion_trace(F: FiniteField, A: np.ndarray) -> np.ndarray:
    return codes_trace(F, A) < F.p


def codes_is_square(F: FiniteField, A: np.ndarray) -> np.ndarray:
    """g is a square in SL2(q) iff g = -I or tr(g) + 2 is a nonzero square."""
    A = np.asarray(A)
    m1 = F.neg_one
    minus_id = (A[..., 0] == m1) & (A[..., 3] == m1) & (A[..., 1] == 0) & (A[..., 2] == 0)
    s = F.add(codes_trace(F, A), F.const(2))
    return minus_id | ((s != 0) & F.is_square(s))


def codes_reducible(F: FiniteField, A: np.ndarray) -> np.ndarray:
    tr = codes_trace(F, A)
    disc = F.sub(F.mul(tr, tr), F.const(4))
    return F.is_square(disc)


def codes_ad_fixed(F: FiniteField, A: np.ndarray) -> np.ndarray:
    """det(I - Ad(g)) == 0 evaluated entrywise in the field."""
    A = np.asarray(A)
    a, b, c, d = A[..., 0], A[..., 1], A[..., 2], A[..., 3]
    two = F.const(2)
    m = [
        [F.mul(d, d), F.mul(c, d), F.neg(F.mul(c, c))],
        [F.mul(two, F.mul(b, d)), F.add(F.mul(a, d), F.mul(b, c)), F.neg(F.mul(two, F.mul(a, c)))],
        [F.neg(F.mul(b, b)), F.neg(F.mul(a, b)), F.mul(a, a)],
    ]
    im = [[F.sub(1 if i == j else 0, m[i][j]) for j in range(3)] for i in range(3)]

    def m2(x, y, z, w):
        return F.sub(F.mul(x, w), F.mul(y, z))

    dd = F.add(
        F.sub(F.mul(im[0][0], m2(im[1][1], im[1][2], im[2][1], im[2][2])),
              F.mul(im[0][1], m2(im[1][0], im[1][2], im[2][0], im[2][2]))),
        F.mul(im[0][2], m2(im[1][0], im[1][1], im[2][0], im[2][1])),
    )
    return dd == 0
