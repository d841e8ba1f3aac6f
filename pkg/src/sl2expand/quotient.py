"""Residue rings F_p[t]/(f), CRT splitting, and table-driven finite fields.

Field elements are also handled as integer *codes*: the residue polynomial
``c0 + c1 t + ... + c_{n-1} t^{n-1}`` has code ``sum c_i p^i``.  Code 0 is zero,
code 1 is one, and codes ``< p`` are the prime-field constants.  ``FiniteField``
does vectorized arithmetic on numpy arrays of codes with exp/log/Zech tables.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .polyring import Factorization, PolyFp, factor, gcd, is_irreducible, powmod, prime_factors, xgcd

TABLE_LIMIT = 2**24


class NotInvertibleError(ArithmeticError):
    def __init__(self, elem, g: PolyFp):
        super().__init__(f"{elem} is not invertible: gcd with modulus is {g}")
        self.gcd = g


class ResidueRing:
    """F_p[t]/(f) for a monic modulus of degree >= 1."""

    def __init__(self, modulus: PolyFp):
        if modulus.degree < 1:
            raise ValueError("modulus must have degree >= 1")
        if not modulus.is_monic():
            raise ValueError(f"modulus {modulus} is not monic")
        self.modulus = modulus
        self.p = modulus.p
        self.n = int(modulus.degree)

    @classmethod
    def parse(cls, text: str) -> "ResidueRing":
        """Parse a descriptor ``"p=3;f=1,0,1"``."""
        fields = {}
        for part in text.replace(" ", "").split(";"):
            if part:
                k, _, v = part.partition("=")
                fields[k] = v
        if "p" not in fields or "f" not in fields:
            raise ValueError(f"ring descriptor {text!r} needs both p= and f=")
        p = int(fields["p"])
        return cls(PolyFp.parse(fields["f"], p))

    @property
    def descriptor(self) -> str:
        return f"p={self.p};f={','.join(str(c) for c in self.modulus.coeffs)}"

    @cached_property
    def factorization(self) -> Factorization:
        return factor(self.modulus)

    @cached_property
    def is_field(self) -> bool:
        fs = self.factorization.factors
        return len(fs) == 1 and fs[0][1] == 1

    def is_squarefree(self) -> bool:
        return self.factorization.is_squarefree()

    @property
    def cardinality(self) -> int:
        return self.p**self.n

    def __eq__(self, other):
        return isinstance(other, ResidueRing) and self.modulus == other.modulus

    def __hash__(self):
        return hash(("ResidueRing", self.modulus))

    def __repr__(self):
        return f"ResidueRing({self.descriptor!r})"

    def __call__(self, x) -> "ResidueElem":
        if isinstance(x, ResidueElem):
            if x.ring != self:
                raise ValueError("element belongs to a different ring")
            return x
        if isinstance(x, PolyFp):
            return reduce(x, self)
        return reduce(PolyFp((int(x),), self.p), self)

    def zero(self) -> "ResidueElem":
        return ResidueElem(self, PolyFp.zero(self.p))

    def one(self) -> "ResidueElem":
        return ResidueElem(self, PolyFp.one(self.p))

    def from_code(self, code: int) -> "ResidueElem":
        cs = []
        for _ in range(self.n):
            code, r = divmod(int(code), self.p)
            cs.append(r)
        return ResidueElem(self, PolyFp(cs, self.p))

    def elements(self):
        for k in range(self.cardinality):
            yield self.from_code(k)

    def field(self) -> "FiniteField":
        if not self.is_field:
            raise ValueError(f"{self.descriptor} is not a field")
        return finite_field(self.modulus)


class ResidueElem:
    __slots__ = ("ring", "rep")

    def __init__(self, ring: ResidueRing, rep: PolyFp):
        # callers pass reduced reps; use reduce() otherwise
        self.ring = ring
        self.rep = rep

    def _other(self, other) -> "ResidueElem":
        if isinstance(other, ResidueElem):
            if other.ring != self.ring:
                raise ValueError(f"ring mismatch: {self.ring} vs {other.ring}")
            return other
        return self.ring(other)

    def __add__(self, other):
        return ResidueElem(self.ring, self.rep + self._other(other).rep)

    __radd__ = __add__

    def __sub__(self, other):
        return ResidueElem(self.ring, self.rep - self._other(other).rep)

    def __rsub__(self, other):
        return ResidueElem(self.ring, self._other(other).rep - self.rep)

    def __neg__(self):
        return ResidueElem(self.ring, -self.rep)

    def __mul__(self, other):
        return reduce(self.rep * self._other(other).rep, self.ring)

    __rmul__ = __mul__

    def __pow__(self, e: int):
        if e < 0:
            return inverse(self) ** (-e)
        return ResidueElem(self.ring, powmod(self.rep, e, self.ring.modulus))

    def __truediv__(self, other):
        return self * inverse(self._other(other))

    def __eq__(self, other):
        if isinstance(other, ResidueElem):
            return self.ring == other.ring and self.rep == other.rep
        if isinstance(other, (int, np.integer, PolyFp)):
            return self == self.ring(other)
        return NotImplemented

    def __hash__(self):
        return hash((self.ring.modulus, self.rep))

    def __bool__(self):
        return not self.rep.is_zero()

    def is_zero(self) -> bool:
        return self.rep.is_zero()

    @property
    def code(self) -> int:
        p = self.ring.p
        return sum(c * p**i for i, c in enumerate(self.rep.coeffs))

    @property
    def degree(self):
        return self.rep.degree

    def __repr__(self):
        return f"ResidueElem({self.rep.to_text()} mod {self.ring.descriptor})"

    def __str__(self):
        return str(self.rep)


def reduce(a: PolyFp, R: ResidueRing) -> ResidueElem:
    if a.p != R.p:
        raise ValueError(f"cannot reduce a polynomial over F_{a.p} into {R.descriptor}")
    return ResidueElem(R, a % R.modulus)


def inverse(x: ResidueElem) -> ResidueElem:
    if x.rep.is_zero():
        raise NotInvertibleError(x, x.ring.modulus)
    g, s, _ = xgcd(x.rep, x.ring.modulus)
    if not g.is_one():
        raise NotInvertibleError(x, g)
    return reduce(s, x.ring)


def _require_field(R: ResidueRing) -> None:
    if not R.is_field:
        raise ValueError(f"{R.descriptor} is not a field")


def is_square_unit(x: ResidueElem) -> bool:
    """Euler criterion in a field. Zero is treated as a square."""
    _require_field(x.ring)
    if x.is_zero():
        return True
    e = (x.ring.cardinality - 1) // 2
    return (x**e).rep.is_one()


def frobenius(x: ResidueElem) -> ResidueElem:
    _require_field(x.ring)
    return x ** x.ring.p


@lru_cache(maxsize=256)
def _crt_basis(modulus: PolyFp) -> tuple[tuple[PolyFp, ...], tuple[PolyFp, ...]]:
    """Irreducible factors and the idempotents e_j (e_j = 1 mod p_j, 0 mod the rest)."""
    fac = factor(modulus)
    if not fac.is_squarefree():
        raise ValueError(f"modulus {modulus} is not square-free")
    mods = tuple(g for g, _ in fac.factors)
    idem = []
    for pj in mods:
        rest = modulus // pj
        _, s, _ = xgcd(rest, pj)
        idem.append((s * rest) % modulus)
    return mods, tuple(idem)


def crt_moduli(R: ResidueRing) -> list[PolyFp]:
    return list(_crt_basis(R.modulus)[0])


def crt_split(x: ResidueElem) -> list[ResidueElem]:
    mods, _ = _crt_basis(x.ring.modulus)
    return [reduce(x.rep, ResidueRing(m)) for m in mods]


def crt_combine(components: list[ResidueElem], target: ResidueRing | None = None) -> ResidueElem:
    mods = [c.ring.modulus for c in components]
    if not mods:
        raise ValueError("need at least one component")
    p = mods[0].p
    prod = PolyFp.one(p)
    for m in mods:
        prod = prod * m
    if target is None:
        target = ResidueRing(prod)
    if target.modulus != prod:
        # order may differ; compare as multisets via the canonical factor order
        if sorted(m.sort_key() for m in mods) != sorted(m.sort_key() for m in crt_moduli(target)):
            raise ValueError("component moduli do not multiply to the target modulus")
    for i in range(len(mods)):
        for j in range(i + 1, len(mods)):
            if not gcd(mods[i], mods[j]).is_one():
                raise ValueError(f"moduli {mods[i]} and {mods[j]} are not coprime")
    tmods, idem = _crt_basis(target.modulus)
    by_mod = {c.ring.modulus: c.rep for c in components}
    acc = PolyFp.zero(p)
    for m, e in zip(tmods, idem):
        acc = acc + by_mod[m] * e
    return reduce(acc, target)


def codes_to_digits(codes: np.ndarray, p: int, n: int) -> np.ndarray:
    """Array of codes -> (..., n) array of base-p digits."""
    codes = np.asarray(codes, dtype=np.int64)
    pw = p ** np.arange(n, dtype=np.int64)
    return (codes[..., None] // pw) % p


def digits_to_codes(digits: np.ndarray, p: int) -> np.ndarray:
    n = digits.shape[-1]
    pw = p ** np.arange(n, dtype=np.int64)
    return (np.asarray(digits, dtype=np.int64) % p) @ pw


class FiniteField:
    """Vectorized arithmetic on codes of F_q = F_p[t]/(f), f irreducible."""

    def __init__(self, modulus: PolyFp):
        if modulus.degree < 1 or not modulus.is_monic() or not is_irreducible(modulus):
            raise ValueError(f"{modulus} is not a monic irreducible")
        self.modulus = modulus
        self.p = modulus.p
        self.n = int(modulus.degree)
        self.q = self.p**self.n
        if self.q > TABLE_LIMIT:
            raise ValueError(f"q = {self.q} exceeds the table limit {TABLE_LIMIT}")
        self.ring = ResidueRing(modulus)
        self._build_tables()

    def __repr__(self):
        return f"FiniteField(q={self.q}, f={self.modulus.to_text()})"

    @property
    def descriptor(self) -> str:
        return self.ring.descriptor

    def _primitive(self) -> PolyFp:
        qm1 = self.q - 1
        rs = prime_factors(qm1) if qm1 > 1 else []
        for code in range(1, self.q):
            g = self.ring.from_code(code).rep
            if all(not powmod(g, qm1 // r, self.modulus).is_one() for r in rs):
                return g
        raise RuntimeError("no primitive element found")

    def _build_tables(self) -> None:
        p, n, q = self.p, self.n, self.q
        qm1 = q - 1
        g = self._primitive()
        self.generator_code = sum(c * p**i for i, c in enumerate(g.coeffs))
        # multiplication by g as an n x n matrix on digit vectors
        Mg = np.zeros((n, n), dtype=np.int64)
        for i in range(n):
            col = (PolyFp.monomial(i, p) * g) % self.modulus
            for j, c in enumerate(col.coeffs):
                Mg[j, i] = c
        B = max(1, int(np.ceil(np.sqrt(qm1))))
        block = np.zeros((n, B), dtype=np.int64)
        v = np.zeros(n, dtype=np.int64)
        v[0] = 1
        for k in range(B):
            block[:, k] = v
            v = (Mg @ v) % p
        step = np.eye(n, dtype=np.int64)
        MB = np.eye(n, dtype=np.int64)
        for _ in range(B):
            MB = (Mg @ MB) % p
        pw = p ** np.arange(n, dtype=np.int64)
        nblocks = -(-qm1 // B)
        exp = np.empty(nblocks * B, dtype=np.int64)
        for j in range(nblocks):
            exp[j * B:(j + 1) * B] = pw @ ((step @ block) % p)
            step = (MB @ step) % p
        exp = exp[:qm1]
        self.exp = exp.astype(np.int32)
        log = np.full(q, -1, dtype=np.int32)
        log[exp] = np.arange(qm1, dtype=np.int32)
        if (log[1:] < 0).any():
            raise RuntimeError("exp table is not a bijection onto F_q*")
        self.log = log
        # Zech: zech[k] = log(1 + g^k), -1 when 1 + g^k = 0
        d0 = exp % p
        plus1 = exp - d0 + (d0 + 1) % p
        self.zech = log[plus1]
        self.half = qm1 // 2
        self.neg_one = int(self.exp[self.half]) if qm1 % 2 == 0 else 1

    # scalar helpers
    def code(self, x) -> int:
        if isinstance(x, ResidueElem):
            if x.ring.modulus != self.modulus:
                raise ValueError("element from another ring")
            return x.code
        if isinstance(x, PolyFp):
            return self.ring(x).code
        return int(x) % self.p

    def elem(self, code: int) -> ResidueElem:
        return self.ring.from_code(int(code))

    def const(self, c: int) -> int:
        return int(c) % self.p

    # vectorized arithmetic on codes
    def mul(self, a, b):
        a = np.asarray(a)
        b = np.asarray(b)
        la = self.log[a].astype(np.int64)
        lb = self.log[b].astype(np.int64)
        r = self.exp[(la + lb) % (self.q - 1)]
        return np.where((a == 0) | (b == 0), 0, r).astype(np.int32)

    def add(self, a, b):
        a = np.asarray(a)
        b = np.asarray(b)
        la = self.log[a].astype(np.int64)
        lb = self.log[b].astype(np.int64)
        z = self.zech[(lb - la) % (self.q - 1)].astype(np.int64)
        r = np.where(z < 0, 0, self.exp[(la + z) % (self.q - 1)])
        r = np.where(a == 0, b, np.where(b == 0, a, r))
        return r.astype(np.int32)

    def neg(self, a):
        a = np.asarray(a)
        if self.p == 2:
            return a
        la = self.log[a].astype(np.int64)
        r = self.exp[(la + self.half) % (self.q - 1)]
        return np.where(a == 0, 0, r).astype(np.int32)

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def inv(self, a):
        a = np.asarray(a)
        if np.any(a == 0):
            raise ZeroDivisionError("inverse of zero in F_q")
        la = self.log[a].astype(np.int64)
        return self.exp[(-la) % (self.q - 1)].astype(np.int32)

    def is_square(self, a):
        """Zero counts as a square."""
        a = np.asarray(a)
        return (a == 0) | (self.log[a] % 2 == 0)

    def pow(self, a, e: int):
        a = np.asarray(a)
        la = self.log[a].astype(np.int64)
        r = self.exp[(la * e) % (self.q - 1)]
        if e == 0:
            return np.ones_like(a, dtype=np.int32)
        return np.where(a == 0, 0, r).astype(np.int32)

    def frobenius(self, a, k: int = 1):
        return self.pow(a, self.p**k)

    def sqrt(self, a):
        """One square root per entry, -1 where none exists."""
        a = np.asarray(a)
        la = self.log[a].astype(np.int64)
        r = np.where(la % 2 == 0, self.exp[(la // 2) % (self.q - 1)], -1)
        return np.where(a == 0, 0, r).astype(np.int32)

    def all_codes(self) -> np.ndarray:
        return np.arange(self.q, dtype=np.int32)

    def subfield_codes(self, m: int) -> np.ndarray:
        """Codes of the unique subfield F_{p^m}, i.e. the fixed points of x -> x^(p^m)."""
        if self.n % m:
            raise ValueError(f"F_{{p^{m}}} is not a subfield of F_{{p^{self.n}}}: {m} does not divide {self.n}")
        step = (self.q - 1) // (self.p**m - 1)
        return np.sort(np.concatenate([[0], self.exp[::step]])).astype(np.int32)

    def subfield_embedding(self, m: int, small_modulus: PolyFp | None = None) -> tuple[PolyFp, np.ndarray]:
        """Embedding F_p[t]/(h) -> F_q for an irreducible h of degree m dividing n.

        Returns ``(h, table)`` with ``table[code in small field] = code in F_q``,
        computed by sending t to the smallest root of h inside F_q.
        """
        from .polyring import smallest_irreducible

        sub = self.subfield_codes(m)
        h = small_modulus if small_modulus is not None else smallest_irreducible(self.p, m)
        if int(h.degree) != m or not is_irreducible(h):
            raise ValueError("embedding needs an irreducible modulus of degree m")
        root = None
        for r in sub:
            acc = np.int32(0)
            for c in reversed(h.coeffs):
                acc = self.add(self.mul(acc, r), c)
            if int(acc) == 0:
                root = int(r)
                break
        if root is None:
            raise RuntimeError("no root of the subfield modulus found")
        small = ResidueRing(h)
        table = np.zeros(small.cardinality, dtype=np.int32)
        pows = [1]
        for _ in range(1, m):
            pows.append(int(self.mul(pows[-1], root)))
        for code in range(small.cardinality):
            acc = 0
            k = code
            for i in range(m):
                k, d = divmod(k, self.p)
                if d:
                    acc = int(self.add(acc, self.mul(d, pows[i])))
            table[code] = acc
        return h, table


@lru_cache(maxsize=64)
def finite_field(modulus: PolyFp) -> FiniteField:
    return FiniteField(modulus)


def prime_field(p: int) -> FiniteField:
    return finite_field(PolyFp((0, 1), p))


@dataclass(frozen=True)
class QuadraticExtension:
    """F_q[X]/(X^2 - a X - b) recorded for the non-split torus construction."""

    base: str
    a: int
    b: int

    def as_text(self) -> str:
        return f"X^2 - {self.a}*X - {self.b} over {self.base}"
