"""Dense polynomials over F_p: arithmetic, irreducibility, factorization, admissibility.

Coefficients are stored lowest degree first as a tuple of ints in ``[0, p)``
with trailing zeros stripped, so the zero polynomial is the empty tuple.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

import numpy as np

from .rng import make_rng

#: Degree of the zero polynomial. Never collides with a real degree.
ZERO_DEGREE = -math.inf

INT_WIDTH_MAX = 2**63 - 1

_NUMPY_MUL_THRESHOLD = 24


@lru_cache(maxsize=None)
def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    k = 3
    while k * k <= n:
        if n % k == 0:
            return False
        k += 2
    return True


def prime_factors(n: int) -> list[int]:
    """Distinct prime factors of ``n >= 1`` in increasing order."""
    out = []
    k = 2
    while k * k <= n:
        if n % k == 0:
            out.append(k)
            while n % k == 0:
                n //= k
        k += 1
    if n > 1:
        out.append(n)
    return out


def _check_p(p: int) -> None:
    if not isinstance(p, (int, np.integer)) or p < 3 or not is_prime(int(p)):
        raise ValueError(f"modulus p must be an odd prime, got {p!r}")


class PolyFp:
    """Polynomial in F_p[t]. Immutable."""

    __slots__ = ("p", "coeffs")

    def __init__(self, coeffs: Iterable[int], p: int):
        _check_p(p)
        cs = [int(c) % p for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.p = int(p)
        self.coeffs = tuple(cs)

    @classmethod
    def _make(cls, cs: list[int], p: int) -> "PolyFp":
        # cs already reduced mod p; strips in place
        while cs and cs[-1] == 0:
            cs.pop()
        obj = object.__new__(cls)
        obj.p = p
        obj.coeffs = tuple(cs)
        return obj

    # constructors
    @classmethod
    def zero(cls, p: int) -> "PolyFp":
        return cls((), p)

    @classmethod
    def one(cls, p: int) -> "PolyFp":
        return cls((1,), p)

    @classmethod
    def constant(cls, c: int, p: int) -> "PolyFp":
        return cls((c,), p)

    @classmethod
    def t(cls, p: int) -> "PolyFp":
        return cls((0, 1), p)

    @classmethod
    def monomial(cls, deg: int, p: int, c: int = 1) -> "PolyFp":
        return cls([0] * deg + [c], p)

    @classmethod
    def parse(cls, text: str, p: int | None = None) -> "PolyFp":
        """Parse ``"c0,c1,...,ck@p"``; the ``@p`` suffix may be omitted if ``p`` is given."""
        body, sep, ptext = text.strip().partition("@")
        if sep:
            pp = int(ptext)
            if p is not None and pp != p:
                raise ValueError(f"polynomial {text!r} is over F_{pp}, expected F_{p}")
            p = pp
        if p is None:
            raise ValueError(f"polynomial {text!r} carries no '@p' and no p was given")
        _check_p(p)
        body = body.strip()
        if not body:
            return cls.zero(p)
        cs = [int(tok) for tok in body.split(",")]
        bad = [c for c in cs if c < 0 or c >= p]
        if bad:
            raise ValueError(f"coefficients {bad} out of range [0, {p}) in {text!r}")
        return cls(cs, p)

    def to_text(self) -> str:
        return ",".join(str(c) for c in self.coeffs) + f"@{self.p}" if self.coeffs else f"0@{self.p}"

    # basic properties
    @property
    def degree(self) -> int | float:
        return len(self.coeffs) - 1 if self.coeffs else ZERO_DEGREE

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_one(self) -> bool:
        return self.coeffs == (1,)

    @property
    def lead(self) -> int:
        return self.coeffs[-1] if self.coeffs else 0

    def is_monic(self) -> bool:
        return self.lead == 1

    def is_constant(self) -> bool:
        return len(self.coeffs) <= 1

    def monic(self) -> "PolyFp":
        if not self.coeffs:
            raise ZeroDivisionError("zero polynomial has no monic associate")
        if self.coeffs[-1] == 1:
            return self
        inv = pow(self.coeffs[-1], self.p - 2, self.p)
        return self.scale(inv)

    def scale(self, c: int) -> "PolyFp":
        p = self.p
        c %= p
        return PolyFp._make([(x * c) % p for x in self.coeffs], p) if c else PolyFp.zero(p)

    def sort_key(self) -> tuple:
        return (len(self.coeffs), self.coeffs)

    def __call__(self, x: int) -> int:
        acc = 0
        for c in reversed(self.coeffs):
            acc = (acc * x + c) % self.p
        return acc

    def derivative(self) -> "PolyFp":
        p = self.p
        return PolyFp._make([(i * c) % p for i, c in enumerate(self.coeffs)][1:], p)

    # arithmetic
    def _coerce(self, other) -> "PolyFp":
        if isinstance(other, PolyFp):
            if other.p != self.p:
                raise ValueError(f"mismatched moduli: F_{self.p} vs F_{other.p}")
            return other
        if isinstance(other, (int, np.integer)):
            return PolyFp((int(other),), self.p)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        p = self.p
        cs = list(a)
        for i, y in enumerate(b):
            cs[i] = (cs[i] + y) % p
        return PolyFp._make(cs, p)

    __radd__ = __add__

    def __neg__(self):
        p = self.p
        return PolyFp._make([(-c) % p for c in self.coeffs], p)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, np.integer)):
            return self.scale(int(other))
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        a, b = self.coeffs, other.coeffs
        p = self.p
        if not a or not b:
            return PolyFp.zero(p)
        if min(len(a), len(b)) >= _NUMPY_MUL_THRESHOLD:
            out = np.convolve(np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64)) % p
            return PolyFp._make(out.tolist(), p)
        out = [0] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    out[i + j] += x * y
        return PolyFp._make([c % p for c in out], p)

    __rmul__ = __mul__

    def __pow__(self, e: int):
        if e < 0:
            raise ValueError("negative power of a polynomial")
        result = PolyFp.one(self.p)
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def __divmod__(self, other):
        return poly_divmod(self, self._coerce(other))

    def __floordiv__(self, other):
        return poly_divmod(self, self._coerce(other))[0]

    def __mod__(self, other):
        return poly_divmod(self, self._coerce(other))[1]

    def __eq__(self, other):
        if isinstance(other, PolyFp):
            return self.p == other.p and self.coeffs == other.coeffs
        if isinstance(other, (int, np.integer)):
            return self.coeffs == PolyFp((int(other),), self.p).coeffs
        return NotImplemented

    def __hash__(self):
        return hash((self.p, self.coeffs))

    def __bool__(self):
        return bool(self.coeffs)

    def __repr__(self):
        return f"PolyFp({self.to_text()!r})"

    def __str__(self):
        if not self.coeffs:
            return "0"
        terms = []
        for i in range(len(self.coeffs) - 1, -1, -1):
            c = self.coeffs[i]
            if not c:
                continue
            mono = "" if i == 0 else ("t" if i == 1 else f"t^{i}")
            if not mono:
                terms.append(str(c))
            else:
                terms.append(mono if c == 1 else f"{c}{mono}")
        return " + ".join(terms)


def poly_divmod(a: PolyFp, b: PolyFp) -> tuple[PolyFp, PolyFp]:
    """Euclidean division: ``a = q*b + r`` with ``deg r < deg b``."""
    if a.p != b.p:
        raise ValueError(f"mismatched moduli: F_{a.p} vs F_{b.p}")
    if b.is_zero():
        raise ZeroDivisionError("polynomial division by zero")
    p = a.p
    db = len(b.coeffs) - 1
    r = list(a.coeffs)
    if len(r) - 1 < db:
        return PolyFp.zero(p), a
    inv_lead = pow(b.coeffs[-1], p - 2, p)
    bc = b.coeffs
    q = [0] * (len(r) - db)
    for k in range(len(r) - 1, db - 1, -1):
        c = r[k] % p
        if c:
            c = (c * inv_lead) % p
            q[k - db] = c
            off = k - db
            for j in range(db + 1):
                r[off + j] -= c * bc[j]
        r[k] = 0
    rem = [x % p for x in r[:db]]
    return PolyFp._make(q, p), PolyFp._make(rem, p)


def gcd(a: PolyFp, b: PolyFp) -> PolyFp:
    """Monic gcd. Raises ``ValueError`` if both arguments are zero."""
    if a.is_zero() and b.is_zero():
        raise ValueError("gcd(0, 0) is undefined")
    while not b.is_zero():
        a, b = b, poly_divmod(a, b)[1]
    return a.monic()


def xgcd(a: PolyFp, b: PolyFp) -> tuple[PolyFp, PolyFp, PolyFp]:
    """Return ``(g, s, u)`` with ``g = s*a + u*b`` monic."""
    p = a.p
    r0, r1 = a, b
    s0, s1 = PolyFp.one(p), PolyFp.zero(p)
    u0, u1 = PolyFp.zero(p), PolyFp.one(p)
    while not r1.is_zero():
        q, r = poly_divmod(r0, r1)
        r0, r1 = r1, r
        s0, s1 = s1, s0 - q * s1
        u0, u1 = u1, u0 - q * u1
    if r0.is_zero():
        raise ValueError("xgcd(0, 0) is undefined")
    inv = pow(r0.lead, p - 2, p)
    return r0.scale(inv), s0.scale(inv), u0.scale(inv)


def powmod(base: PolyFp, e: int, mod: PolyFp) -> PolyFp:
    if e < 0:
        raise ValueError("negative exponent")
    result = PolyFp.one(base.p) % mod
    base = base % mod
    while e:
        if e & 1:
            result = (result * base) % mod
        base = (base * base) % mod
        e >>= 1
    return result


def _frobenius_iterates(f: PolyFp, k: int) -> PolyFp:
    """t^(p^k) mod f."""
    x = PolyFp.t(f.p) % f
    for _ in range(k):
        x = powmod(x, f.p, f)
    return x


def is_irreducible(f: PolyFp) -> bool:
    """Rabin's test: ``f | t^(p^n) - t`` and ``gcd(f, t^(p^(n/q)) - t) = 1`` for primes ``q | n``."""
    if f.is_zero() or f.degree < 1:
        raise ValueError("irreducibility is only defined for polynomials of degree >= 1")
    f = f.monic()
    n = int(f.degree)
    if n == 1:
        return True
    t = PolyFp.t(f.p)
    for q in prime_factors(n):
        h = _frobenius_iterates(f, n // q) - t
        if not gcd(f, h).is_one():
            return False
    return (_frobenius_iterates(f, n) - t).is_zero()


@dataclass(frozen=True)
class Factorization:
    factors: tuple[tuple[PolyFp, int], ...]
    unit: int

    @property
    def p(self) -> int:
        return self.factors[0][0].p if self.factors else 0

    def is_squarefree(self) -> bool:
        return all(m == 1 for _, m in self.factors)

    @property
    def degrees(self) -> list[int]:
        return [int(g.degree) for g, _ in self.factors]

    def expand(self, p: int | None = None) -> PolyFp:
        p = p if p is not None else self.p
        out = PolyFp.constant(self.unit, p)
        for g, m in self.factors:
            out = out * g**m
        return out


def _pth_root(f: PolyFp) -> PolyFp:
    # a^p = a on F_p, so the p-th root just thins the exponents
    p = f.p
    return PolyFp._make(list(f.coeffs[::p]), p)


def squarefree_decomposition(f: PolyFp) -> list[tuple[PolyFp, int]]:
    """Monic ``f`` -> pairs ``(g_i, i)`` with ``g_i`` square-free, pairwise coprime, ``f = prod g_i^i``."""
    p = f.p
    if f.degree < 1:
        return []
    df = f.derivative()
    if df.is_zero():
        return [(g, m * p) for g, m in squarefree_decomposition(_pth_root(f))]
    out = []
    c = gcd(f, df)
    w = f // c
    i = 1
    while not w.is_one():
        y = gcd(w, c)
        z = w // y
        if z.degree >= 1:
            out.append((z, i))
        i += 1
        w = y
        c = c // y
    if c.degree >= 1:
        out.extend((g, m * p) for g, m in squarefree_decomposition(_pth_root(c)))
    return out


def distinct_degree(f: PolyFp) -> list[tuple[PolyFp, int]]:
    """Square-free monic ``f`` -> ``(product of all irreducible factors of degree d, d)``."""
    out = []
    t = PolyFp.t(f.p)
    g = f
    h = t % g if g.degree >= 1 else t
    d = 1
    while g.degree >= 2 * d:
        h = powmod(h, f.p, g)
        common = gcd(g, h - t)
        if not common.is_one():
            out.append((common, d))
            g = g // common
            h = h % g
        d += 1
    if g.degree >= 1:
        out.append((g, int(g.degree)))
    return out


def equal_degree(f: PolyFp, d: int, rng: np.random.Generator) -> list[PolyFp]:
    """Cantor-Zassenhaus split of a monic square-free ``f`` whose factors all have degree ``d``."""
    n = int(f.degree)
    if n == d:
        return [f]
    p = f.p
    e = (p**d - 1) // 2
    for _ in range(10_000):
        a = PolyFp(rng.integers(0, p, size=n).tolist(), p)
        if a.degree < 1:
            continue
        g = gcd(f, a)
        if 0 < g.degree < n:
            return equal_degree(g, d, rng) + equal_degree(f // g, d, rng)
        b = powmod(a, e, f) - 1
        if b.is_zero():
            continue
        g = gcd(f, b)
        if 0 < g.degree < n:
            return equal_degree(g, d, rng) + equal_degree(f // g, d, rng)
    raise RuntimeError("equal-degree splitting failed to converge")


def factor(f: PolyFp, seed: int = 0) -> Factorization:
    """Complete factorization into monic irreducibles, sorted by ``(degree, coefficients)``."""
    if f.is_zero():
        raise ValueError("cannot factor the zero polynomial")
    unit = f.lead
    g = f.monic()
    rng = make_rng(seed, "factor")
    counts: dict[PolyFp, int] = {}
    for part, mult in squarefree_decomposition(g):
        for block, d in distinct_degree(part):
            for irr in equal_degree(block, d, rng):
                counts[irr] = counts.get(irr, 0) + mult
    factors = tuple(sorted(counts.items(), key=lambda kv: kv[0].sort_key()))
    return Factorization(factors, unit)


def poly_sqrt(f: PolyFp) -> PolyFp | None:
    """Square root in F_p[t], or ``None`` if ``f`` is not a perfect square."""
    p = f.p
    if f.is_zero():
        return f
    n = int(f.degree)
    if n % 2:
        return None
    lead = f.lead
    s = next((x for x in range(1, p) if (x * x) % p == lead), None)
    if s is None:
        return None
    m = n // 2
    g = [0] * (m + 1)
    g[m] = s
    inv2s = pow(2 * s, p - 2, p)
    fc = f.coeffs
    for k in range(m - 1, -1, -1):
        acc = 0
        for i in range(k + 1, m):
            j = m + k - i
            if k < j <= m:
                acc += g[i] * g[j]
        g[k] = ((fc[m + k] - acc) * inv2s) % p
    root = PolyFp._make(g, p)
    return root if root * root == f else None


def smallest_prime_factor(n: int) -> int:
    k = 2
    while k * k <= n:
        if n % k == 0:
            return k
        k += 1
    return n


def is_admissible(n: int, M: int) -> bool:
    """``n > 1`` is M-admissible iff it has no prime factor below ``M``."""
    if n <= 1:
        raise ValueError(f"admissibility is defined for integers n > 1, got {n}")
    return smallest_prime_factor(n) >= M


def is_admissible_poly(f: PolyFp, M: int) -> bool:
    """True iff every irreducible factor of ``f`` has M-admissible degree.

    Linear factors count as non-admissible: degree 1 is outside the integer
    definition and corresponds to the prime-field subgroup.
    """
    for g, _ in factor(f).factors:
        d = int(g.degree)
        if d <= 1 or not is_admissible(d, M):
            return False
    return True


def primes_upto(M: int) -> list[int]:
    return [k for k in range(2, int(M) + 1) if is_prime(k)]


def admissible_sequence(M: int, count: int) -> list[int]:
    """``n_i = N*i + 1`` for ``i = 1..count`` with ``N`` the product of primes ``<= M``."""
    if M < 2 or count < 1:
        raise ValueError("need M >= 2 and count >= 1")
    N = math.prod(primes_upto(M))
    if N * count + 1 > INT_WIDTH_MAX:
        raise OverflowError(f"N*count = {N}*{count} exceeds the 64-bit integer width")
    return [N * i + 1 for i in range(1, count + 1)]


def primes_above(M: int, count: int) -> list[int]:
    out = []
    k = int(M) + 1
    while len(out) < count:
        if is_prime(k):
            out.append(k)
        k += 1
    return out


def random_irreducible(p: int, n: int, seed: int) -> PolyFp:
    """Monic irreducible of exact degree ``n`` by rejection sampling."""
    if n < 1:
        raise ValueError("degree must be >= 1")
    rng = make_rng(seed, "irreducible", p, n)
    cap = 1000 + 200 * n
    for _ in range(cap):
        cs = rng.integers(0, p, size=n).tolist() + [1]
        f = PolyFp(cs, p)
        if is_irreducible(f):
            return f
    raise RuntimeError(f"no irreducible of degree {n} found in {cap} draws; this is a bug")


def monic_polys(p: int, n: int) -> Iterator[PolyFp]:
    """All monic polynomials of degree ``n`` in order of their base-p lower coefficients."""
    for k in range(p**n):
        cs = []
        for _ in range(n):
            k, r = divmod(k, p)
            cs.append(r)
        yield PolyFp(cs + [1], p)


def irreducibles(p: int, n: int) -> Iterator[PolyFp]:
    return (f for f in monic_polys(p, n) if is_irreducible(f))


@lru_cache(maxsize=None)
def smallest_irreducible(p: int, n: int) -> PolyFp:
    """First monic irreducible of degree ``n`` in base-p counting order; deterministic."""
    return next(irreducibles(p, n))


def trial_division_irreducible(f: PolyFp) -> bool:
    """Brute-force oracle: no monic divisor of degree ``1..deg(f)//2``."""
    n = int(f.degree)
    for d in range(1, n // 2 + 1):
        for g in monic_polys(f.p, d):
            if (f % g).is_zero():
                return False
    return True


def poly_product(polys: Sequence[PolyFp], p: int) -> PolyFp:
    out = PolyFp.one(p)
    for g in polys:
        out = out * g
    return out
