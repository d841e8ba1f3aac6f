"""Random walks driven by a symmetric set S: exact measures, sampling, free pairs.

Sampling uses one letter array per batch, drawn from the stream
``make_rng(seed, "walk", batch)``.  The same letters drive the upstairs walk
(exact polynomials) and the walks in every quotient, so a sample counted in
X upstairs is always counted in the image of X downstairs.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import kernels
from .cayley import TABLE_BUDGET, BudgetExceeded, QuotientGroup, codes_predicate
from .polyring import PolyFp
from .quotient import ResidueRing
from .rng import RNG_ID, make_rng
from .sl2core import (
    GenSet,
    Mat2,
    ad_fixed_point_poly,
    char_poly_reducible,
    has_zero_entry,
    identity,
    inv,
    is_square_upstairs,
    mul,
    trace,
)

WALK_BUDGET = 1000
TRIAL_BUDGET = 10**7
PREDICATES = ("zero-entry", "trace", "torsion", "square", "reducible", "ad-fixed", "all")


def check_predicate(name: str) -> str:
    if name not in PREDICATES:
        raise ValueError(f"unknown predicate {name!r}; choose from {', '.join(PREDICATES)}")
    return name


def wilson_interval(k: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """Two-sided Wilson score interval for k successes in n trials."""
    if n <= 0:
        return 0.0, 1.0
    ph = k / n
    den = 1 + z * z / n
    centre = (ph + z * z / (2 * n)) / den
    half = z * math.sqrt(ph * (1 - ph) / n + z * z / (4 * n * n)) / den
    lo = 0.0 if k == 0 else max(0.0, centre - half)
    hi = 1.0 if k == n else min(1.0, centre + half)
    return lo, hi


# exact measures

@dataclass
class MeasureVector:
    group: QuotientGroup
    weights: np.ndarray

    def mass(self, mask) -> float:
        return float(self.weights[np.asarray(mask)].sum())

    @property
    def total(self) -> float:
        return float(self.weights.sum())


def _check_table_budget(G: QuotientGroup) -> None:
    if G.order > TABLE_BUDGET:
        raise BudgetExceeded(f"exact measure on {G.name}", G.order, TABLE_BUDGET)


def exact_measure(G: QuotientGroup, S, l: int) -> MeasureVector:
    """mu^(l) of the image of S: l pushforward steps from the point mass at the identity.

    For symmetric S this equals A^l chi_e with (A f)(g) = mean_s f(s g).
    """
    _check_table_budget(G)
    right = G.right_table(S)
    mu = np.zeros(G.order)
    mu[0] = 1.0
    for _ in range(l):
        mu = kernels.pushforward(mu, right)
    return MeasureVector(G, mu)


def exact_measure_series(G: QuotientGroup, S, l_max: int) -> list[np.ndarray]:
    _check_table_budget(G)
    right = G.right_table(S)
    mu = np.zeros(G.order)
    mu[0] = 1.0
    out = [mu]
    for _ in range(l_max):
        mu = kernels.pushforward(mu, right)
        out.append(mu)
    return out


def exact_path_counts_series(G: QuotientGroup, S, l_max: int) -> list[np.ndarray]:
    """Number of words of each length l <= l_max ending at each element.

    int64 while |S|^l fits, Python integers beyond.
    """
    _check_table_budget(G)
    right = G.right_table(S)
    k = right.shape[1]
    c = np.zeros(G.order, dtype=np.int64)
    c[0] = 1
    out = [c]
    for l in range(1, l_max + 1):
        if k**l < 2**62:
            c = kernels.pushforward_counts(c, right)
        else:
            c = c.astype(object)
            nxt = np.zeros(G.order, dtype=object)
            for s in range(k):
                nxt[right[:, s]] += c
            c = nxt
        out.append(c)
    return out


# single exact walks

@dataclass
class WalkSample:
    word: list
    endpoint: Mat2
    max_entry_degree: int


def sample_walk(S: GenSet, l: int, seed: int) -> WalkSample:
    if l < 0:
        raise ValueError("walk length must be >= 0")
    rng = make_rng(seed, "single-walk")
    letters = rng.integers(0, len(S), size=l).tolist()
    g = identity(S[0])
    for s in letters:
        g = mul(g, S[s])
    return WalkSample(letters, g, g.max_entry_degree())


def batch_letters(S_len: int, l_max: int, seed: int, batch: int, size: int) -> np.ndarray:
    return make_rng(seed, "walk", batch).integers(0, S_len, size=(size, l_max), dtype=np.int64)


# upstairs predicate evaluation on coefficient arrays

def _rows_to_mat(row: np.ndarray, p: int) -> Mat2:
    return Mat2(*(PolyFp(row[j].tolist(), p) for j in range(4)))


def upstairs_predicate(state: np.ndarray, p: int, name: str, alpha: int = 2, width: int | None = None) -> np.ndarray:
    """Vectorized where possible; square/reducible/ad-fixed go through exact Mat2 per sample."""
    st = state[:, :, :width] if width else state
    if name == "all":
        return np.ones(len(st), dtype=bool)
    if name == "zero-entry":
        return (st == 0).all(axis=2).any(axis=1)
    if name in ("trace", "torsion"):
        tr = (st[:, 0, :].astype(np.int16) + st[:, 3, :]) % p
        high_zero = (tr[:, 1:] == 0).all(axis=1)
        if name == "torsion":
            return high_zero
        return high_zero & (tr[:, 0] == alpha % p)
    out = np.zeros(len(st), dtype=bool)
    for i in range(len(st)):
        g = _rows_to_mat(st[i], p)
        if name == "square":
            out[i] = is_square_upstairs(g)
        elif name == "reducible":
            out[i] = char_poly_reducible(g)
        elif name == "ad-fixed":
            out[i] = ad_fixed_point_poly(g).is_zero()
        else:
            raise ValueError(f"unknown predicate {name!r}")
    return out


def upstairs_state(batch: int, width: int) -> np.ndarray:
    st = np.zeros((batch, 4, width), dtype=np.int8)
    st[:, 0, 0] = 1
    st[:, 3, 0] = 1
    return st


# escape estimators

@dataclass
class QuotientSide:
    G: QuotientGroup
    gens: list  # per factor (k, 4) int32 codes
    exact: bool

    @classmethod
    def build(cls, S: GenSet, modulus: PolyFp, exact_budget: int) -> "QuotientSide":
        G = QuotientGroup(ResidueRing(modulus))
        codes = G.gen_codes(S)
        gens = [np.ascontiguousarray(codes[:, j, :]) for j in range(len(G.fields))]
        return cls(G, gens, G.order <= exact_budget)


@dataclass
class EscapeRow:
    l: int
    direct: float
    direct_lo: float
    direct_hi: float
    direct_trials: int
    bound: float
    bound_lo: float
    bound_hi: float
    bound_exact: bool
    bound_trials: int
    modulus: str
    consistent: bool

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def escape_probability(S: GenSet, predicate: str, l_values, modulus: PolyFp | None, trials: int,
                       seed: int = 0, alpha: int = 2, direct_trials: int | None = None,
                       batch: int = 1 << 15, exact_budget: int = TABLE_BUDGET) -> list[EscapeRow]:
    """Estimate mu^(l)(X) upstairs and the bound (pi_f mu^(l))(pi_f(X)) in one quotient.

    ``direct_trials`` limits the exact upstairs walks (they are much more
    expensive); the quotient side uses all ``trials``, or the exact pushforward
    when the quotient fits in ``exact_budget``.
    """
    check_predicate(predicate)
    ls = sorted(set(int(l) for l in l_values))
    if not ls:
        return []
    l_max = ls[-1]
    if l_max > WALK_BUDGET:
        raise BudgetExceeded("walk length", l_max, WALK_BUDGET)
    if trials > TRIAL_BUDGET:
        raise BudgetExceeded("trials", trials, TRIAL_BUDGET)
    direct_trials = trials if direct_trials is None else min(direct_trials, trials)
    side = QuotientSide.build(S, modulus, exact_budget) if modulus is not None else None
    res = run_walks(S, side, predicate, ls, trials, seed, alpha, direct_trials, batch)
    rows = []
    exact_vals = None
    if side is not None and side.exact:
        mask = side.G.predicate_mask(predicate, alpha)
        series = exact_measure_series(side.G, S, l_max)
        exact_vals = {l: float(series[l][mask].sum()) for l in ls}
    for l in ls:
        dk = res["direct"][l]
        dlo, dhi = wilson_interval(dk, direct_trials)
        if side is None:
            b, blo, bhi, bex, bn, mtxt = float("nan"), float("nan"), float("nan"), False, 0, ""
        elif exact_vals is not None:
            b = exact_vals[l]
            blo = bhi = b
            bex, bn, mtxt = True, 0, side.G.descriptor
        else:
            bk = res["bound"][l]
            b = bk / trials
            blo, bhi = wilson_interval(bk, trials)
            bex, bn, mtxt = False, trials, side.G.descriptor
        cons = True
        if side is not None:
            cons = res["monotone"][l] and (dk / max(direct_trials, 1) <= bhi + 2 * (dhi - dlo) + 1e-12)
        rows.append(EscapeRow(l, dk / max(direct_trials, 1), dlo, dhi, direct_trials, b, blo, bhi, bex, bn,
                              mtxt, bool(cons)))
    return rows


def run_walks(S: GenSet, side: QuotientSide | None, predicate: str, ls: list[int], trials: int, seed: int,
              alpha: int, direct_trials: int, batch: int) -> dict:
    """Shared-letter walks. Returns hit counts per l for upstairs and quotient sides."""
    p = S.p
    D = max(S.degree_bound, 1)
    l_max = ls[-1]
    width_max = D * l_max + 1
    gcoef = S.coeff_array()
    want = set(ls)
    direct = {l: 0 for l in ls}
    bound = {l: 0 for l in ls}
    monotone = {l: True for l in ls}
    need_bound = side is not None and not side.exact
    n_batches = -(-trials // batch)
    done = 0
    for bi in range(n_batches):
        size = min(batch, trials - done)
        letters = batch_letters(len(S), l_max, seed, bi, size)
        up_n = max(0, min(size, direct_trials - done))
        up = upstairs_state(up_n, width_max) if up_n else None
        qs = None
        if need_bound:
            qs = []
            for F in side.G.fields:
                st = np.zeros((size, 4), dtype=np.int32)
                st[:, 0] = 1
                st[:, 3] = 1
                qs.append(st)
        if up is None and qs is None:
            done += size
            continue
        for step in range(1, l_max + 1):
            col = np.ascontiguousarray(letters[:, step - 1])
            if up is not None:
                kernels.poly_right_mul(up, gcoef, col[:up_n], p, D * (step - 1) + 1)
            if qs is not None:
                for j, F in enumerate(side.G.fields):
                    kernels.field_right_mul(qs[j], side.gens[j], col, F)
            if step in want:
                up_hit = None
                if up is not None:
                    up_hit = upstairs_predicate(up, p, predicate, alpha, D * step + 1)
                    direct[step] += int(up_hit.sum())
                if qs is not None:
                    codes = np.stack(qs, axis=1)
                    q_hit = codes_predicate(side.G, codes, predicate, alpha)
                    bound[step] += int(q_hit.sum())
                    if up_hit is not None:
                        monotone[step] &= bool(np.all(~up_hit | q_hit[:up_n]))
        done += size
    return {"direct": direct, "bound": bound, "monotone": monotone}


def quotient_walk_mass(S: GenSet, moduli: list[PolyFp], predicate: str, ls: list[int], trials: int, seed: int,
                       alpha: int = 2, batch: int = 1 << 15) -> dict:
    """Sampled (pi mu^(l))(pi X) for a product of moduli (componentwise predicates)."""
    f = PolyFp.one(S.p)
    for m in moduli:
        f = f * m
    side = QuotientSide.build(S, f, exact_budget=0)
    res = run_walks(S, side, predicate, ls, trials, seed, alpha, 0, batch)
    return res["bound"]


# product escape

PRODUCT_SPECS = ("zero-entry", "trace-diff", "componentwise", "ad-resultant", "zero")


@dataclass
class ProductEscape:
    spec: str
    r: int
    l: int
    estimate: float
    ci_lo: float
    ci_hi: float
    trials: int
    warning: str = ""

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def product_escape(S: GenSet, F_spec: str, r: int, l: int, trials: int, seed: int = 0,
                   predicate: str = "zero-entry", alpha: int = 2, batch: int = 4096) -> ProductEscape:
    """Fraction of r-tuples of independent l-step walks lying on V(F).

    ``F_spec``: "zero-entry" (r=1, F = abcd), "trace-diff" (r=2, F = tr g - tr h),
    "componentwise" (every walk satisfies ``predicate``), "ad-resultant" (r=1,
    F(g) = det(I - Ad g)), or "zero" which is rejected.
    """
    if F_spec == "zero":
        raise ValueError("F = 0 vanishes on all of SL2^r; the escape statement needs a proper subvariety")
    if F_spec not in PRODUCT_SPECS:
        raise ValueError(f"unknown polynomial choice {F_spec!r}; choose from {', '.join(PRODUCT_SPECS)}")
    if F_spec == "trace-diff" and r != 2:
        raise ValueError("trace-diff needs r = 2")
    if F_spec in ("zero-entry", "ad-resultant") and r != 1:
        raise ValueError(f"{F_spec} is an r = 1 polynomial")
    if trials > TRIAL_BUDGET:
        raise BudgetExceeded("trials", trials, TRIAL_BUDGET)
    if l > WALK_BUDGET:
        raise BudgetExceeded("walk length", l, WALK_BUDGET)
    p = S.p
    D = max(S.degree_bound, 1)
    width = D * l + 1
    gcoef = S.coeff_array()
    hits = 0
    done = 0
    bi = 0
    while done < trials:
        size = min(batch, trials - done)
        states = []
        for w in range(r):
            letters = make_rng(seed, "product-walk", w, bi).integers(0, len(S), size=(size, max(l, 1)))
            st = upstairs_state(size, width)
            for step in range(1, l + 1):
                kernels.poly_right_mul(st, gcoef, np.ascontiguousarray(letters[:, step - 1]), p, D * (step - 1) + 1)
            states.append(st)
        if F_spec == "zero-entry":
            hit = upstairs_predicate(states[0], p, "zero-entry")
        elif F_spec == "ad-resultant":
            hit = upstairs_predicate(states[0], p, "ad-fixed")
        elif F_spec == "trace-diff":
            t0 = (states[0][:, 0].astype(np.int16) + states[0][:, 3]) % p
            t1 = (states[1][:, 0].astype(np.int16) + states[1][:, 3]) % p
            hit = (t0 == t1).all(axis=1)
        else:
            hit = np.ones(size, dtype=bool)
            for st in states:
                hit &= upstairs_predicate(st, p, predicate, alpha)
        hits += int(hit.sum())
        done += size
        bi += 1
    est = hits / trials
    lo, hi = wilson_interval(hits, trials)
    warn = ""
    if hits == trials:
        warn = "F vanished on every sampled tuple; it is probably identically zero on SL2^r"
        warnings.warn(warn, RuntimeWarning, stacklevel=2)
    return ProductEscape(F_spec, r, l, est, lo, hi, trials, warn)


# free pairs

@dataclass
class FreePairCertificate:
    x: Mat2
    y: Mat2
    search_radius: int
    certified_depth: int
    status: str  # "certified-to-depth" or "refuted"
    relation_length: int | None = None
    pairs_tried: int = 0
    x_word: list = field(default_factory=list)
    y_word: list = field(default_factory=list)

    @property
    def certified(self) -> bool:
        return self.status == "certified-to-depth"

    @property
    def entry_bound(self) -> int:
        return max(self.x.max_entry_degree(), self.y.max_entry_degree())

    def as_dict(self) -> dict:
        return {"x": self.x.to_text(), "y": self.y.to_text(), "search_radius": self.search_radius,
                "certified_depth": self.certified_depth, "status": self.status,
                "relation_length": self.relation_length, "pairs_tried": self.pairs_tried,
                "x_word": self.x_word, "y_word": self.y_word, "entry_bound": self.entry_bound}


def shortest_relation(x: Mat2, y: Mat2, L: int) -> int | None:
    """Length of the shortest nontrivial reduced word in x^+-1, y^+-1 equal to I, if <= L."""
    letters = [x, inv(x), y, inv(y)]
    inverse_letter = [1, 0, 3, 2]
    e = identity(x)
    if L >= 1 and any(s == e for s in letters):
        return 1
    if L >= 2:
        # s t = I for letters with t != s^-1 as letters
        for i, s in enumerate(letters):
            for j, t in enumerate(letters):
                if j != inverse_letter[i] and mul(s, t) == e:
                    return 2
    depth = {e.key(): 0}
    frontier = [(e, -1)]
    d = 0
    while frontier and 2 * d + 1 <= L:
        best = None
        nxt = []
        for g, via in frontier:
            back = inverse_letter[via] if via >= 0 else -1
            for s in range(4):
                if s == back:
                    continue
                h = mul(g, letters[s])
                key = h.key()
                if key in depth:
                    cand = d + depth[key] + 1
                    if best is None or cand < best:
                        best = cand
                else:
                    depth[key] = d + 1
                    nxt.append((h, s))
        if best is not None and best <= L:
            return best
        frontier = nxt
        d += 1
    return None


def certify_pair(x: Mat2, y: Mat2, L: int) -> FreePairCertificate:
    rel = shortest_relation(x, y, L)
    status = "refuted" if rel is not None else "certified-to-depth"
    return FreePairCertificate(x, y, 0, L if rel is None else rel - 1, status, rel, 1)


def ball(S: GenSet, N: int) -> list[tuple[list, Mat2]]:
    """Distinct elements of B_S(N) with their first word in (length, lexicographic) order."""
    e = identity(S[0])
    seen = {e.key()}
    out = [([], e)]
    frontier = [([], e)]
    for _ in range(N):
        nxt = []
        for w, g in frontier:
            for s in range(len(S)):
                h = mul(g, S[s])
                if h.key() not in seen:
                    seen.add(h.key())
                    nxt.append((w + [s], h))
        out.extend(nxt)
        frontier = nxt
    return out


def free_pair_search(S: GenSet, N: int, L: int, max_pairs: int | None = None) -> FreePairCertificate:
    """First pair in B_S(N)^2, ordered by (max word length, words), with no relation of length <= L."""
    if N < 1 or L < 1:
        raise ValueError("need N >= 1 and L >= 1")
    elems = ball(S, N)
    pairs = []
    for i, (wx, x) in enumerate(elems):
        for j, (wy, y) in enumerate(elems):
            pairs.append((max(len(wx), len(wy)), wx, wy, i, j))
    pairs.sort(key=lambda t: (t[0], t[1], t[2]))
    tried = 0
    last = None
    for _, wx, wy, i, j in pairs:
        if max_pairs is not None and tried >= max_pairs:
            break
        tried += 1
        x, y = elems[i][1], elems[j][1]
        rel = shortest_relation(x, y, L)
        if rel is None:
            return FreePairCertificate(x, y, N, L, "certified-to-depth", None, tried, wx, wy)
        last = (x, y, rel, wx, wy)
    if last is None:
        e = identity(S[0])
        return FreePairCertificate(e, e, N, 0, "refuted", 1, tried)
    x, y, rel, wx, wy = last
    return FreePairCertificate(x, y, N, rel - 1, "refuted", rel, tried, wx, wy)


# free group return probabilities

def kesten_return_profile(k: int, l_max: int, budget: int = 5000) -> list[Fraction]:
    """Exact mu^(2l)(e), l = 1..l_max, for the simple walk on the free group of rank k.

    Dynamic programming over the distance r from the identity in the 2k-regular
    tree: from r = 0 every step goes to r = 1; from r >= 1 one step goes back
    and 2k - 1 go out.
    """
    if k < 2:
        raise ValueError("need 2k >= 4")
    if l_max > budget:
        raise BudgetExceeded("Kesten profile", l_max, budget)
    deg = 2 * k
    N = [1] + [0] * (2 * l_max + 1)
    out = []
    for step in range(1, 2 * l_max + 1):
        M = [0] * len(N)
        M[1] += deg * N[0]
        for r in range(1, min(step, len(N) - 1) + 1):
            if N[r]:
                M[r - 1] += N[r]
                if r + 1 < len(M):
                    M[r + 1] += (deg - 1) * N[r]
        N = M
        if step % 2 == 0:
            out.append(Fraction(N[0], deg**step))
    return out


def kesten_roots(profile: list[Fraction]) -> list[float]:
    """(mu^(2l)(e))^(1/2l) for l = 1, 2, ..."""
    return [math.exp(math.log(float(x)) / (2 * (i + 1))) if x else 0.0 for i, x in enumerate(profile)]


def kesten_ratio(profile: list[Fraction]) -> list[float]:
    """sqrt(mu^(2l+2)(e) / mu^(2l)(e)); converges faster than the root."""
    return [math.sqrt(float(profile[i + 1] / profile[i])) for i in range(len(profile) - 1)]


def tree_spectral_radius(d: int) -> float:
    return 2 * math.sqrt(d - 1) / d
