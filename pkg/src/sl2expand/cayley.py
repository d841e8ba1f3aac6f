"""Congruence quotients SL2(F_p[t]/(f)) and their Cayley graphs.

A quotient with square-free modulus ``f = f_1 ... f_m`` is handled through the
CRT product of the ``SL2(q_j)``.  Elements are never stored; they are indexed
by a closed-form rank.  Within one ``SL2(q)`` an element ``(a, b, c, d)`` of
field codes has rank

    (a - 1) q^2 + b q + c              if a != 0   (then d = (1 + bc)/a)
    (q - 1) q^2 + (b - 1) q + d        if a == 0   (then c = -1/b)

so the identity has rank 0, and a product element has the mixed-radix index
``sum_j rank_j * stride_j`` with the factor order of ``crt_moduli``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import kernels
from .polyring import PolyFp, prime_factors
from .quotient import FiniteField, ResidueRing, crt_combine, crt_moduli, finite_field, reduce
from .rng import make_rng
from .sl2core import (
    GenSet,
    Mat2,
    codes_ad_fixed,
    codes_from_mat,
    codes_is_square,
    codes_mul,
    codes_reducible,
    codes_torsion_trace,
    codes_trace,
    codes_zero_entry,
    reduce_mod,
)

ENUM_BUDGET = 10**7
DENSE_BUDGET = 4000
TABLE_BUDGET = 4 * 10**6
CHUNK = 1 << 17


class BudgetExceeded(RuntimeError):
    def __init__(self, what: str, size: int, budget: int, hint: str = ""):
        msg = f"{what}: size {size} exceeds budget {budget}"
        if hint:
            msg += f"; {hint}"
        super().__init__(msg)
        self.size = size
        self.budget = budget


def sl2_order(q: int) -> int:
    return q * (q * q - 1)


# single-factor rank/unrank

def rank_sl2(F: FiniteField, A: np.ndarray) -> np.ndarray:
    A = np.asarray(A, dtype=np.int64)
    q = F.q
    a, b, c, d = A[..., 0], A[..., 1], A[..., 2], A[..., 3]
    r1 = (a - 1) * q * q + b * q + c
    r0 = (q - 1) * q * q + (b - 1) * q + d
    return np.where(a != 0, r1, r0)


def unrank_sl2(F: FiniteField, r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=np.int64)
    q = F.q
    out = np.empty(r.shape + (4,), dtype=np.int32)
    top = r < (q - 1) * q * q
    # branch a != 0
    a = np.where(top, r // (q * q) + 1, 1)
    b = np.where(top, (r // q) % q, 0)
    c = np.where(top, r % q, 0)
    d = F.mul(F.add(1, F.mul(b, c)), F.inv(a))
    # branch a == 0
    r2 = r - (q - 1) * q * q
    b0 = np.where(top, 1, r2 // q + 1)
    d0 = np.where(top, 0, r2 % q)
    c0 = F.neg(F.inv(b0))
    out[..., 0] = np.where(top, a, 0)
    out[..., 1] = np.where(top, b, b0)
    out[..., 2] = np.where(top, c, c0)
    out[..., 3] = np.where(top, d, d0)
    return out


class QuotientGroup:
    """SL2(F_p[t]/(f)) for square-free f, indexed lazily by closed-form rank."""

    def __init__(self, ring: ResidueRing):
        if not ring.is_squarefree():
            raise ValueError(f"modulus of {ring.descriptor} is not square-free")
        self.ring = ring
        self.p = ring.p
        self.moduli = crt_moduli(ring)
        self.fields = [finite_field(m) for m in self.moduli]
        self.qs = [F.q for F in self.fields]
        self.factor_orders = [sl2_order(q) for q in self.qs]
        self.order = math.prod(self.factor_orders)
        strides = [1]
        for o in self.factor_orders[:-1]:
            strides.append(strides[-1] * o)
        self.strides = strides
        self._tables: dict = {}

    @classmethod
    def from_modulus(cls, f: PolyFp) -> "QuotientGroup":
        return cls(ResidueRing(f))

    @property
    def descriptor(self) -> str:
        return self.ring.descriptor

    @property
    def name(self) -> str:
        if len(self.qs) == 1:
            return f"SL2({self.qs[0]})"
        return "x".join(f"SL2({q})" for q in self.qs)

    def __len__(self):
        return self.order

    def __repr__(self):
        return f"QuotientGroup({self.descriptor}, order={self.order})"

    @property
    def is_field_group(self) -> bool:
        return len(self.fields) == 1

    @property
    def field(self) -> FiniteField:
        if len(self.fields) != 1:
            raise ValueError(f"{self.name} is a product group, not SL2(q)")
        return self.fields[0]

    # indexing
    def rank(self, codes: np.ndarray) -> np.ndarray:
        """(..., m, 4) codes -> (...) int64 indices."""
        codes = np.asarray(codes)
        idx = np.zeros(codes.shape[:-2], dtype=np.int64)
        for j, F in enumerate(self.fields):
            idx += rank_sl2(F, codes[..., j, :]) * self.strides[j]
        return idx

    def unrank(self, idx) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        out = np.empty(idx.shape + (len(self.fields), 4), dtype=np.int32)
        for j, F in enumerate(self.fields):
            out[..., j, :] = unrank_sl2(F, (idx // self.strides[j]) % self.factor_orders[j])
        return out

    def mul_codes(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        A = np.asarray(A)
        B = np.asarray(B)
        out = np.empty(np.broadcast_shapes(A.shape, B.shape), dtype=np.int32)
        for j, F in enumerate(self.fields):
            out[..., j, :] = codes_mul(F, A[..., j, :], B[..., j, :])
        return out

    def codes_of(self, g: Mat2) -> np.ndarray:
        if isinstance(g.ring, tuple):
            return np.stack([codes_from_mat(F, reduce_mod(g, F.ring)) for F in self.fields])
        if g.ring != self.ring:
            raise ValueError(f"matrix over {g.ring} is not in {self.descriptor}")
        return np.stack([codes_from_mat(F, Mat2(*(reduce(x.rep, F.ring) for x in g.entries))) for F in self.fields])

    def index_of(self, g: Mat2) -> int:
        return int(self.rank(self.codes_of(g)))

    def element(self, i: int) -> Mat2:
        codes = self.unrank(np.int64(i))
        if len(self.fields) == 1:
            return Mat2(*(self.fields[0].elem(int(x)) for x in codes[0]))
        entries = []
        for e in range(4):
            comps = [F.elem(int(codes[j, e])) for j, F in enumerate(self.fields)]
            entries.append(crt_combine(comps, self.ring))
        return Mat2(*entries)

    def __iter__(self):
        for i in range(self.order):
            yield self.element(i)

    def chunks(self, chunk: int = CHUNK):
        """Yield (start, codes) over all elements in index order."""
        for start in range(0, self.order, chunk):
            idx = np.arange(start, min(self.order, start + chunk), dtype=np.int64)
            yield start, self.unrank(idx)

    def all_codes(self) -> np.ndarray:
        return self.unrank(np.arange(self.order, dtype=np.int64))

    def gen_codes(self, S) -> np.ndarray:
        gens = list(S)
        return np.stack([self.codes_of(g) for g in gens]) if gens else np.zeros((0, len(self.fields), 4), np.int32)

    # Cayley tables
    def _table(self, S, side: str) -> np.ndarray:
        key = (side, tuple(g.key() for g in S))
        if key in self._tables:
            return self._tables[key]
        if self.order > TABLE_BUDGET:
            raise BudgetExceeded(f"neighbour table for {self.name}", self.order, TABLE_BUDGET)
        gens = self.gen_codes(S)
        k = len(gens)
        table = np.empty((self.order, k), dtype=np.int64)
        for start, codes in self.chunks():
            for s in range(k):
                prod = self.mul_codes(codes, gens[s]) if side == "right" else self.mul_codes(gens[s], codes)
                table[start:start + len(codes), s] = self.rank(prod)
        self._tables[key] = table
        return table

    def right_table(self, S) -> np.ndarray:
        """table[i, s] = index(elem_i * s)."""
        return self._table(S, "right")

    def left_table(self, S) -> np.ndarray:
        """table[i, s] = index(s * elem_i)."""
        return self._table(S, "left")

    # squares
    @cached_property
    def squaring_table(self) -> np.ndarray:
        """index(g^2) for every g."""
        out = np.empty(self.order, dtype=np.int64)
        for start, codes in self.chunks():
            out[start:start + len(codes)] = self.rank(self.mul_codes(codes, codes))
        return out

    @cached_property
    def square_mask(self) -> np.ndarray:
        mask = np.zeros(self.order, dtype=bool)
        mask[self.squaring_table] = True
        return mask

    def is_square_element(self, g: Mat2) -> bool:
        if self.order > ENUM_BUDGET:
            raise BudgetExceeded(f"squaring table for {self.name}", self.order, ENUM_BUDGET,
                                 "use the sampling estimator in walker instead")
        return bool(self.square_mask[self.index_of(g)])

    def predicate_mask(self, name: str, alpha: int = 2) -> np.ndarray:
        """Boolean mask over all elements for a named target set (product: all factors)."""
        mask = np.ones(self.order, dtype=bool)
        for start, codes in self.chunks():
            sl = slice(start, start + len(codes))
            mask[sl] = codes_predicate(self, codes, name, alpha)
        return mask


def codes_predicate(G: QuotientGroup, codes: np.ndarray, name: str, alpha: int = 2) -> np.ndarray:
    """Predicate on (..., m, 4) codes of a quotient.

    For a product group the target set is the CRT image of the upstairs set:
    zero-entry, trace and torsion need the condition in the combined ring,
    which for entries/traces means in every factor simultaneously; squares and
    reducibility are likewise componentwise.
    """
    m = len(G.fields)
    res = None
    for j, F in enumerate(G.fields):
        A = codes[..., j, :]
        if name == "zero-entry":
            part = A == 0  # per entry; combined below
        elif name == "trace":
            part = codes_trace(F, A) == F.const(alpha)
        elif name == "torsion":
            part = codes_trace(F, A)  # combined below
        elif name == "square":
            part = codes_is_square(F, A)
        elif name == "reducible":
            part = codes_reducible(F, A)
        elif name == "ad-fixed":
            part = codes_ad_fixed(F, A)
        elif name == "all":
            part = np.ones(A.shape[:-1], dtype=bool)
        else:
            raise ValueError(f"unknown predicate {name!r}")
        if name == "torsion":
            res = [part] if res is None else res + [part]
        elif res is None:
            res = part
        else:
            res = res & part
    if name == "zero-entry":
        return res.any(axis=-1)
    if name == "torsion":
        return _torsion_combined(G, res)
    return res


def _torsion_combined(G: QuotientGroup, traces: list) -> np.ndarray:
    # trace in F_p inside the combined ring: a common constant c in every factor
    out = traces[0] < G.p
    for tr in traces[1:]:
        out &= tr == traces[0]
    return out


def enumerate_group(ring: ResidueRing, budget: int = ENUM_BUDGET) -> QuotientGroup:
    G = QuotientGroup(ring)
    if G.order > budget:
        raise BudgetExceeded(f"enumeration of SL2({ring.descriptor})", G.order, budget)
    return G


def bruteforce_sl2_count(ring: ResidueRing) -> int:
    """Count det-1 matrices over the ring by scanning all |R|^4 quadruples.

    Ring elements are split into their CRT components; det = 1 must hold in
    every component.
    """
    R = ring.cardinality
    if R**4 > 5 * 10**7:
        raise BudgetExceeded("brute-force matrix scan", R**4, 5 * 10**7)
    moduli = crt_moduli(ring)
    fields = [finite_field(m) for m in moduli]
    comp = np.zeros((R, len(fields)), dtype=np.int32)
    for code in range(R):
        x = ring.from_code(code)
        for j, F in enumerate(fields):
            comp[code, j] = reduce(x.rep, F.ring).code
    total = 0
    codes = np.arange(R)
    for a in range(R):
        for b in range(R):
            c = codes[:, None]
            d = codes[None, :]
            ok = np.ones((R, R), dtype=bool)
            for j, F in enumerate(fields):
                det = F.sub(F.mul(comp[a, j], comp[d, j]), F.mul(comp[b, j], comp[c, j]))
                ok &= det == 1
            total += int(ok.sum())
    return total


# girth

@dataclass
class GirthReport:
    value: int | None
    exact: bool
    lower_bound: int
    degenerate: bool = False
    reason: str = ""
    method: str = ""

    def as_dict(self) -> dict:
        return {"value": self.value, "exact": self.exact, "lower_bound": self.lower_bound,
                "degenerate": self.degenerate, "reason": self.reason, "method": self.method}


def _degeneracy(G: QuotientGroup, gens: np.ndarray) -> str:
    ranks = G.rank(gens)
    if (ranks == 0).any():
        return "a generator maps to the identity"
    if len(np.unique(ranks)) < len(ranks):
        return "two generator letters have the same image"
    return ""


def girth(G: QuotientGroup, S: GenSet, max_length: int = 64, table_budget: int = TABLE_BUDGET) -> GirthReport:
    """Shortest nontrivial reduced word in S equal to 1 in G.

    Breadth-first search over reduced words from the identity; a non-tree edge
    between depths d(u), d(v) closes a cycle of length d(u) + d(v) + 1.
    """
    gens = G.gen_codes(S)
    why = _degeneracy(G, gens)
    if why:
        return GirthReport(None, False, 0, degenerate=True, reason=why, method="none")
    inv_letter = S.inverse_letter
    if G.order <= table_budget:
        right = G.right_table(S)
        best, depth = kernels.girth_bfs(right, inv_letter, max_length)
        method = f"table-bfs[{kernels.BACKEND}]"
    else:
        best, depth = _implicit_girth(G, gens, inv_letter, max_length)
        method = "implicit-bfs"
    if best:
        return GirthReport(best, True, best, method=method)
    return GirthReport(None, False, max_length + 1, reason=f"no cycle of length <= {max_length}", method=method)


def _implicit_girth(G: QuotientGroup, gens: np.ndarray, inv_letter: np.ndarray, max_length: int):
    k = len(gens)
    visited = np.zeros(1, dtype=np.int64)
    vdepth = np.zeros(1, dtype=np.int64)
    frontier = G.unrank(np.zeros(1, dtype=np.int64))
    via = np.full(1, -1, dtype=np.int64)
    d = 0
    while len(frontier) and 2 * d + 1 <= max_length:
        parents = np.repeat(np.arange(len(frontier)), k)
        letters = np.tile(np.arange(k), len(frontier))
        back = np.where(via[parents] >= 0, inv_letter[np.maximum(via[parents], 0)], -1)
        keep = letters != back
        parents, letters = parents[keep], letters[keep]
        prods = G.mul_codes(frontier[parents], gens[letters])
        idx = G.rank(prods)
        pos = np.searchsorted(visited, idx)
        pos_c = np.minimum(pos, len(visited) - 1)
        old = visited[pos_c] == idx
        best = 0
        if old.any():
            best = int((d + vdepth[pos_c[old]] + 1).min())
        new_idx = idx[~old]
        uniq, first, counts = np.unique(new_idx, return_index=True, return_counts=True)
        if (counts > 1).any():
            cand = 2 * d + 2
            best = cand if best == 0 else min(best, cand)
        if best and best <= max_length:
            return best, d
        new_codes = prods[~old][first]
        new_via = letters[~old][first]
        visited = np.concatenate([visited, uniq])
        vdepth = np.concatenate([vdepth, np.full(len(uniq), d + 1, dtype=np.int64)])
        order = np.argsort(visited, kind="stable")
        visited, vdepth = visited[order], vdepth[order]
        frontier, via = new_codes, new_via
        d += 1
    return 0, max(d - 1, 0)


# spectra

@dataclass
class SpectralReport:
    rho: float
    lambda2: float
    lambda_min: float
    method: str
    residual: float
    generated: bool = True
    component_order: int = 0
    iterations: int = 0
    note: str = ""

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def generated_component(G: QuotientGroup, S) -> np.ndarray:
    """Sorted indices of <S> (the identity's component)."""
    depth = kernels.bfs_depths(G.right_table(S), 0)
    return np.nonzero(depth >= 0)[0]


def _restricted_left(G: QuotientGroup, S) -> tuple[np.ndarray, bool]:
    left = G.left_table(S)
    comp = generated_component(G, S)
    if len(comp) == G.order:
        return left, True
    relabel = np.full(G.order, -1, dtype=np.int64)
    relabel[comp] = np.arange(len(comp))
    return relabel[left[comp]], False


def adjacency_dense(left: np.ndarray) -> np.ndarray:
    n, k = left.shape
    A = np.zeros((n, n), dtype=np.float64)
    rows = np.repeat(np.arange(n), k)
    np.add.at(A, (rows, left.ravel()), 1.0 / k)
    return A


def _rho_from(lam2: float, lmin: float) -> float:
    return max(abs(lam2), abs(lmin))


def spectral_rho(G: QuotientGroup, S, method: str = "auto", tol: float = 1e-6, seed: int = 0,
                 dense_budget: int = DENSE_BUDGET) -> SpectralReport:
    """Two-sided spectral radius of the normalized adjacency operator on mean-zero functions."""
    left, generated = _restricted_left(G, S)
    n, k = left.shape
    note = "" if generated else f"S generates a proper subgroup of order {n}; spectrum of Cay(<S>, S)"
    if method == "auto":
        method = "dense" if n <= dense_budget else "iterative"
    if n < 2:
        return SpectralReport(0.0, 0.0, 0.0, method, 0.0, generated, n, 0, note)
    if method == "dense":
        if n > dense_budget:
            raise BudgetExceeded("dense eigensolve", n, dense_budget, "use method='iterative'")
        A = adjacency_dense(left)
        if not np.array_equal(A, A.T):
            raise ValueError("adjacency matrix is not symmetric; S is not symmetric")
        w, V = np.linalg.eigh(A)
        lam2, lmin = float(w[-2]), float(w[0])
        res = max(float(np.linalg.norm(A @ V[:, j] - w[j] * V[:, j])) for j in (0, n - 2))
        return SpectralReport(_rho_from(lam2, lmin), lam2, lmin, "dense", res, generated, n, 0, note)
    if method != "iterative":
        raise ValueError(f"unknown method {method!r}")
    lam2, lmin, res, its = lanczos_extremes(lambda f: kernels.table_mean(f, left), n, tol=tol, seed=seed)
    return SpectralReport(_rho_from(lam2, lmin), lam2, lmin, "iterative", res, generated, n, its, note)


class NotConverged(RuntimeError):
    pass


def lanczos_extremes(matvec, n: int, tol: float = 1e-6, seed: int = 0, max_iter: int | None = None,
                     check_every: int = 10):
    """Largest and smallest eigenvalue of a symmetric operator on the mean-zero subspace.

    Lanczos with full reorthogonalization; constants are projected out after
    every matvec.  Convergence is certified by the explicit residual
    ``||A x - theta x||`` of both Ritz pairs.
    """
    rng = make_rng(seed, "lanczos", n)
    dim = n - 1
    max_iter = min(dim, max_iter or 2000)
    v = rng.standard_normal(n)
    v -= v.mean()
    v /= np.linalg.norm(v)
    Q = np.zeros((max_iter + 1, n))
    Q[0] = v
    alphas, betas = [], []
    best = None
    for j in range(max_iter):
        w = matvec(Q[j])
        w -= w.mean()
        a = float(Q[j] @ w)
        alphas.append(a)
        for _ in range(2):
            w -= Q[: j + 1].T @ (Q[: j + 1] @ w)
        b = float(np.linalg.norm(w))
        m = j + 1
        done = b < 1e-12 or m == max_iter
        if done or m % check_every == 0:
            T = np.diag(alphas) + np.diag(betas, 1) + np.diag(betas, -1)
            theta, Y = np.linalg.eigh(T)
            res = []
            for idx in (-1, 0):
                x = Q[:m].T @ Y[:, idx]
                x /= np.linalg.norm(x)
                r = matvec(x)
                r -= r.mean()
                res.append(float(np.linalg.norm(r - theta[idx] * x)))
            best = (float(theta[-1]), float(theta[0]), max(res), m)
            if max(res) < tol:
                return best
        if b < 1e-12:
            break
        betas.append(b)
        Q[j + 1] = w / b
    if best is not None and best[2] < tol:
        return best
    raise NotConverged(f"Lanczos stopped with residual {best[2] if best else float('nan'):.3e} > {tol}")


def is_bipartite(G: QuotientGroup, S) -> bool:
    """Two-colour the component of the identity by BFS parity."""
    right = G.right_table(S)
    depth = kernels.bfs_depths(right, 0)
    reach = depth >= 0
    par = depth % 2
    nb = right[reach]
    return bool(np.all(par[nb] != par[reach][:, None]))


def bipartite_table(table: np.ndarray) -> bool:
    depth = kernels.bfs_depths(table, 0)
    reach = depth >= 0
    par = depth % 2
    return bool(np.all(par[table[reach]] != par[reach][:, None]))


@dataclass
class MixingReport:
    rho: float
    deviations: list
    bounds: list
    violation: float
    transitive_hg_inv: bool
    transitive_hinv_g: bool

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def mixing_check(G: QuotientGroup, S, l_max: int, dense_budget: int = DENSE_BUDGET) -> MixingReport:
    """max over l, g, h of |<A^l chi_g, chi_h> - 1/|G|| - rho^l, from explicit powers of A.

    Also checks exactly, with integer path counts, whether the inner product
    depends only on h g^-1, and whether it depends only on h^-1 g.
    """
    n = G.order
    if n > dense_budget:
        raise BudgetExceeded("mixing check", n, dense_budget)
    rep = spectral_rho(G, S, method="dense")
    left = G.left_table(S)
    A = adjacency_dense(left)
    k = left.shape[1]
    C = np.zeros((n, n), dtype=np.int64)
    np.add.at(C, (np.repeat(np.arange(n), k), left.ravel()), 1)
    P = np.eye(n)
    Pc = np.eye(n, dtype=np.int64)
    devs, bounds = [], []
    viol = -np.inf
    codes = G.all_codes()
    inv_codes = codes.copy()
    for j, F in enumerate(G.fields):
        from .sl2core import codes_inv

        inv_codes[:, j, :] = codes_inv(F, codes[:, j, :])
    # pair index tables: hg_inv[h, g] and hinv_g[h, g]
    hg_inv = np.empty((n, n), dtype=np.int64)
    hinv_g = np.empty((n, n), dtype=np.int64)
    for h in range(n):
        hg_inv[h] = G.rank(G.mul_codes(codes[h][None], inv_codes))
        hinv_g[h] = G.rank(G.mul_codes(inv_codes[h][None], codes))
    exact_ok_a = exact_ok_b = True
    safe_l = int(62 / math.log2(k)) if k > 1 else l_max
    for l in range(l_max + 1):
        # entry (h, g) of A^l is <A^l chi_g, chi_h>
        dev = float(np.abs(P - 1.0 / n).max())
        bound = rep.rho**l
        devs.append(dev)
        bounds.append(bound)
        viol = max(viol, dev - bound)
        if l <= safe_l:
            col = Pc[:, 0]
            exact_ok_a &= bool(np.array_equal(Pc, col[hg_inv]))
            exact_ok_b &= bool(np.array_equal(Pc, col[hinv_g]))
            Pc = C @ Pc
        P = A @ P
    return MixingReport(rep.rho, devs, bounds, float(viol), exact_ok_a, exact_ok_b)


# subgroups

@dataclass
class SubgroupWitness:
    kind: str
    generators: list
    element_set: np.ndarray
    order: int
    index_in_G: int
    notes: dict = field(default_factory=dict)

    def contains(self, idx) -> np.ndarray:
        return np.isin(idx, self.element_set)


def _closure(G: QuotientGroup, gen_codes: np.ndarray) -> np.ndarray:
    """Sorted indices of the subgroup generated by the given codes (with inverses)."""
    from .sl2core import codes_inv

    if len(gen_codes) == 0:
        return np.zeros(1, dtype=np.int64)
    inv = np.stack([np.stack([codes_inv(F, g[j]) for j, F in enumerate(G.fields)]) for g in gen_codes])
    allg = np.concatenate([gen_codes, inv])
    seen = {0}
    frontier = G.unrank(np.zeros(1, dtype=np.int64))
    members = [0]
    while len(frontier):
        prods = G.mul_codes(frontier[:, None], allg[None]).reshape(-1, len(G.fields), 4)
        idx = G.rank(prods)
        uniq, first = np.unique(idx, return_index=True)
        fresh = np.array([i not in seen for i in uniq.tolist()], dtype=bool)
        if not fresh.any():
            break
        new = uniq[fresh]
        seen.update(new.tolist())
        members.extend(new.tolist())
        frontier = prods[first[fresh]]
    return np.array(sorted(members), dtype=np.int64)


def _greedy_generators(G: QuotientGroup, members: np.ndarray) -> tuple[list, np.ndarray]:
    gens: list = []
    span = np.zeros(1, dtype=np.int64)
    target = len(members)
    # try members in index order, largest jump first in practice is not needed
    for i in members.tolist():
        if len(span) == target:
            break
        if i in set(span.tolist()):
            continue
        gens.append(i)
        span = _closure(G, G.unrank(np.array(gens, dtype=np.int64)))
    return gens, span


def build_subgroup(G: QuotientGroup, kind: str, **params) -> SubgroupWitness:
    """Concrete subgroups of SL2(q): borel, torus, nonsplit, subfield, center, custom."""
    notes: dict = {}
    if kind == "custom":
        gens = params.get("generators")
        if not gens:
            raise ValueError("custom subgroup needs generators")
        members = _closure(G, G.gen_codes(gens))
        gen_mats = list(gens)
        return SubgroupWitness(kind, gen_mats, members, len(members), G.order // len(members), notes)
    F = G.field
    q = F.q
    codes = G.all_codes()[:, 0, :]
    a, b, c, d = (codes[:, j] for j in range(4))
    if kind == "borel":
        x, y = params.get("point", (1, 0))
        x, y = F.const(x) if isinstance(x, int) else x, F.const(y) if isinstance(y, int) else y
        gx = F.add(F.mul(a, x), F.mul(b, y))
        gy = F.add(F.mul(c, x), F.mul(d, y))
        mask = F.sub(F.mul(gx, y), F.mul(gy, x)) == 0
        notes["point"] = [int(x), int(y)]
        expected = q * (q - 1)
    elif kind == "torus":
        mask = (b == 0) & (c == 0)
        expected = q - 1
    elif kind == "nonsplit":
        tr = F.add(a, d)
        disc = F.sub(F.mul(tr, tr), F.const(4))
        elliptic = ~F.is_square(disc) & (tr != 0)
        if not elliptic.any():
            elliptic = ~F.is_square(disc)
        g0 = int(np.nonzero(elliptic)[0][0])
        gc = codes[g0]
        left = codes_mul(F, gc[None], codes)
        right = codes_mul(F, codes, gc[None])
        mask = (left == right).all(axis=1)
        tau = int(tr[g0])
        # chi_g = X^2 - tau X + 1 is irreducible over F_q; it defines F_{q^2}
        notes["quadratic"] = f"X^2 - ({F.elem(tau)})X + 1 over {F.descriptor}"
        notes["elliptic_element"] = g0
        expected = q + 1
    elif kind == "subfield":
        m = int(params["m"])
        sub = F.subfield_codes(m)
        mask = np.isin(codes, sub).all(axis=1)
        expected = sl2_order(F.p**m)
        notes["m"] = m
    elif kind == "center":
        m1 = F.neg_one
        mask = (b == 0) & (c == 0) & (((a == 1) & (d == 1)) | ((a == m1) & (d == m1)))
        expected = 2
    else:
        raise ValueError(f"unknown subgroup kind {kind!r}")
    members = np.nonzero(mask)[0].astype(np.int64)
    if len(members) != expected:
        raise RuntimeError(f"{kind} subgroup has {len(members)} elements, expected {expected}")
    gens, span = _greedy_generators(G, members)
    if not np.array_equal(span, members):
        raise RuntimeError(f"{kind} member set is not closed under multiplication")
    gen_mats = [G.element(i) for i in gens]
    return SubgroupWitness(kind, gen_mats, members, len(members), G.order // len(members), notes)


def metabelian_law_holds(G: QuotientGroup, H: SubgroupWitness, samples: int | None = None, seed: int = 0) -> bool:
    """[[a, b], [c, d]] = I for all (or sampled) quadruples from H."""
    from .sl2core import codes_inv

    F = G.field
    el = G.unrank(H.element_set)[:, 0, :]
    n = len(el)
    if samples is None:
        grid = np.array(np.meshgrid(*[np.arange(n)] * 4, indexing="ij")).reshape(4, -1)
    else:
        grid = make_rng(seed, "metabelian").integers(0, n, size=(4, samples))

    def comm(x, y):
        return codes_mul(F, codes_mul(F, codes_inv(F, x), codes_inv(F, y)), codes_mul(F, x, y))

    out = np.ones(grid.shape[1], dtype=bool)
    for s in range(0, grid.shape[1], CHUNK):
        sl = slice(s, s + CHUNK)
        A, B, C, D = (el[grid[i, sl]] for i in range(4))
        w = comm(comm(A, B), comm(C, D))
        out[sl] = (w[:, 0] == 1) & (w[:, 1] == 0) & (w[:, 2] == 0) & (w[:, 3] == 1)
    return bool(out.all())


# counting

def trace_class_sizes(F: FiniteField, tau: np.ndarray) -> np.ndarray:
    """Number of elements of SL2(q) with trace tau: q^2 at +-2, q^2+q split, q^2-q non-split."""
    q = F.q
    tau = np.asarray(tau)
    disc = F.sub(F.mul(tau, tau), F.const(4))
    out = np.where(disc == 0, q * q, np.where(F.is_square(disc), q * q + q, q * q - q))
    return out.astype(np.int64)


def closed_form_counts(F: FiniteField) -> dict:
    """Exact census numbers from trace-class sizes alone (no enumeration)."""
    q = F.q
    tau = F.all_codes()
    N = trace_class_sizes(F, tau)
    s = F.add(tau, F.const(2))
    disc = F.sub(F.mul(tau, tau), F.const(4))
    squares = int(N[(s != 0) & F.is_square(s)].sum()) + 1
    reducible = int(N[F.is_square(disc)].sum())
    pm2 = int(N[disc == 0].sum())
    return {
        "order": sl2_order(q),
        "squares": squares,
        "nonsquares": sl2_order(q) - squares,
        "reducible": reducible,
        "trace_pm2": pm2,
        "zero_entry": 4 * q * (q - 1) - 2 * (q - 1),
        "torsion": int(N[: F.p].sum()),
        "max_trace_count": int(N.max()),
    }


def predicate_density(F: FiniteField, name: str, alpha: int = 2) -> float:
    """|X| / |SL2(q)| for a named target set, in closed form."""
    cf = closed_form_counts(F)
    n = cf["order"]
    if name == "square":
        return cf["squares"] / n
    if name == "reducible":
        return cf["reducible"] / n
    if name == "zero-entry":
        return cf["zero_entry"] / n
    if name == "trace":
        return int(trace_class_sizes(F, np.array([F.const(alpha)]))[0]) / n
    if name == "torsion":
        return cf["torsion"] / n
    if name in ("ad-fixed", "all"):
        return 1.0
    raise ValueError(f"unknown predicate {name!r}")


@dataclass
class Census:
    group: str
    q: int
    order: int
    squares: int
    nonsquares: int
    reducible: int
    trace_pm2: int
    zero_entry: int
    torsion: int
    trace_counts: list
    squares_by_predicate: int
    basics: dict
    closed_form_agrees: bool

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def count_oracles(G: QuotientGroup, budget: int = ENUM_BUDGET) -> Census:
    """Exhaustive counts over SL2(q) from the squaring table and per-element tests."""
    if not G.is_field_group:
        raise ValueError("count_oracles needs a single irreducible modulus")
    if G.order > budget:
        raise BudgetExceeded(f"census of {G.name}", G.order, budget)
    F = G.field
    q = F.q
    codes = G.all_codes()[:, 0, :]
    squares = int(G.square_mask.sum())
    tr = codes_trace(F, codes)
    red = codes_reducible(F, codes)
    disc0 = F.sub(F.mul(tr, tr), F.const(4)) == 0
    zero = codes_zero_entry(F, codes)
    tors = codes_torsion_trace(F, codes)
    by_pred = int(codes_is_square(F, codes).sum())
    counts = np.bincount(tr, minlength=q)
    basics = sl2_basics(G)
    cf = closed_form_counts(F)
    agrees = (
        cf["squares"] == squares == by_pred
        and cf["reducible"] == int(red.sum())
        and cf["trace_pm2"] == int(disc0.sum())
        and cf["zero_entry"] == int(zero.sum())
        and cf["torsion"] == int(tors.sum())
        and bool(np.array_equal(trace_class_sizes(F, F.all_codes()), counts))
    )
    return Census(G.name, q, G.order, squares, G.order - squares, int(red.sum()), int(disc0.sum()),
                  int(zero.sum()), int(tors.sum()), counts.tolist(), by_pred, basics, bool(agrees))


def sl2_basics(G: QuotientGroup) -> dict:
    """For every non-central diagonal g: (i) C(g) = D, (ii) |ccl(g) cap D| = 2,
    (iii) g a square in SL2(q) implies g a square in D."""
    F = G.field
    codes = G.all_codes()[:, 0, :]
    diag_mask = (codes[:, 1] == 0) & (codes[:, 2] == 0)
    diag_idx = np.nonzero(diag_mask)[0]
    m1 = F.neg_one
    ok_i = ok_ii = ok_iii = True
    sq_in_D = set(G.rank(G.mul_codes(G.unrank(diag_idx), G.unrank(diag_idx))).tolist())
    from .sl2core import codes_inv

    inv_all = codes_inv(F, codes)
    for i in diag_idx.tolist():
        g = codes[i]
        if g[0] in (1, m1):
            continue
        comm = (codes_mul(F, codes, g[None]) == codes_mul(F, g[None], codes)).all(axis=1)
        ok_i &= bool(np.array_equal(comm, diag_mask))
        conj = codes_mul(F, codes_mul(F, codes, g[None]), inv_all)
        cidx = np.unique(G.rank(conj[:, None, :]))
        ok_ii &= int(diag_mask[cidx].sum()) == 2
        if G.square_mask[i]:
            ok_iii &= i in sq_in_D
    return {"centralizer_is_D": ok_i, "class_meets_D_twice": ok_ii, "squares_square_in_D": ok_iii}


# escape profiles

def coset_labels(G: QuotientGroup, H: SubgroupWitness) -> np.ndarray:
    """Label of the left coset gH for every g (smallest index in the coset)."""
    right = G.right_table(GenSetLike(H.generators))
    labels = np.arange(G.order, dtype=np.int64)
    while True:
        new = labels.copy()
        for s in range(right.shape[1]):
            np.minimum(new, labels[right[:, s]], out=new)
        # push back along edges too, since generators need not be symmetric
        for s in range(right.shape[1]):
            np.minimum.at(new, right[:, s], labels)
        new = new[new]
        if np.array_equal(new, labels):
            return labels
        labels = new


class GenSetLike:
    """Minimal letter container for tables of subgroup generators (no symmetrization)."""

    def __init__(self, mats):
        self.elems = tuple(mats)

    def __iter__(self):
        return iter(self.elems)

    def __len__(self):
        return len(self.elems)


@dataclass
class EscapeProfile:
    l_values: list
    direct: list
    folded: list
    direct_counts: list
    folded_counts: list
    exact_agreement: bool
    nonincreasing: bool
    index: int

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def escape_profile(G: QuotientGroup, S: GenSet, H: SubgroupWitness, l_max: int,
                   budget: int = ENUM_BUDGET) -> EscapeProfile:
    """mu^(2l)(H) for l = 1..l_max, both as direct mass and as the folded norm

        |S|^(2l) mu^(2l)(H) = sum over cosets C = gH of (number of l-words landing in C)^2.
    """
    from .walker import exact_path_counts_series

    if G.order > budget:
        raise BudgetExceeded("escape profile", G.order, budget)
    k = len(S)
    labels = coset_labels(G, H)
    _, coset_id = np.unique(labels, return_inverse=True)
    series = exact_path_counts_series(G, S, 2 * l_max)
    inH = np.zeros(G.order, dtype=bool)
    inH[H.element_set] = True
    ls, direct, folded, dc, fc = [], [], [], [], []
    agree = True
    for l in range(1, l_max + 1):
        c2 = series[2 * l]
        cl = series[l]
        d_int = int(sum(int(x) for x in c2[inH]))
        per_coset = np.zeros(int(coset_id.max()) + 1, dtype=object)
        np.add.at(per_coset, coset_id, cl.astype(object))
        f_int = int(sum(int(x) * int(x) for x in per_coset))
        agree &= d_int == f_int
        denom = k ** (2 * l)
        ls.append(l)
        dc.append(d_int)
        fc.append(f_int)
        direct.append(d_int / denom)
        folded.append(f_int / denom)
    from fractions import Fraction

    fr = [Fraction(x, k ** (2 * l)) for l, x in zip(ls, dc)]
    noninc = all(fr[i + 1] <= fr[i] for i in range(len(fr) - 1))
    return EscapeProfile(ls, direct, folded, dc, fc, bool(agree), bool(noninc), G.order // H.order)


def random_symmetric_genset(G: QuotientGroup, n_gens: int, seed: int, require_generating: bool = True,
                            max_tries: int = 1000) -> GenSet:
    """Random S = {g_1^+-1, ..., g_n^+-1}.

    For a field quotient the generators are lifted to SL2(F_p[t]) through
    elementary matrices; for a product ring they stay in the residue ring.
    """
    from .sl2core import lift_sl2

    rng = make_rng(seed, "genset", G.descriptor, n_gens)
    for _ in range(max_tries):
        idx = rng.integers(1, G.order, size=n_gens)
        if len(set(idx.tolist())) < n_gens:
            continue
        mats = [G.element(int(i)) for i in idx]
        S = GenSet(lift_sl2(g) for g in mats) if G.is_field_group else GenSet(mats)
        if _degeneracy(G, G.gen_codes(S)):
            continue
        if require_generating and len(generated_component(G, S)) != G.order:
            continue
        return S
    raise RuntimeError("could not draw a generating set")


# generation tests

@dataclass
class GenerationCheck:
    generates: bool
    method: str  # "closure" or "dickson"
    reasons: list

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _code_order_at_most(F: FiniteField, g: np.ndarray, bound: int) -> bool:
    one = np.array([1, 0, 0, 1], dtype=np.int32)
    acc = g.copy()
    for _ in range(bound):
        if np.array_equal(acc, one):
            return True
        acc = codes_mul(F, acc, g)
    return False


def dickson_check(F: FiniteField, x: np.ndarray, y: np.ndarray) -> GenerationCheck:
    """Sufficient test that <x, y> = SL2(q) for odd q, through the list of maximal subgroups.

    Rules out in turn: a common eigenvector (tr[x,y] = 2), the normalizers of
    tori (one of tr x, tr y, tr xy vanishes), the groups with all element orders
    <= 10 (2.A4, 2.S4, 2.A5), and subfield subgroups including their twisted
    extensions (squared traces all inside a maximal subfield).
    """
    from .sl2core import codes_inv

    reasons = []
    if F.p == 2:
        return GenerationCheck(False, "dickson", ["characteristic 2 not covered"])
    xi, yi = codes_inv(F, x), codes_inv(F, y)
    comm = codes_mul(F, codes_mul(F, xi, yi), codes_mul(F, x, y))
    if int(codes_trace(F, comm)) == F.const(2):
        reasons.append("tr[x,y] = 2: common eigenvector")
    xy = codes_mul(F, x, y)
    trs = [int(codes_trace(F, g)) for g in (x, y, xy)]
    if 0 in trs:
        reasons.append("a trace vanishes: possibly inside a torus normalizer")
    if all(_code_order_at_most(F, g, 10) for g in (x, y, xy, codes_mul(F, x, yi))):
        reasons.append("all tested element orders <= 10")
    sq = [int(F.mul(np.int64(t), np.int64(t))) for t in trs]
    n = F.n
    for r in sorted(set(prime_factors(n))) if n > 1 else []:
        sub = set(F.subfield_codes(n // r).tolist())
        if all(s in sub for s in sq):
            reasons.append(f"squared traces lie in the subfield of degree {n // r}")
    return GenerationCheck(not reasons, "dickson", reasons)


def generation_check(G: QuotientGroup, S, closure_budget: int = TABLE_BUDGET) -> GenerationCheck:
    """Does S generate G?  Exact closure when G is small, otherwise a Dickson test
    on the first two letters of every CRT factor (which is only sufficient)."""
    if G.order <= closure_budget:
        comp = generated_component(G, S)
        ok = len(comp) == G.order
        return GenerationCheck(ok, "closure", [] if ok else [f"<S> has order {len(comp)}"])
    codes = G.gen_codes(S)
    if len(codes) < 2:
        return GenerationCheck(False, "dickson", ["fewer than two letters"])
    x_i = 0
    y_i = next((i for i in range(1, len(codes)) if not np.array_equal(codes[i], codes[0])), 1)
    if len(S) >= 3 and hasattr(S, "inverse_letter") and int(S.inverse_letter[0]) == 1:
        y_i = 2
    reasons = []
    for j, F in enumerate(G.fields):
        chk = dickson_check(F, codes[x_i, j], codes[y_i, j])
        reasons += [f"factor {j}: {r}" for r in chk.reasons]
    return GenerationCheck(not reasons, "dickson", reasons)
