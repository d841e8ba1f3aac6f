"""The compiled and numpy backends must agree bit for bit."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sl2expand import kernels
from sl2expand.cayley import QuotientGroup, random_symmetric_genset
from sl2expand.polyring import PolyFp, smallest_irreducible
from sl2expand.presets import preset_genset
from sl2expand.quotient import ResidueRing, finite_field
from sl2expand.sl2core import codes_mul

BACKENDS = kernels.backends()
needs_both = pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled backend not built")


def test_backend_names():
    assert "python" in BACKENDS
    assert kernels.BACKEND in BACKENDS


@pytest.fixture(scope="module")
def sl2_5():
    G = QuotientGroup(ResidueRing(PolyFp.parse("0,1@5")))
    S = random_symmetric_genset(G, 2, seed=4)
    return G, S


def perm_table(n, k, seed):
    rng = np.random.default_rng(seed)
    return np.stack([rng.permutation(n) for _ in range(k)], axis=1).astype(np.int64)


@needs_both
@settings(max_examples=50, deadline=None)
@given(st.integers(2, 300), st.integers(1, 6), st.integers(0, 10**6))
def test_pushforward_equivalence(n, k, seed):
    T = perm_table(n, k, seed)
    mu = np.random.default_rng(seed).random(n)
    outs = [kernels.pushforward(mu, T, impl=b) for b in BACKENDS.values()]
    assert all(np.array_equal(outs[0], o) for o in outs[1:])
    cnt = np.random.default_rng(seed).integers(0, 1000, n)
    outs = [kernels.pushforward_counts(cnt, T, impl=b) for b in BACKENDS.values()]
    assert all(np.array_equal(outs[0], o) for o in outs[1:])
    assert outs[0].sum() == k * cnt.sum()


@needs_both
@settings(max_examples=50, deadline=None)
@given(st.integers(2, 300), st.integers(1, 6), st.integers(0, 10**6))
def test_table_mean_equivalence(n, k, seed):
    T = perm_table(n, k, seed)
    f = np.random.default_rng(seed + 1).standard_normal(n)
    outs = [kernels.table_mean(f, T, impl=b) for b in BACKENDS.values()]
    assert all(np.array_equal(outs[0], o) for o in outs[1:])


@needs_both
@settings(max_examples=50, deadline=None)
@given(st.integers(2, 300), st.integers(1, 4), st.integers(0, 10**6))
def test_bfs_equivalence(n, k, seed):
    T = perm_table(n, k, seed)
    outs = [kernels.bfs_depths(T, 0, impl=b) for b in BACKENDS.values()]
    assert all(np.array_equal(outs[0], o) for o in outs[1:])


@needs_both
def test_girth_equivalence(sl2_5):
    G, S = sl2_5
    right = G.right_table(S)
    for L in range(1, 20):
        outs = [kernels.girth_bfs(right, S.inverse_letter, L, impl=b)[0] for b in BACKENDS.values()]
        assert len(set(outs)) == 1, (L, outs)


@needs_both
@pytest.mark.parametrize("f", ["0,1@5", "1,0,1@3", "1,2,0,1@3"])
def test_field_right_mul_equivalence(f):
    F = finite_field(PolyFp.parse(f))
    G = QuotientGroup(F.ring)
    S = random_symmetric_genset(G, 2, seed=1, require_generating=False)
    gens = G.gen_codes(S)[:, 0, :]
    rng = np.random.default_rng(0)
    start = G.unrank(rng.integers(0, G.order, 500))[:, 0, :].astype(np.int32)
    letters = rng.integers(0, len(S), 500)
    outs = []
    for b in BACKENDS.values():
        st_ = np.ascontiguousarray(start.copy())
        kernels.field_right_mul(st_, gens, letters, F, impl=b)
        outs.append(st_)
    assert all(np.array_equal(outs[0], o) for o in outs[1:])
    assert np.array_equal(outs[0], codes_mul(F, start, gens[letters]))


@needs_both
def test_poly_right_mul_equivalence():
    S = preset_genset("free3")
    gc = S.coeff_array()
    rng = np.random.default_rng(3)
    B, L = 200, 30
    states = []
    for b in BACKENDS.values():
        st_ = np.zeros((B, 4, L + 1), dtype=np.int8)
        st_[:, 0, 0] = 1
        st_[:, 3, 0] = 1
        r = np.random.default_rng(3)
        for step in range(L):
            kernels.poly_right_mul(st_, gc, r.integers(0, len(S), B), 3, step + 1, impl=b)
        states.append(st_)
    assert all(np.array_equal(states[0], s) for s in states[1:])
    del rng


def test_pure_backend_env(monkeypatch):
    import importlib

    monkeypatch.setenv("SL2EXPAND_PURE", "1")
    mod = importlib.reload(kernels)
    try:
        assert mod.BACKEND == "python"
    finally:
        monkeypatch.delenv("SL2EXPAND_PURE")
        importlib.reload(kernels)


def test_smallest_irreducible_tables_build():
    F = finite_field(smallest_irreducible(3, 7))
    a = F.all_codes()
    assert np.array_equal(F.mul(a, 1), a)
