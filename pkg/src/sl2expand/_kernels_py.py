"""Pure numpy kernels. Reference semantics for the compiled backend.

Floating-point loops accumulate in the same order as the compiled versions
(generator-major), so both backends return bit-identical arrays.
"""

import numpy as np

BACKEND = "python"


def pushforward(mu, right):
    """One step of the walk: mass at i moves to right[i, s] with weight 1/k each."""
    n, k = right.shape
    out = np.zeros(n, dtype=np.float64)
    w = mu / k
    for s in range(k):
        out[right[:, s]] += w
    return out


def pushforward_counts(counts, right):
    """Integer path counts: out[right[i, s]] += counts[i]."""
    n, k = right.shape
    out = np.zeros(n, dtype=np.int64)
    for s in range(k):
        out[right[:, s]] += counts
    return out


def table_mean(f, left):
    """(A f)[i] = mean over s of f[left[i, s]]."""
    k = left.shape[1]
    acc = f[left[:, 0]].astype(np.float64)
    for s in range(1, k):
        acc += f[left[:, s]]
    return acc / k


def bfs_depths(table, start):
    """Breadth-first depths from ``start`` along table edges; -1 if unreachable."""
    n, k = table.shape
    depth = np.full(n, -1, dtype=np.int64)
    depth[start] = 0
    frontier = np.array([start], dtype=np.int64)
    d = 0
    while frontier.size:
        nxt = np.unique(table[frontier].ravel())
        nxt = nxt[depth[nxt] < 0]
        d += 1
        depth[nxt] = d
        frontier = nxt
    return depth


def girth_bfs(right, inv_letter, max_length):
    """Non-backtracking BFS from vertex 0 (the identity).

    Returns ``(best, last_depth)``: ``best`` is the shortest cycle length found
    (0 if none within ``max_length``) and ``last_depth`` the last level expanded.
    """
    n, k = right.shape
    depth = np.full(n, -1, dtype=np.int64)
    via = np.full(n, -1, dtype=np.int64)
    depth[0] = 0
    frontier = [0]
    best = 0
    d = 0
    while frontier and 2 * d + 1 <= max_length:
        nxt = []
        for u in frontier:
            back = inv_letter[via[u]] if via[u] >= 0 else -1
            for s in range(k):
                if s == back:
                    continue
                v = right[u, s]
                if depth[v] < 0:
                    depth[v] = d + 1
                    via[v] = s
                    nxt.append(v)
                else:
                    cand = d + depth[v] + 1
                    if cand <= max_length and (best == 0 or cand < best):
                        best = cand
        if best:
            return best, d
        frontier = nxt
        d += 1
    return best, d - 1 if d else 0


def field_right_mul(state, gens, letters, exp, log, zech, q):
    """state[i] <- state[i] @ gens[letters[i]] over F_q, codes in place."""
    qm1 = q - 1
    g = gens[letters]

    def mul(x, y):
        lx = log[x].astype(np.int64)
        ly = log[y].astype(np.int64)
        r = exp[(lx + ly) % qm1]
        return np.where((x == 0) | (y == 0), 0, r)

    def add(x, y):
        lx = log[x].astype(np.int64)
        ly = log[y].astype(np.int64)
        z = zech[(ly - lx) % qm1].astype(np.int64)
        r = np.where(z < 0, 0, exp[(lx + z) % qm1])
        return np.where(x == 0, y, np.where(y == 0, x, r))

    a, b, c, d = (state[:, j].copy() for j in range(4))
    state[:, 0] = add(mul(a, g[:, 0]), mul(b, g[:, 2]))
    state[:, 1] = add(mul(a, g[:, 1]), mul(b, g[:, 3]))
    state[:, 2] = add(mul(c, g[:, 0]), mul(d, g[:, 2]))
    state[:, 3] = add(mul(c, g[:, 1]), mul(d, g[:, 3]))


def poly_right_mul(state, gens, letters, p, width):
    """Upstairs step on coefficient arrays.

    ``state`` is (B, 4, L) int8 with entries a, b, c, d; ``gens`` is (k, 4, D+1);
    only the first ``width`` coefficients of the state can be nonzero.
    """
    B, _, L = state.shape
    D1 = gens.shape[2]
    g = gens[letters].astype(np.int16)
    out = np.zeros((B, 4, L), dtype=np.int16)
    src = state[:, :, :width].astype(np.int16)
    for j in range(D1):
        hi = min(L, width + j)
        n = hi - j
        if n <= 0:
            continue
        a = src[:, 0, :n]
        b = src[:, 1, :n]
        c = src[:, 2, :n]
        d = src[:, 3, :n]
        out[:, 0, j:hi] += a * g[:, 0, j, None] + b * g[:, 2, j, None]
        out[:, 1, j:hi] += a * g[:, 1, j, None] + b * g[:, 3, j, None]
        out[:, 2, j:hi] += c * g[:, 0, j, None] + d * g[:, 2, j, None]
        out[:, 3, j:hi] += c * g[:, 1, j, None] + d * g[:, 3, j, None]
        out %= p
    state[...] = out.astype(np.int8)
