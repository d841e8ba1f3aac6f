"""Time each kernel under the compiled and numpy backends.

    python bench/bench_kernels.py [--repeat 5] [--json out.json]
"""

import argparse
import json
import time

import numpy as np

from sl2expand import kernels
from sl2expand.cayley import QuotientGroup
from sl2expand.polyring import smallest_irreducible
from sl2expand.presets import preset_genset
from sl2expand.quotient import ResidueRing, finite_field


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    S = preset_genset("free3")
    G = QuotientGroup(ResidueRing(smallest_irreducible(3, 4)))  # order 531360
    right, left = G.right_table(S), G.left_table(S)
    mu = np.random.default_rng(0).random(G.order)
    counts = np.random.default_rng(0).integers(0, 100, G.order)
    inv = S.inverse_letter

    F = finite_field(smallest_irreducible(3, 7))
    fgens = np.ascontiguousarray(QuotientGroup(F.ring).gen_codes(S)[:, 0, :]).astype(np.int32)
    B = 1 << 15
    letters = np.random.default_rng(1).integers(0, len(S), B)
    fstate = np.tile(np.array([1, 0, 0, 1], dtype=np.int32), (B, 1))

    gcoef = S.coeff_array()
    L = 200
    pstate = np.zeros((4096, 4, L + 1), dtype=np.int8)
    pstate[:, 0, 0] = pstate[:, 3, 0] = 1
    plet = np.random.default_rng(2).integers(0, len(S), 4096)

    def field_step(impl):
        st = fstate.copy()
        for _ in range(20):
            kernels.field_right_mul(st, fgens, letters, F, impl=impl)

    def poly_step(impl):
        st = pstate.copy()
        for k in range(1, L):
            kernels.poly_right_mul(st, gcoef, plet, 3, k, impl=impl)

    return {
        "pushforward": lambda impl: kernels.pushforward(mu, right, impl=impl),
        "pushforward_counts": lambda impl: kernels.pushforward_counts(counts, right, impl=impl),
        "table_mean": lambda impl: kernels.table_mean(mu, left, impl=impl),
        "bfs_depths": lambda impl: kernels.bfs_depths(right, 0, impl=impl),
        "girth_bfs": lambda impl: kernels.girth_bfs(right, inv, 40, impl=impl),
        "field_right_mul x20": field_step,
        "poly_right_mul x199": poly_step,
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", default=None)
    args = ap.parse_args()
    backends = kernels.backends()
    if "cython" not in backends:
        print("compiled backend not built; timing the numpy backend only")
    rows = []
    print(f"{'kernel':<22}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for name, fn in cases().items():
        t = {b: best_of(lambda: fn(impl), args.repeat) for b, impl in backends.items()}
        sp = t["python"] / t["cython"] if "cython" in t else float("nan")
        rows.append({"kernel": name, **{f"{b}_s": v for b, v in t.items()}, "speedup": sp})
        print(f"{name:<22}" + "".join(f"{t[b]:>12.4f}" for b in backends) + f"{sp:>9.1f}x")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=1)


if __name__ == "__main__":
    main()
