"""Experiment drivers: small sieve, big sieve, expander survey, and decay-shape fits.

Each driver takes an :class:`ExperimentConfig` and returns an
:class:`ExperimentReport` whose rows are reproducible from (config, seed).
"""

from __future__ import annotations

import dataclasses
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .cayley import (
    DENSE_BUDGET,
    ENUM_BUDGET,
    TABLE_BUDGET,
    BudgetExceeded,
    QuotientGroup,
    closed_form_counts,
    generation_check,
    girth,
    is_bipartite,
    predicate_density,
    spectral_rho,
    trace_class_sizes,
)
from .polyring import (
    PolyFp,
    admissible_sequence,
    irreducibles,
    is_admissible,
    primes_above,
    random_irreducible,
)
from .presets import FREE_PAIR_F3_DEPTH, PRESETS, preset_genset
from .quotient import ResidueRing, finite_field
from .rng import RNG_ID
from .sl2core import GenSet, parse_matrix
from .walker import (
    TRIAL_BUDGET,
    WALK_BUDGET,
    check_predicate,
    escape_probability,
    quotient_walk_mass,
    wilson_interval,
)

STRATEGIES = ("progression", "primes", "explicit")
SMALL_PREDICATES = ("zero-entry", "trace", "torsion", "ad-fixed")
BIG_PREDICATES = ("square", "reducible")


def _int_list(v) -> list[int]:
    if isinstance(v, str):
        return [int(x) for x in v.replace(" ", "").split(",") if x]
    return [int(x) for x in v]


def parse_schedule(v) -> list[int]:
    """"10,20,30" or "10:60:2" (inclusive range with step)."""
    if isinstance(v, str) and ":" in v:
        parts = [int(x) for x in v.split(":")]
        lo, hi = parts[0], parts[1]
        step = parts[2] if len(parts) > 2 else 1
        return list(range(lo, hi + 1, step))
    return _int_list(v)


@dataclass
class ExperimentConfig:
    p: int = 3
    generators: str = "free3"  # preset name, or matrix literals separated by "|"
    strategy: str = "progression"
    M: int = 2
    degrees: list = field(default_factory=list)  # explicit strategy only
    count: int = 5  # number of degrees produced by the strategy
    l_schedule: list = field(default_factory=lambda: list(range(10, 61, 2)))
    trials: int = 10**6
    direct_trials: int = 0
    seed: int = 0
    predicate: str = "trace"
    alpha: int = 2
    c: float = 5.0  # small sieve pairing: use the largest n_i with c*n_i <= l
    kappa: float = 1.0  # big sieve: i(l) = ceil(kappa*sqrt(l/log l))
    i2: int = 0  # big sieve: smallest factor degree; 0 means the first prime > M
    gamma: float = 0.75
    r: int = 1
    rho_plateau: float = 0.99
    girth_max: int = 40
    enum_budget: int = ENUM_BUDGET
    table_budget: int = TABLE_BUDGET
    dense_budget: int = DENSE_BUDGET
    walk_budget: int = WALK_BUDGET
    trial_budget: int = TRIAL_BUDGET

    def __post_init__(self):
        self.degrees = _int_list(self.degrees)
        self.l_schedule = parse_schedule(self.l_schedule)
        for name in ("p", "M", "count", "trials", "direct_trials", "seed", "alpha", "i2", "r", "girth_max",
                     "enum_budget", "table_budget", "dense_budget", "walk_budget", "trial_budget"):
            setattr(self, name, int(getattr(self, name)))
        for name in ("c", "kappa", "gamma", "rho_plateau"):
            setattr(self, name, float(getattr(self, name)))
        self.validate()

    @classmethod
    def from_mapping(cls, values: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(values) - names
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**values)

    def validate(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {', '.join(STRATEGIES)}")
        check_predicate(self.predicate)
        if any(b <= a for a, b in zip(self.l_schedule, self.l_schedule[1:])):
            raise ValueError("l schedule must be strictly increasing")
        if self.l_schedule and self.l_schedule[0] < 0:
            raise ValueError("walk lengths must be >= 0")
        if self.l_schedule and self.l_schedule[-1] > self.walk_budget:
            raise BudgetExceeded("walk length", self.l_schedule[-1], self.walk_budget)
        if self.trials > self.trial_budget:
            raise BudgetExceeded("trials", self.trials, self.trial_budget)
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")
        if self.strategy == "explicit":
            bad = [n for n in self.degrees if n < 2 or not is_admissible(n, self.M)]
            if not self.degrees or bad:
                raise ValueError(f"explicit degrees must be non-empty and {self.M}-admissible; rejected {bad}")

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    def genset(self) -> GenSet:
        if self.generators in PRESETS:
            S = preset_genset(self.generators)
        else:
            S = GenSet(parse_matrix(s.strip(), self.p) for s in self.generators.split("|") if s.strip())
        if S.p != self.p:
            raise ValueError(f"generators live over F_{S.p}, config has p = {self.p}")
        return S

    def degree_sequence(self) -> list[int]:
        if self.strategy == "explicit":
            out = sorted(set(self.degrees))
        elif self.strategy == "progression":
            out = admissible_sequence(self.M, self.count)
        else:
            out = primes_above(self.M, self.count)
        for n in out:
            assert is_admissible(n, self.M), n
        return out


@dataclass
class ExperimentReport:
    experiment: str
    config: dict
    rows: list
    fit: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    wall_clock: float = 0.0  # excluded from determinism comparisons

    def records(self) -> list[dict]:
        """JSON-lines records: header, one per row, summary. No timing in any of them."""
        seed = self.config.get("seed")
        out = [{"schema": 1, "type": "header", "experiment": self.experiment, "params": self.config,
                "rng_id": RNG_ID}]
        for row in self.rows:
            out.append({"schema": 1, "type": "row", "experiment": self.experiment, **row, "seed": seed,
                        "rng_id": RNG_ID})
        out.append({"schema": 1, "type": "summary", "experiment": self.experiment, "fit": self.fit,
                    "checks": self.checks, "notes": self.notes})
        return out

    @property
    def passed(self) -> bool:
        return all(bool(v) for v in self.checks.values())


# fits

def loglinear_fit(x, y) -> dict:
    """Least squares for log y = a + b x. Returns slope, intercept, r2 and the point count."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    keep = y > 0
    x, ly = x[keep], np.log(y[keep])
    if len(x) < 2 or np.ptp(x) == 0:
        return {"slope": float("nan"), "intercept": float("nan"), "r2": float("nan"), "points": int(len(x))}
    b, a = np.polyfit(x, ly, 1)
    resid = ly - (a + b * x)
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return {"slope": float(b), "intercept": float(a), "r2": r2, "points": int(len(x))}


def stretched_variable(l) -> np.ndarray:
    l = np.asarray(l, dtype=np.float64)
    return np.sqrt(l / np.log(l))


def classify_shape(ls, ys) -> dict:
    """Compare log y against l (exponential) and against sqrt(l/log l) (stretched)."""
    ls = np.asarray(ls, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    keep = ls >= 2
    ls, ys = ls[keep], ys[keep]
    e = loglinear_fit(ls, ys)
    s = loglinear_fit(stretched_variable(ls), ys)
    shape = "exponential" if e["r2"] >= s["r2"] else "stretched"
    return {"shape": shape, "r2_exponential": e["r2"], "r2_stretched": s["r2"],
            "slope_exponential": e["slope"], "slope_stretched": s["slope"]}


def scheduled_factors(l: int, kappa: float) -> int:
    """i(l) = ceil(kappa * sqrt(l / log l)), at least 1."""
    if l < 3:
        return 1
    return max(1, math.ceil(kappa * math.sqrt(l / math.log(l))))


# modulus selection

def choose_modulus(S: GenSet, n: int, seed: int, table_budget: int = TABLE_BUDGET,
                   max_tries: int = 64) -> tuple[PolyFp, dict]:
    """An irreducible of degree n modulo which S generates SL2(p^n).

    Small fields scan irreducibles in counting order and test by closure; large
    ones draw seeded random irreducibles and use the Dickson test.
    """
    p = S.p
    q = p**n
    tried = []
    if q * (q * q - 1) <= table_budget:
        cands = irreducibles(p, n)
    else:
        cands = (random_irreducible(p, n, seed + 7919 * j) for j in range(max_tries))
    for f in cands:
        G = QuotientGroup(ResidueRing(f))
        chk = generation_check(G, S, table_budget)
        if chk.generates:
            return f, {"modulus": f.to_text(), "generation": chk.method, "rejected": tried}
        tried.append(f.to_text())
        if len(tried) >= max_tries:
            break
    raise RuntimeError(f"no irreducible of degree {n} found on which S generates (tried {len(tried)})")


# small sieve

def pair_degree(l: int, degrees: list[int], c: float) -> tuple[int, bool]:
    """Largest n with c*n <= l; otherwise the smallest n, flagged unpaired."""
    ok = [n for n in degrees if c * n <= l]
    if ok:
        return max(ok), True
    return min(degrees), False


def run_small_sieve(cfg: ExperimentConfig) -> ExperimentReport:
    t0 = time.perf_counter()
    if cfg.predicate not in SMALL_PREDICATES:
        raise ValueError(f"small sieve needs a predicate with small image: {', '.join(SMALL_PREDICATES)}")
    S = cfg.genset()
    degrees = cfg.degree_sequence()
    if not degrees:
        raise RuntimeError("strategy produced no admissible degree")
    notes = []
    ls = cfg.l_schedule
    assign: dict[int, list[int]] = {}
    paired = {}
    for l in ls:
        n, ok = pair_degree(l, degrees, cfg.c)
        assign.setdefault(n, []).append(l)
        paired[l] = ok
    unpaired = [l for l in ls if not paired[l]]
    if unpaired:
        notes.append(f"l in {unpaired} below c*min(n_i); used the smallest degree")
    mods = {}
    for n in sorted(assign):
        f, info = choose_modulus(S, n, cfg.seed, cfg.table_budget)
        mods[n] = (f, info)
        if info["rejected"]:
            notes.append(f"degree {n}: skipped {', '.join(info['rejected'])} (S does not generate there)")
    rows = {}
    for n in sorted(assign):
        f, info = mods[n]
        for er in escape_probability(S, cfg.predicate, assign[n], f, cfg.trials, cfg.seed, cfg.alpha,
                                     cfg.direct_trials, exact_budget=cfg.table_budget):
            F = finite_field(f)
            rows[er.l] = {
                "l": er.l,
                "estimate": er.bound,
                "ci_lo": er.bound_lo,
                "ci_hi": er.bound_hi,
                "bound_exact": er.bound_exact,
                "bound_trials": er.bound_trials,
                "modulus": info["modulus"],
                "degree": n,
                "paired": paired[er.l],
                "generation": info["generation"],
                "image_density": predicate_density(F, cfg.predicate, cfg.alpha),
                "direct": er.direct if er.direct_trials else None,
                "direct_lo": er.direct_lo if er.direct_trials else None,
                "direct_hi": er.direct_hi if er.direct_trials else None,
                "direct_trials": er.direct_trials,
                "consistent": er.consistent,
            }
    rows = [rows[l] for l in ls]
    fit_rows = [r for r in rows if r["l"] >= 1]
    fit = loglinear_fit([r["l"] for r in fit_rows], [r["estimate"] for r in fit_rows])
    fit.update(classify_shape([r["l"] for r in fit_rows], [r["estimate"] for r in fit_rows]))
    checks = {
        "negative_slope": bool(fit["slope"] < 0),
        "r2_at_least_0.9": bool(fit["r2"] >= 0.9),
        "direct_below_bound": all(r["consistent"] for r in rows),
    }
    q2 = cfg.p**2
    F2 = finite_field(next(irreducibles(cfg.p, 2)))
    cf = closed_form_counts(F2)
    per_trace = int(trace_class_sizes(F2, F2.all_codes()).max())
    C = per_trace / cf["order"] * cfg.p**2
    notes.append(f"census at q={q2}: max per-trace count {per_trace} of {cf['order']}, so C = {C:.4g} in C p^(-n)")
    checks["census_C_at_most_4"] = bool(C <= 4)
    return ExperimentReport("small-sieve", cfg.as_dict(), rows, fit, checks, notes, time.perf_counter() - t0)


# big sieve

def run_big_sieve(cfg: ExperimentConfig) -> ExperimentReport:
    t0 = time.perf_counter()
    if cfg.predicate not in BIG_PREDICATES:
        raise ValueError(f"big sieve needs a predicate of density < 1: {', '.join(BIG_PREDICATES)}")
    S = cfg.genset()
    i2 = cfg.i2 or primes_above(cfg.M, 1)[0]
    ls = cfg.l_schedule
    i_max = max(scheduled_factors(l, cfg.kappa) for l in ls)
    degrees = [n for n in primes_above(max(cfg.M, i2 - 1), i_max) if n >= i2][:i_max]
    notes = [f"i2 = {i2} is a free parameter (smallest factor degree); left at its default unless set"]
    factors = []
    for n in degrees:
        f, info = choose_modulus(S, n, cfg.seed, cfg.table_budget)
        factors.append((n, f, info))
        if info["rejected"]:
            notes.append(f"degree {n}: skipped {', '.join(info['rejected'])} (S does not generate there)")
    dens = [predicate_density(finite_field(f), cfg.predicate, cfg.alpha) for _, f, _ in factors]
    by_i: dict[int, list[int]] = {}
    for l in ls:
        by_i.setdefault(scheduled_factors(l, cfg.kappa), []).append(l)
    rows = {}
    budget_ok = True
    for i in sorted(by_i):
        mods = [f for _, f, _ in factors[:i]]
        census = math.prod(dens[:i])
        cap = 2**cfg.r * cfg.gamma**i
        counts = quotient_walk_mass(S, mods, cfg.predicate, by_i[i], cfg.trials, cfg.seed, cfg.alpha)
        for l in by_i[i]:
            k = counts[l]
            lo, hi = wilson_interval(k, cfg.trials)
            est = k / cfg.trials
            ok = est <= cap
            budget_ok &= ok
            rows[l] = {
                "l": l,
                "i": i,
                "estimate": est,
                "ci_lo": lo,
                "ci_hi": hi,
                "bound_exact": False,
                "bound_trials": cfg.trials,
                "census_density": census,
                "census_bound": 2**cfg.r * census,
                "cap": cap,
                "within_cap": bool(ok),
                "census_within_cap": bool(census <= cfg.gamma**i),
                "moduli": [f.to_text() for f in mods],
                "degrees": degrees[:i],
            }
    rows = [rows[l] for l in ls]
    fit = loglinear_fit([r["l"] for r in rows], [r["estimate"] for r in rows])
    fit.update(classify_shape([r["l"] for r in rows], [r["estimate"] for r in rows]))
    checks = {
        "bound_within_2r_gamma_i": bool(budget_ok),
        "census_density_within_gamma_i": all(r["census_within_cap"] for r in rows),
    }
    notes.append("product quotient bounds are sampled on the CRT product; census densities are multiplied per factor")
    return ExperimentReport("big-sieve", cfg.as_dict(), rows, fit, checks, notes, time.perf_counter() - t0)


# expander survey

def run_expander_survey(cfg: ExperimentConfig) -> ExperimentReport:
    """Girth, rho and bipartiteness over one generating modulus per degree."""
    t0 = time.perf_counter()
    S = cfg.genset()
    degrees = sorted(set(cfg.degrees)) if cfg.strategy == "explicit" else cfg.degree_sequence()
    D = max(S.degree_bound, 1)
    certified_depth = FREE_PAIR_F3_DEPTH if cfg.generators == "free3" else 0
    rows = []
    notes = []
    for n in degrees:
        f, info = choose_modulus(S, n, cfg.seed, cfg.table_budget)
        G = QuotientGroup(ResidueRing(f))
        g = girth(G, S, max_length=cfg.girth_max, table_budget=cfg.table_budget)
        row = {"degree": n, "modulus": info["modulus"], "order": G.order, "generation": info["generation"],
               "girth": g.value, "girth_method": g.method}
        bound = n / D
        row["girth_bound"] = bound
        row["girth_check"] = None
        if certified_depth >= n / D:
            row["girth_check"] = bool(g.value is None or g.value >= bound)
        if G.order <= cfg.table_budget:
            row["bipartite"] = bool(is_bipartite(G, S))
            row["bipartite_method"] = "two-colouring"
            try:
                sp = spectral_rho(G, S, seed=cfg.seed, dense_budget=cfg.dense_budget)
                row["rho"] = sp.rho
                row["rho_method"] = sp.method
            except BudgetExceeded as e:
                row["rho"] = None
                row["rho_method"] = f"skipped: {e}"
        else:
            # SL2(q), q > 3, is perfect, so a generating S has no index-2 subgroup to colour by
            row["bipartite"] = False if G.qs[0] > 3 else None
            row["bipartite_method"] = "perfect group"
            row["rho"] = None
            row["rho_method"] = "skipped: over table budget"
        rows.append(row)
        if info["rejected"]:
            notes.append(f"degree {n}: skipped {', '.join(info['rejected'])} (S does not generate there)")
    rhos = [r["rho"] for r in rows if r["rho"] is not None]
    checks = {
        "girth_at_least_deg_over_D": all(r["girth_check"] is not False for r in rows),
        "rho_below_plateau": all(x <= cfg.rho_plateau for x in rhos),
        "non_bipartite_q_gt_3": all(r["bipartite"] is False for r in rows if cfg.p**r["degree"] > 3),
    }
    fit = {"rho_max": max(rhos) if rhos else None, "plateau": cfg.rho_plateau, "entry_degree_bound": D,
           "certified_depth": certified_depth}
    return ExperimentReport("survey", cfg.as_dict(), rows, fit, checks, notes, time.perf_counter() - t0)
