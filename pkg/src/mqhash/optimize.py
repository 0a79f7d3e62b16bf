"""Search for epsilon-biased sets and min-max optimal hash parameters.

The objective for a parameter matrix is its worst-case collision fidelity,
``max_{x != 0} prod_j f_j(x)`` with ``f_j`` the per-row factor from
:func:`mqhash.hashcore.row_fidelities`.  It is always evaluated over every
nonzero ``x``.

Three strategies are offered:

``exhaustive``
    enumerates every canonical candidate and certifies the optimum.
``random-restart``
    iterated local search over several independently seeded chains.  Each
    local step replaces one row by its best response over a row pool.  For
    prime-power q the pool is a set of orbit representatives under
    multiplication by units of Z_q, which covers the full row space because
    ``f_{u*S}(x) = f_S(u*x)``.
``annealing``
    single-entry moves with a geometric temperature schedule.
"""

from __future__ import annotations

import itertools
import logging
import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .hashcore import (
    TIE_TOL,
    BiasedSet,
    HashParams,
    bias_profile,
    row_fidelities,
    worst_case_collision,
)

log = logging.getLogger(__name__)

STRATEGIES = ("exhaustive", "random-restart", "annealing")
EXHAUSTIVE_LIMIT = 10**7
POOL_LIMIT = 50_000
# representatives scored per best response when the pool is larger
SAMPLE_ROWS = 4000
# sideways moves are ranked by sum_x (P(x)/max P)^PNORM
PNORM = 8
REL_TOL = 1e-9


@dataclass(frozen=True)
class SearchConfig:
    strategy: str = "random-restart"
    budget: int | None = None
    seed: int = 0
    symmetry_reduction: bool = True
    chains: int = 4
    workers: int = 1

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; choose from {STRATEGIES}")
        if self.budget is not None and (int(self.budget) != self.budget or self.budget < 1):
            raise ValueError("budget must be a positive integer or None")
        if self.chains < 1 or self.workers < 1:
            raise ValueError("chains and workers must be >= 1")


@dataclass(frozen=True)
class SearchReport:
    params: HashParams
    worst_case_fidelity: float
    x_star: int
    evaluations: int
    wall_time: float
    strategy: str = "random-restart"
    certified: bool = False

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "worst_case_fidelity": self.worst_case_fidelity,
            "x_star": self.x_star,
            "evaluations": self.evaluations,
            "wall_time": self.wall_time,
            "strategy": self.strategy,
            "certified": self.certified,
        }


def _check_qd(q: int, d: int):
    if int(q) != q or q < 2:
        raise ValueError(f"q must be an integer >= 2, got {q!r}")
    if int(d) != d or d < 2:
        raise ValueError(f"d must be an integer >= 2, got {d!r}")
    if d >= q:
        raise ValueError(f"need d < q, got d={d}, q={q}")


def _first_argmin(values: np.ndarray) -> int:
    """Smallest index within TIE_TOL of the minimum."""
    return int(np.flatnonzero(values <= values.min() + TIE_TOL)[0])


def prime_power_base(q: int) -> int | None:
    """p if q == p**k for a prime p, else None."""
    for p in range(2, math.isqrt(q) + 1):
        if q % p == 0:
            while q % p == 0:
                q //= p
            return p if q == 1 else None
    return q if q > 1 else None


def units(q: int) -> np.ndarray:
    return np.array([u for u in range(1, q) if math.gcd(u, q) == 1], dtype=np.int64)


def canonical_rows(q: int, d: int) -> np.ndarray:
    """All sorted rows (0, a_2 < ... < a_d), in lexicographic order."""
    if d == 1:
        return np.zeros((1, 1), dtype=np.int64)
    combos = itertools.combinations(range(1, q), d - 1)
    flat = np.fromiter(itertools.chain.from_iterable(combos), dtype=np.int64)
    rest = flat.reshape(-1, d - 1)
    return np.hstack([np.zeros((rest.shape[0], 1), dtype=np.int64), rest])


def _ordered_rows(q: int, d: int) -> np.ndarray:
    perms = itertools.permutations(range(1, q), d - 1)
    flat = np.fromiter(itertools.chain.from_iterable(perms), dtype=np.int64)
    rest = flat.reshape(-1, d - 1)
    return np.hstack([np.zeros((rest.shape[0], 1), dtype=np.int64), rest])


# ---------------------------------------------------------------------------
# Epsilon-biased sets


def _biased_candidates(q: int, d: int, reduce: bool) -> np.ndarray:
    p = prime_power_base(q) if reduce else None
    if p is None:
        return canonical_rows(q, d)
    # Up to a unit multiplier every set whose elements are not all divisible
    # by p contains 1; the remaining sets have bias 1 at x = q/p.
    rest = canonical_rows(q - 1, d - 1)[:, 1:] + 1
    ones = np.ones((rest.shape[0], 1), dtype=np.int64)
    return np.hstack([np.zeros_like(ones), ones, rest])


def _max_bias_rows(rows: np.ndarray, q: int) -> tuple[np.ndarray, np.ndarray]:
    fid = row_fidelities(rows, q)
    arg = fid.argmax(axis=1)
    return np.sqrt(fid.max(axis=1)), arg + 1


def best_biased_set(q: int, d: int, config: SearchConfig | None = None) -> BiasedSet:
    """Canonical d-element subset of Z_q with the smallest maximal bias found."""
    _check_qd(q, d)
    config = config or SearchConfig(strategy="exhaustive")
    count = math.comb(q - 1, d - 1)
    if config.strategy == "exhaustive" and count <= EXHAUSTIVE_LIMIT:
        rows = _biased_candidates(q, d, config.symmetry_reduction)
        certified = True
    else:
        if config.strategy == "exhaustive":
            warnings.warn(f"{count} candidate sets exceed the exhaustive ceiling; sampling instead")
        rng = np.random.default_rng(config.seed)
        n = min(config.budget or 100_000, count)
        rows = np.sort(np.array([rng.choice(np.arange(1, q), d - 1, replace=False)
                                 for _ in range(n)]), axis=1)
        rows = np.unique(np.hstack([np.zeros((n, 1), dtype=np.int64), rows]), axis=0)
        certified = False
    best_val, best_row = np.inf, None
    for lo in range(0, rows.shape[0], 20_000):
        chunk = rows[lo:lo + 20_000]
        vals, _ = _max_bias_rows(chunk, q)
        i = _first_argmin(vals)
        if vals[i] < best_val - TIE_TOL:
            best_val, best_row = float(vals[i]), chunk[i]
    prof = bias_profile(best_row, q)
    eps = float(prof[1:].max())
    x_star = int(np.flatnonzero(prof[1:] >= eps - TIE_TOL)[0]) + 1
    return BiasedSet(q=q, elements=tuple(int(v) for v in best_row), epsilon=eps,
                     certified=certified, x_star=x_star)


def epsilon_biased_bound(q: int, d: int, m: int, config: SearchConfig | None = None) -> float:
    """Worst-case collision when every qudit reuses the best biased set.

    The single-qudit worst case is epsilon**2; with the same row on all m
    qudits the worst case is its m-th power.
    """
    if int(m) != m or m < 1:
        raise ValueError(f"m must be a positive integer, got {m!r}")
    bs = best_biased_set(q, d, config)
    return (bs.epsilon ** 2) ** m


# ---------------------------------------------------------------------------
# Row pools


class RowPool:
    """Candidate rows, each stored as its collision-factor vector over x = 1..q-1.

    Candidate ``i`` is base row ``i // U`` multiplied by unit ``i % U``; its
    factor vector is the base vector read at ``u*x mod q``.
    """

    def __init__(self, q: int, base: np.ndarray, multipliers: np.ndarray):
        self.q = q
        self.base = base
        self.multipliers = multipliers
        self.table = row_fidelities(base, q)
        xs = np.arange(1, q)
        self.perm = (multipliers[:, None] * xs[None, :]) % q - 1
        # inv[u, y] is the x index with u*x = y
        self.inv = np.argsort(self.perm, axis=1)
        self.size = base.shape[0] * multipliers.size
        self._powers: dict[int, np.ndarray] = {}

    @classmethod
    def build(cls, q: int, d: int, rng: np.random.Generator, reduce: bool = True,
              limit: int = POOL_LIMIT) -> "RowPool":
        one = np.ones(1, dtype=np.int64)
        p = prime_power_base(q) if reduce else None
        if p is None:
            if math.comb(q - 1, d - 1) <= limit:
                return cls(q, canonical_rows(q, d), one)
            return cls(q, _sample_canonical(rng, q, d, limit), one)
        # Orbit representatives under units: for each g = p**a, the rows made
        # of multiples of g that contain g itself.
        levels = []
        g = 1
        while g < q:
            if math.comb(q // g - 2, d - 2) > 0:
                levels.append(g)
            g *= p
        counts = [math.comb(q // g - 2, d - 2) for g in levels]
        if sum(counts) <= limit:
            base = np.vstack([_level_rows(q, d, g) for g in levels])
        else:
            base = _sample_levels(rng, q, d, levels, counts, limit)
        return cls(q, base, units(q))

    def row(self, i: int) -> tuple[int, ...]:
        r, u = divmod(int(i), self.multipliers.size)
        vals = (self.base[r] * self.multipliers[u]) % self.q
        return tuple(sorted(int(v) for v in vals))

    def vector(self, i: int) -> np.ndarray:
        r, u = divmod(int(i), self.multipliers.size)
        return self.table[r, self.perm[u]]

    def powered(self, p: int) -> np.ndarray:
        if p not in self._powers:
            self._powers[p] = self.table**p
        return self._powers[p]

    def best_response(self, others: np.ndarray, p: int, rows: np.ndarray | None = None,
                      shortlist: int = 64) -> tuple[int, np.ndarray]:
        """Row to multiply into ``others`` so the product has the smallest max.

        Every candidate is ranked by sum_x (others(x) * f(x))**p, which is a
        single matrix product over the pool; the best ``shortlist`` of them
        are then re-ranked exactly by (max, p-norm).  Returns the chosen
        candidate index and the resulting product vector.
        """
        rows = np.arange(self.base.shape[0]) if rows is None else rows
        top = others.max()
        weights = (others / top) ** p if top > 0 else np.ones_like(others)
        # sum_x f_r(u*x)^p w(x)^p = sum_y f_r(y)^p w(u^-1 * y)^p
        scores = self.powered(p)[rows] @ weights[self.inv].T
        k = min(shortlist, scores.size)
        flat = np.argpartition(scores.ravel(), k - 1)[:k]
        ri, ui = np.unravel_index(flat, scores.shape)
        prods = self.table[rows[ri][:, None], self.perm[ui]] * others
        ranked = [(_score(prods[i]), i) for i in range(k)]
        best = ranked[0]
        for cand in ranked[1:]:
            if _better(cand[0], best[0]):
                best = cand
        i = best[1]
        return int(rows[ri[i]]) * self.multipliers.size + int(ui[i]), prods[i]


def _level_rows(q: int, d: int, g: int) -> np.ndarray:
    if d == 2:
        return np.array([[0, g]], dtype=np.int64)
    combos = itertools.combinations(range(2, q // g), d - 2)
    rest = np.fromiter(itertools.chain.from_iterable(combos), dtype=np.int64)
    rest = rest.reshape(-1, d - 2) * g
    head = np.tile(np.array([0, g], dtype=np.int64), (rest.shape[0], 1))
    return np.sort(np.hstack([head, rest]), axis=1)


def _sample_levels(rng, q, d, levels, counts, limit) -> np.ndarray:
    weights = np.array(counts, dtype=float) / sum(counts)
    rows = set()
    for _ in range(20 * limit):
        if len(rows) >= limit:
            break
        g = levels[rng.choice(len(levels), p=weights)]
        rest = rng.choice(np.arange(2, q // g), d - 2, replace=False) * g
        rows.add(tuple(sorted((0, g) + tuple(int(v) for v in rest))))
    return np.array(sorted(rows), dtype=np.int64)


def _sample_canonical(rng, q, d, limit) -> np.ndarray:
    rows = set()
    for _ in range(20 * limit):
        if len(rows) >= limit:
            break
        rest = rng.choice(np.arange(1, q), d - 1, replace=False)
        rows.add((0,) + tuple(sorted(int(v) for v in rest)))
    return np.array(sorted(rows), dtype=np.int64)


# ---------------------------------------------------------------------------
# Iterated local search


def _score(prod: np.ndarray) -> tuple[float, float]:
    top = float(prod.max())
    if top <= 0.0:
        return 0.0, 0.0
    return top, float(((prod / top) ** PNORM).sum())


def _better(a: tuple[float, float], b: tuple[float, float]) -> bool:
    """Lexicographic comparison with a relative tolerance on the max."""
    if a[0] < b[0] * (1 - REL_TOL):
        return True
    return a[0] <= b[0] * (1 + REL_TOL) and a[1] < b[1] * (1 - REL_TOL)


class _Chain:
    """One iterated-local-search walk with its own random stream."""

    powers = (8, 16, 32)

    def __init__(self, pool: RowPool, m: int, rng: np.random.Generator, budget: int,
                 sample: int = SAMPLE_ROWS):
        self.pool, self.m, self.rng, self.budget = pool, m, rng, budget
        self.sample = sample if pool.base.shape[0] > sample else None
        self.evaluations = 0

    def _random_row(self) -> int:
        return int(self.rng.integers(self.pool.size))

    def descend(self, idx: list[int]) -> tuple[list[int], float]:
        V = np.array([self.pool.vector(i) for i in idx])
        cur = _score(V.prod(axis=0))
        p = int(self.rng.choice(self.powers))
        improved = True
        while improved and self.evaluations < self.budget:
            improved = False
            for j in self.rng.permutation(self.m):
                if cur[0] == 0.0:
                    break
                others = np.prod(np.delete(V, j, axis=0), axis=0) if self.m > 1 \
                    else np.ones(V.shape[1])
                rows = None
                if self.sample is not None:
                    rows = self.rng.choice(self.pool.base.shape[0], self.sample, replace=False)
                i, prod = self.pool.best_response(others, p, rows)
                self.evaluations += (self.sample or self.pool.base.shape[0]) \
                    * self.pool.multipliers.size
                new = _score(prod)
                if _better(new, cur):
                    idx[j] = i
                    V[j] = self.pool.vector(i)
                    cur = _score(V.prod(axis=0))
                    improved = True
        return idx, cur[0]

    def run(self, temperature: float = 0.1, patience: int = 300) -> tuple[list[int], float]:
        idx, val = self.descend([self._random_row() for _ in range(self.m)])
        best_idx, best = list(idx), val
        stale = 0
        while self.evaluations < self.budget and best > 0.0:
            trial = list(idx)
            k = 1 if self.m < 3 or self.rng.random() < 0.7 else 2
            for j in self.rng.choice(self.m, size=k, replace=False):
                trial[j] = self._random_row()
            trial, tval = self.descend(trial)
            stale += 1
            if tval < best * (1 - REL_TOL):
                best_idx, best, stale = list(trial), tval, 0
            log_ratio = math.log(max(tval, 1e-300)) - math.log(max(val, 1e-300))
            if log_ratio <= 0 or self.rng.random() < math.exp(-log_ratio / temperature):
                idx, val = trial, tval
            if stale >= patience:
                idx, val = self.descend([self._random_row() for _ in range(self.m)])
                stale = 0
        return best_idx, best


def _params_from_rows(q: int, rows: Sequence[Sequence[int]]) -> HashParams:
    rows = sorted(tuple(sorted(r)) for r in rows)
    return HashParams(q=q, d=len(rows[0]), m=len(rows), s=tuple(rows))


def _pick(candidates: list[tuple[float, HashParams]]) -> tuple[float, HashParams]:
    """Min by fidelity, ties broken by lexicographic params."""
    low = min(v for v, _ in candidates)
    tied = [p for v, p in candidates if v <= low + TIE_TOL]
    best = min(tied, key=lambda p: p.s)
    return low, best


def default_budget(pool: RowPool, m: int) -> int:
    """Evaluation budget used when the config leaves it unset.

    Sized as a fixed number of best responses per qudit; fewer when each
    response is expensive.
    """
    per_response = min(pool.base.shape[0], SAMPLE_ROWS) * pool.multipliers.size
    responses = 4000 if per_response < 100_000 else 1600
    return m * responses * per_response


def _random_restart(q, d, m, config) -> tuple[HashParams, int]:
    pool = RowPool.build(q, d, np.random.default_rng([config.seed, 2**31]),
                         reduce=config.symmetry_reduction)
    budget = config.budget or default_budget(pool, m)
    per_chain = max(1, budget // config.chains)

    def one(c: int):
        chain = _Chain(pool, m, np.random.default_rng([config.seed, c]), per_chain)
        idx, _ = chain.run()
        params = _params_from_rows(q, [pool.row(i) for i in idx])
        return worst_case_collision(params)[1], params, chain.evaluations

    if config.workers > 1:
        with ThreadPoolExecutor(config.workers) as ex:
            results = list(ex.map(one, range(config.chains)))
    else:
        results = [one(c) for c in range(config.chains)]
    _, params = _pick([(v, p) for v, p, _ in results])
    return params, sum(e for _, _, e in results)


# ---------------------------------------------------------------------------
# Annealing


def _anneal(q, d, m, config, t_start=0.3, t_end=1e-3) -> tuple[HashParams, int]:
    results = []
    per_chain = max(1, (config.budget or 50_000 * m * config.chains) // config.chains)
    for c in range(config.chains):
        rng = np.random.default_rng([config.seed, c])
        s = np.zeros((m, d), dtype=np.int64)
        for j in range(m):
            s[j, 1:] = rng.choice(np.arange(1, q), d - 1, replace=False)
        V = row_fidelities(s, q)
        energy = math.log(max(V.prod(axis=0).max(), 1e-300))
        best_e, best_s = energy, s.copy()
        step = max(1, q // 8)
        for t in range(per_chain):
            temp = t_start * (t_end / t_start) ** (t / per_chain)
            j = int(rng.integers(m))
            k = int(rng.integers(1, d))
            new = int((s[j, k] + rng.integers(-step, step + 1)) % q)
            if new in s[j]:
                continue
            old = s[j, k]
            s[j, k] = new
            v = row_fidelities(s[j:j + 1], q)[0]
            prod = np.prod(np.delete(V, j, axis=0), axis=0) * v
            e = math.log(max(prod.max(), 1e-300))
            if e <= energy or rng.random() < math.exp(-(e - energy) / temp):
                energy, V[j] = e, v
                if e < best_e:
                    best_e, best_s = e, s.copy()
            else:
                s[j, k] = old
        params = _params_from_rows(q, best_s.tolist())
        results.append((worst_case_collision(params)[1], params))
    _, params = _pick(results)
    return params, per_chain * config.chains


# ---------------------------------------------------------------------------
# Exhaustive


def _exhaustive(q, d, m, reduce: bool) -> tuple[HashParams, int] | None:
    n_rows = math.comb(q - 1, d - 1) if reduce else math.perm(q - 1, d - 1)
    total = math.comb(n_rows + m - 1, m) if reduce else n_rows**m
    if total > EXHAUSTIVE_LIMIT:
        return None
    rows = canonical_rows(q, d) if reduce else _ordered_rows(q, d)
    table = row_fidelities(rows, q)
    combos = (itertools.combinations_with_replacement(range(len(rows)), m) if reduce
              else itertools.product(range(len(rows)), repeat=m))
    best_val, best_combo = np.inf, None
    while True:
        block = np.fromiter(itertools.chain.from_iterable(itertools.islice(combos, 100_000)),
                            dtype=np.int64)
        if block.size == 0:
            break
        block = block.reshape(-1, m)
        vals = table[block].prod(axis=1).max(axis=1)
        i = _first_argmin(vals)
        if vals[i] < best_val - TIE_TOL:
            best_val, best_combo = float(vals[i]), block[i]
    params = HashParams(q=q, d=d, m=m, s=tuple(tuple(int(v) for v in rows[r]) for r in best_combo))
    return params, total


def optimize_params(q: int, d: int, m: int, config: SearchConfig | None = None) -> SearchReport:
    """Minimize the worst-case collision fidelity over parameter matrices."""
    _check_qd(q, d)
    if int(m) != m or m < 1:
        raise ValueError(f"m must be a positive integer, got {m!r}")
    config = config or SearchConfig()
    t0 = time.perf_counter()
    strategy, certified = config.strategy, False
    if strategy == "exhaustive":
        found = _exhaustive(q, d, m, config.symmetry_reduction)
        if found is None:
            warnings.warn("parameter space exceeds the exhaustive ceiling; "
                          "falling back to random-restart search")
            strategy = "random-restart"
        else:
            params, evals = found
            certified = True
    if strategy == "random-restart":
        params, evals = _random_restart(q, d, m, config)
    elif strategy == "annealing":
        params, evals = _anneal(q, d, m, config)
    x_star, fid = worst_case_collision(params)
    return SearchReport(params=params, worst_case_fidelity=fid, x_star=x_star,
                        evaluations=int(evals), wall_time=time.perf_counter() - t0,
                        strategy=strategy, certified=certified)


# ---------------------------------------------------------------------------
# One-wayness and the trade-off


def decoding_probability(params: HashParams) -> float:
    """d**m / q, the one-wayness bound.

    Values above 1 mean the state space is larger than the input space; they
    are returned unchanged with a warning.
    """
    value = params.d ** params.m / params.q
    if value > 1:
        warnings.warn(f"decoding bound {value:.4g} exceeds 1 (d**m > q)")
    return value


@dataclass
class TradeoffRow:
    d: int
    feasible: list[int]
    collisions: dict[int, float | None] = field(default_factory=dict)
    decoding: dict[int, float] = field(default_factory=dict)
    params: dict[int, HashParams] = field(default_factory=dict)


def tradeoff(q: int, d_list: Sequence[int], m_max: int, collision_limit: float = 0.25,
             decoding_limit: float = 0.15, config: SearchConfig | None = None,
             budgets: dict | None = None) -> list[TradeoffRow]:
    """Feasible qudit counts per dimension under both limits.

    The collision search is skipped (value ``None``) when d**m/q already
    violates the decoding limit.  ``budgets`` may map (d, m) to a per-case
    search budget.
    """
    for name, lim in (("collision_limit", collision_limit), ("decoding_limit", decoding_limit)):
        if not 0 < lim <= 1:
            raise ValueError(f"{name} must lie in (0, 1], got {lim!r}")
    config = config or SearchConfig()
    out = []
    for d in d_list:
        row = TradeoffRow(d=d, feasible=[])
        for m in range(1, m_max + 1):
            dec = d**m / q
            row.decoding[m] = dec
            if dec > decoding_limit:
                row.collisions[m] = None
                continue
            cfg = config
            if budgets and (d, m) in budgets:
                cfg = replace(config, budget=budgets[(d, m)])
            rep = optimize_params(q, d, m, cfg)
            row.collisions[m] = rep.worst_case_fidelity
            row.params[m] = rep.params
            if rep.worst_case_fidelity <= collision_limit:
                row.feasible.append(m)
        out.append(row)
    return out
