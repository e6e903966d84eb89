"""Seeded Monte-Carlo simulation of the decomposition process.

Nodes of a decomposition tree are numbered breadth-first (root = 0, then
generation by generation, children of a node contiguous and in parent
order).  Node ``m`` draws its offspring count from uniform number ``m`` of
the replicate's stream, so a trace, a materialized tree and a vectorized
study replicate built from the same seed agree exactly.
"""
from __future__ import annotations

import json
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import rng
from .errors import DomainError, SimulationLimitError
from .model import OffspringModel, extinction_probability

DEFAULT_EXTINCTION_DEPTH = 60
DEFAULT_MAX_NODES = 10_000_000
#: A lineage whose eventual-extinction probability alpha**z drops below this
#: is treated as surviving and no longer expanded (only past ``depth_cap``).
ESCAPE_PROBABILITY = 1e-15
MIN_REPLICATES = 100
COND_MASS_LEVELS = (1, 2, 3)


def _check_cap(depth_cap):
    if isinstance(depth_cap, bool) or not isinstance(depth_cap, (int, np.integer)) or depth_cap < 1:
        raise DomainError(f"depth_cap must be a positive integer, got {depth_cap!r}")
    return int(depth_cap)


def _as_model(model):
    return model if isinstance(model, OffspringModel) else OffspringModel(model)


@dataclass(frozen=True)
class GenerationTrace:
    """Per-generation population counts ``z`` of one realization.

    ``z`` ends at the first zero when the process dies out before
    ``depth_cap``; otherwise it has ``depth_cap + 1`` entries.
    """
    z: tuple
    depth_cap: int
    extinct_at: int | None = None

    def truncated_total(self, n: int) -> int:
        if n < 0:
            raise DomainError("n must be nonnegative")
        if n >= len(self.z) and self.extinct_at is None:
            raise DomainError(f"trace was only simulated to depth {self.depth_cap}")
        return int(sum(self.z[: n + 1]))

    @property
    def total(self) -> int:
        return int(sum(self.z))


def _expand(lam, key, first_id, count):
    """Offspring counts of nodes ``first_id .. first_id + count - 1``."""
    ids = np.arange(first_id, first_id + count, dtype=np.uint64)
    u = rng.uniforms(np.full(count, key, dtype=np.uint64), ids)
    return rng.poisson_from_uniform(lam, u)


def _grow(model, seed, depth_cap, max_nodes, keep_draws):
    depth_cap = _check_cap(depth_cap)
    key = rng.stream_key(seed)
    z = [1]
    draws = []
    first = 0
    for _ in range(depth_cap):
        width = z[-1]
        x = _expand(model.lam, key, first, width)
        if keep_draws:
            draws.append(x)
        first += width
        z.append(int(x.sum()))
        if first + z[-1] > max_nodes:
            raise SimulationLimitError(
                f"tree exceeds {max_nodes} nodes; lower depth_cap or raise max_nodes")
        if z[-1] == 0:
            break
    extinct_at = len(z) - 1 if z[-1] == 0 else None
    return GenerationTrace(tuple(z), depth_cap, extinct_at), draws


def simulate_trace(model, seed: int, depth_cap: int,
                   max_nodes: int = DEFAULT_MAX_NODES) -> GenerationTrace:
    """Generation sizes of one decomposition, stopped at extinction or ``depth_cap``."""
    trace, _ = _grow(_as_model(model), seed, depth_cap, max_nodes, keep_draws=False)
    return trace


@dataclass(frozen=True)
class DecompositionTree:
    """A decomposition tree in breadth-first node order.

    ``parent[i]`` is the parent id of node ``i`` (-1 for the root) and
    ``level[i]`` its generation.  Child ids of a node are contiguous.
    """
    parent: np.ndarray
    level: np.ndarray
    depth_cap: int

    def __len__(self):
        return len(self.parent)

    @property
    def n_nodes(self):
        return len(self.parent)

    def level_counts(self):
        return tuple(int(c) for c in np.bincount(self.level))

    def children(self, i):
        return [int(c) for c in np.flatnonzero(self.parent == i)]

    def child_lists(self):
        out = [[] for _ in range(len(self.parent))]
        for child, p in enumerate(self.parent[1:], start=1):
            out[p].append(child)
        return out

    def edges(self):
        return [(int(p), c) for c, p in enumerate(self.parent) if p >= 0]


def simulate_tree(model, seed: int, depth_cap: int,
                  max_nodes: int = DEFAULT_MAX_NODES) -> DecompositionTree:
    """Materialize the parent/child structure behind :func:`simulate_trace`."""
    trace, draws = _grow(_as_model(model), seed, depth_cap, max_nodes, keep_draws=True)
    parent = [-1]
    level = [0]
    first = 0
    for k, x in enumerate(draws):
        ids = np.arange(first, first + len(x))
        parent.extend(np.repeat(ids, x).tolist())
        level.extend([k + 1] * int(x.sum()))
        first += len(x)
    tree = DecompositionTree(np.asarray(parent, dtype=np.int64),
                             np.asarray(level, dtype=np.int64), trace.depth_cap)
    return tree


# -- export ------------------------------------------------------------------

def _tree_dict(tree):
    kids = tree.child_lists()
    nodes = [{"id": i, "level": int(lv), "children": []} for i, lv in enumerate(tree.level)]
    for i, cs in enumerate(kids):
        nodes[i]["children"] = [nodes[c] for c in cs]
    return nodes[0]


def export_tree(tree: DecompositionTree, fmt: str = "json") -> str:
    """Serialize a tree as nested JSON ``{id, level, children}`` or Graphviz DOT."""
    if fmt == "json":
        return json.dumps(_tree_dict(tree), separators=(",", ":"))
    if fmt == "dot":
        lines = ["digraph decomposition {"]
        for i, lv in enumerate(tree.level):
            lines.append(f'  n{i} [label="{i}" level={int(lv)}];')
        for p, c in tree.edges():
            lines.append(f"  n{p} -> n{c};")
        lines.append("}")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown export format {fmt!r}; expected 'json' or 'dot'")


# -- vectorized studies ------------------------------------------------------

def replicate_keys(master_seed: int, start: int, stop: int) -> np.ndarray:
    """Stream keys of replicates ``start..stop-1``; vectorized ``replicate_seed``."""
    idx = np.arange(start, stop, dtype=np.uint64)
    with np.errstate(over="ignore"):
        base = np.uint64(rng.stream_key(master_seed))
        seeds = rng._mix64_array(base ^ rng._mix64_array((idx + np.uint64(1)) * np.uint64(rng.GOLDEN)))
        return rng._mix64_array(seeds + np.uint64(rng.GOLDEN))


def generation_matrix(lam: float, keys: np.ndarray, depth: int, exact_depth=None,
                      escape_at=None, max_draws=50_000_000) -> np.ndarray:
    """Population counts Z[r, k] for k = 0..depth, one row per stream key.

    Levels up to ``exact_depth`` (default: all) are always expanded.  Beyond
    it, a lineage whose size reaches ``escape_at`` stops being expanded and
    its later entries are set to -1.
    """
    keys = np.asarray(keys, dtype=np.uint64)
    n = len(keys)
    exact_depth = depth if exact_depth is None else exact_depth
    Z = np.zeros((n, depth + 1), dtype=np.int64)
    Z[:, 0] = 1
    act = np.arange(n)                    # rows still being expanded
    z = np.ones(n, dtype=np.int64)        # their current generation sizes
    first = np.zeros(n, dtype=np.int64)   # id of their first node in that generation
    drawn = 0
    for k in range(depth):
        if k >= exact_depth and escape_at is not None:
            esc = z >= escape_at
            if esc.any():
                Z[act[esc], k + 1:] = -1
                keep = ~esc
                act, z, first = act[keep], z[keep], first[keep]
        if act.size == 0:
            break
        total = int(z.sum())
        drawn += total
        if drawn > max_draws:
            raise SimulationLimitError(
                f"more than {max_draws} offspring draws; lower depth_cap or the batch size")
        starts = np.cumsum(z) - z
        owner = np.repeat(np.arange(act.size), z)
        counters = first[owner] + np.arange(total, dtype=np.int64) - starts[owner]
        u = rng.uniforms(keys[act[owner]], counters.astype(np.uint64))
        x = rng.poisson_from_uniform(lam, u)
        sums = np.add.reduceat(x, starts)
        Z[act, k + 1] = sums
        first = first + z
        alive = sums > 0
        act, z, first = act[alive], sums[alive], first[alive]
    return Z


def escape_population(lam: float) -> int:
    alpha = extinction_probability(lam).alpha
    return max(1, math.ceil(math.log(ESCAPE_PROBABILITY) / math.log(alpha)))


def _study_chunk(args):
    lam, master_seed, start, stop, depth_cap, ext_depth, escape_at = args
    keys = replicate_keys(master_seed, start, stop)
    Z = generation_matrix(lam, keys, ext_depth, exact_depth=depth_cap, escape_at=escape_at)
    out = {
        "total": Counter(dict(zip(*map(np.ndarray.tolist, np.unique(
            Z[:, : depth_cap + 1].sum(axis=1), return_counts=True))))),
        "extinct_by": (Z == 0).sum(axis=0).tolist(),
        "escaped": int((Z[:, -1] < 0).sum()),
        "gen": [Counter(dict(zip(*map(np.ndarray.tolist, np.unique(Z[:, k], return_counts=True)))))
                for k in range(depth_cap + 1)],
        "cond": {},
    }
    for n in COND_MASS_LEVELS:
        if n + 1 > ext_depth:
            continue
        y = np.where((Z[:, n] > 0) & (Z[:, n + 1] == 0), Z[:, n], 0)
        out["cond"][n] = Counter(dict(zip(*map(np.ndarray.tolist, np.unique(y, return_counts=True)))))
    return out


@dataclass(frozen=True)
class Moments:
    """Exact sample moments of an integer-valued statistic."""
    n: int
    mean: float
    var: float
    mean_se: float
    var_se: float

    @classmethod
    def from_histogram(cls, hist: Counter):
        n = sum(hist.values())
        s = [sum(Fraction(v) ** p * c for v, c in hist.items()) for p in range(5)]
        mean = s[1] / n
        var = (s[2] - s[1] * mean) / (n - 1)
        # fourth central moment from raw power sums
        m2 = s[2] / n - mean ** 2
        m4 = s[4] / n - 4 * mean * s[3] / n + 6 * mean ** 2 * s[2] / n - 3 * mean ** 4
        var_se = math.sqrt(max(float(m4 - m2 * m2), 0.0) / n)
        return cls(n, float(mean), float(var), math.sqrt(float(var) / n), var_se)


@dataclass(frozen=True)
class SimulationSummary:
    lam: float
    replicates: int
    depth_cap: int
    extinction_depth: int
    master_seed: int
    extinction_frequency: float
    extinction_se: float
    extinct_by: tuple
    escaped: int
    totals: Moments
    generations: tuple
    cond_mass: dict = field(default_factory=dict)

    @property
    def mean_truncated_total(self):
        return self.totals.mean

    @property
    def var_truncated_total(self):
        return self.totals.var

    def extinct_by_se(self, n):
        p = self.extinct_by[n]
        return math.sqrt(p * (1 - p) / self.replicates)

    def cond_mass_estimate(self, n):
        """(estimate, standard error) of E[Z(n); Z(n+1) = 0]."""
        m = self.cond_mass[n]
        return m.mean, m.mean_se


def run_study(model, replicates: int, depth_cap: int, master_seed: int = 0, *,
              extinction_depth: int = DEFAULT_EXTINCTION_DEPTH, workers: int = 1,
              chunk_size: int = 1 << 15) -> SimulationSummary:
    """Monte-Carlo study of ``replicates`` independent decompositions.

    Truncated totals and generation sizes are exact up to ``depth_cap``.
    Extinction is tracked to ``max(depth_cap, extinction_depth)``; past
    ``depth_cap`` lineages whose eventual-extinction probability is below
    ``ESCAPE_PROBABILITY`` count as surviving.  Replicate ``r`` uses the seed
    ``rng.replicate_seed(master_seed, r)`` regardless of chunking or
    ``workers``, and aggregation is exact integer arithmetic, so the result
    does not depend on either.
    """
    model = _as_model(model)
    depth_cap = _check_cap(depth_cap)
    if replicates < MIN_REPLICATES:
        raise DomainError(f"replicates must be >= {MIN_REPLICATES}, got {replicates}")
    ext_depth = max(depth_cap, int(extinction_depth), max(COND_MASS_LEVELS) + 1)
    escape_at = escape_population(model.lam)
    tasks = [(model.lam, master_seed, a, min(a + chunk_size, replicates), depth_cap,
              ext_depth, escape_at) for a in range(0, replicates, chunk_size)]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_study_chunk, tasks))
    else:
        parts = [_study_chunk(t) for t in tasks]

    total = Counter()
    gens = [Counter() for _ in range(depth_cap + 1)]
    cond = {n: Counter() for n in parts[0]["cond"]}
    extinct = np.zeros(ext_depth + 1, dtype=np.int64)
    escaped = 0
    for part in parts:
        total.update(part["total"])
        for g, c in zip(gens, part["gen"]):
            g.update(c)
        for n, c in part["cond"].items():
            cond[n].update(c)
        extinct += np.asarray(part["extinct_by"], dtype=np.int64)
        escaped += part["escaped"]

    freq = extinct / replicates
    p = float(freq[-1])
    return SimulationSummary(
        lam=model.lam, replicates=replicates, depth_cap=depth_cap,
        extinction_depth=ext_depth, master_seed=master_seed,
        extinction_frequency=p, extinction_se=math.sqrt(p * (1 - p) / replicates),
        extinct_by=tuple(float(f) for f in freq), escaped=escaped,
        totals=Moments.from_histogram(total),
        generations=tuple(Moments.from_histogram(g) for g in gens),
        cond_mass={n: Moments.from_histogram(c) for n, c in cond.items()},
    )
