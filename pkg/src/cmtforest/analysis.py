"""Statistical probes over forest windows: dispersion surveys, nested
level averages, occupation frequencies, in-degree transport checks,
connectivity and component-count experiments, Green-decay probes, and
the right-stable matching between consecutive level sets.

Estimates are Monte Carlo with four-sigma half-widths computed from the
recorded trial counts; exact quantities (in-degree means, Green values)
are carried as Fractions. Reducers are order-independent (integer
counters and math.fsum), so splitting trials across workers and merging
gives byte-identical reports.
"""

import hashlib
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .chains import _convolve_numerators, _denominator, _vec
from .errors import (
    BadGraph,
    ConfigError,
    CyclicComponent,
    Empty,
    NeedsTorus,
    UnknownVertex,
)
from .forest import components, level_set, reverse_jump
from .lattice import check_cycle_free
from .models import canopy_cmt
from .seeds import derive_seed, rng_for

_ROLE_WALK = 0xE3
_ROLE_CHAINS = 0xE4
_ROLE_ORDER = 0xE5

SURVEY_STATISTICS = (
    "leaf-fraction",
    "mean-in-degree",
    "jump-frequency-vector",
    "height-range-per-size",
)


@dataclass(frozen=True)
class ProbeReport:
    probe: str
    units: tuple
    values: tuple
    half_widths: tuple
    trials: tuple
    truncation_fraction: float
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.units)
        if not (len(self.values) == len(self.half_widths) == len(self.trials) == n):
            raise ConfigError("per-unit columns must have equal length")
        if not 0.0 <= self.truncation_fraction <= 1.0:
            raise ConfigError("truncation fraction must lie in [0, 1]")


@dataclass(frozen=True)
class LevelAverage:
    n: int
    value: float
    count: int
    truncated: bool


@dataclass(frozen=True)
class InDegreeProfile:
    mean: Fraction
    histogram: dict
    region_size: int


@dataclass(frozen=True)
class LevelBijection:
    matching: dict
    unmatched: frozenset

    def __post_init__(self):
        targets = list(self.matching.values())
        if len(set(targets)) != len(targets):
            raise BadGraph("matching is not injective")
        if set(self.matching) & self.unmatched:
            raise BadGraph("a vertex cannot be both matched and unmatched")


def _config_hash(details):
    blob = json.dumps(details, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def probe_csv(report):
    lines = ["unit,value,half_width,trials"]
    for u, v, h, t in zip(report.units, report.values, report.half_widths, report.trials):
        value = " ".join(repr(c) for c in v) if isinstance(v, tuple) else repr(v)
        lines.append(f"{u},{value},{h!r},{t}")
    return "\n".join(lines) + "\n"


def probe_json(report):
    payload = {
        "probe": report.probe,
        "config_hash": _config_hash(report.details),
        "estimates": {str(u): _plain(v) for u, v in zip(report.units, report.values)},
        "bands": {str(u): h for u, h in zip(report.units, report.half_widths)},
        "truncation_fraction": report.truncation_fraction,
    }
    return json.dumps(payload, sort_keys=True)


def _plain(v):
    return list(v) if isinstance(v, tuple) else v


# -- component statistics ------------------------------------------------------------


def _leaf_fraction(forest, rev, comp):
    leaves = sum(1 for v in comp.members if not rev.get(v))
    return leaves / comp.size


def _mean_in_degree(forest, rev, comp):
    arcs = sum(len(rev.get(v, ())) for v in comp.members)
    return arcs / comp.size


def _jump_counts(forest, comp):
    counts = {}
    for v in comp.members:
        w = forest.jump.get(v)
        if w is None:
            continue
        a = tuple(x - y for x, y in zip(w, v)) if isinstance(v, tuple) else w - v
        counts[a] = counts.get(a, 0) + 1
    return counts


def component_statistic_survey(forest, statistic, min_size):
    """Per-component values of one statistic, with their dispersion.

    Components below min_size are ignored; cyclic components are skipped
    for the height-range statistic since heights are undefined on them.
    """
    if statistic not in SURVEY_STATISTICS:
        raise ConfigError(f"unknown statistic {statistic!r}")
    if min_size < 1:
        raise ConfigError("min_size must be at least one")
    rev = reverse_jump(forest)
    comps = [c for c in components(forest) if c.size >= min_size]
    if statistic == "height-range-per-size":
        comps = [c for c in comps if c.cycle_count == 0]
    if not comps:
        raise Empty("no qualifying component")

    details = {"statistic": statistic, "min_size": min_size, "component_count": len(comps)}
    if statistic == "jump-frequency-vector":
        per_comp = [_jump_counts(forest, c) for c in comps]
        alphabet = sorted({a for counts in per_comp for a in counts}, key=repr)
        values = []
        for counts in per_comp:
            total = sum(counts.values())
            values.append(
                tuple(counts.get(a, 0) / total if total else 0.0 for a in alphabet)
            )
        cols = list(zip(*values)) if values else []
        cvs = tuple(_coefficient_of_variation(col) for col in cols)
        details["alphabet"] = [str(a) for a in alphabet]
        details["cv_vector"] = list(cvs)
        details["cv"] = max(cvs) if cvs else 0.0
    else:
        if statistic == "leaf-fraction":
            values = [_leaf_fraction(forest, rev, c) for c in comps]
        elif statistic == "mean-in-degree":
            values = [_mean_in_degree(forest, rev, c) for c in comps]
        else:
            values = []
            for c in comps:
                hs = _component_heights(forest, rev, c)
                values.append((max(hs.values()) - min(hs.values())) / c.size)
        details["cv"] = _coefficient_of_variation(values)

    truncated = sum(1 for c in comps if c.boundary_arc_count > 0)
    return ProbeReport(
        probe="component-statistic-survey",
        units=tuple(c.component_id for c in comps),
        values=tuple(values),
        half_widths=(0.0,) * len(comps),
        trials=tuple(c.size for c in comps),
        truncation_fraction=truncated / len(comps),
        details=details,
    )


def _component_heights(forest, rev, comp):
    anchor = min(comp.members)
    heights = {anchor: 0}
    frontier = [anchor]
    while frontier:
        nxt = []
        for w in frontier:
            h = heights[w]
            tgt = forest.jump.get(w)
            if tgt is not None and tgt not in heights:
                heights[tgt] = h - 1
                nxt.append(tgt)
            for u in rev.get(w, ()):
                if u not in heights:
                    heights[u] = h + 1
                    nxt.append(u)
        frontier = nxt
    return heights


def _coefficient_of_variation(values):
    vals = list(values)
    if len(set(vals)) == 1:
        return 0.0
    mean = math.fsum(vals) / len(vals)
    if mean == 0:
        return 0.0
    var = math.fsum((x - mean) ** 2 for x in vals) / len(vals)
    return math.sqrt(var) / abs(mean)


# -- nested level averages --------------------------------------------------------


def nested_level_average(forest, f, v, n_max):
    """Averages of f over the nested sets D_n(F^n(v)), while the line of
    v stays inside the window. Flags an average as truncated when the
    backward cone leaves the interior, since the window may then hide
    part of the averaging set."""
    if v not in forest.vertices:
        raise UnknownVertex(repr(v))
    comp = next(c for c in components(forest) if v in c.members)
    if comp.cycle_count:
        raise CyclicComponent("nested averages need a cycle-free component")
    rev = reverse_jump(forest)
    line = [v]
    for _ in range(n_max):
        nxt = forest.jump.get(line[-1])
        if nxt is None:
            break
        line.append(nxt)
    out = []
    for n, top in enumerate(line):
        level = {top}
        clean = top in forest.interior
        for _ in range(n):
            clean = clean and all(w in forest.interior for w in level)
            level = {u for w in level for u in rev.get(w, ())}
        if not level:
            break
        value = math.fsum(float(f(w)) for w in level) / len(level)
        out.append(LevelAverage(n=n, value=value, count=len(level), truncated=not clean))
    return out


# -- torus occupation ---------------------------------------------------------------


def _as_coords(v):
    return v if isinstance(v, tuple) else (v,)


def _minimal_residue(diff, length):
    r = diff % length
    return r - length if 2 * r > length else r


def cluster_frequency(forest, component_id, walk_steps, seed):
    """Fraction of time a lazy random walk on the torus window spends in
    one component. The walk steps by the symmetrized observed jump
    increments, holds with probability 1/2, and is shared across calls
    with the same seed, so component frequencies partition one."""
    wrap = forest.metadata.get("wrap")
    if not wrap or any(w is None for w in wrap):
        raise NeedsTorus("forest window is not toroidal on every axis")
    comps = components(forest)
    if not 0 <= component_id < len(comps):
        raise ConfigError(f"no component {component_id}")
    box = forest.metadata["box"]
    lows = np.array([lo for lo, hi in box], dtype=np.int64)
    lens = np.array([hi - lo + 1 for lo, hi in box], dtype=np.int64)

    incs = set()
    for src, dst in forest.jump.items():
        a, b = _as_coords(src), _as_coords(dst)
        incs.add(
            tuple(
                _minimal_residue(int(y - x), int(n)) for x, y, n in zip(a, b, lens)
            )
        )
    moves = sorted(incs | {tuple(-c for c in inc) for inc in incs})
    moves_arr = np.array(moves, dtype=np.int64)

    comp_of = {}
    for c in comps:
        for v in c.members:
            comp_of[v] = c.component_id

    rng = rng_for(seed, _ROLE_WALK)
    hold = rng.random(walk_steps) < 0.5
    idx = rng.integers(0, len(moves), size=walk_steps)
    disp = moves_arr[idx] * (~hold)[:, None]
    start = np.array(_as_coords(min(forest.vertices)), dtype=np.int64)
    pos = (start + np.cumsum(disp, axis=0) - lows) % lens + lows
    pos = np.vstack([start[None, :], pos])

    d = forest.dimension
    visited = np.empty(len(pos), dtype=np.int64)
    for i, p in enumerate(pos):
        key = int(p[0]) if d == 1 else tuple(int(c) for c in p)
        visited[i] = comp_of[key]
    hits = visited == component_id
    freq = float(hits.mean())

    blocks = 100
    usable = (len(hits) // blocks) * blocks
    block_means = hits[:usable].reshape(blocks, -1).mean(axis=1)
    half = 4.0 * float(block_means.std(ddof=1)) / math.sqrt(blocks)
    return ProbeReport(
        probe="cluster-frequency",
        units=(component_id,),
        values=(freq,),
        half_widths=(half,),
        trials=(walk_steps,),
        truncation_fraction=0.0,
        details={"component_id": component_id, "walk_steps": walk_steps, "seed": seed},
    )


# -- in-degree transport ---------------------------------------------------------------


def in_degree_profile(forest, region=None):
    """Exact mean and histogram of in-window preimage counts."""
    rev = reverse_jump(forest)
    if region is None:
        region = forest.vertices
    region = list(region)
    for v in region:
        if v not in forest.vertices:
            raise UnknownVertex(repr(v))
    histogram = {}
    total = 0
    for v in region:
        k = len(rev.get(v, ()))
        histogram[k] = histogram.get(k, 0) + 1
        total += k
    return InDegreeProfile(
        mean=Fraction(total, len(region)),
        histogram=histogram,
        region_size=len(region),
    )


# -- lockstep chain models ------------------------------------------------------------


class LatticeChainModel:
    """k coalescing jump chains on Z^d advanced in lockstep slices.

    Valid for level-graded kernels: the cycle-free witness u must give
    the same u.a for every atom, and all starts must share a level, so
    that orbit intersection is equivalent to equal-time collision.
    """

    def __init__(self, jumps):
        rep = check_cycle_free(jumps)
        if not rep.holds:
            raise CyclicComponent("chain model needs a cycle-free kernel")
        u = rep.witness
        speeds = {sum(Fraction(c) * x for c, x in zip(a, u)) for a in jumps.atoms}
        if len(speeds) != 1:
            raise ConfigError("kernel is not level-graded; slices would miss merges")
        self.jumps = jumps
        self.witness = tuple(u)
        self._atoms = np.array([_vec(a, jumps.dimension) for a in jumps.atoms])
        cum = np.cumsum([float(w) for w in jumps.weights])
        cum[-1] = 1.0
        self._cum = cum

    def default_starts(self, k):
        atoms = sorted(self.jumps.atoms)
        delta = tuple(x - y for x, y in zip(atoms[-1], atoms[0]))
        return tuple(tuple(i * c for c in delta) for i in range(k))

    def at_distance(self, origin, r):
        atoms = sorted(self.jumps.atoms)
        delta = tuple(x - y for x, y in zip(atoms[-1], atoms[0]))
        o = _vec(origin, self.jumps.dimension)
        return tuple(x + r * c for x, c in zip(o, delta))

    def _check_levels(self, starts):
        levels = {
            sum(Fraction(c) * x for c, x in zip(s, self.witness)) for s in starts
        }
        if len(levels) != 1:
            raise ConfigError("starts must share a level")

    def run(self, starts, budget, trials, seed):
        """Final group labels: shape (trials, k), equal labels = merged."""
        d = self.jumps.dimension
        starts = [_vec(s, d) for s in starts]
        self._check_levels(starts)
        k = len(starts)
        rng = rng_for(seed, _ROLE_CHAINS)
        pos = np.tile(np.array(starts, dtype=np.int64), (trials, 1, 1))
        leader = np.tile(np.arange(k), (trials, 1))
        _merge_meetings(pos, leader)
        for _ in range(budget):
            if np.all(leader == leader[:, :1]):
                break
            u = rng.random((trials, k))
            idx = np.searchsorted(self._cum, u, side="right")
            pos += self._atoms[idx]
            pos = np.take_along_axis(pos, leader[..., None], axis=1)
            _merge_meetings(pos, leader)
        return leader


class GraphChainModel:
    """k coalescing simple random walks on a finite graph, synchronous
    steps, merged on equal-time meetings (the space-time component
    rule)."""

    def __init__(self, graph, starts=()):
        self.graph = graph
        self.starts = tuple(starts)
        verts = list(graph.vertices)
        self._index = {v: i for i, v in enumerate(verts)}
        self._verts = verts
        degs = [graph.degree(v) for v in verts]
        width = max(degs)
        nbr = np.zeros((len(verts), width), dtype=np.int64)
        for i, v in enumerate(verts):
            for j, u in enumerate(graph.neighbors(v)):
                nbr[i, j] = self._index[u]
        self._nbr = nbr
        self._deg = np.array(degs, dtype=np.int64)

    def default_starts(self, k):
        if k > len(self.starts):
            raise ConfigError(f"model provides only {len(self.starts)} starts")
        return self.starts[:k]

    def at_distance(self, origin, r):
        if origin not in self._index:
            raise UnknownVertex(repr(origin))
        dist = {origin: 0}
        frontier = [origin]
        while frontier:
            nxt = []
            for v in frontier:
                for u in self.graph.neighbors(v):
                    if u not in dist:
                        dist[u] = dist[v] + 1
                        nxt.append(u)
            frontier = nxt
        at = sorted((v for v, k in dist.items() if k == r), key=repr)
        if not at:
            raise ConfigError(f"no vertex at distance {r}")
        return at[0]

    def run(self, starts, budget, trials, seed):
        for s in starts:
            if s not in self._index:
                raise UnknownVertex(repr(s))
        k = len(starts)
        rng = rng_for(seed, _ROLE_CHAINS)
        pos = np.tile(
            np.array([self._index[s] for s in starts], dtype=np.int64), (trials, 1)
        )
        leader = np.tile(np.arange(k), (trials, 1))
        _merge_meetings(pos[..., None], leader)
        for _ in range(budget):
            if np.all(leader == leader[:, :1]):
                break
            u = rng.random((trials, k))
            step = np.floor(u * self._deg[pos]).astype(np.int64)
            pos = self._nbr[pos, step]
            pos = np.take_along_axis(pos, leader, axis=1)
            _merge_meetings(pos[..., None], leader)
        return leader


def _merge_meetings(pos, leader):
    """Union the groups of walkers standing on equal positions."""
    k = leader.shape[1]
    for i in range(k):
        for j in range(i + 1, k):
            eq = (pos[:, i] == pos[:, j]).all(axis=-1)
            if not eq.any():
                continue
            a, b = leader[:, i], leader[:, j]
            lo, hi = np.minimum(a, b), np.maximum(a, b)
            mask = eq[:, None] & (leader == hi[:, None])
            leader[mask] = np.broadcast_to(lo[:, None], leader.shape)[mask]


def _as_chain_model(model):
    if hasattr(model, "run"):
        return model
    return LatticeChainModel(model)


def _distinct_counts(leader):
    s = np.sort(leader, axis=1)
    return 1 + (np.diff(s, axis=1) > 0).sum(axis=1)


def _binomial_half_width(freq, trials):
    return 4.0 * math.sqrt(max(freq * (1.0 - freq), 0.0) / trials)


def connectivity_decay_probe(model, origin, distance_list, trials, budget, seed):
    """Fraction of sampled forests connecting the origin to a vertex at
    each listed distance, within the step budget."""
    model = _as_chain_model(model)
    if any(r < 0 for r in distance_list):
        raise ConfigError("distances must be nonnegative")
    values = []
    halves = []
    censored = 0
    for pos, r in enumerate(distance_list):
        if r == 0:
            values.append(1.0)
            halves.append(0.0)
            continue
        x = model.at_distance(origin, r)
        leader = model.run([origin, x], budget, trials, derive_seed(seed, pos))
        merged = int((leader[:, 0] == leader[:, 1]).sum())
        censored += trials - merged
        freq = merged / trials
        values.append(freq)
        halves.append(_binomial_half_width(freq, trials))
    total = trials * sum(1 for r in distance_list if r > 0)
    return ProbeReport(
        probe="connectivity-decay",
        units=tuple(distance_list),
        values=tuple(values),
        half_widths=tuple(halves),
        trials=(trials,) * len(distance_list),
        truncation_fraction=censored / total if total else 0.0,
        details={
            "origin": str(origin),
            "distances": list(distance_list),
            "budget": budget,
            "trials": trials,
            "seed": seed,
        },
    )


def count_components_probe(model, k, budget, trials, seed, starts=None):
    """Frequency with which k coalescing chains remain in k distinct
    components at the end of the budget."""
    if k < 1:
        raise ConfigError("k must be positive")
    if k == 1:
        return ProbeReport(
            probe="count-components",
            units=(k,),
            values=(1.0,),
            half_widths=(0.0,),
            trials=(trials,),
            truncation_fraction=0.0,
            details={"k": k, "budget": budget, "trials": trials, "seed": seed},
        )
    model = _as_chain_model(model)
    if starts is None:
        starts = model.default_starts(k)
    if len(starts) != k:
        raise ConfigError("need exactly k starts")
    leader = model.run(list(starts), budget, trials, seed)
    distinct = _distinct_counts(leader)
    freq = float((distinct == k).mean())
    unresolved = float((distinct > 1).mean())
    return ProbeReport(
        probe="count-components",
        units=(k,),
        values=(freq,),
        half_widths=(_binomial_half_width(freq, trials),),
        trials=(trials,),
        truncation_fraction=unresolved,
        details={"k": k, "budget": budget, "trials": trials, "seed": seed},
    )


# -- Green decay --------------------------------------------------------------------


def green_table(jumps, targets):
    """Full Green series for many targets in one kernel-power sweep.

    Matches green_function(jumps, y) exactly for cycle-free kernels; the
    shared sweep makes Monte-Carlo averaging over sampled endpoints
    affordable."""
    rep = check_cycle_free(jumps)
    if not rep.holds:
        raise CyclicComponent("green table needs a cycle-free kernel")
    d = jumps.dimension
    u = rep.witness
    delta = min(sum(Fraction(c) * x for c, x in zip(a, u)) for a in jumps.atoms)
    keyed = {}
    horizon = 0
    for y in targets:
        vec = _vec(y, d)
        t = sum(Fraction(c) * x for c, x in zip(vec, u))
        keyed[vec] = y
        horizon = max(horizon, math.floor(t / delta) if t >= 0 else 0)
    zero = (0,) * d
    acc = {vec: Fraction(int(vec == zero)) for vec in keyed}
    den = _denominator(jumps)
    moves = [(a, int(w * den)) for a, w in zip(jumps.atoms, jumps.weights)]
    dist = {zero: 1}
    for m in range(1, horizon + 1):
        dist = _convolve_numerators(dist, moves)
        scale = den**m
        for vec in keyed:
            c = dist.get(vec)
            if c:
                acc[vec] += Fraction(c, scale)
    return {orig: acc[vec] for vec, orig in keyed.items()}


def one_endedness_probe(jumps, n_list, trials, seed):
    """Monte-Carlo averages of the Green value at the chain position
    after n steps, one estimate per listed n."""
    d = jumps.dimension
    atoms = np.array([_vec(a, d) for a in jumps.atoms])
    cum = np.cumsum([float(w) for w in jumps.weights])
    cum[-1] = 1.0
    endpoints = {}
    for pos, n in enumerate(n_list):
        rng = rng_for(derive_seed(seed, pos), _ROLE_CHAINS)
        idx = np.searchsorted(cum, rng.random((trials, n)), side="right")
        ends = atoms[idx].sum(axis=1)
        endpoints[n] = [tuple(int(c) for c in e) for e in ends]
    targets = sorted({y for ends in endpoints.values() for y in ends})
    table = green_table(jumps, targets)
    values = []
    halves = []
    for n in n_list:
        gs = [float(table[y]) for y in endpoints[n]]
        mean = math.fsum(gs) / trials
        var = math.fsum((g - mean) ** 2 for g in gs) / trials
        values.append(mean)
        halves.append(4.0 * math.sqrt(var / trials))
    return ProbeReport(
        probe="one-endedness",
        units=tuple(n_list),
        values=tuple(values),
        half_widths=tuple(halves),
        trials=(trials,) * len(n_list),
        truncation_fraction=0.0,
        details={"n_list": list(n_list), "trials": trials, "seed": seed},
    )


# -- level-set bijection ----------------------------------------------------------------


def _level_of(v):
    return v[-1] if isinstance(v, tuple) else v


def right_stable_allocation(children, parents, parent_of):
    """Right-stable matching from an ordered child cycle into an ordered
    parent cycle. children must be listed in nondecreasing parent
    position, so the single wrap point sits at the list end and the
    periodic lift adds one full parent lap per child lap. Returns
    (matching, unmatched)."""
    m, n = len(children), len(parents)
    pos = {p: i for i, p in enumerate(parents)}
    raws = [pos[parent_of[x]] for x in children]
    if any(a > b for a, b in zip(raws, raws[1:])):
        raise ConfigError("children must be ordered by parent position")
    matching = {}
    unmatched = []
    taken = set()
    for j, x in enumerate(children):
        base = pos[parent_of[x]]
        tau = None
        for i in range(1, m + n + 1):
            idx = j + i
            c2 = children[idx % m]
            lifted = pos[parent_of[c2]] + (idx // m) * n
            if lifted - base >= i:
                tau = i
                break
        if tau is None:
            unmatched.append(x)
            continue
        target = parents[(base + tau) % n]
        if target in taken:
            unmatched.append(x)
            continue
        taken.add(target)
        matching[x] = target
    return matching, unmatched


def level_set_bijection(forest, seed):
    """Injective matching of each interior vertex into the level set of
    its jump image, built by right-stable allocation: canonical cyclic
    order on each level row, seeded random order inside sibling groups.

    On toroidal windows the rows are the lattice levels, whose equal
    counts keep the tau search terminating even though every line wraps
    a cycle; elsewhere rows are the per-component height classes, and
    vertices squeezed out at the window edge are surfaced as unmatched.
    """
    domain = sorted(v for v in forest.interior if v in forest.jump)
    wrap = forest.metadata.get("wrap")
    toroidal = bool(wrap) and all(w is not None for w in wrap)
    if toroidal:
        for x in domain:
            if _level_of(forest.jump[x]) == _level_of(x):
                raise CyclicComponent(f"jump of {x!r} stays on its own level")
        level = {v: _level_of(v) for v in forest.vertices}
    else:
        rev = reverse_jump(forest)
        domain_set = set(domain)
        level = {}
        for c in components(forest):
            if c.cycle_count:
                if c.members & domain_set:
                    raise CyclicComponent(
                        "bijection needs cycle-free components"
                    )
                continue
            heights = _component_heights(forest, rev, c)
            for v, h in heights.items():
                level[v] = (c.component_id, h)
    rng = rng_for(seed, _ROLE_ORDER)

    rows = {}
    for v, key in level.items():
        rows.setdefault(key, []).append(v)
    for key in rows:
        rows[key].sort()

    # all children aiming at one parent row are allocated together, so
    # injectivity is global even when jumps skip levels at mixed depths
    groups = {}
    for x in domain:
        groups.setdefault(level[forest.jump[x]], []).append(x)

    matching = {}
    unmatched = set()
    for parent_key, childs in sorted(groups.items()):
        parents = rows[parent_key]
        pos = {p: i for i, p in enumerate(parents)}
        by_parent = {}
        for x in sorted(childs):
            by_parent.setdefault(forest.jump[x], []).append(x)
        ordered = []
        for p in sorted(by_parent, key=lambda q: pos[q]):
            sibs = by_parent[p]
            order = rng.permutation(len(sibs))
            ordered.extend(sibs[i] for i in order)
        got, missed = right_stable_allocation(
            ordered, parents, {x: forest.jump[x] for x in childs}
        )
        matching.update(got)
        unmatched.update(missed)
    return LevelBijection(matching=matching, unmatched=frozenset(unmatched))


# -- canopy negative control ---------------------------------------------------------


def canopy_distinguishability_demo(depth, seed):
    """Checks that the hop-count invariant is constant on every level
    set of a canopy window yet varies across level sets, so level-set
    membership is detectable there."""
    forest, invariant = canopy_cmt(depth, seed)
    constant = True
    per_set = {}
    for v in sorted(forest.vertices):
        for n in range(1, depth + 2):
            members, _ = level_set(forest, v, n)
            vals = {invariant[w] for w in members}
            if len(vals) > 1:
                constant = False
            per_set[(min(members), n)] = vals
    observed = sorted({v for vals in per_set.values() for v in vals})
    return ProbeReport(
        probe="canopy-distinguishability",
        units=tuple(observed),
        values=tuple(float(v) for v in observed),
        half_widths=(0.0,) * len(observed),
        trials=(1,) * len(observed),
        truncation_fraction=0.0,
        details={
            "depth": depth,
            "seed": seed,
            "all_constant": constant,
            "distinct_count": len(observed),
        },
    )
