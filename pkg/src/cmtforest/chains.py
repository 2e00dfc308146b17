"""Translation-invariant jump chains: exact kernel powers and couplings.

Kernel powers, Green values and total-variation distances are computed in
exact rational arithmetic: the n-step law is carried as integer numerators
over a common denominator D^n, with Fractions only materialized at the
boundary. Couplings are single random experiments (seeded, replayable);
the collision probe aggregates trials and reports a frequency with a
four-sigma binomial half-width.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import CyclicComponent, TooLarge, UnknownVertex
from .lattice import check_cycle_free, in_lattice
from .seeds import derive_seed, rng_for

_ROLE_MEET = 0xC1
_ROLE_SHIFT = 0xC2
_ROLE_CROSS = 0xC3

_SUPPORT_CAP = 10**8


@dataclass
class KernelPower:
    n: int
    distribution: dict  # increment vector -> Fraction, summing to one


@dataclass
class GreenValue:
    value: Fraction
    probability: bool  # True when the kernel is cycle-free, so value = P[hit]
    terms: int


@dataclass
class CouplingResult:
    success: bool
    coupling_time: int = None
    shift: int = None
    trace: tuple = None  # optional (path_x, path_y)


@dataclass
class CollisionEstimate:
    trials: int
    successes: int
    budget: int
    frequency: float
    half_width: float  # 4 * sqrt(f (1-f) / trials)
    mean_steps: float = None


def _vec(v, d):
    if d == 1 and not isinstance(v, tuple):
        return (int(v),)
    return tuple(int(c) for c in v)


def _key(vec, d):
    return vec[0] if d == 1 else vec


def _as_tuple(v):
    return v if isinstance(v, tuple) else (v,)


def _denominator(jumps):
    return math.lcm(*(w.denominator for w in jumps.weights))


def _convolve_numerators(dist, moves):
    out = {}
    for p, c in dist.items():
        for a, na in moves:
            q = tuple(x + y for x, y in zip(p, a))
            out[q] = out.get(q, 0) + c * na
    if len(out) > _SUPPORT_CAP:
        raise TooLarge(f"kernel support exceeded {_SUPPORT_CAP} points")
    return out


def kernel_power(jumps, n):
    """Exact law of the n-step increment X_n - X_0."""
    d = jumps.dimension
    den = _denominator(jumps)
    moves = [(a, int(w * den)) for a, w in zip(jumps.atoms, jumps.weights)]
    dist = {(0,) * d: 1}
    for _ in range(n):
        dist = _convolve_numerators(dist, moves)
    total = den**n
    probs = {_key(p, d): Fraction(c, total) for p, c in dist.items()}
    return KernelPower(n=n, distribution=probs)


def kernel_power_csv(kp):
    """Lexicographically sorted CSV with exact fraction probabilities."""
    items = sorted(kp.distribution.items(), key=lambda kv: _as_tuple(kv[0]))
    d = len(_as_tuple(items[0][0]))
    header = ",".join(f"x{i}" for i in range(d)) + ",probability"
    lines = [header]
    for v, p in items:
        coords = ",".join(str(c) for c in _as_tuple(v))
        lines.append(f"{coords},{p}")
    return "\n".join(lines) + "\n"


def green_function(jumps, target, horizon=None):
    """Sum of K^m(0, target) over 0 <= m <= horizon, exactly.

    For a cycle-free kernel the half-space witness bounds the largest m that
    can contribute, so the horizon may be omitted and the result is the full
    series: the probability that the chain from 0 ever visits the target.
    Otherwise the series may diverge, an explicit horizon is required, and
    the partial sum is returned with the probability flag off.
    """
    d = jumps.dimension
    diff = _vec(target, d)
    rep = check_cycle_free(jumps)
    if horizon is None:
        if not rep.holds:
            raise CyclicComponent(
                "kernel admits zero convex combinations; pass a horizon"
            )
        u = rep.witness
        delta = min(sum(Fraction(c) * x for c, x in zip(a, u)) for a in jumps.atoms)
        t = sum(Fraction(c) * x for c, x in zip(diff, u))
        horizon = max(0, math.floor(t / delta)) if t >= 0 else 0

    den = _denominator(jumps)
    moves = [(a, int(w * den)) for a, w in zip(jumps.atoms, jumps.weights)]
    zero = (0,) * d
    dist = {zero: 1}
    acc = Fraction(int(diff == zero))
    for m in range(1, horizon + 1):
        dist = _convolve_numerators(dist, moves)
        c = dist.get(diff)
        if c:
            acc += Fraction(c, den**m)
    return GreenValue(value=acc, probability=rep.holds, terms=horizon + 1)


def tv_profile(jumps, n_max, k=1):
    """Exact TV distances between kernel powers k steps apart.

    Entry n-1 is TV(K^n(0,.), K^{n+k}(0,.)) for n = 1..n_max, on the
    half-sum-of-absolute-differences normalization, so values lie in [0,1].
    """
    d = jumps.dimension
    den = _denominator(jumps)
    moves = [(a, int(w * den)) for a, w in zip(jumps.atoms, jumps.weights)]
    powers = [{(0,) * d: 1}]
    for _ in range(n_max + k):
        powers.append(_convolve_numerators(powers[-1], moves))
    out = []
    for n in range(1, n_max + 1):
        a, b = powers[n], powers[n + k]
        scale = den**k
        num = 0
        for p in set(a) | set(b):
            num += abs(a.get(p, 0) * scale - b.get(p, 0))
        out.append(Fraction(num, 2 * den ** (n + k)))
    return out


def tv_consecutive(jumps, n, k=1):
    """TV distance between the n-th and (n+k)-th kernel powers from 0."""
    return tv_profile(jumps, n, k)[-1]


# -- couplings ------------------------------------------------------------------


def _difference_kernel(jumps):
    diff = {}
    for a, wa in zip(jumps.atoms, jumps.weights):
        for b, wb in zip(jumps.atoms, jumps.weights):
            v = tuple(x - y for x, y in zip(a, b))
            diff[v] = diff.get(v, Fraction(0)) + wa * wb
    vecs = sorted(diff)
    return np.array(vecs, dtype=np.int64), np.array(
        [float(diff[v]) for v in vecs]
    )


def _atom_sampler(jumps):
    cum = np.cumsum([float(w) for w in jumps.weights])
    cum[-1] = 1.0
    return cum


def meet_and_stick_coupling(jumps, x, y, budget, seed, record_trace=False):
    """Run two independent chains until they share a position at equal times.

    One seeded experiment. On success the chains could be glued from the
    meeting index on; with record_trace the actually-glued paths are
    returned, identical from the coupling time.
    """
    d = jumps.dimension
    x0, y0 = _vec(x, d), _vec(y, d)
    if record_trace:
        return _meet_with_trace(jumps, x0, y0, budget, seed, d)
    if x0 == y0:
        return CouplingResult(True, coupling_time=0, shift=0)

    vecs, probs = _difference_kernel(jumps)
    cum = np.cumsum(probs)
    cum[-1] = 1.0
    rng = rng_for(seed, _ROLE_MEET)
    pos = np.array(tuple(a - b for a, b in zip(x0, y0)), dtype=np.int64)
    step = 0
    chunk = 4096
    while step < budget:
        b = min(chunk, budget - step)
        idx = np.searchsorted(cum, rng.random(b), side="right")
        traj = pos + np.cumsum(vecs[idx], axis=0)
        zero = (traj == 0).all(axis=1)
        if zero.any():
            first = int(zero.argmax())
            return CouplingResult(True, coupling_time=step + first + 1, shift=0)
        pos = traj[-1]
        step += b
    return CouplingResult(False)


def _meet_with_trace(jumps, x0, y0, budget, seed, d):
    rng = rng_for(seed, _ROLE_MEET)
    cum = _atom_sampler(jumps)
    atoms = jumps.atoms
    xs, ys = [_key(x0, d)], [_key(y0, d)]
    px, py = x0, y0
    met = 0 if x0 == y0 else None
    for s in range(1, budget + 1):
        ax = atoms[int(np.searchsorted(cum, rng.random(), side="right"))]
        px = tuple(p + q for p, q in zip(px, ax))
        if met is None:
            ay = atoms[int(np.searchsorted(cum, rng.random(), side="right"))]
            py = tuple(p + q for p, q in zip(py, ay))
        else:
            py = px
        xs.append(_key(px, d))
        ys.append(_key(py, d))
        if met is None and px == py:
            met = s
    return CouplingResult(met is not None, coupling_time=met, shift=0,
                          trace=(xs, ys))


def _cross_collision_once(jumps, x0, y0, budget, rng, min_index):
    """First shared vertex between two independent paths, as (m, n).

    Earliest-index tables on both paths make the answer well defined;
    indices below min_index are excluded (min_index 1 drops the sources).
    """
    d = jumps.dimension
    atoms = jumps.atoms
    cum = _atom_sampler(jumps)
    seen_a = {x0: 0} if min_index == 0 else {}
    seen_b = {y0: 0} if min_index == 0 else {}
    if min_index == 0 and x0 == y0:
        return (0, 0)
    px, py = x0, y0
    draws = np.searchsorted(cum, rng.random(2 * budget), side="right")
    for step in range(1, budget + 1):
        px = tuple(p + q for p, q in zip(px, atoms[draws[2 * step - 2]]))
        if px in seen_b:
            return (step, seen_b[px])
        if px not in seen_a:
            seen_a[px] = step
        py = tuple(p + q for p, q in zip(py, atoms[draws[2 * step - 1]]))
        if py in seen_a:
            return (seen_a[py], step)
        if py not in seen_b:
            seen_b[py] = step
    return None


def shift_coupling(jumps, lattice, x, y, budget, seed, record_trace=False):
    """Couple two chains up to an index shift, one seeded experiment.

    Success means the paths shared a vertex at indices (m, n), any pair
    including the sources; gluing from there gives X_t = Y_{t-k} for
    t >= coupling time, with shift k = m - n. The lattice argument states
    where the sources live; sources are validated against it.
    """
    d = jumps.dimension
    x0, y0 = _vec(x, d), _vec(y, d)
    if lattice is not None:
        for p in (x0, y0):
            if not in_lattice(lattice, p):
                raise UnknownVertex(f"source {p} not in lattice")
    rng = rng_for(seed, _ROLE_SHIFT)
    hit = _cross_collision_once(jumps, x0, y0, budget, rng, min_index=0)
    if hit is None:
        return CouplingResult(False)
    m, n = hit
    return CouplingResult(True, coupling_time=m, shift=m - n)


def path_collision_estimate(jumps, x, y, budget, trials, seed):
    """Frequency with which two independent paths share a vertex.

    Collisions count only at indices >= 1 on both paths, so the sources
    themselves are excluded. Sharing a vertex is what merges two sources
    into one component of the coalescing forest; the complement of the
    frequency estimates the distinct-component probability.
    """
    d = jumps.dimension
    x0, y0 = _vec(x, d), _vec(y, d)
    hits = []
    for t in range(trials):
        rng = rng_for(derive_seed(seed, t), _ROLE_CROSS)
        hits.append(_cross_collision_once(jumps, x0, y0, budget, rng,
                                          min_index=1))
    successes = [h for h in hits if h is not None]
    f = len(successes) / trials
    steps = [max(m, n) for m, n in successes]
    return CollisionEstimate(
        trials=trials,
        successes=len(successes),
        budget=budget,
        frequency=f,
        half_width=4.0 * math.sqrt(f * (1.0 - f) / trials),
        mean_steps=float(np.mean(steps)) if steps else None,
    )
