"""Channel loss, rate composition and repeater-chain Monte Carlo.

Time advances in attempt slots.  In each slot every free elementary segment
tries once; links that exist at the end of the attempt stage are swapped
level by level within the same slot.  A link is usable for `cutoff` slots
counting its creation slot, so cutoff=1 means no memory.  A swapped link
inherits the creation slot of its older constituent.  A failed swap
discards both inputs.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .rng import map_shards, shard_sizes

DEFAULT_LOSS_LENGTH_KM = 20.0
DEFAULT_MAX_ATTEMPTS = 1_000_000


def loss_length_from_db(db_per_km: float) -> float:
    """e-folding length (km) for an attenuation in dB/km."""
    if db_per_km <= 0:
        raise ValueError("attenuation must be positive")
    return 10.0 / (np.log(10.0) * db_per_km)


def db_from_loss_length(loss_length_km: float) -> float:
    if loss_length_km <= 0:
        raise ValueError("loss length must be positive")
    return 10.0 / (np.log(10.0) * loss_length_km)


@dataclass(frozen=True)
class Channel:
    length: float  # km
    loss_length: float | None = None  # km
    db_per_km: float | None = None

    def __post_init__(self):
        if self.length < 0 or not np.isfinite(self.length):
            raise ValueError("length must be finite and nonnegative")
        if self.loss_length is not None and self.db_per_km is not None:
            raise ValueError("give either loss_length or db_per_km, not both")
        if self.loss_length is not None and self.loss_length <= 0:
            raise ValueError("loss_length must be positive")
        if self.db_per_km is not None and self.db_per_km <= 0:
            raise ValueError("db_per_km must be positive")

    @property
    def effective_loss_length(self) -> float:
        if self.db_per_km is not None:
            return loss_length_from_db(self.db_per_km)
        return DEFAULT_LOSS_LENGTH_KM if self.loss_length is None else self.loss_length


def channel_transmission(ch: Channel) -> float:
    return float(np.exp(-ch.length / ch.effective_loss_length))


def success_rate(rep_rate: float, p_int: float, p_trans: float) -> float:
    """Heralded successes per second."""
    for name, p in (("p_int", p_int), ("p_trans", p_trans)):
        if not 0 <= p <= 1:
            raise ValueError(f"{name} must lie in [0, 1]")
    if rep_rate < 0:
        raise ValueError("rep_rate must be nonnegative")
    return float(rep_rate * p_int * p_trans)


def direct_chain_rate(rep_rate: float, p_int: float, segment: Channel, n_segments: int) -> float:
    """Rate when all n segments must succeed in the same attempt (no memory)."""
    return success_rate(rep_rate, p_int, channel_transmission(segment) ** n_segments)


@dataclass(frozen=True)
class Node:
    id: str
    qubits: int = 1
    preset: str = "ideal"


@dataclass
class Topology:
    nodes: list[Node]
    channels: list[tuple[str, str, Channel]] = field(default_factory=list)

    def __post_init__(self):
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate node id")
        for a, b, _ in self.channels:
            if a not in ids or b not in ids:
                raise ValueError(f"channel endpoint {a}-{b} is not a node")

    def is_connected(self) -> bool:
        if not self.nodes:
            return True
        adj: dict[str, set[str]] = {n.id: set() for n in self.nodes}
        for a, b, _ in self.channels:
            adj[a].add(b)
            adj[b].add(a)
        seen, stack = set(), [self.nodes[0].id]
        while stack:
            v = stack.pop()
            if v not in seen:
                seen.add(v)
                stack.extend(adj[v] - seen)
        return len(seen) == len(self.nodes)

    @classmethod
    def chain(cls, n_segments: int, segment: Channel, preset: str = "ideal") -> "Topology":
        nodes = [Node(f"n{i}", 2 if 0 < i < n_segments else 1, preset) for i in range(n_segments + 1)]
        chans = [(f"n{i}", f"n{i + 1}", segment) for i in range(n_segments)]
        return cls(nodes, chans)


@dataclass(frozen=True)
class RateEstimate:
    mean_attempts: float
    stderr_attempts: float
    success_probability: float  # per slot, 1 / mean_attempts
    mean_time: float  # s
    quantiles: dict[str, float]
    trials: int
    failures: int  # trials that hit max_attempts
    histogram: np.ndarray  # counts of attempts 1..max observed

    def to_dict(self) -> dict:
        return {
            "mean_attempts": self.mean_attempts,
            "stderr_attempts": self.stderr_attempts,
            "success_probability": self.success_probability,
            "mean_time": self.mean_time,
            "quantiles": dict(self.quantiles),
            "trials": self.trials,
            "failures": self.failures,
        }


def _check_probs(p_link, swap_success, cutoff):
    if not 0 <= p_link <= 1 or not 0 <= swap_success <= 1:
        raise ValueError("probabilities must lie in [0, 1]")
    if cutoff is not None and cutoff < 1:
        raise ValueError("cutoff must be >= 1 (None for unlimited memory)")


def _summarize(attempts: np.ndarray, trials: int, slot_time: float) -> RateEstimate:
    ok = attempts[attempts > 0]
    fails = int(trials - ok.size)
    if ok.size == 0:
        return RateEstimate(float("inf"), float("nan"), 0.0, float("inf"), {}, trials, fails, np.zeros(0, int))
    mean = float(ok.mean())
    se = float(ok.std(ddof=1) / np.sqrt(ok.size)) if ok.size > 1 else 0.0
    qs = {f"q{int(q * 100):02d}": float(np.quantile(ok, q)) for q in (0.05, 0.25, 0.5, 0.75, 0.95)}
    hist = np.bincount(ok.astype(np.int64))[1:]
    return RateEstimate(mean, se, 1.0 / mean, mean * slot_time, qs, trials, fails, hist)


def _two_segment_shard(args, rng):
    n, p, s, cutoff, max_attempts = args
    birth = np.full((n, 2), -1, dtype=np.int64)  # -1 = no link
    out = np.zeros(n, dtype=np.int64)
    active = np.arange(n)
    t = 0
    while active.size and t < max_attempts:
        t += 1
        b = birth[active]
        if cutoff is not None:
            b[(b >= 0) & (t - b >= cutoff)] = -1
        free = b < 0
        hit = rng.random(b.shape) < p
        b[free & hit] = t
        both = (b >= 0).all(axis=1)
        swap_ok = rng.random(active.size) < s
        done = both & swap_ok
        b[both & ~swap_ok] = -1
        out[active[done]] = t
        birth[active] = b
        active = active[~done]
    return out


def two_segment_repeater(p_link: float, swap_success: float = 1.0, memory_cutoff_attempts: int | None = None,
                         trials: int = 100_000, seed: int = 0, max_attempts: int = DEFAULT_MAX_ATTEMPTS,
                         slot_time: float = 1e-4, workers: int = 1, shard_size: int = 50_000) -> RateEstimate:
    """Slots until one end-to-end link over two segments.  Trials that hit max_attempts count as failures."""
    _check_probs(p_link, swap_success, memory_cutoff_attempts)
    args = [(n, p_link, swap_success, memory_cutoff_attempts, max_attempts) for n in shard_sizes(trials, shard_size)]
    attempts = np.concatenate(map_shards(_two_segment_shard, args, seed, workers))
    return _summarize(attempts, trials, slot_time)


def _chain_shard(args, rng):
    n, n_seg, p, s, cutoff, max_attempts = args
    levels = int(np.log2(n_seg))
    # birth[k] has shape (trials, n_seg / 2^k); -1 = no link
    birth = [np.full((n, n_seg >> k), -1, dtype=np.int64) for k in range(levels + 1)]
    out = np.zeros(n, dtype=np.int64)
    active = np.arange(n)
    t = 0
    while active.size and t < max_attempts:
        t += 1
        bs = [b[active] for b in birth]
        if cutoff is not None:
            for b in bs:
                b[(b >= 0) & (t - b >= cutoff)] = -1
        covered = np.zeros((active.size, n_seg), bool)
        for k, b in enumerate(bs):
            covered |= np.repeat(b >= 0, 1 << k, axis=1)
        hit = rng.random((active.size, n_seg)) < p
        bs[0][~covered & hit] = t
        for k in range(levels):
            left, right = bs[k][:, 0::2], bs[k][:, 1::2]
            both = (left >= 0) & (right >= 0)
            ok = rng.random(both.shape) < s
            bs[k + 1][both & ok] = np.minimum(left, right)[both & ok]
            left[both] = -1
            right[both] = -1
            bs[k][:, 0::2], bs[k][:, 1::2] = left, right
        done = bs[levels][:, 0] >= 0
        out[active[done]] = t
        for k in range(levels + 1):
            birth[k][active] = bs[k]
        active = active[~done]
    return out


def chain_rate(n_segments: int, p_link: float, swap_success: float = 1.0, cutoff: int | None = None,
               trials: int = 100_000, seed: int = 0, max_attempts: int = DEFAULT_MAX_ATTEMPTS,
               slot_time: float = 1e-4, workers: int = 1, shard_size: int = 50_000) -> RateEstimate:
    """Nested swapping over 2^k segments."""
    if n_segments < 1 or n_segments & (n_segments - 1):
        raise ValueError("n_segments must be a power of 2")
    _check_probs(p_link, swap_success, cutoff)
    args = [(n, n_segments, p_link, swap_success, cutoff, max_attempts) for n in shard_sizes(trials, shard_size)]
    attempts = np.concatenate(map_shards(_chain_shard, args, seed, workers))
    return _summarize(attempts, trials, slot_time)


def mean_max_geometric(p: float, n: int) -> float:
    """E[max of n iid geometric(p) on {1, 2, ...}] by inclusion-exclusion."""
    if not 0 < p <= 1:
        raise ValueError("p must lie in (0, 1]")
    from math import comb

    q = 1 - p
    return float(sum((-1) ** (j + 1) * comb(n, j) / (1 - q ** j) for j in range(1, n + 1)))


def ks_statistic(a: np.ndarray, b: np.ndarray) -> float:
    """Two-sample Kolmogorov-Smirnov distance for integer-valued samples."""
    grid = np.union1d(a, b)
    fa = np.searchsorted(np.sort(a), grid, side="right") / a.size
    fb = np.searchsorted(np.sort(b), grid, side="right") / b.size
    return float(np.abs(fa - fb).max())
