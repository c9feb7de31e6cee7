"""Synthetic distribution topologies: radial trees with a target degree mix, rings, meshes."""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, linprog

from ..grid import Branch, Bus, GridGraph

TOPOLOGY_KINDS = ("radial", "ring", "interconnected")

# share of buses with 1..4 branches in a sampled radial MV feeder network
MV_DEGREE_MIX = {1: 0.16, 2: 0.60, 3: 0.22, 4: 0.02}


class InfeasibleSpec(ValueError):
    pass


@dataclass(frozen=True)
class GeneratorSpec:
    n_nodes: int
    topology_kind: str = "radial"
    degree_pmf_target: dict[int, float] = field(default_factory=lambda: dict(MV_DEGREE_MIX))
    branch_length_mean: float = 300.0
    chord_fraction: float = 0.0
    seed: int = 0
    ring_size: int | None = None
    degree_method: str = "projected"
    voltage_kv: float = 12.47
    r_ohm_per_km: float = 0.306
    x_ohm_per_km: float = 0.628

    def __post_init__(self):
        if self.topology_kind not in TOPOLOGY_KINDS:
            raise InfeasibleSpec(f"unknown topology kind {self.topology_kind!r}")
        if self.n_nodes < 2:
            raise InfeasibleSpec("need at least two nodes")
        pmf = self.degree_pmf_target
        if not pmf or any(int(k) != k or k < 1 for k in pmf) or any(p < 0 for p in pmf.values()):
            raise InfeasibleSpec("degree pmf needs positive integer degrees and non-negative probabilities")
        if abs(sum(pmf.values()) - 1.0) > 1e-9:
            raise InfeasibleSpec(f"degree pmf sums to {sum(pmf.values())}, not 1")
        if not self.branch_length_mean > 0:
            raise InfeasibleSpec("branch length mean must be positive")
        if self.chord_fraction < 0:
            raise InfeasibleSpec("chord fraction must be >= 0")
        if self.topology_kind == "radial" and self.chord_fraction > 0:
            raise InfeasibleSpec("a radial network cannot carry chords")
        if self.ring_size is not None and not 3 <= self.ring_size <= self.n_nodes:
            raise InfeasibleSpec("ring size must lie in 3..n_nodes")
        if self.degree_method not in ("projected", "conditioned"):
            raise InfeasibleSpec(f"unknown degree method {self.degree_method!r}")


def tree_feasible_pmf(pmf: dict[int, float], n: int) -> dict[int, float]:
    """Closest pmf in L1 (same support) whose mean is the tree mean 2(n-1)/n."""
    ks = np.array(sorted(k for k, p in pmf.items() if p > 0), dtype=float)
    p = np.array([pmf[int(k)] for k in ks])
    target = 2.0 * (n - 1) / n
    if not ks.min() <= target <= ks.max():
        raise InfeasibleSpec(f"degrees {ks.astype(int).tolist()} cannot average {target:.4f} as a tree needs")
    d = len(ks)
    # variables [q, u] with u >= |q - p|; minimise sum(u)
    c = np.concatenate([np.zeros(d), np.ones(d)])
    eye = np.eye(d)
    a_ub = np.block([[eye, -eye], [-eye, -eye]])
    b_ub = np.concatenate([p, -p])
    a_eq = np.vstack([np.concatenate([np.ones(d), np.zeros(d)]), np.concatenate([ks, np.zeros(d)])])
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=[1.0, target], bounds=[(0, None)] * (2 * d),
                  method="highs")
    if not res.success:
        raise InfeasibleSpec(f"no tree-compatible degree mix: {res.message}")
    q = np.clip(res.x[:d], 0, None)
    return {int(k): float(v) for k, v in zip(ks, q / q.sum())}


def quota_counts(pmf: dict[int, float], n: int) -> dict[int, int]:
    """Integer degree counts near n * pmf with sum n and degree sum 2(n-1)."""
    ks = sorted(pmf)
    ideal = np.array([n * pmf[k] for k in ks])
    counts = np.floor(ideal).astype(int)
    order = np.argsort(-(ideal - counts), kind="stable")
    for j in order[: n - counts.sum()]:
        counts[j] += 1
    deficit = 2 * (n - 1) - int(np.dot(ks, counts))
    while deficit != 0:
        best = None
        for a in range(len(ks)):
            if counts[a] == 0:
                continue
            for b in range(len(ks)):
                step = ks[b] - ks[a]
                if step == 0 or np.sign(step) != np.sign(deficit) or abs(step) > abs(deficit):
                    continue
                trial = counts.copy()
                trial[a] -= 1
                trial[b] += 1
                cost = (np.abs(trial - ideal).sum(), -abs(step), a, b)
                if best is None or cost < best[0]:
                    best = (cost, a, b, step)
        if best is None:
            raise InfeasibleSpec("degree counts cannot be balanced to a tree")
        _, a, b, step = best
        counts[a] -= 1
        counts[b] += 1
        deficit -= step
    return {k: int(c) for k, c in zip(ks, counts)}


def conditioned_degrees(pmf: dict[int, float], n: int, rng: np.random.Generator,
                        max_tries: int = 100_000) -> np.ndarray:
    """I.i.d. draws from ``pmf`` conditioned on summing to 2(n-1).

    Sampling uses the exponentially tilted pmf whose mean matches the tree mean;
    tilting leaves the conditional law unchanged and makes acceptance likely.
    """
    ks = np.array(sorted(k for k, p in pmf.items() if p > 0))
    p = np.array([pmf[int(k)] for k in ks])
    total = 2 * (n - 1)
    if not (ks.min() * n <= total <= ks.max() * n):
        raise InfeasibleSpec("degree support cannot produce a tree")

    def mean_at(t):
        w = p * np.exp(t * (ks - ks.mean()))
        return (w * ks).sum() / w.sum() - total / n

    if ks.min() * n == total or ks.max() * n == total:
        t = -50.0 if ks.min() * n == total else 50.0
    else:
        t = brentq(mean_at, -50, 50)
    q = p * np.exp(t * (ks - ks.mean()))
    q /= q.sum()
    for _ in range(max_tries):
        d = rng.choice(ks, size=n, p=q)
        if d.sum() == total:
            return d
    raise InfeasibleSpec("could not draw a degree sequence summing to 2(n-1)")


def prufer_tree(degree_seq: np.ndarray, rng: np.random.Generator) -> list[tuple[int, int]]:
    """Uniform random labelled tree with the given degrees (nodes 0..n-1)."""
    n = len(degree_seq)
    if n == 2:
        return [(0, 1)]
    seq = np.repeat(np.arange(n), np.asarray(degree_seq) - 1)
    rng.shuffle(seq)
    remaining = np.asarray(degree_seq, dtype=np.int64).copy()
    leaves = [i for i in range(n) if remaining[i] == 1]
    heapq.heapify(leaves)
    edges = []
    for node in seq:
        leaf = heapq.heappop(leaves)
        edges.append((int(leaf), int(node)))
        remaining[node] -= 1
        if remaining[node] == 1:
            heapq.heappush(leaves, int(node))
    u, v = heapq.heappop(leaves), heapq.heappop(leaves)
    edges.append((int(u), int(v)))
    return edges


def _radial_edges(spec: GeneratorSpec, n: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    pmf = {int(k): float(v) for k, v in spec.degree_pmf_target.items()}
    if spec.degree_method == "projected":
        counts = quota_counts(tree_feasible_pmf(pmf, n), n)
        degs = np.repeat(list(counts), list(counts.values()))
        rng.shuffle(degs)
    else:
        degs = conditioned_degrees(pmf, n, rng)
    if degs.max() > n - 1:
        raise InfeasibleSpec("degree exceeds n - 1")
    return prufer_tree(degs, rng)


def _ring_edges(spec: GeneratorSpec, n: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    r = spec.ring_size or n
    edges = [(i, (i + 1) % r) for i in range(r)]
    max_deg = max(max(spec.degree_pmf_target), 3)
    deg = np.zeros(n, dtype=int)
    deg[:r] = 2
    for node in range(r, n):
        open_ = np.flatnonzero(deg[:node] < max_deg)
        parent = int(rng.choice(open_))
        edges.append((parent, node))
        deg[parent] += 1
        deg[node] = 1
    return edges


def _add_chords(edges: list[tuple[int, int]], n: int, count: int, rng: np.random.Generator) -> None:
    if count > n * (n - 1) // 2 - len(edges):
        raise InfeasibleSpec("too many chords for a simple graph")
    present = {(min(a, b), max(a, b)) for a, b in edges}
    while count:
        a, b = (int(x) for x in rng.integers(0, n, size=2))
        key = (min(a, b), max(a, b))
        if a == b or key in present:
            continue
        present.add(key)
        edges.append(key)
        count -= 1


def generate_topology(spec: GeneratorSpec) -> GridGraph:
    """Connected grid of the requested kind; identical spec and seed give an identical graph.

    Branch lengths are exponential with the configured mean, rounded to the millimetre.
    """
    rng = np.random.default_rng(spec.seed)
    n = spec.n_nodes
    if spec.topology_kind == "ring":
        edges = _ring_edges(spec, n, rng)
    else:
        edges = _radial_edges(spec, n, rng)
    if spec.topology_kind != "radial":
        _add_chords(edges, n, int(round(spec.chord_fraction * n)), rng)
    lengths = np.round(rng.exponential(spec.branch_length_mean, size=len(edges)), 3)
    ids = [str(i + 1) for i in range(n)]
    buses = {b: Bus(b, spec.voltage_kv, "intermediate") for b in ids}
    branches = tuple(
        Branch(ids[a], ids[b], float(length), spec.r_ohm_per_km, spec.x_ohm_per_km)
        for (a, b), length in zip(edges, lengths)
    )
    return GridGraph(buses, branches)
