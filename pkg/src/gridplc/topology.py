"""Topological metrics of a grid graph and their empirical distributions."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse import csgraph
from scipy.sparse.linalg import eigsh

from .grid import DisconnectedGraphError, GridGraph, laplacian

# dense symmetric eigensolves up to this many nodes, iterative above
DENSE_LIMIT = 1000
EIG_TOL = 1e-8


def degrees(g: GridGraph) -> np.ndarray:
    return np.asarray(g.adjacency().sum(axis=1)).ravel().astype(np.int64)


def n_components(g: GridGraph) -> int:
    return int(csgraph.connected_components(g.adjacency(), directed=False)[0])


def _require_connected(g: GridGraph) -> None:
    k = n_components(g)
    if k > 1:
        raise DisconnectedGraphError(k)


def avg_degree(g: GridGraph) -> float:
    return 2.0 * len(g.simple_edges()) / g.n_buses


def avg_shortest_path(g: GridGraph, chunk: int = 256) -> float:
    """Mean hop distance over all unordered pairs of distinct buses."""
    _require_connected(g)
    n = g.n_buses
    if n < 2:
        raise ValueError("average path length needs at least two buses")
    adj = g.adjacency()
    total = 0.0
    # BFS from blocks of sources keeps memory at chunk x N
    for start in range(0, n, chunk):
        idx = np.arange(start, min(start + chunk, n))
        d = csgraph.shortest_path(adj, directed=False, unweighted=True, indices=idx)
        total += d.sum()
    return float(total / (n * (n - 1)))


def pearson_degree_correlation(g: GridGraph) -> float | None:
    """Degree assortativity over both orientations of every edge.

    Returns ``None`` when the endpoint degrees have zero variance (regular graphs).
    """
    e = g.simple_edges()
    if len(e) == 0:
        raise ValueError("degree correlation of an edgeless graph")
    k = degrees(g).astype(float)
    x = np.concatenate([k[e[:, 0]], k[e[:, 1]]])
    y = np.concatenate([k[e[:, 1]], k[e[:, 0]]])
    x = x - x.mean()
    y = y - y.mean()
    sxx, syy = (x * x).sum(), (y * y).sum()
    if sxx <= 1e-12 * len(x) or syy <= 1e-12 * len(y):
        return None
    return float((x * y).sum() / np.sqrt(sxx * syy))


def laplacian_eigenvalues(g: GridGraph) -> np.ndarray:
    return np.linalg.eigvalsh(laplacian(g))


def algebraic_connectivity(g: GridGraph) -> float:
    """Second-smallest Laplacian eigenvalue (0 for a disconnected graph)."""
    n = g.n_buses
    if n < 2:
        raise ValueError("algebraic connectivity needs at least two buses")
    if n <= DENSE_LIMIT:
        return max(float(laplacian_eigenvalues(g)[1]), 0.0)
    if n_components(g) > 1:
        return 0.0
    L = laplacian(g, dense=False).astype(float)
    # shift-invert just below zero; the all-ones null vector is the first of the pair
    vals = eigsh(L, k=2, sigma=-1e-3, which="LM", tol=EIG_TOL * 1e-3, return_eigenvectors=False)
    return max(float(np.sort(vals)[1]), 0.0)


def clustering_coefficients(g: GridGraph) -> tuple[float, float]:
    """(average local clustering, global transitivity).

    Nodes of degree < 2 contribute 0 to the local average.
    """
    adj = g.adjacency().tocsr()
    k = degrees(g).astype(float)
    tri2 = np.asarray((adj @ adj).multiply(adj).sum(axis=1)).ravel()  # 2 x triangles at node
    wedges = k * (k - 1)
    local = np.divide(tri2, wedges, out=np.zeros_like(tri2), where=wedges > 0)
    avg_local = float(local.mean()) if len(local) else 0.0
    transitivity = float(tri2.sum() / wedges.sum()) if wedges.sum() > 0 else 0.0
    return avg_local, transitivity


def clustering_coefficient(g: GridGraph) -> float:
    return clustering_coefficients(g)[0]


def degree_pmf(g: GridGraph) -> dict[int, float]:
    vals, counts = np.unique(degrees(g), return_counts=True)
    return {int(v): float(c) / g.n_buses for v, c in zip(vals, counts)}


def spectral_scale(n: int, m: int) -> float:
    """1/sqrt(N p (1-p)) with the edge density p = 2m / (N (N-1)).

    Empty and complete graphs have no such scale; their eigenvalues are left raw.
    """
    p = 2.0 * m / (n * (n - 1))
    if not 0 < p < 1:
        return 1.0
    return 1.0 / np.sqrt(n * p * (1 - p))


def adjacency_eigenvalues(g: GridGraph) -> np.ndarray:
    return np.linalg.eigvalsh(g.adjacency().toarray())


def spectral_density(
    g: GridGraph, n_bins: int = 50, value_range: tuple[float, float] | None = None
) -> list[tuple[float, float]]:
    """Histogram of normalized adjacency eigenvalues as (bin centre, density).

    Densities integrate to 1 over the bins.
    """
    n = g.n_buses
    if n < 2:
        raise ValueError("spectral density needs at least two buses")
    lam = adjacency_eigenvalues(g) * spectral_scale(n, len(g.simple_edges()))
    dens, edges = np.histogram(lam, bins=n_bins, range=value_range, density=True)
    centres = 0.5 * (edges[:-1] + edges[1:])
    return [(float(c), float(d)) for c, d in zip(centres, dens)]


def semicircle_density(x):
    """Wigner semicircle of unit variance, support [-2, 2]."""
    x = np.asarray(x, dtype=float)
    return np.where(np.abs(x) < 2, np.sqrt(np.clip(4 - x * x, 0, None)) / (2 * np.pi), 0.0)


def semicircle_cdf(x):
    x = np.clip(np.asarray(x, dtype=float), -2, 2)
    return 0.5 + (x * np.sqrt(4 - x * x) / 4 + np.arcsin(x / 2)) / np.pi


@dataclass(frozen=True)
class LengthPmf:
    bin_width: float
    edges: np.ndarray
    probabilities: np.ndarray

    @property
    def centres(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    def tail_slope(self) -> float:
        """Least-squares slope of log-probability against bin centre (per metre).

        Empty bins are skipped; each bin is weighted by its probability so the
        sparsely populated far tail does not dominate.
        """
        p = self.probabilities
        keep = p > 0
        x, y, w = self.centres[keep], np.log(p[keep]), p[keep]
        if keep.sum() < 2:
            raise ValueError("need at least two populated bins to fit a slope")
        return float(np.polyfit(x, y, 1, w=np.sqrt(w))[0])


def branch_length_pmf(g: GridGraph, bin_width: float = 100.0) -> LengthPmf:
    """Histogram of in-service branch lengths with bins [k w, (k+1) w)."""
    if not bin_width > 0:
        raise ValueError("bin width must be positive")
    lengths = np.array([br.length for br in g.active_branches()], dtype=float)
    if len(lengths) == 0:
        raise ValueError("graph has no in-service branches")
    nbins = int(np.floor(lengths.max() / bin_width)) + 1
    edges = np.arange(nbins + 1) * bin_width
    counts = np.bincount(np.floor(lengths / bin_width).astype(np.int64), minlength=nbins)
    return LengthPmf(bin_width, edges, counts / counts.sum())


@dataclass(frozen=True)
class TopologyReport:
    n_nodes: int
    n_branches: int
    avg_degree: float
    avg_path_length_hops: float
    pearson_degree_corr: float | None
    algebraic_connectivity: float
    clustering_coeff: float
    transitivity: float
    degree_pmf: dict[int, float] = field(default_factory=dict)
    branch_length_hist: LengthPmf | None = None
    spectral_density: list[tuple[float, float]] = field(default_factory=list)

    def summary(self) -> dict[str, object]:
        return {
            "n_nodes": self.n_nodes,
            "n_branches": self.n_branches,
            "avg_degree": self.avg_degree,
            "avg_path_length_hops": self.avg_path_length_hops,
            "pearson_degree_corr": self.pearson_degree_corr,
            "algebraic_connectivity": self.algebraic_connectivity,
            "clustering_coeff": self.clustering_coeff,
            "transitivity": self.transitivity,
        }


def full_report(g: GridGraph, n_bins: int = 50, length_bin_width: float = 100.0) -> TopologyReport:
    """All summary metrics plus the three distributions."""
    _require_connected(g)
    local, trans = clustering_coefficients(g)
    lengths = branch_length_pmf(g, length_bin_width) if g.n_circuits else None
    return TopologyReport(
        n_nodes=g.n_buses,
        n_branches=g.n_branches,
        avg_degree=avg_degree(g),
        avg_path_length_hops=avg_shortest_path(g),
        pearson_degree_corr=pearson_degree_correlation(g),
        algebraic_connectivity=algebraic_connectivity(g),
        clustering_coeff=local,
        transitivity=trans,
        degree_pmf=degree_pmf(g),
        branch_length_hist=lengths,
        spectral_density=spectral_density(g, n_bins),
    )


def _fmt(v) -> str:
    if v is None:
        return "undefined"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_report(report: TopologyReport, out_dir: str | Path) -> list[Path]:
    """Write report.txt (key = value) and the three distribution CSVs."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    p = out / "report.txt"
    p.write_text("".join(f"{k} = {_fmt(v)}\n" for k, v in report.summary().items()), encoding="utf-8")
    written.append(p)

    p = out / "degree_pmf.csv"
    rows = ["degree,probability"] + [f"{k},{v!r}" for k, v in sorted(report.degree_pmf.items())]
    p.write_text("\n".join(rows) + "\n", encoding="utf-8")
    written.append(p)

    p = out / "spectral_density.csv"
    rows = ["normalized_eigenvalue,density"] + [f"{x!r},{d!r}" for x, d in report.spectral_density]
    p.write_text("\n".join(rows) + "\n", encoding="utf-8")
    written.append(p)

    p = out / "branch_length_pmf.csv"
    rows = ["bin_start_m,bin_end_m,probability"]
    h = report.branch_length_hist
    if h is not None:
        rows += [f"{float(a)!r},{float(b)!r},{float(q)!r}" for a, b, q in zip(h.edges[:-1], h.edges[1:], h.probabilities)]
    p.write_text("\n".join(rows) + "\n", encoding="utf-8")
    written.append(p)
    return written
