"""PLC coverage from a concentrator under a link budget, and greedy repeater placement."""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

from ..channel.pathloss import PathLossTable, pathloss_db
from ..grid import Branch, DisconnectedGraphError, GridGraph, bus_sort_key
from ..topology import n_components

LOSS_TOL = 1e-9


@dataclass(frozen=True)
class LinkBudget:
    """``transformer_mode`` is ``passable`` (coupler loss added) or ``blocked``."""

    max_loss_db: float
    frequency: float = 100e3
    per_coupler_loss_db: float = 0.0
    segment_class_map: dict[str, str] = field(default_factory=lambda: {"*": "MV_overhead"})
    transformer_mode: str = "passable"
    selector: str = "mid"

    def __post_init__(self):
        if self.max_loss_db < 0:
            raise ValueError("max_loss_db must be >= 0")
        if self.per_coupler_loss_db < 0:
            raise ValueError("per_coupler_loss_db must be >= 0")
        if not self.frequency > 0:
            raise ValueError("frequency must be positive")
        if self.transformer_mode not in ("passable", "blocked"):
            raise ValueError(f"unknown transformer mode {self.transformer_mode!r}")

    def segment_class(self, branch: Branch) -> str:
        cls = self.segment_class_map.get(branch.kind, self.segment_class_map.get("*"))
        if cls is None:
            raise KeyError(f"no segment class mapped for branch kind {branch.kind!r}")
        return cls


def edge_loss_db(branch: Branch, budget: LinkBudget, table: PathLossTable) -> float:
    """Cable loss over the branch length plus coupler loss at switches and transformers.

    Returns ``inf`` for a transformer when transformers block the signal.
    """
    if branch.kind == "transformer" and budget.transformer_mode == "blocked":
        return float("inf")
    loss = pathloss_db(table, budget.segment_class(branch), budget.frequency, branch.length / 1000.0,
                       budget.selector)
    if branch.kind in ("transformer", "switch"):
        loss += budget.per_coupler_loss_db
    return loss


def _neighbours(g: GridGraph, budget: LinkBudget, table: PathLossTable) -> dict[str, list[tuple[str, float]]]:
    nb: dict[str, list[tuple[str, float]]] = {b: [] for b in g.bus_ids}
    for br in g.active_branches():
        w = edge_loss_db(br, budget, table)
        if w == float("inf"):
            continue
        nb[br.bus_a].append((br.bus_b, w))
        nb[br.bus_b].append((br.bus_a, w))
    return nb


def _losses_from(nb, sources, limit: float = float("inf")) -> dict[str, float]:
    """Multi-source Dijkstra on dB weights, pruned beyond ``limit``."""
    dist = {s: 0.0 for s in sources}
    heap = [(0.0, bus_sort_key(s), s) for s in sources]
    heapq.heapify(heap)
    done = set()
    while heap:
        d, _, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for v, w in nb[u]:
            nd = d + w
            if nd <= limit + LOSS_TOL and nd < dist.get(v, float("inf")):
                dist[v] = nd
                heapq.heappush(heap, (nd, bus_sort_key(v), v))
    return dist


@dataclass(frozen=True)
class CoveragePlan:
    concentrator: str
    losses: dict[str, float]  # loss from the nearest serving node (concentrator or repeater)
    reachable: frozenset[str]
    repeaters: tuple[str, ...]
    uncovered: frozenset[str]

    @property
    def coverage_fraction(self) -> float:
        total = len(self.reachable) + len(self.uncovered)
        return len(self.reachable) / total if total else 1.0

    def rows(self) -> list[tuple[str, float, str]]:
        reps = set(self.repeaters)
        out = []
        for b in sorted(self.losses, key=bus_sort_key):
            status = "repeater" if b in reps else ("reachable" if b in self.reachable else "uncovered")
            out.append((b, self.losses[b], status))
        return out


def coverage(g: GridGraph, concentrator: str, budget: LinkBudget, table: PathLossTable) -> CoveragePlan:
    """Minimum accumulated loss from the concentrator to every bus, no repeaters.

    Buses with no loss-finite path (e.g. behind a blocking transformer) get ``inf``.
    """
    if concentrator not in g.buses:
        raise KeyError(f"unknown concentrator bus {concentrator!r}")
    nb = _neighbours(g, budget, table)
    dist = _losses_from(nb, [concentrator])
    losses = {b: dist.get(b, float("inf")) for b in g.bus_ids}
    reach = frozenset(b for b, d in losses.items() if d <= budget.max_loss_db + LOSS_TOL)
    return CoveragePlan(concentrator, losses, reach, (), frozenset(losses) - reach)


def place_repeaters(g: GridGraph, concentrator: str, budget: LinkBudget, table: PathLossTable) -> CoveragePlan:
    """Greedy repeater placement.

    While buses remain uncovered, the covered bus that would newly cover the most
    of them is promoted to repeater (ties go to the lowest bus id). Stops early
    only if no candidate helps, which leaves the rest in ``uncovered``.
    """
    if concentrator not in g.buses:
        raise KeyError(f"unknown concentrator bus {concentrator!r}")
    k = n_components(g)
    if k > 1:
        raise DisconnectedGraphError(k)
    nb = _neighbours(g, budget, table)
    limit = budget.max_loss_db
    sources = [concentrator]
    covered = set(_losses_from(nb, sources, limit))
    all_buses = set(g.bus_ids)
    reach_cache: dict[str, set[str]] = {}
    while covered != all_buses:
        best, best_gain = None, 0
        for cand in sorted(covered - set(sources), key=bus_sort_key):
            if cand not in reach_cache:
                reach_cache[cand] = set(_losses_from(nb, [cand], limit))
            gain = len(reach_cache[cand] - covered)
            if gain > best_gain:
                best, best_gain = cand, gain
        if best is None:
            break
        sources.append(best)
        covered |= reach_cache[best]
    dist = _losses_from(nb, sources)
    losses = {b: dist.get(b, float("inf")) for b in g.bus_ids}
    reach = frozenset(covered)
    return CoveragePlan(concentrator, losses, reach, tuple(sources[1:]), frozenset(all_buses - covered))


def verify_plan(g: GridGraph, plan: CoveragePlan, budget: LinkBudget, table: PathLossTable) -> bool:
    """Every reachable bus is within budget of the concentrator or a repeater, and each
    repeater is within budget of the concentrator or an earlier repeater."""
    nb = _neighbours(g, budget, table)
    limit = budget.max_loss_db
    served = set(_losses_from(nb, [plan.concentrator], limit))
    for r in plan.repeaters:
        if r not in served:
            return False
        served |= set(_losses_from(nb, [r], limit))
    return set(plan.reachable) <= served and not (set(plan.reachable) & set(plan.uncovered))
