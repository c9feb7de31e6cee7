"""Grid data structures, edge-list ingestion and the incidence/admittance/Laplacian matrices."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np
from scipy import sparse

BUS_ROLES = ("generator", "load", "intermediate")
BRANCH_KINDS = ("line", "switch", "transformer")
BRANCH_STATUSES = ("in_service", "open")

EDGE_HEADER = ("bus_a", "bus_b", "length_m", "r_ohm_per_km", "x_ohm_per_km", "kind", "status")
BUS_HEADER = ("bus_id", "kv", "role")

# series impedance (ohms) given to switches and transformers when assembling Y
DEFAULT_SURROGATE_Z = 1e-4 + 1e-4j


class GridFormatError(ValueError):
    """Malformed grid input. ``line`` is the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class DisconnectedGraphError(ValueError):
    def __init__(self, n_components: int):
        self.n_components = n_components
        super().__init__(f"graph is disconnected ({n_components} components)")


def bus_sort_key(bus_id: str):
    """Numeric ids sort numerically and before non-numeric ones."""
    try:
        return (0, int(bus_id), "")
    except ValueError:
        return (1, 0, bus_id)


@dataclass(frozen=True)
class Bus:
    id: str
    voltage_level: float | None = None
    role: str = "intermediate"

    def __post_init__(self):
        if self.voltage_level is not None and not self.voltage_level > 0:
            raise ValueError(f"bus {self.id}: voltage level must be > 0, got {self.voltage_level}")
        if self.role not in BUS_ROLES:
            raise ValueError(f"bus {self.id}: unknown role {self.role!r}")


@dataclass(frozen=True)
class Branch:
    bus_a: str
    bus_b: str
    length: float = 0.0
    resistance_per_km: float = 0.0
    reactance_per_km: float = 0.0
    kind: str = "line"
    status: str = "in_service"

    def __post_init__(self):
        if self.bus_a == self.bus_b:
            raise ValueError(f"self-loop at bus {self.bus_a}")
        if not self.length >= 0:
            raise ValueError(f"branch {self.bus_a}-{self.bus_b}: negative length")
        if not self.resistance_per_km >= 0:
            raise ValueError(f"branch {self.bus_a}-{self.bus_b}: negative resistance")
        if self.kind not in BRANCH_KINDS:
            raise ValueError(f"unknown branch kind {self.kind!r}")
        if self.status not in BRANCH_STATUSES:
            raise ValueError(f"unknown branch status {self.status!r}")

    @property
    def endpoints(self) -> tuple[str, str]:
        return (self.bus_a, self.bus_b)

    @property
    def in_service(self) -> bool:
        return self.status == "in_service"

    def impedance(self, surrogate: complex = DEFAULT_SURROGATE_Z) -> complex:
        """Series impedance in ohms; switches and transformers get ``surrogate``."""
        if self.kind != "line":
            return complex(surrogate)
        return complex(self.resistance_per_km, self.reactance_per_km) * (self.length / 1000.0)


@dataclass(frozen=True)
class GridGraph:
    """Immutable bus/branch graph. Bus order everywhere is ``bus_ids``."""

    buses: dict[str, Bus]
    branches: tuple[Branch, ...]
    mains_frequency: float = 60.0

    def __post_init__(self):
        for br in self.branches:
            for end in br.endpoints:
                if end not in self.buses:
                    raise ValueError(f"branch {br.bus_a}-{br.bus_b} references unknown bus {end}")

    @cached_property
    def bus_ids(self) -> tuple[str, ...]:
        return tuple(sorted(self.buses, key=bus_sort_key))

    @cached_property
    def index(self) -> dict[str, int]:
        return {b: i for i, b in enumerate(self.bus_ids)}

    @property
    def n_buses(self) -> int:
        return len(self.buses)

    @property
    def n_branches(self) -> int:
        """m: distinct in-service links, parallel circuits counted once."""
        return len(self.simple_edges())

    @property
    def n_circuits(self) -> int:
        """In-service branch records, parallel circuits counted separately."""
        return sum(1 for br in self.branches if br.in_service)

    def active_branches(self, include_open: bool = False) -> list[Branch]:
        return [br for br in self.branches if include_open or br.in_service]

    def oriented(self, br: Branch) -> tuple[int, int]:
        """Endpoint indices ordered so the lower bus id comes first."""
        i, k = self.index[br.bus_a], self.index[br.bus_b]
        return (i, k) if i < k else (k, i)

    def simple_edges(self, include_open: bool = False) -> np.ndarray:
        """Unique (i, k) index pairs, i < k, after collapsing parallel branches."""
        pairs = {self.oriented(br) for br in self.active_branches(include_open)}
        if not pairs:
            return np.zeros((0, 2), dtype=np.int64)
        return np.array(sorted(pairs), dtype=np.int64)

    def adjacency(self, include_open: bool = False) -> sparse.csr_matrix:
        """Symmetric 0/1 adjacency of the simplified graph."""
        e = self.simple_edges(include_open)
        n = self.n_buses
        data = np.ones(2 * len(e))
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        return sparse.csr_matrix((data, (rows, cols)), shape=(n, n))


def _read_rows(source: TextIO | str | Path, header: tuple[str, ...]) -> Iterable[tuple[int, dict]]:
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8", newline="") as fh:
            yield from _read_rows(fh, header)
        return
    reader = csv.reader(source)
    try:
        first = next(reader)
    except StopIteration:
        raise GridFormatError("empty input", 1) from None
    cols = [c.strip().lstrip("﻿") for c in first]
    missing = [h for h in header if h not in cols]
    if missing:
        raise GridFormatError(f"header missing columns {missing}", 1)
    for row in reader:
        lineno = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(cols):
            raise GridFormatError(f"expected {len(cols)} fields, got {len(row)}", lineno)
        yield lineno, {c: v.strip() for c, v in zip(cols, row)}


def _float(value: str, what: str, lineno: int) -> float:
    try:
        return float(value)
    except ValueError:
        raise GridFormatError(f"bad {what} {value!r}", lineno) from None


def load_buses(source: TextIO | str | Path) -> dict[str, Bus]:
    buses: dict[str, Bus] = {}
    for lineno, row in _read_rows(source, BUS_HEADER):
        bid = row["bus_id"]
        if not bid:
            raise GridFormatError("empty bus id", lineno)
        if bid in buses:
            raise GridFormatError(f"duplicate bus id {bid}", lineno)
        kv_text = row["kv"]
        kv = None if kv_text in ("", "unspecified") else _float(kv_text, "kv", lineno)
        try:
            buses[bid] = Bus(bid, kv, row["role"] or "intermediate")
        except ValueError as exc:
            raise GridFormatError(str(exc), lineno) from None
    return buses


def load_grid(
    source: TextIO | str | Path,
    format: str = "edge_list",
    buses: TextIO | str | Path | None = None,
    mains_frequency: float = 60.0,
    strict_buses: bool = False,
) -> GridGraph:
    """Read an edge-list file (and optional bus file) into a :class:`GridGraph`.

    Endpoints not listed in the bus file become intermediate buses of unspecified
    voltage, unless ``strict_buses`` is set, in which case they are a
    dangling-reference error.
    """
    if format != "edge_list":
        raise ValueError(f"unsupported grid format {format!r}")
    bus_map = load_buses(buses) if buses is not None else None
    implied: dict[str, Bus] = {}
    branches = []
    for lineno, row in _read_rows(source, EDGE_HEADER):
        a, b = row["bus_a"], row["bus_b"]
        for end in (a, b):
            if not end:
                raise GridFormatError("empty bus id", lineno)
            if bus_map is not None and end not in bus_map:
                if strict_buses:
                    raise GridFormatError(f"branch references unknown bus {end}", lineno)
                bus_map[end] = Bus(end)
            implied.setdefault(end, Bus(end))
        try:
            branches.append(
                Branch(
                    a,
                    b,
                    _float(row["length_m"], "length", lineno),
                    _float(row["r_ohm_per_km"], "resistance", lineno),
                    _float(row["x_ohm_per_km"], "reactance", lineno),
                    row["kind"],
                    row["status"],
                )
            )
        except ValueError as exc:
            if isinstance(exc, GridFormatError):
                raise
            raise GridFormatError(str(exc), lineno) from None
    return GridGraph(bus_map if bus_map is not None else implied, tuple(branches), mains_frequency)


def dump_grid(g: GridGraph) -> tuple[str, str]:
    """Serialize to (edge-list text, bus text); floats use repr so reloading is exact."""
    edges = io.StringIO()
    w = csv.writer(edges, lineterminator="\n")
    w.writerow(EDGE_HEADER)
    for br in g.branches:
        w.writerow([br.bus_a, br.bus_b, repr(float(br.length)), repr(float(br.resistance_per_km)),
                    repr(float(br.reactance_per_km)), br.kind, br.status])
    bus_text = io.StringIO()
    w = csv.writer(bus_text, lineterminator="\n")
    w.writerow(BUS_HEADER)
    for bid in g.bus_ids:
        bus = g.buses[bid]
        kv = "unspecified" if bus.voltage_level is None else repr(float(bus.voltage_level))
        w.writerow([bid, kv, bus.role])
    return edges.getvalue(), bus_text.getvalue()


def incidence_matrix(g: GridGraph, include_open: bool = False) -> np.ndarray:
    """Signed m x N branch-bus incidence; +1 on the lower bus id of each branch."""
    brs = g.active_branches(include_open)
    A = np.zeros((len(brs), g.n_buses), dtype=np.int64)
    for row, br in enumerate(brs):
        i, k = g.oriented(br)
        A[row, i] = 1
        A[row, k] = -1
    return A


def branch_admittances(
    g: GridGraph,
    include_open: bool = False,
    surrogate: complex = DEFAULT_SURROGATE_Z,
    base_impedance: float = 1.0,
) -> np.ndarray:
    """Series admittance of each branch, in the row order of :func:`incidence_matrix`.

    ``base_impedance`` converts ohms to per-unit (y_pu = y * Z_base).
    """
    ys = []
    for br in g.active_branches(include_open):
        z = br.impedance(surrogate)
        if z == 0:
            raise ValueError(
                f"branch {br.bus_a}-{br.bus_b} has zero impedance; give it a length or a surrogate"
            )
        ys.append(base_impedance / z)
    return np.array(ys, dtype=complex)


def admittance_matrix(
    g: GridGraph,
    include_open: bool = False,
    surrogate: complex = DEFAULT_SURROGATE_Z,
    base_impedance: float = 1.0,
) -> np.ndarray:
    """Bus admittance matrix Y = A^T diag(y) A (series elements only)."""
    y = branch_admittances(g, include_open, surrogate, base_impedance)
    n = g.n_buses
    Y = np.zeros((n, n), dtype=complex)
    for yl, br in zip(y, g.active_branches(include_open)):
        i, k = g.oriented(br)
        Y[i, i] += yl
        Y[k, k] += yl
        Y[i, k] -= yl
        Y[k, i] -= yl
    return Y


def laplacian(g: GridGraph, include_open: bool = False, dense: bool = True):
    """Combinatorial Laplacian of the simplified graph (parallel branches collapsed)."""
    adj = g.adjacency(include_open)
    deg = np.asarray(adj.sum(axis=1)).ravel()
    L = sparse.diags(deg) - adj
    return L.toarray() if dense else L.tocsr()
