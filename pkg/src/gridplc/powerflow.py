"""Network power-flow evaluation, the polar Jacobian and the five operating constraints.

All quantities are per-unit. Nothing here solves for a power-flow operating
point; states are supplied by the caller and only evaluated.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import TextIO

import numpy as np

from .grid import DEFAULT_SURROGATE_Z, GridGraph, admittance_matrix, branch_admittances, incidence_matrix

# eigenvalue real parts below this magnitude are treated as exact zeros
ZERO_EIG_TOL = 1e-8


class DimensionError(ValueError):
    pass


def _check_square(y: np.ndarray, v: np.ndarray) -> None:
    if y.ndim != 2 or y.shape[0] != y.shape[1] or y.shape[0] != v.shape[0]:
        raise DimensionError(f"admittance {y.shape} does not match voltage vector {v.shape}")


def injected_currents(y, v) -> np.ndarray:
    """I = Y V."""
    y = np.asarray(y, dtype=complex)
    v = np.asarray(v, dtype=complex)
    _check_square(y, v)
    return y @ v


def injected_powers(v, i) -> np.ndarray:
    """S = V * conj(I) element-wise; P = S.real, Q = S.imag."""
    v = np.asarray(v, dtype=complex)
    i = np.asarray(i, dtype=complex)
    if v.shape != i.shape:
        raise DimensionError(f"voltage {v.shape} and current {i.shape} differ in shape")
    return v * np.conj(i)


def jacobian(y, v) -> np.ndarray:
    """2N x 2N real Jacobian of (P, Q) with respect to (angles, magnitudes).

    Block layout::

        [[dP/dangle, dP/d|V|],
         [dQ/dangle, dQ/d|V|]]
    """
    y = np.asarray(y, dtype=complex)
    v = np.asarray(v, dtype=complex)
    _check_square(y, v)
    vm = np.abs(v)
    if np.any(vm == 0):
        raise ValueError(f"zero voltage magnitude at bus index {int(np.flatnonzero(vm == 0)[0])}")
    i = y @ v
    dv = np.diag(v)
    unit = v / vm
    # S = V conj(Y V): differentiate through V_k = |V_k| exp(j angle_k)
    ds_dang = 1j * dv @ np.conj(np.diag(i) - y @ dv)
    ds_dmag = dv @ np.conj(y @ np.diag(unit)) + np.diag(np.conj(i) * unit)
    return np.block([[ds_dang.real, ds_dmag.real], [ds_dang.imag, ds_dmag.imag]])


def reference_jacobian(j: np.ndarray, slack: int) -> np.ndarray:
    """Drop the slack bus angle row and column, removing the angle-shift null direction."""
    keep = np.delete(np.arange(j.shape[0]), slack)
    return j[np.ix_(keep, keep)]


@dataclass(frozen=True)
class PhasorState:
    voltages: np.ndarray
    currents: np.ndarray | None = None
    powers: np.ndarray | None = None

    @classmethod
    def from_voltages(cls, y, v) -> "PhasorState":
        """State closed through I = Y V and S = V conj(I)."""
        v = np.asarray(v, dtype=complex)
        i = injected_currents(y, v)
        return cls(v, i, injected_powers(v, i))

    @classmethod
    def from_polar(cls, vm, va_deg, p, q) -> "PhasorState":
        v = np.asarray(vm, dtype=float) * np.exp(1j * np.deg2rad(np.asarray(va_deg, dtype=float)))
        s = np.asarray(p, dtype=float) + 1j * np.asarray(q, dtype=float)
        return cls(v, np.conj(s / v), s)


@dataclass(frozen=True)
class ConstraintLimits:
    """Operating limits. Scalars apply to every bus (or branch); arrays are per element."""

    p_min: np.ndarray | float
    p_max: np.ndarray | float
    q_min: np.ndarray | float
    q_max: np.ndarray | float
    v_min: np.ndarray | float
    v_max: np.ndarray | float
    i_line_max: np.ndarray | float
    epsilon: float = 0.0

    def __post_init__(self):
        if np.any(np.asarray(self.v_min) >= np.asarray(self.v_max)):
            raise ValueError("v_min must be below v_max")
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")

    FIELDS = ("p_min", "p_max", "q_min", "q_max", "v_min", "v_max", "i_line_max", "epsilon")

    @classmethod
    def from_mapping(cls, values: dict) -> "ConstraintLimits":
        missing = [f for f in cls.FIELDS if f not in values]
        if missing:
            raise KeyError(f"limits missing field(s): {', '.join(missing)}")
        return cls(**{f: values[f] for f in cls.FIELDS})


@dataclass(frozen=True)
class Verdict:
    name: str
    passed: bool
    slack: float
    detail: str = ""


def check_constraints(
    g: GridGraph,
    state: PhasorState,
    limits: ConstraintLimits,
    mode: str = "referenced",
    slack_bus: str | None = None,
    balance_tol: float = 1e-8,
    surrogate: complex = DEFAULT_SURROGATE_Z,
    base_impedance: float = 1.0,
) -> dict[str, Verdict]:
    """Evaluate constraints (a)-(e) on a state. Slack is the margin: negative means violated.

    (e) is tested on the Jacobian of the power-balance mismatch, S_spec - V conj(Y V),
    i.e. on ``-jacobian(Y, V)``; a stable operating point has all real parts at or
    below ``-epsilon``. In ``referenced`` mode the slack bus angle is removed first;
    ``raw`` keeps the full matrix. The detail string always carries both maxima.
    """
    if mode not in ("referenced", "raw"):
        raise ValueError(f"unknown stability mode {mode!r}")
    y = admittance_matrix(g, surrogate=surrogate, base_impedance=base_impedance)
    v = np.asarray(state.voltages, dtype=complex)
    _check_square(y, v)
    s = state.powers if state.powers is not None else injected_powers(v, state.currents)
    s = np.asarray(s, dtype=complex)
    if s.shape != v.shape:
        raise DimensionError("power vector does not match voltages")
    out: dict[str, Verdict] = {}

    residual = float(np.max(np.abs(s - v * np.conj(y @ v)), initial=0.0))
    out["a"] = Verdict("power_balance", residual <= balance_tol, balance_tol - residual,
                       f"max |S - V conj(YV)| = {residual:.6g}")

    lo = np.minimum(s.real - limits.p_min, s.imag - limits.q_min)
    hi = np.minimum(limits.p_max - s.real, limits.q_max - s.imag)
    margin = float(np.min(np.minimum(lo, hi), initial=np.inf))
    out["b"] = Verdict("injection_limits", margin >= 0, margin)

    vm = np.abs(v)
    margin = float(np.min(np.minimum(vm - limits.v_min, limits.v_max - vm), initial=np.inf))
    out["c"] = Verdict("voltage_limits", margin >= 0, margin)

    yl = branch_admittances(g, surrogate=surrogate, base_impedance=base_impedance)
    il = np.abs(yl * (incidence_matrix(g) @ v))
    margin = float(np.min(np.asarray(limits.i_line_max) - il, initial=np.inf))
    out["d"] = Verdict("line_currents", margin >= 0, margin,
                       f"max |I_line| = {float(np.max(il, initial=0.0)):.6g}")

    mismatch_j = -jacobian(y, v)
    raw_max = _max_real_eig(mismatch_j)
    slack_idx = _slack_index(g, slack_bus)
    ref_max = _max_real_eig(reference_jacobian(mismatch_j, slack_idx)) if len(v) > 1 else raw_max
    used = ref_max if mode == "referenced" else raw_max
    margin = -limits.epsilon - used
    out["e"] = Verdict("stability", margin >= 0, margin,
                       f"mode={mode} max_re_referenced={ref_max:.6g} max_re_raw={raw_max:.6g}")
    return out


def _max_real_eig(j: np.ndarray) -> float:
    if j.size == 0:
        return 0.0
    m = float(np.max(np.linalg.eigvals(j).real))
    return 0.0 if abs(m) < ZERO_EIG_TOL else m


def _slack_index(g: GridGraph, slack_bus: str | None) -> int:
    if slack_bus is not None:
        return g.index[slack_bus]
    for bid in g.bus_ids:
        if g.buses[bid].role == "generator":
            return g.index[bid]
    return 0


def branch_losses(g: GridGraph, v, surrogate: complex = DEFAULT_SURROGATE_Z,
                  base_impedance: float = 1.0) -> float:
    """Total series loss, sum of r |I_l|^2 over in-service branches."""
    yl = branch_admittances(g, surrogate=surrogate, base_impedance=base_impedance)
    il = yl * (incidence_matrix(g) @ np.asarray(v, dtype=complex))
    r = (1.0 / yl).real
    return float(np.sum(r * np.abs(il) ** 2))


STATE_HEADER = ("bus_id", "v_mag_pu", "v_angle_deg", "p_pu", "q_pu")


def load_state(g: GridGraph, source: TextIO | str | Path) -> PhasorState:
    """Read ``bus_id,v_mag_pu,v_angle_deg,p_pu,q_pu``; rows may be in any order.

    Raises :class:`DimensionError` when the bus set differs from the grid's.
    """
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8", newline="") as fh:
            return load_state(g, fh)
    reader = csv.DictReader(source)
    if reader.fieldnames is None or any(h not in reader.fieldnames for h in STATE_HEADER):
        raise ValueError(f"state header must contain {','.join(STATE_HEADER)}")
    rows = {}
    for row in reader:
        bid = row["bus_id"].strip()
        if bid in rows:
            raise ValueError(f"line {reader.line_num}: duplicate bus {bid}")
        try:
            rows[bid] = [float(row[h]) for h in STATE_HEADER[1:]]
        except (TypeError, ValueError):
            raise ValueError(f"line {reader.line_num}: bad numeric field") from None
    if set(rows) != set(g.bus_ids):
        extra = sorted(set(rows) - set(g.bus_ids))
        missing = sorted(set(g.bus_ids) - set(rows))
        raise DimensionError(f"state buses differ from grid (missing {missing[:5]}, extra {extra[:5]})")
    arr = np.array([rows[b] for b in g.bus_ids])
    return PhasorState.from_polar(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3])


def dump_state(g: GridGraph, state: PhasorState) -> str:
    s = state.powers if state.powers is not None else injected_powers(state.voltages, state.currents)
    lines = [",".join(STATE_HEADER)]
    for bid, v, sk in zip(g.bus_ids, state.voltages, s):
        lines.append(f"{bid},{float(abs(v))!r},{float(np.degrees(np.angle(v)))!r},{float(sk.real)!r},{float(sk.imag)!r}")
    return "\n".join(lines) + "\n"


def format_verdicts(verdicts: dict[str, Verdict]) -> str:
    lines = []
    for key in sorted(verdicts):
        vd = verdicts[key]
        lines.append(f"{key}.name = {vd.name}")
        lines.append(f"{key}.pass = {str(vd.passed).lower()}")
        lines.append(f"{key}.slack = {float(vd.slack)!r}")
        if vd.detail:
            lines.append(f"{key}.detail = {vd.detail}")
    lines.append(f"all_pass = {str(all(v.passed for v in verdicts.values())).lower()}")
    return "\n".join(lines) + "\n"
