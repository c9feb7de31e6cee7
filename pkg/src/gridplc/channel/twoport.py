"""ABCD two-port algebra for transmission-line links, bridged taps and the grounding companion."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


@dataclass(frozen=True)
class TwoPortNetwork:
    """ABCD matrices on a frequency grid, ``abcd`` has shape (n_freq, 2, 2)."""

    freqs: np.ndarray
    abcd: np.ndarray

    def __post_init__(self):
        if self.abcd.shape != (len(self.freqs), 2, 2):
            raise ValueError(f"abcd shape {self.abcd.shape} does not match {len(self.freqs)} frequencies")

    @classmethod
    def identity(cls, freqs) -> "TwoPortNetwork":
        f = np.asarray(freqs, dtype=float)
        return cls(f, np.broadcast_to(np.eye(2, dtype=complex), (len(f), 2, 2)).copy())

    @classmethod
    def shunt(cls, freqs, admittance) -> "TwoPortNetwork":
        f = np.asarray(freqs, dtype=float)
        m = np.zeros((len(f), 2, 2), dtype=complex)
        m[:, 0, 0] = m[:, 1, 1] = 1
        m[:, 1, 0] = admittance
        return cls(f, m)

    @classmethod
    def series(cls, freqs, impedance) -> "TwoPortNetwork":
        f = np.asarray(freqs, dtype=float)
        m = np.zeros((len(f), 2, 2), dtype=complex)
        m[:, 0, 0] = m[:, 1, 1] = 1
        m[:, 0, 1] = impedance
        return cls(f, m)

    @property
    def A(self):
        return self.abcd[:, 0, 0]

    @property
    def B(self):
        return self.abcd[:, 0, 1]

    @property
    def C(self):
        return self.abcd[:, 1, 0]

    @property
    def D(self):
        return self.abcd[:, 1, 1]

    def determinant(self) -> np.ndarray:
        return self.A * self.D - self.B * self.C

    def input_admittance(self, termination) -> np.ndarray:
        """Admittance looking into port 1 with port 2 loaded by ``termination`` ohms (inf = open)."""
        zt = np.broadcast_to(np.asarray(termination, dtype=complex), self.A.shape)
        open_end = np.isinf(zt)
        with np.errstate(invalid="ignore", divide="ignore"):
            y = np.where(open_end, self.C / self.A,
                         (self.C * zt + self.D) / (self.A * zt + self.B))
        return y

    def input_impedance(self, termination) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 1.0 / self.input_admittance(termination)


def lossless_gamma(velocity: float) -> Callable[[np.ndarray], np.ndarray]:
    """gamma(f) = j 2 pi f / v_p."""
    return lambda f: 2j * np.pi * np.asarray(f, dtype=float) / velocity


def lossy_gamma(velocity: float, a0: float = 0.0, a1: float = 0.0, k: float = 1.0):
    """gamma(f) = alpha(f) + j 2 pi f / v_p with alpha(f) = a0 + a1 f^k (Np/m)."""
    def gamma(f):
        f = np.asarray(f, dtype=float)
        return a0 + a1 * np.power(f, k) + 2j * np.pi * f / velocity
    return gamma


def line_section(length: float, z0, gamma_fn: Callable[[np.ndarray], np.ndarray], freqs) -> TwoPortNetwork:
    """Uniform line: [[cosh gl, Z0 sinh gl], [sinh gl / Z0, cosh gl]]."""
    if length < 0:
        raise ValueError("section length must be >= 0")
    f = np.asarray(freqs, dtype=float)
    z0 = np.broadcast_to(np.asarray(z0, dtype=complex), f.shape)
    if np.any(z0 == 0):
        raise ValueError("characteristic impedance must be non-zero")
    gl = np.asarray(gamma_fn(f), dtype=complex) * length
    ch, sh = np.cosh(gl), np.sinh(gl)
    m = np.empty((len(f), 2, 2), dtype=complex)
    m[:, 0, 0] = ch
    m[:, 0, 1] = z0 * sh
    m[:, 1, 0] = sh / z0
    m[:, 1, 1] = ch
    return TwoPortNetwork(f, m)


def _same_grid(a: TwoPortNetwork, b: TwoPortNetwork) -> bool:
    return a.freqs.shape == b.freqs.shape and np.array_equal(a.freqs, b.freqs)


def cascade(sections: Sequence[TwoPortNetwork]) -> TwoPortNetwork:
    """Ordered product of the sections' ABCD matrices."""
    if not sections:
        raise ValueError("cannot cascade an empty list")
    first = sections[0]
    out = first.abcd.copy()
    for s in sections[1:]:
        if not _same_grid(first, s):
            raise ValueError("sections are on different frequency grids")
        out = out @ s.abcd
    return TwoPortNetwork(first.freqs, out)


@dataclass(frozen=True)
class Companion:
    """A bridged-tap two-port with its far-end termination (ohms, ``inf`` for open)."""

    network: TwoPortNetwork
    termination: complex = complex("inf")

    def shunt(self) -> TwoPortNetwork:
        y = self.network.input_admittance(self.termination)
        if not np.all(np.isfinite(y)):
            bad = self.network.freqs[~np.isfinite(y)][0]
            raise ValueError(f"companion input impedance is zero (short at panel) at {bad} Hz")
        return TwoPortNetwork.shunt(self.network.freqs, y)


def attach_companion(link: Sequence[TwoPortNetwork], panel_index: int, companion: Companion) -> list[TwoPortNetwork]:
    """Insert the companion's input admittance as a shunt before ``link[panel_index]``.

    ``panel_index == len(link)`` places it after the last section.
    """
    if not 0 <= panel_index <= len(link):
        raise IndexError(f"panel index {panel_index} outside 0..{len(link)}")
    shunt = companion.shunt()
    if link and not _same_grid(link[0], shunt):
        raise ValueError("companion is on a different frequency grid")
    out = list(link)
    out.insert(panel_index, shunt)
    return out


def detach_companion(link: Sequence[TwoPortNetwork], panel_index: int) -> list[TwoPortNetwork]:
    """Inverse of :func:`attach_companion` for the same ``panel_index``."""
    out = list(link)
    del out[panel_index]
    return out


def open_tap_notches(length: float, velocity: float, f_max: float) -> np.ndarray:
    """Frequencies where an open stub's input impedance -j Z0 cot(beta L) vanishes: (2n+1) v / (4L)."""
    base = velocity / (4.0 * length)
    n = np.arange(int(np.floor((f_max / base - 1) / 2)) + 1)
    return (2 * n + 1) * base


def endtoend_gain(link, source_impedance, load_impedance, freqs=None) -> np.ndarray:
    """V_load / V_source: Z_L / (A Z_L + B + C Z_S Z_L + D Z_S).

    ``link`` is a TwoPortNetwork or a list of sections; an infinite load means open circuit.
    """
    net = cascade(link) if isinstance(link, (list, tuple)) else link
    if freqs is not None and not np.array_equal(np.asarray(freqs, dtype=float), net.freqs):
        raise ValueError("requested frequencies differ from the link's grid")
    zs = complex(source_impedance)
    zl = complex(load_impedance)
    if zl == 0:
        raise ValueError("load impedance must be non-zero")
    A, B, C, D = net.A, net.B, net.C, net.D
    if np.isinf(zl):
        denom = A + C * zs
        num = np.ones_like(A)
    else:
        denom = A * zl + B + C * zs * zl + D * zs
        num = np.full_like(A, zl)
    bad = np.abs(denom) == 0
    if np.any(bad):
        raise ZeroDivisionError(f"degenerate two-port denominator at {net.freqs[bad][0]} Hz")
    return num / denom
