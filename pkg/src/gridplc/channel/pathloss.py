"""Typical PLC path loss per kilometre by network segment, anchored at 100 kHz and 10 MHz."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

F_LOW = 100e3
F_HIGH = 10e6

# (low, high) dB/km at F_LOW, then at F_HIGH
TYPICAL_PATH_LOSS = {
    "LV": ((1.5, 3.0), (160.0, 200.0)),
    "MV_overhead": ((0.5, 1.0), (30.0, 50.0)),
    "MV_underground": ((1.0, 2.0), (50.0, 80.0)),
    "HV_overhead": ((0.01, 0.09), (2.0, 4.0)),
}

SELECTORS = {"optimistic": 0.0, "mid": 0.5, "pessimistic": 1.0}


@dataclass(frozen=True)
class PathLossTable:
    rows: dict = field(default_factory=lambda: dict(TYPICAL_PATH_LOSS))

    def __post_init__(self):
        for cls, ((l0, h0), (l1, h1)) in self.rows.items():
            if min(l0, h0, l1, h1) <= 0:
                raise ValueError(f"{cls}: losses must be positive")
            if not (l1 > l0 and h1 > h0):
                raise ValueError(f"{cls}: loss at {F_HIGH:g} Hz must exceed loss at {F_LOW:g} Hz")

    def anchors(self, segment_class: str, selector: str = "mid") -> tuple[float, float]:
        if segment_class not in self.rows:
            raise KeyError(f"unknown segment class {segment_class!r}")
        t = SELECTORS[selector]
        (l0, h0), (l1, h1) = self.rows[segment_class]
        return l0 + t * (h0 - l0), l1 + t * (h1 - l1)


def loss_per_km(table: PathLossTable, segment_class: str, freq: float, selector: str = "mid") -> float:
    """dB/km, linear in log-frequency between the anchors and held constant outside them."""
    if not freq > 0:
        raise ValueError("frequency must be positive")
    lo, hi = table.anchors(segment_class, selector)
    t = (np.log10(freq) - np.log10(F_LOW)) / (np.log10(F_HIGH) - np.log10(F_LOW))
    t = min(max(t, 0.0), 1.0)
    return float(lo + t * (hi - lo))


def pathloss_db(table: PathLossTable, segment_class: str, freq: float, distance_km: float,
                selector: str = "mid") -> float:
    if distance_km < 0:
        raise ValueError("distance must be >= 0")
    return loss_per_km(table, segment_class, freq, selector) * distance_km
