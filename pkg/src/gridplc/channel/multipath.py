"""Multipath PLC channel: echo-sum transfer function and impulse-response synthesis."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

Gain = Union[complex, float, Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True)
class Attenuation:
    """alpha(f) = a0 + a1 * f**k in nepers per metre."""

    a0: float = 0.0
    a1: float = 0.0
    k: float = 1.0

    def __post_init__(self):
        if self.a0 < 0 or self.a1 < 0:
            raise ValueError("attenuation coefficients must be non-negative")

    def __call__(self, f):
        f = np.asarray(f, dtype=float)
        return self.a0 + self.a1 * np.power(f, self.k)


@dataclass(frozen=True)
class Path:
    gain: Gain
    delay: float  # seconds

    def gain_at(self, f: np.ndarray) -> np.ndarray:
        if callable(self.gain):
            return np.broadcast_to(np.asarray(self.gain(f), dtype=complex), f.shape)
        return np.full(f.shape, complex(self.gain))


@dataclass(frozen=True)
class MultipathChannel:
    paths: tuple[Path, ...]
    attenuation: Attenuation = field(default_factory=Attenuation)
    propagation_velocity: float = 2e8

    def __post_init__(self):
        if not self.paths:
            raise ValueError("a channel needs at least one path")
        for p in self.paths:
            if not (np.isfinite(p.delay) and p.delay >= 0):
                raise ValueError(f"path delay must be finite and >= 0, got {p.delay}")
        if not self.propagation_velocity > 0:
            raise ValueError("propagation velocity must be positive")

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[Gain, float]], **kw) -> "MultipathChannel":
        return cls(tuple(Path(g, d) for g, d in pairs), **kw)

    @property
    def n_paths(self) -> int:
        return len(self.paths)

    @property
    def max_delay(self) -> float:
        return max(p.delay for p in self.paths)


def transfer_function(ch: MultipathChannel, freqs) -> np.ndarray:
    """H(f) = sum_i g_i(f) exp(-alpha(f) v_p theta_i) exp(-j 2 pi f theta_i)."""
    f = np.asarray(freqs, dtype=float)
    if np.any(~np.isfinite(f)) or np.any(f < 0):
        raise ValueError("frequencies must be finite and non-negative")
    alpha = ch.attenuation(f)
    h = np.zeros(f.shape, dtype=complex)
    for p in ch.paths:
        h += p.gain_at(f) * np.exp(-alpha * ch.propagation_velocity * p.delay - 2j * np.pi * f * p.delay)
    return h


def raised_cosine_window(n_bins: int, rolloff: float) -> np.ndarray:
    """Taper over the top ``rolloff`` fraction of the one-sided band, 1 below it."""
    w = np.ones(n_bins)
    if rolloff <= 0 or n_bins < 2:
        return w
    x = np.arange(n_bins) / (n_bins - 1)
    edge = 1.0 - rolloff
    t = x > edge
    w[t] = 0.5 * (1 + np.cos(np.pi * (x[t] - edge) / rolloff))
    return w


@dataclass(frozen=True)
class ImpulseResponse:
    time: np.ndarray
    h: np.ndarray
    freqs: np.ndarray
    spectrum: np.ndarray  # one-sided spectrum actually inverted (window applied)
    sample_rate: float
    rolloff: float

    def energy(self) -> float:
        return float(np.sum(self.h ** 2))

    def spectral_energy(self) -> float:
        """(1/n) sum |H_k|^2 over the full conjugate-symmetric grid."""
        n = len(self.h)
        mag2 = np.abs(self.spectrum) ** 2
        interior = mag2[1:-1] if n % 2 == 0 else mag2[1:]
        return float((mag2[0] + 2 * interior.sum() + (mag2[-1] if n % 2 == 0 else 0.0)) / n)

    @property
    def metadata(self) -> dict[str, object]:
        return {"window": "raised_cosine_band_edge", "rolloff": self.rolloff,
                "sample_rate_hz": self.sample_rate, "n_samples": len(self.h)}


def synthesize_impulse(h_of_f: Callable[[np.ndarray], np.ndarray], sample_rate: float, n: int,
                       rolloff: float = 0.1) -> ImpulseResponse:
    """Real impulse response from a one-sided frequency response on the DFT grid.

    DC and (for even n) Nyquist bins are forced real so the inverse is exactly real.
    """
    if n < 1:
        raise ValueError("need at least one sample")
    freqs = np.fft.rfftfreq(n, d=1.0 / sample_rate)
    spec = np.asarray(h_of_f(freqs), dtype=complex) * raised_cosine_window(len(freqs), rolloff)
    spec[0] = spec[0].real
    if n % 2 == 0:
        spec[-1] = spec[-1].real
    h = np.fft.irfft(spec, n)
    return ImpulseResponse(np.arange(n) / sample_rate, h, freqs, spec, sample_rate, rolloff)


def impulse_response(ch: MultipathChannel, sample_rate: float, duration: float,
                     rolloff: float = 0.1) -> ImpulseResponse:
    """Sampled h(t) over ``duration`` seconds by inverse DFT of H on the grid k * fs / n."""
    if not sample_rate > 0:
        raise ValueError("sample rate must be positive")
    if duration < ch.max_delay:
        raise ValueError(f"duration {duration} s is shorter than the longest delay {ch.max_delay} s")
    n = int(round(duration * sample_rate))
    return synthesize_impulse(lambda f: transfer_function(ch, f), sample_rate, n, rolloff)
