"""Text formats for multipath channel descriptions and two-port chains."""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from .multipath import Attenuation, MultipathChannel, Path as EchoPath
from .twoport import Companion, TwoPortNetwork, attach_companion, cascade, line_section, lossless_gamma, lossy_gamma

CHANNEL_PARAMS = {"vp": 2e8, "a0": 0.0, "a1": 0.0, "k": 1.0}


def _text(source) -> str:
    if isinstance(source, (str, Path)):
        return Path(source).read_text(encoding="utf-8")
    return source.read()


def load_channel(source) -> MultipathChannel:
    """Parse ``key = value`` parameters (vp, a0, a1, k) followed by a ``gain,delay_us`` table.

    Gains may be complex, e.g. ``(0.3-0.1j)``. Blank lines and ``#`` comments are ignored.
    """
    params = dict(CHANNEL_PARAMS)
    paths = []
    in_table = False
    for lineno, raw in enumerate(_text(source).splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if not in_table and "=" in line:
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in params:
                raise ValueError(f"line {lineno}: unknown channel parameter {key!r}")
            try:
                params[key] = float(value)
            except ValueError:
                raise ValueError(f"line {lineno}: bad value for {key}") from None
            continue
        cells = [c.strip() for c in line.split(",")]
        if cells == ["gain", "delay_us"]:
            in_table = True
            continue
        if not in_table or len(cells) != 2:
            raise ValueError(f"line {lineno}: expected 'gain,delay_us' header or row")
        try:
            paths.append(EchoPath(complex(cells[0].replace(" ", "")), float(cells[1]) * 1e-6))
        except ValueError:
            raise ValueError(f"line {lineno}: bad path row") from None
    if not paths:
        raise ValueError("channel file lists no paths")
    att = Attenuation(params["a0"], params["a1"], params["k"])
    return MultipathChannel(tuple(paths), att, params["vp"])


def parse_gamma_model(spec: str):
    """``lossless:vp=2e8`` or ``lossy:vp=2e8;a0=0;a1=1e-9;k=0.5``."""
    name, _, rest = spec.partition(":")
    kw = {}
    for item in filter(None, (s.strip() for s in rest.split(";"))):
        key, _, value = item.partition("=")
        kw[key.strip()] = float(value)
    if "vp" not in kw:
        raise ValueError(f"gamma model {spec!r} needs vp")
    vp = kw.pop("vp")
    if name == "lossless" and not kw:
        return lossless_gamma(vp)
    if name == "lossy" and set(kw) <= {"a0", "a1", "k"}:
        return lossy_gamma(vp, **kw)
    raise ValueError(f"bad gamma model {spec!r}")


CHAIN_HEADER = ("length_m", "z0_real", "z0_imag", "gamma_model")


def load_chain(source, freqs) -> list[TwoPortNetwork]:
    """Build the ordered section list from a chain file.

    Optional column ``element`` is ``series`` (default) or ``tap``; a tap is a
    bridged stub attached at that position, terminated by ``term_ohm`` (default
    ``inf``, open).
    """
    reader = csv.DictReader(io.StringIO(_text(source)))
    if reader.fieldnames is None or any(h not in reader.fieldnames for h in CHAIN_HEADER):
        raise ValueError(f"chain header must contain {','.join(CHAIN_HEADER)}")
    f = np.asarray(freqs, dtype=float)
    sections: list[TwoPortNetwork] = []
    for row in reader:
        try:
            length = float(row["length_m"])
            z0 = complex(float(row["z0_real"]), float(row["z0_imag"]))
            gamma = parse_gamma_model(row["gamma_model"].strip())
            element = (row.get("element") or "series").strip()
            term = complex((row.get("term_ohm") or "inf").strip())
        except (TypeError, ValueError) as exc:
            raise ValueError(f"line {reader.line_num}: {exc}") from None
        net = line_section(length, z0, gamma, f)
        if element == "series":
            sections.append(net)
        elif element == "tap":
            sections = attach_companion(sections, len(sections), Companion(net, term))
        else:
            raise ValueError(f"line {reader.line_num}: unknown element {element!r}")
    if not sections:
        raise ValueError("chain file lists no sections")
    return sections


def chain_network(source, freqs) -> TwoPortNetwork:
    return cascade(load_chain(source, freqs))
