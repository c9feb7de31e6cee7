"""``key = value`` config files for generator specs and link budgets."""

from __future__ import annotations

import configparser
from pathlib import Path

from .coverage import LinkBudget
from .generate import GeneratorSpec, InfeasibleSpec


def read_kv(source) -> dict[str, str]:
    text = Path(source).read_text(encoding="utf-8") if isinstance(source, (str, Path)) else source.read()
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    cp.optionxform = str
    cp.read_string("[top]\n" + text)
    return dict(cp["top"])


def parse_mapping(text: str) -> dict[str, str]:
    """``a:b, c:d`` -> {'a': 'b', 'c': 'd'}."""
    out = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        key, sep, value = item.partition(":")
        if not sep:
            raise ValueError(f"expected key:value, got {item!r}")
        out[key.strip()] = value.strip()
    return out


_SPEC_TYPES = {
    "n_nodes": int, "topology_kind": str, "branch_length_mean": float, "chord_fraction": float,
    "seed": int, "ring_size": int, "degree_method": str, "voltage_kv": float,
    "r_ohm_per_km": float, "x_ohm_per_km": float,
}


def load_generator_spec(source, seed: int | None = None) -> GeneratorSpec:
    """Keys mirror :class:`GeneratorSpec`; ``degree_pmf = 1:0.16, 2:0.60, ...``."""
    raw = read_kv(source)
    kw: dict = {}
    for key, value in raw.items():
        if key == "degree_pmf":
            try:
                kw["degree_pmf_target"] = {int(k): float(v) for k, v in parse_mapping(value).items()}
            except ValueError as exc:
                raise InfeasibleSpec(f"degree_pmf: {exc}") from None
        elif key in _SPEC_TYPES:
            try:
                kw[key] = _SPEC_TYPES[key](value)
            except ValueError:
                raise InfeasibleSpec(f"bad value for {key}: {value!r}") from None
        else:
            raise InfeasibleSpec(f"unknown generator key {key!r}")
    if "n_nodes" not in kw:
        raise InfeasibleSpec("generator spec needs n_nodes")
    if seed is not None:
        kw["seed"] = seed
    return GeneratorSpec(**kw)


def dump_generator_spec(spec: GeneratorSpec) -> str:
    pmf = ", ".join(f"{k}:{v!r}" for k, v in sorted(spec.degree_pmf_target.items()))
    lines = [f"degree_pmf = {pmf}"]
    for key in _SPEC_TYPES:
        value = getattr(spec, key)
        if value is not None:
            lines.append(f"{key} = {value!r}" if isinstance(value, float) else f"{key} = {value}")
    return "\n".join(lines) + "\n"


def load_link_budget(source) -> LinkBudget:
    """Keys: max_loss_db, frequency, per_coupler_loss_db, transformer_mode, selector,
    segment_classes (``line:LV, transformer:MV_overhead, *:LV``)."""
    raw = read_kv(source)
    if "max_loss_db" not in raw:
        raise ValueError("link budget needs max_loss_db")
    kw: dict = {"max_loss_db": float(raw.pop("max_loss_db"))}
    for key in ("frequency", "per_coupler_loss_db"):
        if key in raw:
            kw[key] = float(raw.pop(key))
    for key in ("transformer_mode", "selector"):
        if key in raw:
            kw[key] = raw.pop(key)
    if "segment_classes" in raw:
        kw["segment_class_map"] = parse_mapping(raw.pop("segment_classes"))
    if raw:
        raise ValueError(f"unknown link budget key(s): {', '.join(sorted(raw))}")
    return LinkBudget(**kw)
