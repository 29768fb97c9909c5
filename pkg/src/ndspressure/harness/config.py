"""Plain key-value config files for systems, potentials and measures.

One INI-style file per object.  Example system file::

    [system]
    type = shift
    alphabet_sizes = 2, 4
    depth = 12

    [estimator]
    eps = 0.99
    n_max = 12

NIFS contractions go in a ``[contractions]`` section, one key per level
(``level1``, ``level2``, ...) holding ``ratio:offset`` pairs separated by
commas.  Bernoulli probabilities go in ``[probs]`` the same way, one vector
per level, repeated periodically.  ``write_config`` emits a canonical text so
that ``write(parse(write(c))) == write(c)`` byte for byte.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, fields

import numpy as np

from ..core import PotentialSeq, constant_potential, symbol_potential
from ..measures import AtomicMeasure, MeasureRep
from ..pressure import EstimatorConfig
from ..systems import (
    DoublingChainSpec,
    NIFSSpec,
    ShiftSpec,
    bernoulli_measure,
    make_doubling_chain,
    make_na_shift,
    make_nifs_repeller,
)


class ConfigError(ValueError):
    """Malformed or inconsistent config file."""


@dataclass(frozen=True)
class SystemConfig:
    type: str
    label: str = ""
    alphabet_sizes: tuple[int, ...] = ()
    blocks: bool = False
    depth: int = 12
    metric_kind: str = "euclidean"
    delta: float = 1e-4
    contractions: tuple[tuple[tuple[float, float], ...], ...] = ()
    eps: tuple[float, ...] = ()
    n_max: int | None = None
    n_min: int | None = None


@dataclass(frozen=True)
class PotentialConfig:
    type: str = "zero"
    value: float = 0.0
    table: tuple[tuple[float, ...], ...] = ()


@dataclass(frozen=True)
class MeasureConfig:
    kind: str
    atoms: tuple[tuple[float, float], ...] = ()
    probs: tuple[tuple[float, ...], ...] = ()


# ---------------------------------------------------------------------------
# primitive parsing


def _floats(text: str) -> tuple[float, ...]:
    text = text.strip()
    return tuple(float(v) for v in text.split(",")) if text else ()


def _ints(text: str) -> tuple[int, ...]:
    text = text.strip()
    return tuple(int(v) for v in text.split(",")) if text else ()


def _pairs(text: str) -> tuple[tuple[float, float], ...]:
    out = []
    for item in text.split(","):
        a, b = item.split(":")
        out.append((float(a), float(b)))
    return tuple(out)


def _numbered(section) -> list[str]:
    keys = sorted((k for k in section if k.startswith("level")), key=lambda k: int(k[5:]))
    if [int(k[5:]) for k in keys] != list(range(1, len(keys) + 1)):
        raise ConfigError("level keys must be level1, level2, ... without gaps")
    return [section[k] for k in keys]


def _read(text: str) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    return cp


# ---------------------------------------------------------------------------
# parse


def parse_system(text: str) -> SystemConfig:
    cp = _read(text)
    if "system" not in cp:
        raise ConfigError("missing [system] section")
    s = cp["system"]
    try:
        kw = {"type": s.get("type", "").strip(), "label": s.get("label", "").strip()}
        if kw["type"] == "shift":
            kw["alphabet_sizes"] = _ints(s["alphabet_sizes"])
            kw["blocks"] = s.getboolean("blocks", False)
            kw["depth"] = s.getint("depth")
        elif kw["type"] == "doubling":
            kw["metric_kind"] = s.get("metric_kind", "euclidean").strip()
            kw["delta"] = s.getfloat("delta", 1e-4)
        elif kw["type"] == "nifs":
            kw["depth"] = s.getint("depth", 10)
            if "contractions" not in cp:
                raise ConfigError("nifs system needs a [contractions] section")
            kw["contractions"] = tuple(_pairs(v) for v in _numbered(cp["contractions"]))
        else:
            raise ConfigError(f"unknown system type {kw['type']!r}")
        if "estimator" in cp:
            e = cp["estimator"]
            kw["eps"] = _floats(e.get("eps", ""))
            kw["n_max"] = e.getint("n_max") if "n_max" in e else None
            kw["n_min"] = e.getint("n_min") if "n_min" in e else None
    except (KeyError, ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad system config: {exc}") from exc
    return SystemConfig(**kw)


def parse_potential(text: str) -> PotentialConfig:
    cp = _read(text)
    if "potential" not in cp:
        raise ConfigError("missing [potential] section")
    p = cp["potential"]
    kind = p.get("type", "zero").strip()
    try:
        if kind == "zero":
            return PotentialConfig("zero")
        if kind == "constant":
            return PotentialConfig("constant", value=float(p["value"]))
        if kind == "symbol":
            return PotentialConfig("symbol", table=tuple(_floats(v) for v in _numbered(p)))
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"bad potential config: {exc}") from exc
    raise ConfigError(f"unknown potential type {kind!r}")


def parse_measure(text: str) -> MeasureConfig:
    cp = _read(text)
    if "measure" not in cp:
        raise ConfigError("missing [measure] section")
    m = cp["measure"]
    kind = m.get("kind", "").strip()
    try:
        if kind == "atomic":
            return MeasureConfig("atomic", atoms=_pairs(m["atoms"]))
        if kind == "bernoulli":
            if "probs" not in cp:
                raise ConfigError("bernoulli measure needs a [probs] section")
            return MeasureConfig("bernoulli", probs=tuple(_floats(v) for v in _numbered(cp["probs"])))
    except (KeyError, ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad measure config: {exc}") from exc
    raise ConfigError(f"unknown measure kind {kind!r}")


# ---------------------------------------------------------------------------
# write (canonical)


def _num(x) -> str:
    return repr(float(x)) if isinstance(x, float) else str(x)


def _join(xs) -> str:
    return ", ".join(_num(x) for x in xs)


def _join_pairs(ps) -> str:
    return ", ".join(f"{_num(a)}:{_num(b)}" for a, b in ps)


def write_config(cfg: SystemConfig | PotentialConfig | MeasureConfig) -> str:
    out = io.StringIO()
    if isinstance(cfg, SystemConfig):
        out.write("[system]\n")
        out.write(f"type = {cfg.type}\n")
        if cfg.label:
            out.write(f"label = {cfg.label}\n")
        if cfg.type == "shift":
            out.write(f"alphabet_sizes = {_join(cfg.alphabet_sizes)}\n")
            out.write(f"blocks = {'true' if cfg.blocks else 'false'}\n")
            out.write(f"depth = {cfg.depth}\n")
        elif cfg.type == "doubling":
            out.write(f"metric_kind = {cfg.metric_kind}\n")
            out.write(f"delta = {_num(cfg.delta)}\n")
        elif cfg.type == "nifs":
            out.write(f"depth = {cfg.depth}\n")
            out.write("\n[contractions]\n")
            for i, lev in enumerate(cfg.contractions, 1):
                out.write(f"level{i} = {_join_pairs(lev)}\n")
        if cfg.eps or cfg.n_max is not None or cfg.n_min is not None:
            out.write("\n[estimator]\n")
            if cfg.eps:
                out.write(f"eps = {_join(cfg.eps)}\n")
            if cfg.n_max is not None:
                out.write(f"n_max = {cfg.n_max}\n")
            if cfg.n_min is not None:
                out.write(f"n_min = {cfg.n_min}\n")
    elif isinstance(cfg, PotentialConfig):
        out.write("[potential]\n")
        out.write(f"type = {cfg.type}\n")
        if cfg.type == "constant":
            out.write(f"value = {_num(cfg.value)}\n")
        for i, row in enumerate(cfg.table, 1):
            out.write(f"level{i} = {_join(row)}\n")
    elif isinstance(cfg, MeasureConfig):
        out.write("[measure]\n")
        out.write(f"kind = {cfg.kind}\n")
        if cfg.kind == "atomic":
            out.write(f"atoms = {_join_pairs(cfg.atoms)}\n")
        else:
            out.write("\n[probs]\n")
            for i, row in enumerate(cfg.probs, 1):
                out.write(f"level{i} = {_join(row)}\n")
    else:
        raise TypeError(type(cfg))
    return out.getvalue()


# ---------------------------------------------------------------------------
# build objects


def build_system(cfg: SystemConfig):
    label = cfg.label or cfg.type
    try:
        if cfg.type == "shift":
            spec = (ShiftSpec.blocks(cfg.alphabet_sizes, cfg.depth) if cfg.blocks
                    else ShiftSpec.periodic(cfg.alphabet_sizes, cfg.depth))
            return make_na_shift(spec, label)
        if cfg.type == "doubling":
            return make_doubling_chain(DoublingChainSpec(cfg.metric_kind, cfg.delta), label)
        if cfg.type == "nifs":
            sys, _ = make_nifs_repeller(NIFSSpec(cfg.contractions, depth=cfg.depth), label)
            return sys
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown system type {cfg.type!r}")


def estimator_for(cfg: SystemConfig, eps: tuple[float, ...] | None = None, n_max: int | None = None,
                  n_min: int | None = None, tol: float | None = None) -> EstimatorConfig:
    """Estimator settings: command-line values override the file, the file overrides type defaults."""
    if cfg.type == "shift":
        base = EstimatorConfig(eps_schedule=(0.99,), n_max=min(12, cfg.depth))
    elif cfg.type == "nifs":
        base = EstimatorConfig(eps_schedule=(0.1, 0.05), n_max=cfg.depth)
    else:
        base = EstimatorConfig(eps_schedule=(0.1, 0.05, 0.025), n_max=14)
    kw = {f.name: getattr(base, f.name) for f in fields(EstimatorConfig)}
    kw["eps_schedule"] = eps or cfg.eps or base.eps_schedule
    kw["n_max"] = n_max or cfg.n_max or base.n_max
    kw["n_min"] = n_min if n_min is not None else cfg.n_min
    if tol is not None:
        kw["s_tol"] = tol
    try:
        return EstimatorConfig(**kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def build_potential(cfg: PotentialConfig) -> PotentialSeq | None:
    if cfg.type == "zero":
        return None
    if cfg.type == "constant":
        return constant_potential(cfg.value)
    if cfg.type == "symbol":
        rows = [np.asarray(r, dtype=float) for r in cfg.table]
        return symbol_potential(lambda k: rows[k % len(rows)])
    raise ConfigError(f"unknown potential type {cfg.type!r}")


def build_measure(cfg: MeasureConfig, spec: ShiftSpec | None = None) -> MeasureRep:
    try:
        if cfg.kind == "atomic":
            pts = np.array([a for a, _ in cfg.atoms])
            w = np.array([b for _, b in cfg.atoms])
            return AtomicMeasure(points=pts, weights=w)
        if spec is None:
            raise ConfigError("a bernoulli measure needs a shift system")
        return bernoulli_measure(spec, [np.asarray(p) for p in cfg.probs])
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


PRESETS: dict[str, SystemConfig] = {
    "doubling_de": SystemConfig("doubling", label="doubling-euclidean", metric_kind="euclidean"),
    "doubling_du": SystemConfig("doubling", label="doubling-scaled", metric_kind="scaled"),
    "doubling_db": SystemConfig("doubling", label="doubling-bounded", metric_kind="bounded"),
    "shift_2": SystemConfig("shift", label="shift-2", alphabet_sizes=(2,), depth=64),
    "shift_24": SystemConfig("shift", label="shift-24", alphabet_sizes=(2, 4), depth=64),
    "shift_blocks": SystemConfig("shift", label="shift-blocks", alphabet_sizes=(2, 4), blocks=True, depth=2 ** 14,
                                 eps=(0.99,), n_max=2 ** 14, n_min=2 ** 13),
    "cantor": SystemConfig("nifs", label="cantor", depth=12, contractions=(((1 / 3, 0.0), (1 / 3, 2 / 3)),)),
}
