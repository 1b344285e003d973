"""Experiment configuration: INI files with one section per module.

Every value is checked at load time; a failure raises ``ConfigError`` naming
``section.key``. See ``configs/SCHEMA.md`` for the field list.
"""
from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from nafdsim.channel import ChannelConfig
from nafdsim.energy import PowerModelParams
from nafdsim.errors import ConfigError, ContractError, InvalidInputError
from nafdsim.precoding import PRECODING_MODES

RUN_STRUCTURES = ("NAFD", "FD", "HD", "SMALLCELL")
SOLVERS = ("exhaustive", "greedy")


@dataclass(frozen=True)
class TopologyParams:
    m: int = 40
    k_d: int = 4
    k_u: int = 4
    side: float = 500.0
    min_ap_dist: float = 50.0


@dataclass(frozen=True)
class ChannelParams:
    # Physical powers are used unless rho_d and rho_u are given directly.
    p_ap_tx: float = 0.1
    p_ue_tx: float = 0.1
    bandwidth: float = 20e6
    noise_figure_db: float = 9.0
    rho_d: float | None = None
    rho_u: float | None = None
    si_ratio_db: float = 50.0
    tau_c: int = 200
    tau_t: int | None = None
    rho_t: float | None = None
    perfect_csi: bool = False

    def to_channel_config(self) -> ChannelConfig:
        kw = dict(si_ratio_db=self.si_ratio_db, tau_c=self.tau_c, tau_t=self.tau_t,
                  rho_t=self.rho_t, perfect_csi=self.perfect_csi)
        if self.rho_d is not None and self.rho_u is not None:
            return ChannelConfig(self.rho_d, self.rho_u, **kw)
        return ChannelConfig.from_physical(self.p_ap_tx, self.p_ue_tx, self.bandwidth,
                                           self.noise_figure_db, **kw)


@dataclass(frozen=True)
class PrecodingParams:
    n_antennas: int = 8
    upsilon: float = 95.0
    mode: str = "PZF"


@dataclass(frozen=True)
class ExperimentParams:
    structures: tuple[str, ...] = ("NAFD", "FD", "HD")
    hd_split: float = 0.5
    qos_grid: tuple[float, ...] = (0.0, 0.5, 1.0, 1.4, 1.8, 2.2)
    solver: str = "greedy"
    m_max: int = 16
    power_exponent: float = 0.5
    n_topologies: int = 50
    seed: int = 2024
    threads: int = 1
    output: str = "results"


@dataclass(frozen=True)
class ValidationParams:
    upsilons: tuple[float, ...] = (0.0, 50.0, 100.0)
    structures: tuple[str, ...] = ("NAFD", "FD", "HD")
    nafd_a: tuple[int, ...] | None = None
    n_fading_draws: int = 10_000
    tol_desired: float = 0.02
    tol_other: float = 0.05


@dataclass(frozen=True)
class ExperimentConfig:
    topology: TopologyParams = field(default_factory=TopologyParams)
    channel: ChannelParams = field(default_factory=ChannelParams)
    precoding: PrecodingParams = field(default_factory=PrecodingParams)
    experiment: ExperimentParams = field(default_factory=ExperimentParams)
    power: PowerModelParams = field(default_factory=PowerModelParams)
    validation: ValidationParams = field(default_factory=ValidationParams)

    def replace(self, section: str, **changes) -> "ExperimentConfig":
        """Copy with fields of one section changed (re-validated)."""
        new = dataclasses.replace(self, **{section: dataclasses.replace(getattr(self, section),
                                                                         **changes)})
        validate(new)
        return new


_SECTIONS = {
    "topology": TopologyParams,
    "channel": ChannelParams,
    "precoding": PrecodingParams,
    "experiment": ExperimentParams,
    "power": PowerModelParams,
    "validation": ValidationParams,
}


def _parse_value(section: str, key: str, raw: str, default):
    where = f"{section}.{key}"
    text = raw.strip()
    try:
        if isinstance(default, bool):
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if isinstance(default, tuple) or (default is None and key == "nafd_a"):
            items = [t.strip() for t in text.split(",") if t.strip()]
            if key in ("structures",):
                return tuple(t.upper() for t in items)
            if key == "nafd_a":
                return tuple(int(t) for t in items)
            return tuple(float(t) for t in items)
        if default is None:
            if text.lower() in ("", "none", "auto"):
                return None
            return int(text) if key == "tau_t" else float(text)
        if isinstance(default, int):
            value = float(text)
            if value != int(value):
                raise ValueError(text)
            return int(value)
        if isinstance(default, float):
            return float(text)
        return text
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {raw!r}") from None


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parse_config(parser)


def loads_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    return parse_config(parser)


def parse_config(parser: configparser.ConfigParser) -> ExperimentConfig:
    parts = {}
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"{section}: unknown section")
    for section, cls in _SECTIONS.items():
        defaults = {f.name: f.default for f in dataclasses.fields(cls)}
        values = {}
        if parser.has_section(section):
            for key, raw in parser.items(section):
                if key not in defaults:
                    raise ConfigError(f"{section}.{key}: unknown key")
                values[key] = _parse_value(section, key, raw, defaults[key])
        try:
            parts[section] = cls(**values)
        except ContractError as exc:
            raise ConfigError(f"{section}.{exc}") from None
    cfg = ExperimentConfig(**parts)
    validate(cfg)
    return cfg


def _require(cond: bool, where: str, message: str):
    if not cond:
        raise ConfigError(f"{where}: {message}")


def validate(cfg: ExperimentConfig) -> None:
    t, c, p, e, v = cfg.topology, cfg.channel, cfg.precoding, cfg.experiment, cfg.validation
    _require(t.m >= 1, "topology.m", "need at least one AP")
    _require(t.k_d >= 0, "topology.k_d", "must be non-negative")
    _require(t.k_u >= 0, "topology.k_u", "must be non-negative")
    _require(t.k_d + t.k_u >= 1, "topology.k_d", "need at least one UE")
    _require(t.side > 0, "topology.side", "must be positive")
    _require(t.min_ap_dist >= 0, "topology.min_ap_dist", "must be non-negative")

    for key in ("p_ap_tx", "p_ue_tx", "bandwidth"):
        _require(getattr(c, key) > 0, f"channel.{key}", "must be positive")
    for key in ("rho_d", "rho_u", "rho_t"):
        value = getattr(c, key)
        _require(value is None or value > 0, f"channel.{key}", "must be positive")
    _require((c.rho_d is None) == (c.rho_u is None), "channel.rho_u",
             "give both rho_d and rho_u or neither")
    _require(c.tau_c >= 2, "channel.tau_c", "must be at least 2")
    tau_t = c.tau_t if c.tau_t is not None else t.k_d + t.k_u
    _require(tau_t >= max(t.k_d, t.k_u), "channel.tau_t", "too short for orthogonal pilots")
    _require(tau_t < c.tau_c, "channel.tau_t", "must be shorter than tau_c")
    try:
        c.to_channel_config()
    except InvalidInputError as exc:
        raise ConfigError(f"channel: {exc}") from None

    _require(p.n_antennas >= 1, "precoding.n_antennas", "must be positive")
    _require(0 <= p.upsilon <= 100, "precoding.upsilon", "must lie in [0, 100]")
    _require(p.mode.upper() in PRECODING_MODES, "precoding.mode",
             f"must be one of {', '.join(PRECODING_MODES)}")

    _require(len(e.structures) > 0, "experiment.structures", "must not be empty")
    for s in e.structures:
        _require(s in RUN_STRUCTURES, "experiment.structures", f"unknown structure {s!r}")
    _require(0 < e.hd_split < 1, "experiment.hd_split", "must lie in (0, 1)")
    _require(len(e.qos_grid) > 0, "experiment.qos_grid", "must not be empty")
    _require(all(q >= 0 for q in e.qos_grid), "experiment.qos_grid", "levels must be >= 0")
    _require(e.solver in SOLVERS, "experiment.solver", f"must be one of {', '.join(SOLVERS)}")
    _require(e.solver != "exhaustive" or t.m <= e.m_max, "experiment.m_max",
             f"exhaustive search needs topology.m <= m_max ({t.m} > {e.m_max})")
    _require(-1 <= e.power_exponent <= 1, "experiment.power_exponent", "must lie in [-1, 1]")
    _require(e.n_topologies >= 1, "experiment.n_topologies", "must be positive")
    _require(e.threads >= 1, "experiment.threads", "must be positive")

    _require(len(v.upsilons) > 0, "validation.upsilons", "must not be empty")
    _require(all(0 <= u <= 100 for u in v.upsilons), "validation.upsilons", "must lie in [0, 100]")
    for s in v.structures:
        _require(s in ("NAFD", "FD", "HD"), "validation.structures", f"unknown structure {s!r}")
    if v.nafd_a is not None:
        _require(len(v.nafd_a) == t.m, "validation.nafd_a", f"needs {t.m} entries")
        _require(all(x in (0, 1) for x in v.nafd_a), "validation.nafd_a", "entries must be 0 or 1")
    _require(v.n_fading_draws >= 1, "validation.n_fading_draws", "must be positive")
    _require(v.tol_desired > 0 and v.tol_other > 0, "validation.tol_desired",
             "tolerances must be positive")
