"""Scenario config files: INI sections of ``key = value`` lines.

Grammar
-------
``[section]`` headers, then ``key = value`` lines; ``#`` and ``;`` start
comment lines.  Lists are comma separated.  ``none`` marks an optional value
as unset and booleans are ``true``/``false``.  Unknown sections and keys are
errors.  Errors name the offending key, or the section for cross-field
checks, together with its line number.

Sections and keys mirror the dataclasses they build:

=========== ==========================================================
[scenario]  name, seed, episode_length, agents, max_divergences
[channel]   every :class:`~odlamc.channel.ChannelConfig` field
[mcs]       se, thresholds, slope
[cqi]       n, floor_db, step_db
[olla]      offset, step, target_bler
[agent]     every :class:`~odlamc.agents.AgentConfig` field
[sweep]     speeds_kmh, ranks, seeds
=========== ==========================================================

Missing keys take the dataclass defaults.  :func:`dumps` writes every key
with ``repr`` floats, so loading the echo rebuilds an equal config.
"""

from __future__ import annotations

import configparser
import dataclasses
import re
from pathlib import Path

from .agents import AgentConfig
from .channel import ChannelConfig
from .engine import ScenarioConfig
from .mcs_model import CqiTable, McsTable
from .olla import OllaState


class ConfigError(ValueError):
    """Malformed config; the message names the key and line when known."""


def _bool(text):
    low = text.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"expected true or false, got {text!r}")


def _optional(conv):
    def parse(text):
        return None if text.lower() == "none" else conv(text)
    return parse


def _list(conv):
    def parse(text):
        items = [s.strip() for s in text.split(",") if s.strip()]
        if not items:
            raise ValueError("empty list")
        return tuple(conv(s) for s in items)
    return parse


def _fmt(value):
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(_fmt(v) for v in value)
    return str(value)


FLOATS = _list(float)
INTS = _list(int)

SCHEMA = {
    "scenario": {
        "name": str, "seed": int, "episode_length": int,
        "agents": _list(str), "max_divergences": _optional(int),
    },
    "channel": {
        "mode": str, "tx_antennas": int, "rx_antennas": int, "rank": int,
        "carrier_hz": float, "speed_kmh": float, "tti_ms": float,
        "sounding_period_ms": float, "mean_sinr_db": float, "sinr_std_db": float,
        "noise_power": _optional(float), "tx_power_dbm": float, "pathloss_db": float,
        "noise_density_dbm_hz": float, "bandwidth_hz": float,
    },
    "mcs": {"se": FLOATS, "thresholds": FLOATS, "slope": float},
    "cqi": {"n": int, "floor_db": float, "step_db": float},
    "olla": {"offset": float, "step": float, "target_bler": float},
    "agent": {
        "retrain_period": int, "buffer_size": int, "steps": int, "batch_size": int,
        "lr": float, "epsilon": float, "hidden_sizes": INTS,
        "subsample_rate": _optional(float), "warmup_train_every_tti": _bool,
    },
    "sweep": {"speeds_kmh": FLOATS, "ranks": INTS, "seeds": INTS},
}

_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^\s*([^#;=:\s][^=:]*?)\s*[=:]")


def _key_lines(text: str) -> dict[tuple[str, str], int]:
    lines, section = {}, None
    for no, line in enumerate(text.splitlines(), start=1):
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1).strip()
            lines.setdefault((section, None), no)
            continue
        m = _KEY_RE.match(line)
        if m and section is not None and not line[0].isspace():
            lines[(section, m.group(1).strip().lower())] = no
    return lines


def loads(text: str, source: str = "<config>") -> ScenarioConfig:
    """Parse config text into a validated :class:`ScenarioConfig`."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=None)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    where = _key_lines(text)

    def at(section, key=None):
        no = where.get((section, key))
        return f"{source}:{no}" if no else source

    values: dict[str, dict] = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"{at(section)}: unknown section [{section}]")
        values[section] = {}
        for key, raw in parser.items(section):
            conv = SCHEMA[section].get(key)
            if conv is None:
                raise ConfigError(f"{at(section, key)}: unknown key {key!r} in [{section}]")
            try:
                values[section][key] = conv(raw.strip())
            except ValueError as exc:
                raise ConfigError(f"{at(section, key)}: bad value for {section}.{key}: {exc}") from None

    def build(section, cls, **extra):
        kwargs = {**values.get(section, {}), **extra}
        try:
            return cls(**kwargs)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{at(section)}: invalid [{section}]: {exc}") from None

    channel = build("channel", ChannelConfig)
    mcs = build("mcs", McsTable)
    cqi = build("cqi", CqiTable)
    olla = build("olla", OllaState)
    agent = build("agent", AgentConfig)
    scenario = {**values.get("scenario", {}), **values.get("sweep", {})}
    try:
        return ScenarioConfig(channel=channel, mcs=mcs, cqi=cqi, olla=olla, agent=agent, **scenario)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{source}: invalid scenario: {exc}") from None


def load(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    return loads(text, source=str(path))


def dumps(config: ScenarioConfig) -> str:
    """Every effective key, in schema order."""
    objects = {
        "scenario": config, "channel": config.channel, "mcs": config.mcs,
        "cqi": config.cqi, "olla": config.olla, "agent": config.agent, "sweep": config,
    }
    out = []
    for section, keys in SCHEMA.items():
        out.append(f"[{section}]")
        for key in keys:
            value = getattr(objects[section], key)
            if isinstance(value, list):
                value = tuple(value)
            out.append(f"{key} = {_fmt(value)}")
        out.append("")
    return "\n".join(out)


def with_overrides(config: ScenarioConfig, **changes) -> ScenarioConfig:
    return dataclasses.replace(config, **{k: v for k, v in changes.items() if v is not None})
