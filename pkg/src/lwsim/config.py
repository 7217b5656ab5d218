"""Scenario configuration: defaults, presets, JSON files with flat dotted keys, validation.

Precedence is CLI flag > config file > preset > built-in default.
"""

from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Callable

from .engine import NS_PER_MS, NS_PER_S, NS_PER_US, parse_time, seconds

SCENARIOS = ("baseline", "lwa", "lwip")
PRESET_MODES = {"baseline": (0, 0), "lwa": (1, 0), "lwip": (0, 1)}


class ConfigError(ValueError):
    pass


def parse_rate(text: str | int | float) -> int:
    """'64k', '100M', '1G' or a plain number of bits per second."""
    if isinstance(text, (int, float)):
        return int(text)
    m = re.fullmatch(r"\s*([0-9.eE+-]+)\s*([kKmMgG]?)(?:bps|b/s)?\s*", text)
    if not m:
        raise ValueError(f"bad rate {text!r}")
    scale = {"": 1, "k": 10**3, "m": 10**6, "g": 10**9}[m.group(2).lower()]
    return round(float(m.group(1)) * scale)


def format_time(ns: int) -> str:
    for unit, scale in (("s", NS_PER_S), ("ms", NS_PER_MS), ("us", NS_PER_US)):
        if ns % scale == 0:
            return f"{ns // scale}{unit}"
    return f"{ns}ns"


def _bool(v: Any) -> bool:
    if isinstance(v, bool):
        return v
    if str(v).lower() in ("1", "true", "yes", "on"):
        return True
    if str(v).lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"bad boolean {v!r}")


def _opt_int(v: Any) -> int | None:
    return None if v is None else int(v)


@dataclass
class ScenarioConfig:
    scenario: str = "baseline"
    lwa_mode: int | None = None  # None: take the preset's value
    lwip_mode: int | None = None
    split_modulus: int = 2
    poll_interval: int = 100 * NS_PER_US
    pdcp_overhead: int = 30
    rbid: int = 1
    rate_bps: int = 64_000
    packet_bytes: int = 600
    start: int = 0
    duration: int = seconds(4.825)
    lte_rate: int = 100_000_000
    lte_delay: int = 5 * NS_PER_MS
    xw_rate: int = 1_000_000_000
    xw_delay: int = 2 * NS_PER_MS
    wifi_rate: int = 54_000_000
    wifi_delay: int = 1 * NS_PER_MS
    wifi_framing: int = 82
    t_reordering: int = 100 * NS_PER_MS
    tunnel_local: str = "11.0.0.1"
    tunnel_remote: str = "11.0.0.254"
    seed: int = 1
    free_running_poll: bool = False
    out_dir: str | None = None
    role: str | None = None
    peer: str | None = None
    listen: int | None = None
    pacing: str = "fast"
    pacing_factor: float = 1.0
    idle_timeout: int = 5 * NS_PER_S

    @property
    def lwa(self) -> int:
        return PRESET_MODES[self.scenario][0] if self.lwa_mode is None else self.lwa_mode

    @property
    def lwip(self) -> int:
        return PRESET_MODES[self.scenario][1] if self.lwip_mode is None else self.lwip_mode

    @property
    def stop(self) -> int:
        return self.start + self.duration


@dataclass(frozen=True)
class Option:
    key: str  # flat dotted key in config files
    attr: str
    flag: str
    parse: Callable[[Any], Any]
    dump: Callable[[Any], Any]
    help: str
    choices: tuple | None = None


def _ident(v):
    return v


OPTIONS: tuple[Option, ...] = (
    Option("scenario", "scenario", "--scenario", str, _ident, "preset", SCENARIOS),
    Option("pdcp.lwa_mode", "lwa_mode", "--lwa-mode", _opt_int, _ident,
           "LWA activation: 0 LTE only, 1 split, 2 Wi-Fi only", (0, 1, 2)),
    Option("pdcp.lwip_mode", "lwip_mode", "--lwip-mode", _opt_int, _ident,
           "LWIP activation: 0 off, 1 on", (0, 1)),
    Option("pdcp.split_modulus", "split_modulus", "--split-modulus", int, _ident,
           "split-bearer modulus N (PDU counter %% N == 0 stays on LTE)"),
    Option("pdcp.poll_interval", "poll_interval", "--poll-interval", parse_time, format_time,
           "offload queue poll interval"),
    Option("pdcp.overhead_bytes", "pdcp_overhead", "--pdcp-overhead", int, _ident,
           "PDCP/RRC bytes added to an offloaded PDU, LWAAP/LWIPEP header included"),
    Option("pdcp.rbid", "rbid", "--rbid", int, _ident, "radio bearer id of the VoIP bearer"),
    Option("traffic.rate_bps", "rate_bps", "--rate", parse_rate, _ident, "application data rate"),
    Option("traffic.packet_bytes", "packet_bytes", "--packet-size", int, _ident,
           "UDP payload per packet, 12-byte SeqTs header included"),
    Option("traffic.start", "start", "--start", parse_time, format_time, "application start time"),
    Option("traffic.duration", "duration", "--duration", parse_time, format_time,
           "application on-time"),
    Option("lte_link.rate_bps", "lte_rate", "--lte-rate", parse_rate, _ident, "LTE path rate"),
    Option("lte_link.delay", "lte_delay", "--lte-delay", parse_time, format_time, "LTE path delay"),
    Option("xw_link.rate_bps", "xw_rate", "--xw-rate", parse_rate, _ident, "Xw-U rate"),
    Option("xw_link.delay", "xw_delay", "--xw-delay", parse_time, format_time, "Xw-U delay"),
    Option("wifi_link.rate_bps", "wifi_rate", "--wifi-rate", parse_rate, _ident, "Wi-Fi air rate"),
    Option("wifi_link.delay", "wifi_delay", "--wifi-delay", parse_time, format_time, "Wi-Fi air delay"),
    Option("wifi_link.framing_bytes", "wifi_framing", "--wifi-framing", int, _ident,
           "Wi-Fi framing bytes per air frame"),
    Option("ue.t_reordering", "t_reordering", "--t-reordering", parse_time, format_time,
           "UE reordering timer"),
    Option("tunnel.local_addr", "tunnel_local", "--tunnel-local", str, _ident,
           "LWIP tunnel address at the SeGW"),
    Option("tunnel.remote_addr", "tunnel_remote", "--tunnel-remote", str, _ident,
           "LWIP tunnel address at the station"),
    Option("run.seed", "seed", "--seed", int, _ident, "run seed (payload filler, tunnel key)"),
    Option("run.free_running_poll", "free_running_poll", "--free-running-poll", _bool, _ident,
           "tick the offload poll on every interval instead of only while packets wait"),
    Option("run.out_dir", "out_dir", "--out", str, _ident, "output directory"),
    Option("wire.role", "role", "--role", str, _ident, "two-process mode role", ("enb", "sta")),
    Option("wire.peer", "peer", "--peer", str, _ident, "station process address host:port (enb role)"),
    Option("wire.listen", "listen", "--listen", _opt_int, _ident, "UDP port to bind (sta role; 0 = any)"),
    Option("wire.pacing", "pacing", "--pacing", str, _ident, "datagram pacing", ("real", "fast")),
    Option("wire.pacing_factor", "pacing_factor", "--pacing-factor", float, _ident,
           "wall seconds per simulated second under real pacing"),
    Option("wire.idle_timeout", "idle_timeout", "--idle-timeout", parse_time, format_time,
           "station gives up after this long without a datagram"),
)
BY_KEY = {o.key: o for o in OPTIONS}
BY_ATTR = {o.attr: o for o in OPTIONS}
assert set(BY_ATTR) == {f.name for f in fields(ScenarioConfig)}


def to_flat(cfg: ScenarioConfig) -> dict[str, Any]:
    raw = asdict(cfg)
    return {o.key: (None if raw[o.attr] is None else o.dump(raw[o.attr])) for o in OPTIONS}


def apply_flat(cfg: ScenarioConfig, values: dict[str, Any], origin: str) -> None:
    unknown = sorted(set(values) - set(BY_KEY))
    if unknown:
        raise ConfigError(f"{origin}: unknown key(s): {', '.join(unknown)}")
    for key, raw in values.items():
        opt = BY_KEY[key]
        try:
            value = None if raw is None else opt.parse(raw)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"{origin}: bad value for {key}: {raw!r} ({e})") from None
        setattr(cfg, opt.attr, value)


def load_file(path: str | Path) -> dict[str, Any]:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: not valid JSON: {e}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object of dotted keys")
    return data


def dump_file(cfg: ScenarioConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(to_flat(cfg), indent=2, sort_keys=True) + "\n")


def validate(cfg: ScenarioConfig) -> ScenarioConfig:
    for opt in OPTIONS:
        v = getattr(cfg, opt.attr)
        if opt.choices and v is not None and v not in opt.choices:
            raise ConfigError(f"{opt.key} must be one of {', '.join(map(str, opt.choices))}; got {v!r}")
    if cfg.scenario == "baseline" and (cfg.lwa or cfg.lwip):
        raise ConfigError("scenario 'baseline' runs with LWA and LWIP off; use --scenario lwa or lwip")
    if cfg.scenario == "lwa" and cfg.lwip:
        raise ConfigError("scenario 'lwa' cannot enable LWIP; use --scenario lwip")
    if cfg.scenario == "lwip" and cfg.lwa:
        raise ConfigError("LWIP is switched-bearer only: --lwa-mode must stay 0 under --scenario lwip "
                          "(no split between LTE and Wi-Fi)")
    if cfg.split_modulus < 2:
        raise ConfigError("--split-modulus must be at least 2")
    if cfg.pdcp_overhead < 2:
        raise ConfigError("--pdcp-overhead must be at least 2 (the LWAAP/LWIPEP header)")
    if not 0 <= cfg.rbid <= 0xFD:
        raise ConfigError("--rbid must be in 0..253")
    if cfg.packet_bytes <= 12:
        raise ConfigError("--packet-size must exceed the 12-byte SeqTs header")
    if cfg.rate_bps <= 0:
        raise ConfigError("--rate must be positive")
    if (cfg.packet_bytes * 8 * NS_PER_S) % cfg.rate_bps:
        raise ConfigError("--packet-size/--rate must give a whole number of nanoseconds between packets")
    if cfg.poll_interval <= 0 or cfg.t_reordering <= 0:
        raise ConfigError("--poll-interval and --t-reordering must be positive")
    for name in ("start", "duration", "lte_delay", "xw_delay", "wifi_delay", "wifi_framing"):
        if getattr(cfg, name) < 0:
            raise ConfigError(f"{BY_ATTR[name].flag} must be non-negative")
    for name in ("lte_rate", "xw_rate", "wifi_rate"):
        if getattr(cfg, name) <= 0:
            raise ConfigError(f"{BY_ATTR[name].flag} must be positive")
    if cfg.role == "enb" and not cfg.peer:
        raise ConfigError("--role enb needs --peer host:port")
    if cfg.role == "sta" and cfg.listen is None:
        raise ConfigError("--role sta needs --listen PORT")
    if cfg.peer:
        parse_peer(cfg.peer)
    return cfg


def parse_peer(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not host or not port.isdigit():
        raise ConfigError(f"--peer must be host:port, got {text!r}")
    return host, int(port)


def parse_and_validate(cli_values: dict[str, Any] | None = None,
                       file: str | Path | None = None) -> ScenarioConfig:
    """Build a config from an optional file plus CLI overrides (keyed by attribute name)."""
    cfg = ScenarioConfig()
    if file is not None:
        apply_flat(cfg, load_file(file), str(file))
    if cli_values:
        apply_flat(cfg, {BY_ATTR[a].key: v for a, v in cli_values.items() if v is not None}, "command line")
    return validate(cfg)
